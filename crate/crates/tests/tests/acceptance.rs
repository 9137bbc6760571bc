//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Built with `harness = false` so every criterion runs even when an earlier
//! one fails. The training criteria take the better part of an hour on a
//! single core.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use minwidth_core::certifier::{build_g, certify_self_intersection, compute_epsilon, compute_m, pm_root, IntervalPairs};
use minwidth_core::constructions::{
    build_leaky_from_elu, build_leaky_from_leaky, build_relu_from_softplus_on, depth_witness_check, leaky_bracket,
    leaky_offset, LeakyBracket,
};
use minwidth_core::activations::DEFAULT_GRID;
use minwidth_core::experiments::{flatten, gen_disk, gradients, mse, train, unflatten, Dataset, Role, TrainConfig, TrainReport};
use minwidth_core::netcore::random::{random_net, rng_from_seed};
use minwidth_core::netcore::{is_full_rank, perturb_to_full_rank, sup_gap, BoxDomain, FnMap, Matrix};
use minwidth_core::{Activation, Error, Interval, NeuralNet};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn eval1(net: &NeuralNet, x: f64) -> f64 {
    net.forward(&[x]).unwrap()[0]
}

fn c1_elu_construction() -> Verdict {
    let start = Instant::now();
    let r = build_leaky_from_elu(0.1, 0.3, Interval::new(-9.0, 10.0), 10_001).unwrap();
    let target = Activation::leaky_relu(0.1).unwrap();
    let knot_err = (1..=3)
        .map(|i| {
            let x = -(i as f64) * 0.3 / 0.1;
            (eval1(&r.net, x) - target.eval(x)).abs()
        })
        .fold(0.0, f64::max);
    let t = start.elapsed();
    verdict(
        r.measured_gap <= 0.3 && knot_err < 1e-9 && within(t, 1.0),
        format!("stages {} gap {:.3e} knot error {:.3e} in {:.3}s", r.stages, r.measured_gap, knot_err, t.as_secs_f64()),
    )
}

fn c2_leaky_construction() -> Verdict {
    let start = Instant::now();
    let b = match leaky_bracket(0.1, 0.2).unwrap() {
        LeakyBracket::Between { beta1, beta2, .. } => leaky_offset(0.1, beta1, beta2, 0.3),
        LeakyBracket::Exact { .. } => f64::NAN,
    };
    let mut ok = (b - 0.225).abs() < 1e-12;
    let mut gaps = Vec::new();
    for (lo, depth) in [(-3.0, 2), (-6.0, 4), (-9.0, 6)] {
        let r = build_leaky_from_leaky(0.1, 0.2, 0.3, Interval::new(lo, 10.0), DEFAULT_GRID).unwrap();
        // Each stage pair adds two activation layers after the first power.
        ok &= r.measured_gap <= 0.3 && r.stages * 2 == depth;
        gaps.push(format!("[{lo},10] gap {:.3e} stages {}", r.measured_gap, r.stages));
    }
    let t = start.elapsed();
    verdict(ok && within(t, 1.0), format!("b {b:.15} {} in {:.3}s", gaps.join(", "), t.as_secs_f64()))
}

/// Evaluating `n x` followed by the `1/n` output weight can land one or two
/// ulps below `x`; the lower end of the band is checked up to that round-off.
const SOFTPLUS_ROUNDOFF: f64 = 4.0 * f64::EPSILON * 10.0;

/// `f_n - ReLU` on a grid of `[-10, 10]`; returns (min, max).
fn softplus_excess(beta: f64, n: usize) -> (f64, f64) {
    let bound = 2.0 / (n as f64 * beta);
    let r = build_relu_from_softplus_on(beta, bound, Interval::new(-10.0, 10.0), DEFAULT_GRID).unwrap();
    assert_eq!(r.stages, n, "scale for beta {beta}");
    Interval::new(-10.0, 10.0)
        .grid(DEFAULT_GRID)
        .map(|x| eval1(&r.net, x) - x.max(0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

fn c3_softplus_bound() -> Verdict {
    let start = Instant::now();
    let (lo, hi) = softplus_excess(1.0, 200);
    let mut ok = lo >= -SOFTPLUS_ROUNDOFF && hi <= 0.01;
    let mut rng = rng_from_seed(3);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..10 {
        let beta = rng.gen_range(0.25..4.0);
        let n = rng.gen_range(1..300usize);
        let (lo_r, hi_r) = softplus_excess(beta, n);
        let bound = 2.0 / (n as f64 * beta);
        ok &= lo_r >= -SOFTPLUS_ROUNDOFF && hi_r <= bound;
        worst_ratio = worst_ratio.max(hi_r / bound);
    }
    let t = start.elapsed();
    verdict(
        ok && within(t, 1.0),
        format!("range [{lo:.3e}, {hi:.3e}], worst excess/bound {worst_ratio:.3} in {:.3}s", t.as_secs_f64()),
    )
}

fn c4_iteration() -> Verdict {
    let start = Instant::now();
    let leaky = Activation::leaky_relu(0.5).unwrap().iterated_relu_error(20, Interval::new(-1.0, 1.0));
    let leaky_ok = (leaky - 0.5f64.powi(20)).abs() < 1e-12;
    let elu = Activation::elu(0.5).unwrap();
    let errs: Vec<f64> = [1, 2, 4, 8, 16, 32].iter().map(|&n| elu.iterated_relu_error(n, Interval::new(-2.0, 2.0))).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let t = start.elapsed();
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
    verdict(
        leaky_ok && decreasing && within(t, 1.0),
        format!("leaky n=20 {leaky:.6e}, elu [{}] in {:.3}s", shown.join(", "), t.as_secs_f64()),
    )
}

fn c5_certifier() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [1, 2] {
        let start = Instant::now();
        let g = build_g(m).unwrap();
        let pairs = IntervalPairs::canonical(m);
        let big_m = compute_m(&g, &pairs, 101).unwrap();
        let eps = compute_epsilon(&g, &pairs, big_m, 101).unwrap();
        let cert = certify_self_intersection(&g, &g, &pairs, 101);
        let t = start.elapsed();
        match cert {
            Ok(c) => {
                ok &= big_m < 0.0 && eps > 0.0 && c.collision.gap < 1e-9 && within(t, 10.0);
                parts.push(format!(
                    "m={m}: M {big_m:.3e} eps {eps:.3e} residual {:.3e} in {:.2}s",
                    c.collision.gap,
                    t.as_secs_f64()
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("m={m}: {e}"));
            }
        }
    }
    verdict(ok, parts.join("; "))
}

fn c6_miranda() -> Verdict {
    let start = Instant::now();
    let dom = BoxDomain::cube(2, -1.0, 1.0);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    // Diagonally dominant linear maps with a root inside the box.
    let systems = [
        ([[1.0, 0.0], [0.0, 1.0]], [0.3, -0.2], [-1.0, -1.0]),
        ([[2.0, 0.5], [-0.3, 1.5]], [-0.1, 0.4], [-1.0, -1.0]),
        ([[-1.0, 0.2], [0.1, 3.0]], [0.25, 0.0], [1.0, -1.0]),
    ];
    for (a, root, signs) in systems {
        let f = FnMap::new(2, 2, move |x: &[f64]| {
            let d = [x[0] - root[0], x[1] - root[1]];
            vec![a[0][0] * d[0] + a[0][1] * d[1], a[1][0] * d[0] + a[1][1] * d[1]]
        });
        let r = pm_root(&f, &dom, &signs, 41).unwrap();
        ok &= r.certified && r.residual < 1e-8;
        worst = worst.max(r.residual);
    }
    // f = (x^2 + 1, y) never changes sign in its first component.
    let positive = FnMap::new(2, 2, |x: &[f64]| vec![x[0] * x[0] + 1.0, x[1]]);
    let refused = match pm_root(&positive, &dom, &[-1.0, -1.0], 41) {
        Ok(r) => !r.certified && r.root.is_none(),
        Err(Error::Refused(_)) => true,
        Err(_) => false,
    };
    let t = start.elapsed();
    verdict(
        ok && refused && within(t, 1.0),
        format!("worst residual {worst:.3e}, sign-free case refused {refused} in {:.3}s", t.as_secs_f64()),
    )
}

fn c7_depth_witness() -> Verdict {
    let start = Instant::now();
    let tight = depth_witness_check(1.0 / 220.0);
    let loose = depth_witness_check(0.5);
    let t = start.elapsed();
    verdict(
        tight.infeasible && !loose.infeasible && within(t, 30.0),
        format!(
            "best error {:.4e} (1/220 = {:.4e}) infeasible {}, eps 0.5 feasible {} in {:.2}s",
            tight.best.error,
            1.0 / 220.0,
            tight.infeasible,
            !loose.infeasible,
            t.as_secs_f64()
        ),
    )
}

fn c8_full_rank() -> Verdict {
    let mut ok = true;
    let (mut max_retries, mut max_gap) = (0usize, 0.0f64);
    for seed in 0..100u64 {
        let mut net = random_net(2, &[3, 3, 3], 2, Activation::elu(1.0).unwrap(), seed);
        // The square hidden-to-hidden maps are the ones a repeated row makes singular.
        let layer = 1 + (seed % 2) as usize;
        let mut rows = net.layers()[layer].affine.weight().to_rows();
        rows[2] = rows[0].iter().map(|v| 2.0 * v).collect();
        *net.layers_mut()[layer].affine.weight_mut() = Matrix::from_rows(&rows).unwrap();
        ok &= !is_full_rank(net.layers()[layer].affine.weight());
        let (fixed, report) = perturb_to_full_rank(&net, 1e-6, seed).unwrap();
        let gap = sup_gap(&fixed, &net, &BoxDomain::cube(2, -1.0, 1.0), 51);
        let retries = report.retries.iter().copied().max().unwrap_or(0);
        ok &= fixed.affine_maps().all(|a| is_full_rank(a.weight())) && retries <= 3 && gap < 1e-4;
        max_retries = max_retries.max(retries);
        max_gap = max_gap.max(gap);
    }
    verdict(ok, format!("100 nets, max retries {max_retries}, max gap {max_gap:.3e}"))
}

fn c9_zero_pad() -> Verdict {
    let net = random_net(3, &[2, 4, 3], 2, Activation::elu(1.0).unwrap(), 9);
    let padded = net.zero_pad(net.width() + 3).unwrap();
    let mut rng = rng_from_seed(99);
    let mismatches = (0..1000)
        .filter(|_| {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (a, b) = (net.forward(&x).unwrap(), padded.forward(&x).unwrap());
            a.iter().zip(&b).any(|(u, v)| u.to_bits() != v.to_bits())
        })
        .count();
    verdict(mismatches == 0, format!("width {} -> {}, {mismatches} of 1000 differ", net.width(), padded.width()))
}

const FD_STEP: f64 = 1e-6;
const KINK_MARGIN: f64 = 1e-4;
/// Entries below this magnitude are compared on an absolute scale, since
/// central differences carry about `1e-16 * L / FD_STEP` of round-off.
const FD_FLOOR: f64 = 1e-4;

fn fd_batch(net: &NeuralNet, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let (mut inputs, mut targets) = (Vec::new(), Vec::new());
    while inputs.len() < 12 {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let y = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let pre = net.pre_activations(&x);
        let near_kink = net.layers().iter().zip(&pre).any(|(layer, z)| {
            let kinks = layer.activation.breakpoints();
            z.iter().any(|v| kinks.iter().any(|k| (v - k).abs() <= KINK_MARGIN))
        });
        if !near_kink {
            inputs.push(x);
            targets.push(y);
        }
    }
    Dataset::new(Role::Train, inputs, targets).unwrap()
}

fn c10_gradients() -> Verdict {
    let mut worst: f64 = 0.0;
    let acts = [Activation::elu(1.0).unwrap(), Activation::leaky_relu(0.2).unwrap(), Activation::softplus(1.5).unwrap()];
    for (i, act) in acts.into_iter().enumerate() {
        for net_seed in 0..5u64 {
            let net = random_net(2, &[4, 4, 4], 2, act, 10 * i as u64 + net_seed);
            let params = flatten(&net);
            for b in 0..10u64 {
                let data = fd_batch(&net, 1000 * net_seed + b);
                let analytic = gradients(&net, &data).unwrap().flat();
                for (p, &g) in analytic.iter().enumerate() {
                    let (mut plus, mut minus) = (params.clone(), params.clone());
                    plus[p] += FD_STEP;
                    minus[p] -= FD_STEP;
                    let lp = mse(&unflatten(&net, &plus).unwrap(), &data).unwrap();
                    let lm = mse(&unflatten(&net, &minus).unwrap(), &data).unwrap();
                    let fd = (lp - lm) / (2.0 * FD_STEP);
                    worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(FD_FLOOR));
                }
            }
        }
    }
    verdict(worst < 1e-5, format!("max relative error {worst:.3e} over 3 activations x 5 nets x 10 batches"))
}

/// The `minwidth` binary sits two levels above this test executable
/// (`target/<profile>/deps/acceptance-*`); build it when a lone run of this
/// package has not produced it yet.
fn minwidth_binary() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let bin = profile_dir.join(format!("minwidth{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let status = Command::new(env!("CARGO"))
            .args(["build", "-p", "minwidth-cli", "--bin", "minwidth"])
            .status()
            .expect("cargo runs");
        assert!(status.success(), "building minwidth failed");
    }
    bin
}

fn c11_shipped_net_eval() -> Verdict {
    let dir = std::env::temp_dir().join(format!("minwidth-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let start = Instant::now();
    let out = Command::new(minwidth_binary())
        .args(["eval", "--net", "appendix_c.net", "--k", "2"])
        .current_dir(&dir)
        .env("MINWIDTH_OUT", &dir)
        .output()
        .expect("binary runs");
    let t = start.elapsed();
    let _ = std::fs::remove_dir_all(&dir);
    let text = String::from_utf8_lossy(&out.stdout);
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(f64::NAN)
    };
    let (l, lv) = (value("train_loss"), value("val_loss"));
    let band = |v: f64| (1e-5..=1e-2).contains(&v);
    verdict(
        out.status.success() && band(l) && band(lv) && within(t, 5.0),
        format!("L {l:.4e} L~ {lv:.4e} (band [1e-5, 1e-2]) in {:.2}s", t.as_secs_f64()),
    )
}

fn train_seeds(width: usize, seeds: &[u64], sets: (&Dataset, &Dataset), stop_at_success: bool) -> Vec<TrainReport> {
    let act = Activation::elu(1.0).unwrap();
    let run = |seed: u64| {
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        train(width, 4, act, sets, &cfg).unwrap()
    };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    if workers == 1 || stop_at_success {
        let mut out = Vec::new();
        for &s in seeds {
            let r = run(s);
            let done = r.success;
            out.push(r);
            if stop_at_success && done {
                break;
            }
        }
        return out;
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds.iter().map(|&s| scope.spawn(move || run(s))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn describe(reports: &[TrainReport]) -> String {
    reports
        .iter()
        .map(|r| format!("seed {}: L {:.3e} L~ {:.3e} steps {}", r.seed, r.train_loss, r.val_loss, r.steps))
        .collect::<Vec<_>>()
        .join("; ")
}

fn c12_c13_training() -> (Verdict, Verdict) {
    let (train_set, val_set) = gen_disk(2);
    let sets = (&train_set, &val_set);
    let start = Instant::now();
    let wide = train_seeds(4, &[0, 1, 2], sets, true);
    let narrow = train_seeds(3, &[0, 1, 2], sets, false);
    let t = start.elapsed();
    let wide_ok = wide.iter().any(|r| r.success);
    let narrow_ok = narrow.len() == 3 && narrow.iter().all(|r| !r.success);
    let c12 = verdict(
        wide_ok && narrow_ok,
        format!(
            "width 4 [{}]; width 3 [{}]; {:.0}s total (target 1800s)",
            describe(&wide),
            describe(&narrow),
            t.as_secs_f64()
        ),
    );

    let first = &wide[0];
    let again = train_seeds(4, &[first.seed], sets, false);
    let same = first.train_loss.to_bits() == again[0].train_loss.to_bits()
        && first.val_loss.to_bits() == again[0].val_loss.to_bits()
        && first.loss_curve == again[0].loss_curve;
    let c13 = verdict(
        same,
        format!(
            "seed {} rerun: L {:.16e} vs {:.16e}, L~ {:.16e} vs {:.16e}",
            first.seed, first.train_loss, again[0].train_loss, first.val_loss, again[0].val_loss
        ),
    );
    (c12, c13)
}

fn report(i: u32, v: &Verdict) {
    println!("criterion {i:>2}: {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
}

/// Criterion numbers given on the command line restrict the run; none means all.
fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |i: u32| wanted.is_empty() || wanted.contains(&i);
    let quick: [(u32, fn() -> Verdict); 11] = [
        (1, c1_elu_construction),
        (2, c2_leaky_construction),
        (3, c3_softplus_bound),
        (4, c4_iteration),
        (5, c5_certifier),
        (6, c6_miranda),
        (7, c7_depth_witness),
        (8, c8_full_rank),
        (9, c9_zero_pad),
        (10, c10_gradients),
        (11, c11_shipped_net_eval),
    ];
    let mut results = Vec::new();
    for (i, run) in quick {
        if selected(i) {
            let v = run();
            report(i, &v);
            results.push((i, v));
        }
    }
    if selected(12) || selected(13) {
        let (c12, c13) = c12_c13_training();
        report(12, &c12);
        report(13, &c13);
        results.push((12, c12));
        results.push((13, c13));
    }
    let failed: Vec<u32> = results.iter().filter(|(_, v)| !v.pass).map(|(i, _)| *i).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria run pass", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
