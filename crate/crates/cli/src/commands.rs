use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use minwidth_core::activations::DEFAULT_GRID;
use minwidth_core::certifier::{build_g, certify_self_intersection, IntervalPairs, PaddedMap};
use minwidth_core::constructions::{scalar_gap, ConstructionRegistry, ConstructionRequest, VERIFY_SLACK};
use minwidth_core::experiments::{depth_sweep, gen_disk, mse_losses, train_network, TrainConfig};
use minwidth_core::netcore::{appendix_c_net, sup_gap, BoxDomain, VectorMap};
use minwidth_core::{Activation, ActivationKind, Error, Interval, NeuralNet};
use serde::Serialize;

use crate::config::{FileConfig, Problems, UsageError};
use crate::{Cli, Command, TrainFlags, OUT_ENV};

const DEFAULT_DOMAIN: [f64; 2] = [-10.0, 10.0];
const DEFAULT_CERTIFY_GRID: usize = 101;
const DEFAULT_K: u32 = 2;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// The computation ran but the verified property does not hold.
    Failure,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Failure => 1,
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }
}

/// Exit code for an error: 1 when a computation refused or failed its own
/// check, 2 for usage and I/O problems.
pub fn error_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Verification { .. } | Error::BudgetInfeasible { .. } | Error::Hypotheses(_) | Error::Refused(_),
        ) => 1,
        _ => 2,
    }
}

/// Full precision, enough to re-parse the exact value.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Four significant digits for summaries.
fn short(x: f64) -> String {
    format!("{x:.3e}")
}

struct RunContext {
    file: FileConfig,
    out_dir: PathBuf,
    seed: Option<u64>,
    grid: Option<usize>,
}

impl RunContext {
    fn new(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let out_dir = cli
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .or_else(|| file.global.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(RunContext {
            seed: cli.seed.or(file.global.seed),
            grid: cli.grid.or(file.global.grid),
            out_dir,
            file,
        })
    }

    fn out_path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out_path(name)?;
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn train_config(&self, flags: &TrainFlags) -> TrainConfig {
        let mut cfg = self.file.train.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(lr) = flags.lr {
            cfg.lr_init = lr;
        }
        if let Some(s) = flags.max_steps {
            cfg.max_steps = s;
        }
        if let Some(t) = flags.threshold {
            cfg.success_threshold = t;
        }
        if let Some(e) = flags.eval_interval {
            cfg.eval_interval_steps = e;
        }
        cfg
    }

    fn k(&self, flag: Option<u32>) -> u32 {
        flag.or(self.file.experiment.k).unwrap_or(DEFAULT_K)
    }

    fn activation(&self, flags: &TrainFlags, problems: &mut Problems) -> Option<Activation> {
        let name = flags
            .act
            .clone()
            .or_else(|| self.file.experiment.activation.clone())
            .unwrap_or_else(|| "elu".into());
        let beta = flags.act_beta.or(self.file.experiment.activation_beta).unwrap_or(1.0);
        match ActivationKind::parse(&name).and_then(|kind| Activation::new(kind, beta, 1.0)) {
            Ok(act) => Some(act),
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        }
    }
}

fn check_k(k: u32, problems: &mut Problems) {
    problems.check(k >= 1, || format!("k must be a positive integer, got {k}"));
}

fn check_train(cfg: &TrainConfig, problems: &mut Problems) {
    if let Err(e) = cfg.validate() {
        problems.push(e.to_string());
    }
}

fn domain_from(flag: &Option<Vec<f64>>, fallback: Option<[f64; 2]>, problems: &mut Problems) -> Interval {
    let [lo, hi] = match flag {
        Some(v) => [v[0], v[1]],
        None => fallback.unwrap_or(DEFAULT_DOMAIN),
    };
    match Interval::try_new(lo, hi) {
        Ok(i) => i,
        Err(e) => {
            problems.push(format!("domain: {e}"));
            Interval::new(0.0, 1.0)
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let ctx = RunContext::new(&cli)?;
    match &cli.command {
        Command::Construct(a) => construct(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
        Command::Certify(a) => certify(&ctx, a),
        Command::Gendata(a) => gendata(&ctx, a.k),
        Command::Train(a) => train(&ctx, a.width, a.depth, &a.flags),
        Command::Eval(a) => eval(&ctx, &a.net, a.k),
        Command::Sweep(a) => sweep(&ctx, a.width, &a.depths, &a.flags),
    }
}

fn construct(ctx: &RunContext, a: &crate::ConstructArgs) -> Result<Outcome> {
    let mut problems = Problems::default();
    let from = ActivationKind::parse(&a.from).map_err(|e| problems.push(e.to_string())).ok();
    let to = ActivationKind::parse(&a.to).map_err(|e| problems.push(e.to_string())).ok();
    let eps = a.eps.or(ctx.file.construct.eps);
    problems.check(eps.is_some(), || "eps is required (flag or [construct] eps)".into());
    let domain = domain_from(&a.domain, ctx.file.construct.domain, &mut problems);
    let grid = ctx.grid.unwrap_or(DEFAULT_GRID);
    problems.check(grid >= 2, || "grid needs at least two points".into());
    let target = match to {
        Some(ActivationKind::LeakyRelu) => match a.alpha {
            Some(alpha) => Activation::leaky_relu(alpha).map_err(|e| problems.push(e.to_string())).ok(),
            None => {
                problems.push("--alpha is required for a LeakyReLU target".into());
                None
            }
        },
        Some(kind) => Activation::new(kind, 1.0, 1.0).map_err(|e| problems.push(e.to_string())).ok(),
        None => None,
    };
    let registry = ConstructionRegistry::with_defaults();
    let construction = match (from, to) {
        (Some(f), Some(t)) => {
            let c = registry.find(f, t);
            if c.is_none() {
                problems.push(format!(
                    "no construction builds {} networks approximating {}; available: {}",
                    f.name(),
                    t.name(),
                    registry.names().collect::<Vec<_>>().join(", ")
                ));
            }
            c
        }
        _ => None,
    };
    problems.finish()?;
    let (construction, target, eps) = (construction.unwrap(), target.unwrap(), eps.unwrap());

    let mut request = ConstructionRequest::new(target, eps, domain).with_grid(grid);
    if let Some(beta) = a.beta {
        request = request.with_source_beta(beta);
    }
    let report = construction.build(&request)?;
    let stem = a.name.clone().unwrap_or_else(|| construction.name().to_string());
    let net_path = ctx.write(&format!("{stem}.net"), &(report.net.to_json() + "\n"))?;
    let report_path = ctx.write_json(&format!("{stem}.report.json"), &report.sidecar())?;
    println!("construction {}", report.construction);
    println!("target {}", report.target);
    println!("stages {}", report.stages);
    println!("depth {}", report.net.depth());
    println!("epsilon {}", full(eps));
    println!("measured_gap {}", full(report.measured_gap));
    println!("network {}", net_path.display());
    println!("report {}", report_path.display());
    eprintln!(
        "{}: depth {}, gap {} <= {} on [{}, {}]",
        report.construction,
        report.net.depth(),
        short(report.measured_gap),
        short(eps),
        domain.lo,
        domain.hi
    );
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct VerifyReport {
    net: String,
    against: String,
    epsilon: f64,
    domain: [f64; 2],
    grid: usize,
    measured_gap: f64,
    passed: bool,
}

fn verify(ctx: &RunContext, a: &crate::VerifyArgs) -> Result<Outcome> {
    let mut problems = Problems::default();
    let eps = a.eps.or(ctx.file.construct.eps);
    problems.check(eps.is_some_and(|e| e > 0.0), || "a positive eps is required".into());
    problems.check(a.to.is_some() || a.reference.is_some(), || "give --to or --reference".into());
    let domain = domain_from(&a.domain, ctx.file.construct.domain, &mut problems);
    problems.finish()?;
    let eps = eps.unwrap();
    let net = NeuralNet::load(&a.net)?;
    let (against, gap, grid) = if let Some(to) = &a.to {
        let kind = ActivationKind::parse(to)?;
        let target = match kind {
            ActivationKind::LeakyRelu => Activation::leaky_relu(a.alpha.ok_or_else(|| {
                UsageError("--alpha is required for a LeakyReLU target".into())
            })?)?,
            k => Activation::new(k, 1.0, 1.0)?,
        };
        if net.input_dim() != 1 || net.output_dim() != 1 {
            return Err(UsageError(format!(
                "activation targets need a scalar network, got R^{} -> R^{}",
                net.input_dim(),
                net.output_dim()
            ))
            .into());
        }
        let grid = ctx.grid.unwrap_or(DEFAULT_GRID);
        (target.to_string(), scalar_gap(&net, &target, domain, grid), grid)
    } else {
        let path = a.reference.as_ref().unwrap();
        let reference = NeuralNet::load(path)?;
        if reference.input_dim() != net.input_dim() || reference.output_dim() != net.output_dim() {
            return Err(UsageError("networks differ in input or output dimension".into()).into());
        }
        let grid = ctx.grid.unwrap_or(DEFAULT_CERTIFY_GRID);
        let bx = BoxDomain::cube(net.input_dim(), domain.lo, domain.hi);
        (path.display().to_string(), sup_gap(&net, &reference, &bx, grid), grid)
    };
    let passed = gap <= eps + VERIFY_SLACK;
    println!("measured_gap {}", full(gap));
    println!("epsilon {}", full(eps));
    println!("passed {passed}");
    ctx.write_json(
        "verify.json",
        &VerifyReport {
            net: a.net.display().to_string(),
            against,
            epsilon: eps,
            domain: [domain.lo, domain.hi],
            grid,
            measured_gap: gap,
            passed,
        },
    )?;
    eprintln!("gap {} vs epsilon {}: {}", short(gap), short(eps), if passed { "ok" } else { "FAILED" });
    Ok(Outcome::from_bool(passed))
}

fn certify(ctx: &RunContext, a: &crate::CertifyArgs) -> Result<Outcome> {
    let mut problems = Problems::default();
    let m = a.m;
    let n = a.n.unwrap_or(2 * m);
    problems.check(m >= 1, || "m must be at least 1".into());
    problems.check(n > m && n <= 2 * m, || format!("need m < n <= 2m, got m={m}, n={n}"));
    let grid = ctx.file.certify.grid.or(ctx.grid).unwrap_or(DEFAULT_CERTIFY_GRID);
    problems.check(grid >= 2, || "grid needs at least two points".into());
    problems.finish()?;

    let g = build_g(m)?;
    let candidate = a.candidate.as_ref().map(NeuralNet::load).transpose()?;
    if let Some(net) = &candidate {
        if net.input_dim() != m || net.output_dim() != n {
            return Err(UsageError(format!(
                "candidate maps R^{} -> R^{}, expected R^{m} -> R^{n}",
                net.input_dim(),
                net.output_dim()
            ))
            .into());
        }
    }
    let head: &dyn VectorMap = match &candidate {
        Some(net) => net,
        None => &g,
    };
    let f = PaddedMap::new(head, m)?;
    let pairs = IntervalPairs::canonical(m);
    let cert = certify_self_intersection(&f, &g, &pairs, grid)?;
    let path = ctx.write_json(&format!("certificate_m{m}.json"), &cert)?;
    println!("M {}", full(cert.m_value));
    println!("epsilon {}", full(cert.epsilon));
    println!("measured_gap {}", full(cert.measured_gap));
    println!("t1 {}", cert.collision.t1.iter().map(|v| full(*v)).collect::<Vec<_>>().join(" "));
    println!("t2 {}", cert.collision.t2.iter().map(|v| full(*v)).collect::<Vec<_>>().join(" "));
    println!("collision_gap {}", full(cert.collision.gap));
    println!("certificate {}", path.display());
    eprintln!(
        "certified: M = {}, epsilon = {}, collision gap {}",
        short(cert.m_value),
        short(cert.epsilon),
        short(cert.collision.gap)
    );
    Ok(Outcome::Success)
}

fn gendata(ctx: &RunContext, k: Option<u32>) -> Result<Outcome> {
    let k = ctx.k(k);
    let mut problems = Problems::default();
    check_k(k, &mut problems);
    problems.finish()?;
    let (train, val) = gen_disk(k);
    let train_path = ctx.out_path(&format!("disk_k{k}_train.csv"))?;
    let val_path = ctx.out_path(&format!("disk_k{k}_val.csv"))?;
    train.save(&train_path)?;
    val.save(&val_path)?;
    println!("train {} {}", train.len(), train_path.display());
    println!("validation {} {}", val.len(), val_path.display());
    Ok(Outcome::Success)
}

fn train(ctx: &RunContext, width: usize, depth: usize, flags: &TrainFlags) -> Result<Outcome> {
    let mut problems = Problems::default();
    let k = ctx.k(flags.k);
    check_k(k, &mut problems);
    let act = ctx.activation(flags, &mut problems);
    let cfg = ctx.train_config(flags);
    check_train(&cfg, &mut problems);
    problems.check(width >= 1 || depth == 0, || "width must be at least 1".into());
    problems.finish()?;
    let (train_set, val_set) = gen_disk(k);
    let (net, report) = train_network(width, depth, act.unwrap(), (&train_set, &val_set), &cfg)?;
    let stem = format!("train_w{width}_d{depth}_k{k}_s{}", cfg.seed);
    net.save(ctx.out_path(&format!("{stem}.net"))?)?;
    report.save_curve(ctx.out_path(&format!("{stem}.curve.csv"))?)?;
    let path = ctx.write_json(&format!("{stem}.report.json"), &report)?;
    println!("train_loss {}", full(report.train_loss));
    println!("val_loss {}", full(report.val_loss));
    println!("steps {}", report.steps);
    println!("success {}", report.success);
    println!("report {}", path.display());
    eprintln!(
        "width {width} depth {depth}: L = {}, L~ = {} after {} steps ({})",
        short(report.train_loss),
        short(report.val_loss),
        report.steps,
        if report.success { "success" } else { "no success" }
    );
    Ok(Outcome::from_bool(report.success))
}

/// Loads a network file; the shipped `appendix_c.net` is also found by name
/// when no such file exists.
fn load_net(path: &Path) -> Result<NeuralNet> {
    if !path.exists() && path.file_name().is_some_and(|n| n == "appendix_c.net") && path.parent().is_none_or(|p| p.as_os_str().is_empty()) {
        return Ok(appendix_c_net());
    }
    Ok(NeuralNet::load(path)?)
}

#[derive(Serialize)]
struct EvalReport {
    net: String,
    k: u32,
    train_size: usize,
    val_size: usize,
    train_loss: f64,
    val_loss: f64,
}

fn eval(ctx: &RunContext, net_path: &Path, k: Option<u32>) -> Result<Outcome> {
    let k = ctx.k(k);
    let mut problems = Problems::default();
    check_k(k, &mut problems);
    problems.finish()?;
    let net = load_net(net_path)?;
    let (train_set, val_set) = gen_disk(k);
    let (l, lv) = mse_losses(&net, &train_set, &val_set)?;
    println!("train_loss {}", full(l));
    println!("val_loss {}", full(lv));
    let stem = net_path.file_stem().map_or("net".into(), |s| s.to_string_lossy().into_owned());
    ctx.write_json(
        &format!("eval_{stem}_k{k}.json"),
        &EvalReport {
            net: net_path.display().to_string(),
            k,
            train_size: train_set.len(),
            val_size: val_set.len(),
            train_loss: l,
            val_loss: lv,
        },
    )?;
    eprintln!("L = {}, L~ = {}", short(l), short(lv));
    Ok(Outcome::Success)
}

fn parse_depths(spec: &str) -> Result<Vec<usize>, String> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| format!("bad depth range `{spec}`"))?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| format!("bad depth range `{spec}`"))?;
        if lo > hi {
            return Err(format!("empty depth range `{spec}`"));
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad depth `{s}`")))
        .collect()
}

fn sweep(ctx: &RunContext, width: usize, depths: &str, flags: &TrainFlags) -> Result<Outcome> {
    let mut problems = Problems::default();
    let k = ctx.k(flags.k);
    check_k(k, &mut problems);
    let act = ctx.activation(flags, &mut problems);
    let cfg = ctx.train_config(flags);
    check_train(&cfg, &mut problems);
    let depths = parse_depths(depths).map_err(|e| problems.push(e)).unwrap_or_default();
    problems.check(!depths.is_empty(), || "no depths given".into());
    problems.check(depths.windows(2).all(|w| w[0] < w[1]), || "depths must be strictly ascending".into());
    problems.check(width >= 1, || "width must be at least 1".into());
    problems.finish()?;
    let report = depth_sweep(width, act.unwrap(), k, &depths, &cfg)?;
    let stem = format!("sweep_w{width}_k{k}");
    let csv_path = ctx.out_path(&format!("{stem}.csv"))?;
    report.write_csv(std::io::BufWriter::new(fs::File::create(&csv_path)?))?;
    ctx.write_json(&format!("{stem}.json"), &report)?;
    for r in &report.runs {
        println!(
            "depth {} seed {} steps {} train_loss {} val_loss {} success {}",
            r.depth,
            r.seed,
            r.steps,
            full(r.train_loss),
            full(r.val_loss),
            r.success
        );
    }
    match report.min_success_depth {
        Some(d) => println!("min_success_depth {d}"),
        None => println!("min_success_depth none"),
    }
    println!("table {}", csv_path.display());
    Ok(Outcome::from_bool(report.min_success_depth.is_some()))
}
