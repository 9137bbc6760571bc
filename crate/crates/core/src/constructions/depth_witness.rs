//! Brute-force check that a one-neuron `LeakyReLU_0.1` network cannot fit
//! the kinked target `F(x) = x` (x >= 0), `0.2 x` (x < 0) on `[-1, 1]`.

use rayon::prelude::*;
use serde::Serialize;

use crate::netcore::Interval;

/// Tolerance below which the fixed-slope network provably fails.
pub const WITNESS_EPSILON: f64 = 1.0 / 220.0;

const SEARCH_POINTS: usize = 201;
const AB_RANGE: f64 = 5.0;

/// The two shapes a width-1, depth-1 `LeakyReLU_0.1` network can take on
/// `[-1, 1]`: slope ratio 10 to the right or to the left of the kink `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessForm {
    /// `a x + b` on `[-1, c]`, `10 a x + b - 9 a c` on `[c, 1]`.
    SteepRight,
    /// `10 a x + b` on `[-1, c]`, `a x + b + 9 a c` on `[c, 1]`.
    SteepLeft,
}

impl WitnessForm {
    pub fn eval(self, a: f64, b: f64, c: f64, x: f64) -> f64 {
        match self {
            WitnessForm::SteepRight if x <= c => a * x + b,
            WitnessForm::SteepRight => 10.0 * a * x + b - 9.0 * a * c,
            WitnessForm::SteepLeft if x <= c => 10.0 * a * x + b,
            WitnessForm::SteepLeft => a * x + b + 9.0 * a * c,
        }
    }
}

pub fn witness_target(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        0.2 * x
    }
}

/// Max error at the probe points `{-1, c, 0, 1}` that fall inside `domain`
/// (`-1` and `1` are replaced by the domain endpoints).
pub fn witness_error(form: WitnessForm, a: f64, b: f64, c: f64, domain: Interval) -> f64 {
    [domain.lo, c, 0.0, domain.hi]
        .into_iter()
        .filter(|&x| domain.contains(x))
        .map(|x| (form.eval(a, b, c, x) - witness_target(x)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessFit {
    pub form: WitnessForm,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessVerdict {
    pub epsilon: f64,
    pub best: WitnessFit,
    /// True when no searched network reaches an error below epsilon.
    pub infeasible: bool,
}

/// Grid search over `(a, b, c)` for both forms followed by a Nelder-Mead
/// polish of the best cell. Ties go to the lowest grid index.
pub fn best_fit(domain: Interval) -> WitnessFit {
    let n = SEARCH_POINTS;
    let ab = Interval::new(-AB_RANGE, AB_RANGE);
    let cs = Interval::new(-1.0, 1.0);
    let forms = [WitnessForm::SteepRight, WitnessForm::SteepLeft];
    let total = forms.len() * n * n * n;
    let (err, idx) = (0..total)
        .into_par_iter()
        .map(|idx| {
            let (form, a, b, c) = decode(idx, n, &forms, ab, cs);
            (witness_error(form, a, b, c, domain), idx)
        })
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |x, y| if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
        );
    let (form, a, b, c) = decode(idx, n, &forms, ab, cs);
    let objective = |p: &[f64; 3]| witness_error(form, p[0], p[1], p[2].clamp(-1.0, 1.0), domain);
    let step = ab.width() / (n - 1) as f64;
    let (p, refined) = nelder_mead(objective, [a, b, c], step, 2000);
    if refined < err {
        WitnessFit {
            form,
            a: p[0],
            b: p[1],
            c: p[2].clamp(-1.0, 1.0),
            error: refined,
        }
    } else {
        WitnessFit { form, a, b, c, error: err }
    }
}

fn decode(idx: usize, n: usize, forms: &[WitnessForm; 2], ab: Interval, cs: Interval) -> (WitnessForm, f64, f64, f64) {
    let k = idx % n;
    let j = (idx / n) % n;
    let i = (idx / (n * n)) % n;
    let f = idx / (n * n * n);
    (forms[f], ab.grid_point(i, n), ab.grid_point(j, n), cs.grid_point(k, n))
}

pub fn depth_witness_check(epsilon: f64) -> WitnessVerdict {
    let best = best_fit(Interval::new(-1.0, 1.0));
    WitnessVerdict {
        epsilon,
        best,
        infeasible: best.error >= epsilon,
    }
}

/// Minimal Nelder-Mead on three parameters.
fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(f: F, start: [f64; 3], step: f64, iters: usize) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut p = start;
            if i > 0 {
                p[i - 1] += step;
            }
            (p, f(&p))
        })
        .collect();
    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
    };
    for _ in 0..iters {
        simplex.sort_by(|x, y| x.1.total_cmp(&y.1));
        if simplex[3].1 - simplex[0].1 <= 1e-15 * simplex[0].1.abs().max(1e-300) {
            break;
        }
        let mut centroid = [0.0; 3];
        for (p, _) in &simplex[..3] {
            for d in 0..3 {
                centroid[d] += p[d] / 3.0;
            }
        }
        let worst = simplex[3];
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[3] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (reflected, fr);
        } else {
            let contracted = lerp(&centroid, &worst.0, 0.5);
            let fc = f(&contracted);
            if fc < worst.1 {
                simplex[3] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    let p = lerp(&best, &entry.0, 0.5);
                    *entry = (p, f(&p));
                }
            }
        }
    }
    simplex.sort_by(|x, y| x.1.total_cmp(&y.1));
    simplex[0]
}
