use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::netcore::{BoxDomain, VectorMap};

const NEWTON_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmResult {
    /// Sign conditions hold at every grid point of every face.
    pub certified: bool,
    /// Refined approximate root, present only when certified.
    pub root: Option<Vec<f64>>,
    /// `||f||_inf` at the best grid point.
    pub grid_residual: f64,
    /// `||f||_inf` at `root` after refinement.
    pub residual: f64,
}

/// Grid check of the sign conditions `h_i f_i >= 0` on the face `x_i = lo_i`
/// and `h_i f_i <= 0` on `x_i = hi_i`. When they hold, a zero of `f` exists
/// in the box (up to grid resolution); the best grid point is then polished
/// by damped Newton steps with a finite-difference Jacobian, kept inside the
/// box.
pub fn pm_root(f: &dyn VectorMap, domain: &BoxDomain, signs: &[f64], grid: usize) -> Result<PmResult> {
    let n = domain.dim();
    if f.input_dim() != n || f.output_dim() != n || signs.len() != n {
        return Err(Error::Dimension(format!(
            "box dim {n}, map R^{} -> R^{}, {} signs",
            f.input_dim(),
            f.output_dim(),
            signs.len()
        )));
    }
    if signs.iter().any(|s| s.abs() != 1.0) {
        return Err(Error::InvalidArgument("signs must be +1 or -1".into()));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    let certified = (0..n).all(|i| face_holds(f, domain, signs[i], i, grid));

    let (grid_residual, best) = (0..domain.grid_len(grid))
        .into_par_iter()
        .map(|idx| (residual(f, &domain.grid_point(idx, grid)), idx))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    if !certified {
        return Ok(PmResult {
            certified,
            root: None,
            grid_residual,
            residual: grid_residual,
        });
    }
    let start = domain.grid_point(best, grid);
    let (root, res) = newton_polish(f, domain, start, grid_residual);
    Ok(PmResult {
        certified,
        root: Some(root),
        grid_residual,
        residual: res,
    })
}

fn residual(f: &dyn VectorMap, x: &[f64]) -> f64 {
    f.eval(x).iter().fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
}

fn face_holds(f: &dyn VectorMap, domain: &BoxDomain, sign: f64, axis: usize, grid: usize) -> bool {
    let n = domain.dim();
    let face_len = grid.pow(n as u32 - 1);
    let (lo, hi) = (domain.lows()[axis], domain.highs()[axis]);
    (0..face_len).into_par_iter().all(|idx| {
        let mut x = vec![0.0; n];
        let mut rem = idx;
        for j in (0..n).rev().filter(|&j| j != axis) {
            x[j] = domain.axis(j).grid_point(rem % grid, grid);
            rem /= grid;
        }
        x[axis] = lo;
        let low_ok = sign * f.eval(&x)[axis] >= 0.0;
        x[axis] = hi;
        low_ok && sign * f.eval(&x)[axis] <= 0.0
    })
}

fn newton_polish(f: &dyn VectorMap, domain: &BoxDomain, x: Vec<f64>, best: f64) -> (Vec<f64>, f64) {
    newton_in_box(&|v: &[f64]| f.eval(v), domain.lows(), domain.highs(), x, best)
}

/// Damped Newton on a square system `r(x) = 0` with a central-difference
/// Jacobian, every iterate clamped to the box. A step is taken only when it
/// lowers `||r||_inf` below `best`; returns the final point and residual.
pub(crate) fn newton_in_box(
    r: &dyn Fn(&[f64]) -> Vec<f64>,
    lows: &[f64],
    highs: &[f64],
    mut x: Vec<f64>,
    mut best: f64,
) -> (Vec<f64>, f64) {
    let n = x.len();
    let norm = |v: &[f64]| v.iter().fold(0.0, |m: f64, c| if c.is_nan() { f64::INFINITY } else { m.max(c.abs()) });
    for _ in 0..NEWTON_STEPS {
        if best == 0.0 {
            break;
        }
        let fx = r(&x);
        if fx.len() != n {
            break;
        }
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (r(&xp), r(&xm));
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = nalgebra::DVector::from_iterator(n, fx.iter().map(|v| -v));
        let Some(step) = jac.lu().solve(&rhs) else { break };
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-6 {
            let cand: Vec<f64> = (0..n).map(|i| (x[i] + t * step[i]).clamp(lows[i], highs[i])).collect();
            let res = norm(&r(&cand));
            if res < best {
                x = cand;
                best = res;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, best)
}
