use rand::Rng;

use super::matrix::Matrix;
use super::net::NeuralNet;
use super::random::rng_from_seed;
use crate::error::{Error, Result};

/// Relative singular-value threshold; scaled by the larger dimension and the
/// largest singular value.
pub const RANK_RTOL: f64 = 1e-10;

/// Maximum number of perturbation attempts per weight matrix.
pub const MAX_PERTURB_RETRIES: usize = 100;

/// Numerical rank from the SVD: singular values below
/// `RANK_RTOL * max(rows, cols) * s_max` count as zero.
pub fn numerical_rank(a: &Matrix) -> usize {
    if a.rows() == 0 || a.cols() == 0 {
        return 0;
    }
    let sv = a.to_nalgebra().singular_values();
    let s_max = sv.iter().cloned().fold(0.0, f64::max);
    if s_max == 0.0 {
        return 0;
    }
    let tol = RANK_RTOL * a.rows().max(a.cols()) as f64 * s_max;
    sv.iter().filter(|&&s| s > tol).count()
}

pub fn is_full_rank(a: &Matrix) -> bool {
    numerical_rank(a) == a.rows().min(a.cols())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbReport {
    /// Perturbation attempts spent per affine map (output map last); zero
    /// means the matrix was already full rank.
    pub retries: Vec<usize>,
    /// Largest entrywise change over all weight matrices.
    pub max_change: f64,
}

/// Makes every weight matrix full rank by adding uniform noise in
/// `(-delta/2, delta/2)` to rank-deficient matrices. Biases and already
/// full-rank matrices are left untouched.
pub fn perturb_to_full_rank(net: &NeuralNet, delta: f64, seed: u64) -> Result<(NeuralNet, PerturbReport)> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = net.clone();
    let mut retries = Vec::new();
    let mut max_change: f64 = 0.0;
    for (layer, (affine, original)) in out.affine_maps_mut().zip(net.affine_maps()).enumerate() {
        let w0 = original.weight();
        if is_full_rank(w0) {
            retries.push(0);
            continue;
        }
        let mut attempt = 0;
        let candidate = loop {
            if attempt == MAX_PERTURB_RETRIES {
                return Err(Error::RankPerturbation {
                    layer,
                    retries: attempt,
                });
            }
            attempt += 1;
            let mut w = w0.clone();
            for v in w.as_mut_slice() {
                *v += rng.gen_range(-delta / 2.0..delta / 2.0);
            }
            if is_full_rank(&w) {
                break w;
            }
        };
        max_change = max_change.max(candidate.max_abs_diff(w0));
        *affine.weight_mut() = candidate;
        retries.push(attempt);
    }
    Ok((
        out,
        PerturbReport {
            retries,
            max_change,
        },
    ))
}
