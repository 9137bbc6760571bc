use serde::Serialize;

use crate::error::{Error, Result};
use crate::netcore::VectorMap;

/// The piecewise-linear counterexample map `[0,1]^m -> R^n`, `n <= 2m`.
///
/// Components `2k-1` and `2k` (1-based) depend only on `t_k`:
/// `g_{2k-1}` rises 10 t - 1 to 2 on [0, 0.3], stays at 2 until 0.5, falls
/// back to 0 at 0.7 and stays there; `g_{2k}` is 0 until 0.3, rises to 2 at
/// 0.5, stays until 0.7 and falls as 9 - 10 t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GMap {
    m: usize,
    n: usize,
}

pub fn build_g(m: usize) -> Result<GMap> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    Ok(GMap { m, n: 2 * m })
}

/// First `n` components of [`build_g`]`(m)`.
pub fn build_gstar(m: usize, n: usize) -> Result<GMap> {
    if m == 0 || n <= m || n > 2 * m {
        return Err(Error::InvalidArgument(format!("need m < n <= 2m, got m={m}, n={n}")));
    }
    Ok(GMap { m, n })
}

/// `g_{2k-1}` as a function of `t_k`.
pub fn g_odd(t: f64) -> f64 {
    if t <= 0.3 {
        10.0 * t - 1.0
    } else if t <= 0.5 {
        2.0
    } else if t <= 0.7 {
        7.0 - 10.0 * t
    } else {
        0.0
    }
}

/// `g_{2k}` as a function of `t_k`.
pub fn g_even(t: f64) -> f64 {
    if t <= 0.3 {
        0.0
    } else if t <= 0.5 {
        10.0 * t - 3.0
    } else if t <= 0.7 {
        2.0
    } else {
        9.0 - 10.0 * t
    }
}

impl GMap {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Component `i` (0-based) at `t`, with no domain check.
    pub fn component(&self, i: usize, t: &[f64]) -> f64 {
        let tk = t[i / 2];
        if i.is_multiple_of(2) {
            g_odd(tk)
        } else {
            g_even(tk)
        }
    }

    pub fn try_eval(&self, t: &[f64]) -> Result<Vec<f64>> {
        if t.len() != self.m {
            return Err(Error::Dimension(format!("expected {} inputs, got {}", self.m, t.len())));
        }
        if let Some(bad) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("input {bad} lies outside [0, 1]")));
        }
        Ok((0..self.n).map(|i| self.component(i, t)).collect())
    }
}

impl VectorMap for GMap {
    fn input_dim(&self) -> usize {
        self.m
    }

    fn output_dim(&self) -> usize {
        self.n
    }

    /// Panics outside `[0,1]^m`; use [`GMap::try_eval`] for unchecked input.
    fn eval(&self, t: &[f64]) -> Vec<f64> {
        self.try_eval(t).expect("g is defined on the unit cube only")
    }
}

/// `t -> (f(t), g_{n+1}(t), ..., g_{2m}(t))`: a map into `R^n` completed with
/// the tail components of `g`.
pub struct PaddedMap<'a> {
    head: &'a dyn VectorMap,
    g: GMap,
}

impl<'a> PaddedMap<'a> {
    pub fn new(head: &'a dyn VectorMap, m: usize) -> Result<Self> {
        let g = build_g(m)?;
        if head.input_dim() != m || head.output_dim() > 2 * m {
            return Err(Error::Dimension(format!(
                "head maps R^{} -> R^{}, expected R^{m} -> R^n with n <= {}",
                head.input_dim(),
                head.output_dim(),
                2 * m
            )));
        }
        Ok(PaddedMap { head, g })
    }
}

impl VectorMap for PaddedMap<'_> {
    fn input_dim(&self) -> usize {
        self.g.m
    }

    fn output_dim(&self) -> usize {
        self.g.n
    }

    fn eval(&self, t: &[f64]) -> Vec<f64> {
        let mut out = self.head.eval(t);
        let n = out.len();
        out.extend((n..self.g.n).map(|i| self.g.component(i, t)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_examples() {
        let g = build_g(1).unwrap();
        assert_eq!(g.eval(&[0.3])[0], 2.0);
        assert_eq!(g.eval(&[0.5])[1], 2.0);
        assert_eq!(g.eval(&[0.75]), vec![0.0, 9.0 - 7.5]);
        assert_eq!(g.eval(&[0.1]), vec![0.0, 0.0]);
        assert_eq!(g.eval(&[0.9]), vec![0.0, 9.0 - 9.0]);
    }

    #[test]
    fn continuous_at_boundaries() {
        for t in [0.3, 0.5, 0.7] {
            for f in [g_odd, g_even] {
                let left = f(t - 1e-12);
                let right = f(t + 1e-12);
                assert!((left - right).abs() < 1e-10, "jump at {t}");
            }
        }
        // Branch formulas agree at the break points.
        assert_eq!(10.0 * 0.3 - 1.0, 2.0);
        assert!((7.0f64 - 10.0 * 0.7).abs() < 1e-15);
        assert!((10.0f64 * 0.3 - 3.0).abs() < 1e-15);
        assert!((9.0f64 - 10.0 * 0.7 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gstar_is_a_prefix() {
        let gs = build_gstar(2, 3).unwrap();
        assert_eq!(gs.eval(&[0.3, 0.3]), vec![2.0, 0.0, 2.0]);
        let g = build_g(2).unwrap();
        let t = [0.42, 0.77];
        assert_eq!(gs.eval(&t)[..], g.eval(&t)[..3]);
        assert_eq!(build_gstar(1, 2).unwrap(), build_g(1).unwrap());
        assert!(build_gstar(2, 2).is_err());
        assert!(build_gstar(2, 5).is_err());
        assert!(build_g(0).is_err());
    }

    #[test]
    fn rejects_points_outside_the_cube() {
        let g = build_g(2).unwrap();
        assert!(g.try_eval(&[0.5, 1.1]).is_err());
        assert!(g.try_eval(&[0.5]).is_err());
    }

    #[test]
    fn padding_appends_tail_components() {
        let head = build_gstar(2, 3).unwrap();
        let p = PaddedMap::new(&head, 2).unwrap();
        let g = build_g(2).unwrap();
        assert_eq!(p.eval(&[0.2, 0.8]), g.eval(&[0.2, 0.8]));
    }
}
