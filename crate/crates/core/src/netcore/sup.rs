use rayon::prelude::*;

use super::domain::BoxDomain;
use super::net::NeuralNet;

/// A map `R^m -> R^n` that can be sampled pointwise.
pub trait VectorMap: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
}

impl VectorMap for NeuralNet {
    fn input_dim(&self) -> usize {
        NeuralNet::input_dim(self)
    }

    fn output_dim(&self) -> usize {
        NeuralNet::output_dim(self)
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.forward_unchecked(x)
    }
}

impl<T: VectorMap + ?Sized> VectorMap for &T {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (**self).eval(x)
    }
}

/// Wraps a closure as a [`VectorMap`].
pub struct FnMap<F> {
    input_dim: usize,
    output_dim: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(input_dim: usize, output_dim: usize, f: F) -> Self {
        FnMap {
            input_dim,
            output_dim,
            f,
        }
    }
}

impl<F> VectorMap for FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

/// Scalar function lifted to a `R -> R` map.
pub fn scalar_map<F: Fn(f64) -> f64 + Sync>(f: F) -> FnMap<impl Fn(&[f64]) -> Vec<f64> + Sync> {
    FnMap::new(1, 1, move |x: &[f64]| vec![f(x[0])])
}

/// NaN-propagating maximum; a NaN gap is reported as infinite.
#[inline]
pub(crate) fn max_gap(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::INFINITY
    } else {
        a.max(b)
    }
}

/// Maximum of `||f(x) - g(x)||_inf` over the uniform grid with
/// `grid_per_axis` points per axis. A grid estimate of the sup norm.
pub fn sup_gap(f: &dyn VectorMap, g: &dyn VectorMap, domain: &BoxDomain, grid_per_axis: usize) -> f64 {
    assert!(grid_per_axis >= 2, "grid needs at least two points per axis");
    assert_eq!(f.input_dim(), domain.dim(), "f input dimension");
    assert_eq!(g.input_dim(), domain.dim(), "g input dimension");
    assert_eq!(f.output_dim(), g.output_dim(), "output dimensions differ");
    let n = domain.grid_len(grid_per_axis);
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; domain.dim()],
            |x, idx| {
                domain.grid_point_into(idx, grid_per_axis, x);
                let fx = f.eval(x);
                let gx = g.eval(x);
                fx.iter()
                    .zip(&gx)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, max_gap)
            },
        )
        .reduce(|| 0.0, max_gap)
}
