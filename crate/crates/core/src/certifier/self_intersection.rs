use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use super::pm::newton_in_box;
use crate::netcore::{sup_gap, BoxDomain, Interval, VectorMap};

/// Safety factor applied to the largest admissible epsilon.
pub const EPSILON_SAFETY: f64 = 0.9;

/// Golden-section sweeps used to refine a grid collision.
const COLLISION_SWEEPS: usize = 100;

/// Disjoint parameter intervals `[a_i1, a_i2]` and `[b_i1, b_i2]` per input axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalPairs {
    a: Vec<Interval>,
    b: Vec<Interval>,
}

impl IntervalPairs {
    pub fn new(a: Vec<Interval>, b: Vec<Interval>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidArgument(format!(
                "need the same positive number of a and b intervals, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        for (i, (ia, ib)) in a.iter().zip(&b).enumerate() {
            for iv in [ia, ib] {
                if iv.lo < 0.0 || iv.hi > 1.0 {
                    return Err(Error::InvalidArgument(format!("interval [{}, {}] leaves [0, 1]", iv.lo, iv.hi)));
                }
            }
            if ia.hi >= ib.lo && ib.hi >= ia.lo {
                return Err(Error::InvalidArgument(format!("pair {i}: intervals intersect")));
            }
        }
        Ok(IntervalPairs { a, b })
    }

    /// `[0, 1/5]` and `[4/5, 1]` on every axis.
    pub fn canonical(m: usize) -> Self {
        Self::new(vec![Interval::new(0.0, 0.2); m], vec![Interval::new(0.8, 1.0); m]).expect("canonical pairs are valid")
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[Interval] {
        &self.a
    }

    pub fn b(&self) -> &[Interval] {
        &self.b
    }

    pub fn a_box(&self) -> BoxDomain {
        BoxDomain::from_intervals(&self.a)
    }

    pub fn b_box(&self) -> BoxDomain {
        BoxDomain::from_intervals(&self.b)
    }
}

/// Values of one output component over a box grid, optionally with one
/// input coordinate pinned.
fn component_on_grid(g: &dyn VectorMap, domain: &BoxDomain, grid: usize, comp: usize, pin: Option<(usize, f64)>) -> Vec<f64> {
    (0..domain.grid_len(grid))
        .into_par_iter()
        .map_init(
            || vec![0.0; domain.dim()],
            |x, idx| {
                domain.grid_point_into(idx, grid, x);
                if let Some((axis, v)) = pin {
                    x[axis] = v;
                }
                g.eval(x)[comp]
            },
        )
        .collect()
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Per-axis quantities entering `M` and epsilon for component pair `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisTerms {
    /// Sup of `(g_{2k-1}(x|a_k1) - g_{2k-1}(y)) (g_{2k-1}(x|a_k2) - g_{2k-1}(y))`.
    pub odd_product: f64,
    /// Sup of `(g_{2k}(x) - g_{2k}(y|b_k1)) (g_{2k}(x) - g_{2k}(y|b_k2))`.
    pub even_product: f64,
    /// Sup of `|g_{2k-1}(x|a_k1) - g_{2k-1}(y)| + |g_{2k-1}(x|a_k2) - g_{2k-1}(y)|`.
    pub odd_spread: f64,
    /// Sup of `|g_{2k}(x) - g_{2k}(y|b_k1)| + |g_{2k}(x) - g_{2k}(y|b_k2)|`.
    pub even_spread: f64,
}

/// Grid sups over `D = A x B` for every axis.
///
/// Each product and spread is convex in the free component value, so for a
/// fixed point on one side its sup over the other side's grid is attained at
/// that side's extreme values; this gives the exact grid sup in linear time.
pub fn axis_terms(g: &dyn VectorMap, pairs: &IntervalPairs, grid: usize) -> Result<Vec<AxisTerms>> {
    let m = pairs.m();
    if g.input_dim() != m || g.output_dim() != 2 * m {
        return Err(Error::Dimension(format!(
            "g maps R^{} -> R^{}, pairs need R^{m} -> R^{}",
            g.input_dim(),
            g.output_dim(),
            2 * m
        )));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    let (xa, yb) = (pairs.a_box(), pairs.b_box());
    let terms = (0..m)
        .map(|k| {
            let (odd, even) = (2 * k, 2 * k + 1);
            let a1 = component_on_grid(g, &xa, grid, odd, Some((k, pairs.a[k].lo)));
            let a2 = component_on_grid(g, &xa, grid, odd, Some((k, pairs.a[k].hi)));
            let (ylo, yhi) = min_max(&component_on_grid(g, &yb, grid, odd, None));
            let b1 = component_on_grid(g, &yb, grid, even, Some((k, pairs.b[k].lo)));
            let b2 = component_on_grid(g, &yb, grid, even, Some((k, pairs.b[k].hi)));
            let (xlo, xhi) = min_max(&component_on_grid(g, &xa, grid, even, None));
            let sup = |p: &[f64], q: &[f64], lo: f64, hi: f64, f: &dyn Fn(f64, f64, f64) -> f64| {
                p.iter()
                    .zip(q)
                    .map(|(&u, &v)| f(u, v, lo).max(f(u, v, hi)))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let product = |u: f64, v: f64, w: f64| (u - w) * (v - w);
            let spread = |u: f64, v: f64, w: f64| (u - w).abs() + (v - w).abs();
            AxisTerms {
                odd_product: sup(&a1, &a2, ylo, yhi, &product),
                even_product: sup(&b1, &b2, xlo, xhi, &product),
                odd_spread: sup(&a1, &a2, ylo, yhi, &spread),
                even_spread: sup(&b1, &b2, xlo, xhi, &spread),
            }
        })
        .collect();
    Ok(terms)
}

/// Grid estimate of `M`, the largest of the product sups over all axes.
pub fn compute_m(g: &dyn VectorMap, pairs: &IntervalPairs, grid: usize) -> Result<f64> {
    Ok(m_from_terms(&axis_terms(g, pairs, grid)?))
}

fn m_from_terms(terms: &[AxisTerms]) -> f64 {
    terms
        .iter()
        .flat_map(|t| [t.odd_product, t.even_product])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `0.9 * min(1/2, min_k -M / (2 S_k + 1))` over both spread families.
pub fn epsilon_from_parts(m_value: f64, spreads: &[f64]) -> Result<f64> {
    if !(m_value < 0.0) {
        return Err(Error::Refused(format!("M = {m_value} is not negative")));
    }
    let bound = spreads
        .iter()
        .map(|s| -m_value / (2.0 * s + 1.0))
        .fold(0.5, f64::min);
    Ok(EPSILON_SAFETY * bound)
}

pub fn compute_epsilon(g: &dyn VectorMap, pairs: &IntervalPairs, m_value: f64, grid: usize) -> Result<f64> {
    if !(m_value < 0.0) {
        return Err(Error::Refused(format!("M = {m_value} is not negative")));
    }
    let spreads: Vec<f64> = axis_terms(g, pairs, grid)?
        .iter()
        .flat_map(|t| [t.odd_spread, t.even_spread])
        .collect();
    epsilon_from_parts(m_value, &spreads)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Collision {
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    /// `||f(t1) - f(t2)||_inf`.
    pub gap: f64,
}

fn inf_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).fold(0.0, |m, (a, b)| {
        let d = (a - b).abs();
        if d.is_nan() {
            f64::INFINITY
        } else {
            m.max(d)
        }
    })
}

/// Minimizes `||f(x) - f(y)||_inf` over `x` in the a-box and `y` in the
/// b-box: exhaustive over the grid, then golden-section coordinate descent.
pub fn find_collision(f: &dyn VectorMap, pairs: &IntervalPairs, grid: usize) -> Result<Collision> {
    let m = pairs.m();
    if f.input_dim() != m {
        return Err(Error::Dimension(format!("f has input dim {}, pairs have {m}", f.input_dim())));
    }
    let (xa, yb) = (pairs.a_box(), pairs.b_box());
    let fx: Vec<Vec<f64>> = (0..xa.grid_len(grid)).into_par_iter().map(|i| f.eval(&xa.grid_point(i, grid))).collect();
    let fy: Vec<Vec<f64>> = (0..yb.grid_len(grid)).into_par_iter().map(|j| f.eval(&yb.grid_point(j, grid))).collect();
    let (gap, i, j) = fx
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            fy.iter()
                .enumerate()
                .fold((f64::INFINITY, i, usize::MAX), |best, (j, v)| {
                    let d = inf_dist(u, v);
                    if d < best.0 {
                        (d, i, j)
                    } else {
                        best
                    }
                })
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
        );
    let mut p: Vec<f64> = xa.grid_point(i, grid);
    p.extend(yb.grid_point(j, grid));
    let bounds: Vec<Interval> = pairs.a.iter().chain(&pairs.b).copied().collect();
    let objective = |p: &[f64]| inf_dist(&f.eval(&p[..m]), &f.eval(&p[m..]));
    let mut best = gap;
    let mut radius: Vec<f64> = bounds.iter().map(|b| b.width() / (grid - 1).max(1) as f64).collect();
    for _ in 0..COLLISION_SWEEPS {
        if best == 0.0 {
            break;
        }
        for d in 0..2 * m {
            let lo = (p[d] - radius[d]).max(bounds[d].lo);
            let hi = (p[d] + radius[d]).min(bounds[d].hi);
            let (t, v) = golden_section(|t| {
                let mut q = p.clone();
                q[d] = t;
                objective(&q)
            }, lo, hi);
            if v < best {
                p[d] = t;
                best = v;
            }
        }
        for r in radius.iter_mut() {
            *r *= 0.7;
        }
    }
    // When f maps into R^{2m}, f(t1) - f(t2) = 0 is square; Newton finishes
    // what the nonsmooth descent above leaves.
    if f.output_dim() == 2 * m && best > 0.0 {
        let residual = |q: &[f64]| -> Vec<f64> {
            let (u, v) = (f.eval(&q[..m]), f.eval(&q[m..]));
            u.iter().zip(&v).map(|(a, b)| a - b).collect()
        };
        let lows: Vec<f64> = bounds.iter().map(|b| b.lo).collect();
        let highs: Vec<f64> = bounds.iter().map(|b| b.hi).collect();
        (p, best) = newton_in_box(&residual, &lows, &highs, p, best);
    }
    Ok(Collision {
        t1: p[..m].to_vec(),
        t2: p[m..].to_vec(),
        gap: best,
    })
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Evidence that no injective map within `epsilon` of `g` exists: `M < 0`,
/// `sup |f - g| < epsilon`, hence `f` has a self-intersection. Sound up to
/// the grid resolution recorded here.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfIntersectionCertificate {
    pub pairs: IntervalPairs,
    #[serde(rename = "M")]
    pub m_value: f64,
    pub epsilon: f64,
    pub grid_resolution: usize,
    /// Grid sup of `||f - g||_inf` on the unit cube.
    pub measured_gap: f64,
    pub collision: Collision,
    pub terms: Vec<AxisTerms>,
}

pub fn certify_self_intersection(
    f: &dyn VectorMap,
    g: &dyn VectorMap,
    pairs: &IntervalPairs,
    grid: usize,
) -> Result<SelfIntersectionCertificate> {
    if f.input_dim() != g.input_dim() || f.output_dim() != g.output_dim() {
        return Err(Error::Dimension("f and g must have the same shape".into()));
    }
    let terms = axis_terms(g, pairs, grid)?;
    let m_value = m_from_terms(&terms);
    let spreads: Vec<f64> = terms.iter().flat_map(|t| [t.odd_spread, t.even_spread]).collect();
    let epsilon = epsilon_from_parts(m_value, &spreads)?;
    let cube = BoxDomain::cube(pairs.m(), 0.0, 1.0);
    let measured_gap = sup_gap(f, g, &cube, grid);
    if !(measured_gap < epsilon) {
        return Err(Error::Refused(format!("sup |f - g| = {measured_gap} is not below epsilon = {epsilon}")));
    }
    let collision = find_collision(f, pairs, grid)?;
    Ok(SelfIntersectionCertificate {
        pairs: pairs.clone(),
        m_value,
        epsilon,
        grid_resolution: grid,
        measured_gap,
        collision,
        terms,
    })
}
