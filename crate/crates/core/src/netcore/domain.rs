use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Panics if `lo > hi` or either end is NaN; use [`Interval::try_new`]
    /// for untrusted input.
    pub fn new(lo: f64, hi: f64) -> Self {
        Self::try_new(lo, hi).expect("invalid interval")
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidArgument(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn widen(&self, margin: f64) -> Interval {
        Interval::new(self.lo - margin, self.hi + margin)
    }

    /// The `i`-th of `n` uniform grid points; both endpoints are hit exactly.
    #[inline]
    pub fn grid_point(&self, i: usize, n: usize) -> f64 {
        if n <= 1 {
            return self.lo;
        }
        if i + 1 == n {
            return self.hi;
        }
        let t = i as f64 / (n - 1) as f64;
        self.lo + t * (self.hi - self.lo)
    }

    /// `n` uniform points from `lo` to `hi` inclusive.
    pub fn grid(self, n: usize) -> impl Iterator<Item = f64> + Clone {
        (0..n).map(move |i| self.grid_point(i, n))
    }
}

/// Axis-aligned box `prod_i [lows_i, highs_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lows: Vec<f64>,
    highs: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lows: Vec<f64>, highs: Vec<f64>) -> Result<Self> {
        if lows.len() != highs.len() {
            return Err(Error::Dimension(format!(
                "box has {} lows but {} highs",
                lows.len(),
                highs.len()
            )));
        }
        for (l, h) in lows.iter().zip(&highs) {
            Interval::try_new(*l, *h)?;
        }
        Ok(BoxDomain { lows, highs })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim]).expect("invalid cube")
    }

    pub fn from_intervals(intervals: &[Interval]) -> Self {
        BoxDomain {
            lows: intervals.iter().map(|i| i.lo).collect(),
            highs: intervals.iter().map(|i| i.hi).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lows.len()
    }

    pub fn lows(&self) -> &[f64] {
        &self.lows
    }

    pub fn highs(&self) -> &[f64] {
        &self.highs
    }

    pub fn axis(&self, i: usize) -> Interval {
        Interval::new(self.lows[i], self.highs[i])
    }

    pub fn intervals(&self) -> Vec<Interval> {
        (0..self.dim()).map(|i| self.axis(i)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, &v)| self.axis(i).contains(v))
    }

    /// Number of points of the uniform grid with `per_axis` points per axis.
    pub fn grid_len(&self, per_axis: usize) -> usize {
        per_axis.pow(self.dim() as u32)
    }

    /// Writes the `index`-th grid point (axis 0 varies slowest) into `out`.
    pub fn grid_point_into(&self, index: usize, per_axis: usize, out: &mut [f64]) {
        let mut rem = index;
        for axis in (0..self.dim()).rev() {
            let i = rem % per_axis;
            rem /= per_axis;
            out[axis] = self.axis(axis).grid_point(i, per_axis);
        }
    }

    pub fn grid_point(&self, index: usize, per_axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.grid_point_into(index, per_axis, &mut out);
        out
    }
}
