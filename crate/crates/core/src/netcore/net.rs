use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::activations::Activation;
use crate::error::{Error, Result};

/// `T_{W,b}(x) = W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    #[serde(rename = "W")]
    weight: Matrix,
    b: Vec<f64>,
}

impl AffineMap {
    pub fn new(weight: Matrix, b: Vec<f64>) -> Result<Self> {
        if weight.rows() != b.len() {
            return Err(Error::Dimension(format!(
                "weight has {} rows but bias has {} entries",
                weight.rows(),
                b.len()
            )));
        }
        if !weight.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("affine map has non-finite entries".into()));
        }
        Ok(AffineMap { weight, b })
    }

    pub fn identity(n: usize) -> Self {
        AffineMap {
            weight: Matrix::identity(n),
            b: vec![0.0; n],
        }
    }

    /// `x -> scale * x + shift` applied to every coordinate of `R^n`.
    pub fn diagonal(n: usize, scale: f64, shift: f64) -> Self {
        AffineMap {
            weight: Matrix::scaled_identity(n, scale),
            b: vec![shift; n],
        }
    }

    pub fn scalar(scale: f64, shift: f64) -> Self {
        Self::diagonal(1, scale, shift)
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn weight_mut(&mut self) -> &mut Matrix {
        &mut self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.out_dim());
        self.apply_into(x, &mut out);
        out
    }

    #[inline]
    pub fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let cols = self.weight.cols();
        let w = self.weight.as_slice();
        for (i, bi) in self.b.iter().enumerate() {
            let row = &w[i * cols..(i + 1) * cols];
            let mut acc = 0.0;
            for (wij, xj) in row.iter().zip(x) {
                acc += wij * xj;
            }
            out.push(acc + bi);
        }
    }

    /// `self ∘ inner`, i.e. `x -> W (W_in x + b_in) + b`.
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        let weight = self.weight.matmul(&inner.weight)?;
        let mut b = self.weight.mul_vec(&inner.b);
        for (bi, own) in b.iter_mut().zip(&self.b) {
            *bi += own;
        }
        AffineMap::new(weight, b)
    }
}

/// One hidden layer: an affine map followed by a componentwise activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(flatten)]
    pub affine: AffineMap,
    pub activation: Activation,
}

/// Feed-forward network `T_L ∘ σ_L ∘ T_{L-1} ∘ … ∘ σ_1 ∘ T_0`.
///
/// Depth is the number of activation layers; width is the largest hidden
/// dimension (zero for a purely affine network).
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNet {
    layers: Vec<Layer>,
    output: AffineMap,
}

impl NeuralNet {
    pub fn new(layers: Vec<Layer>, output: AffineMap) -> Result<Self> {
        let mut dim = layers.first().map_or(output.in_dim(), |l| l.affine.in_dim());
        for (k, layer) in layers.iter().enumerate() {
            if layer.affine.in_dim() != dim {
                return Err(Error::Dimension(format!(
                    "layer {k} expects input dimension {}, previous layer produces {dim}",
                    layer.affine.in_dim()
                )));
            }
            dim = layer.affine.out_dim();
        }
        if output.in_dim() != dim {
            return Err(Error::Dimension(format!(
                "final affine map expects {}, last hidden layer produces {dim}",
                output.in_dim()
            )));
        }
        Ok(NeuralNet { layers, output })
    }

    /// Network with no hidden layers.
    pub fn affine(output: AffineMap) -> Self {
        NeuralNet {
            layers: Vec::new(),
            output,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::affine(AffineMap::identity(n))
    }

    /// Width-uniform architecture `input -> width x depth -> output` with
    /// zero parameters.
    pub fn zeros(input_dim: usize, width: usize, depth: usize, output_dim: usize, act: Activation) -> Self {
        let mut layers = Vec::with_capacity(depth);
        let mut dim = input_dim;
        for _ in 0..depth {
            layers.push(Layer {
                affine: AffineMap {
                    weight: Matrix::zeros(width, dim),
                    b: vec![0.0; width],
                },
                activation: act,
            });
            dim = width;
        }
        NeuralNet {
            layers,
            output: AffineMap {
                weight: Matrix::zeros(output_dim, dim),
                b: vec![0.0; output_dim],
            },
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn output(&self) -> &AffineMap {
        &self.output
    }

    pub fn output_mut(&mut self) -> &mut AffineMap {
        &mut self.output
    }

    pub fn input_dim(&self) -> usize {
        self.layers
            .first()
            .map_or(self.output.in_dim(), |l| l.affine.in_dim())
    }

    pub fn output_dim(&self) -> usize {
        self.output.out_dim()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn width(&self) -> usize {
        self.layers.iter().map(|l| l.affine.out_dim()).max().unwrap_or(0)
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.affine.out_dim()).collect()
    }

    /// All affine maps in evaluation order, the output map last.
    pub fn affine_maps(&self) -> impl Iterator<Item = &AffineMap> {
        self.layers.iter().map(|l| &l.affine).chain(std::iter::once(&self.output))
    }

    pub fn affine_maps_mut(&mut self) -> impl Iterator<Item = &mut AffineMap> {
        self.layers
            .iter_mut()
            .map(|l| &mut l.affine)
            .chain(std::iter::once(&mut self.output))
    }

    pub fn parameter_count(&self) -> usize {
        self.affine_maps()
            .map(|a| a.weight.rows() * a.weight.cols() + a.b.len())
            .sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "network expects input of length {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self.forward_unchecked(x))
    }

    pub fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::with_capacity(self.width().max(self.output_dim()));
        for layer in &self.layers {
            layer.affine.apply_into(&cur, &mut next);
            layer.activation.apply_in_place(&mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        self.output.apply_into(&cur, &mut next);
        next
    }

    /// Pre-activation values of every hidden layer at `x`.
    pub fn pre_activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut cur = x.to_vec();
        let mut out = Vec::with_capacity(self.depth());
        for layer in &self.layers {
            let z = layer.affine.apply(&cur);
            cur = layer.activation.eval_vec(&z);
            out.push(z);
        }
        out
    }

    /// Widens every hidden layer to exactly `k` units by zero padding.
    ///
    /// Padded units receive zero weights and zero bias, and feed the next
    /// layer through zero columns, so outputs are unchanged.
    pub fn zero_pad(&self, k: usize) -> Result<NeuralNet> {
        if k < self.width() {
            return Err(Error::InvalidArgument(format!(
                "cannot pad width-{} network to {k}",
                self.width()
            )));
        }
        let mut prev_real = self.input_dim();
        let mut prev_padded = self.input_dim();
        let mut layers = Vec::with_capacity(self.depth());
        for layer in &self.layers {
            layers.push(Layer {
                affine: pad_affine(&layer.affine, k, prev_padded),
                activation: layer.activation,
            });
            prev_real = layer.affine.out_dim();
            prev_padded = k;
        }
        debug_assert_eq!(self.output.in_dim(), prev_real);
        let output = pad_affine(&self.output, self.output_dim(), prev_padded);
        NeuralNet::new(layers, output)
    }

    /// Runs `self` and then `next`.
    pub fn then(&self, next: &NeuralNet) -> Result<NeuralNet> {
        if next.input_dim() != self.output_dim() {
            return Err(Error::Dimension(format!(
                "cannot chain output dimension {} into input dimension {}",
                self.output_dim(),
                next.input_dim()
            )));
        }
        let mut layers = self.layers.clone();
        let mut rest = next.layers.iter();
        let output = match rest.next() {
            None => next.output.compose(&self.output)?,
            Some(first) => {
                layers.push(Layer {
                    affine: first.affine.compose(&self.output)?,
                    activation: first.activation,
                });
                layers.extend(rest.cloned());
                next.output.clone()
            }
        };
        NeuralNet::new(layers, output)
    }

    /// Applies an affine map before the first layer.
    pub fn precompose(&self, inner: &AffineMap) -> Result<NeuralNet> {
        NeuralNet::affine(inner.clone()).then(self)
    }
}

fn pad_affine(a: &AffineMap, rows: usize, cols: usize) -> AffineMap {
    let mut weight = Matrix::zeros(rows, cols);
    for i in 0..a.out_dim() {
        for j in 0..a.in_dim() {
            weight[(i, j)] = a.weight[(i, j)];
        }
    }
    let mut b = vec![0.0; rows];
    b[..a.out_dim()].copy_from_slice(&a.b);
    AffineMap { weight, b }
}
