//! Full-batch forward and reverse passes over a flat parameter vector.
//!
//! Activations are stored unit-major (all samples of unit 0, then unit 1,
//! ...), so every inner loop runs over a contiguous sample slice. Sums over
//! samples use four interleaved accumulators combined in a fixed order;
//! results are bitwise reproducible for a given batch.

use crate::activations::{Activation, ActivationKind};
use crate::error::{Error, Result};
use crate::netcore::{AffineMap, Layer, Matrix, NeuralNet};

use super::data::Dataset;

/// Parameters in evaluation order: for every affine map, its weight matrix
/// (row-major) followed by its bias.
pub fn flatten(net: &NeuralNet) -> Vec<f64> {
    let mut out = Vec::with_capacity(net.parameter_count());
    for a in net.affine_maps() {
        out.extend_from_slice(a.weight().as_slice());
        out.extend_from_slice(a.bias());
    }
    out
}

/// Copies `params` (in [`flatten`] order) into a network of the same shape
/// as `template`.
pub fn unflatten(template: &NeuralNet, params: &[f64]) -> Result<NeuralNet> {
    if params.len() != template.parameter_count() {
        return Err(Error::Dimension(format!(
            "{} parameters for a network with {}",
            params.len(),
            template.parameter_count()
        )));
    }
    let mut rest = params;
    let mut take = |a: &AffineMap| -> Result<AffineMap> {
        let (r, c) = (a.out_dim(), a.in_dim());
        let (w, tail) = rest.split_at(r * c);
        let (b, tail) = tail.split_at(r);
        rest = tail;
        AffineMap::new(Matrix::from_row_major(r, c, w.to_vec())?, b.to_vec())
    };
    let mut layers = Vec::with_capacity(template.depth());
    for l in template.layers() {
        layers.push(Layer {
            affine: take(&l.affine)?,
            activation: l.activation,
        });
    }
    let output = take(template.output())?;
    NeuralNet::new(layers, output)
}

/// Gradient of the training loss with the same shape as the network: one
/// weight matrix and bias per affine map, output map last.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradient {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl NetGradient {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }
}

/// Reverse-mode gradient of `L = sum ||y - f(x)||^2 / (N n)` over `batch`.
///
/// At activation kinks the left-sided derivative is used (`ReLU'(0) = 0`).
pub fn gradients(net: &NeuralNet, batch: &Dataset) -> Result<NetGradient> {
    let mut engine = BatchEngine::new(net, batch)?;
    let params = flatten(net);
    let mut grad = vec![0.0; params.len()];
    engine.loss_and_grad(&params, &mut grad);
    let g = unflatten(net, &grad)?;
    Ok(NetGradient {
        weights: g.affine_maps().map(|a| a.weight().clone()).collect(),
        biases: g.affine_maps().map(|a| a.bias().to_vec()).collect(),
    })
}

fn check_dims(net: &NeuralNet) -> Result<()> {
    if net.input_dim() != 2 || net.output_dim() != 2 {
        return Err(Error::Dimension(format!(
            "DISK networks map R^2 -> R^2, got R^{} -> R^{}",
            net.input_dim(),
            net.output_dim()
        )));
    }
    Ok(())
}

pub(crate) struct BatchEngine {
    n: usize,
    /// `[input, hidden..., output]`
    dims: Vec<usize>,
    acts: Vec<Activation>,
    x: Vec<f64>,
    y: Vec<f64>,
    /// Pre- and post-activations of each hidden layer.
    z: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    out: Vec<f64>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl BatchEngine {
    pub(crate) fn new(net: &NeuralNet, data: &Dataset) -> Result<Self> {
        check_dims(net)?;
        data.require_nonempty()?;
        let n = data.len();
        let mut dims = vec![2];
        dims.extend(net.hidden_dims());
        dims.push(2);
        let unit_major = |v: &[[f64; 2]]| {
            let mut out = vec![0.0; 2 * n];
            for (s, p) in v.iter().enumerate() {
                out[s] = p[0];
                out[n + s] = p[1];
            }
            out
        };
        let widest = dims.iter().copied().max().unwrap_or(2);
        Ok(BatchEngine {
            n,
            acts: net.layers().iter().map(|l| l.activation).collect(),
            x: unit_major(&data.inputs),
            y: unit_major(&data.targets),
            z: net.hidden_dims().iter().map(|&h| vec![0.0; h * n]).collect(),
            a: net.hidden_dims().iter().map(|&h| vec![0.0; h * n]).collect(),
            out: vec![0.0; 2 * n],
            delta: vec![0.0; widest * n],
            delta_prev: vec![0.0; widest * n],
            dims,
        })
    }

    pub(crate) fn parameter_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    fn forward(&mut self, params: &[f64]) {
        let n = self.n;
        let depth = self.acts.len();
        let mut offset = 0;
        for l in 0..=depth {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let w = &params[offset..offset + fan_out * fan_in];
            let b = &params[offset + fan_out * fan_in..offset + fan_out * (fan_in + 1)];
            offset += fan_out * (fan_in + 1);
            let (prev, dest): (&[f64], &mut [f64]) = match l {
                0 if depth == 0 => (&self.x, &mut self.out),
                0 => (&self.x, &mut self.z[0]),
                l if l == depth => (&self.a[l - 1], &mut self.out),
                l => (&self.a[l - 1], &mut self.z[l]),
            };
            for o in 0..fan_out {
                lincomb(&mut dest[o * n..(o + 1) * n], b[o], &w[o * fan_in..(o + 1) * fan_in], prev);
            }
            if l < depth {
                apply_activation(&self.acts[l], &self.z[l], &mut self.a[l]);
            }
        }
    }

    /// Training loss at `params`.
    pub(crate) fn loss(&mut self, params: &[f64]) -> f64 {
        self.forward(params);
        let scale = 1.0 / (2 * self.n) as f64;
        sum_sq_diff(&self.out, &self.y) * scale
    }

    /// Loss and its gradient (overwriting `grad`).
    pub(crate) fn loss_and_grad(&mut self, params: &[f64], grad: &mut [f64]) -> f64 {
        let loss = self.loss(params);
        let n = self.n;
        let depth = self.acts.len();
        let scale = 2.0 / (2 * n) as f64;
        for ((d, &o), &y) in self.delta.iter_mut().zip(&self.out).zip(&self.y) {
            *d = scale * (o - y);
        }
        let mut offset = params.len();
        for l in (0..=depth).rev() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            offset -= fan_out * (fan_in + 1);
            let w = &params[offset..offset + fan_out * fan_in];
            let prev: &[f64] = if l == 0 { &self.x } else { &self.a[l - 1] };
            let (gw, gb) = grad[offset..offset + fan_out * (fan_in + 1)].split_at_mut(fan_out * fan_in);
            for o in 0..fan_out {
                let d = &self.delta[o * n..(o + 1) * n];
                gb[o] = sum4(d);
                for i in 0..fan_in {
                    gw[o * fan_in + i] = dot4(d, &prev[i * n..(i + 1) * n]);
                }
            }
            if l == 0 {
                break;
            }
            // Back through W_l and the activation of layer l-1.
            let act = self.acts[l - 1];
            let (z, a) = (&self.z[l - 1], &self.a[l - 1]);
            let mut column = vec![0.0; fan_out];
            for i in 0..fan_in {
                let dp = &mut self.delta_prev[i * n..(i + 1) * n];
                for (o, c) in column.iter_mut().enumerate() {
                    *c = w[o * fan_in + i];
                }
                lincomb(dp, 0.0, &column, &self.delta);
                let (zs, as_) = (&z[i * n..(i + 1) * n], &a[i * n..(i + 1) * n]);
                scale_by_slope(&act, zs, as_, dp);
            }
            std::mem::swap(&mut self.delta, &mut self.delta_prev);
        }
        loss
    }
}

const BLOCK: usize = 8;

/// `out[s] = init + sum_k coef[k] src[k n + s]` with `n = out.len()`, summed
/// in `k` order. Works in blocks of samples so the partial sums stay in
/// registers.
fn lincomb(out: &mut [f64], init: f64, coef: &[f64], src: &[f64]) {
    let n = out.len();
    let mut start = 0;
    for block in out.chunks_mut(BLOCK) {
        let len = block.len();
        let mut acc = [init; BLOCK];
        for (k, &c) in coef.iter().enumerate() {
            let s = &src[k * n + start..k * n + start + len];
            if len == BLOCK {
                for j in 0..BLOCK {
                    acc[j] += c * s[j];
                }
            } else {
                for j in 0..len {
                    acc[j] += c * s[j];
                }
            }
        }
        block.copy_from_slice(&acc[..len]);
        start += len;
    }
}

/// `a = act(z)`, with the kind dispatched once per slice so the piecewise
/// linear kinds vectorize.
fn apply_activation(act: &Activation, z: &[f64], a: &mut [f64]) {
    let beta = act.beta();
    match act.kind() {
        ActivationKind::Relu => a.iter_mut().zip(z).for_each(|(a, &z)| *a = if z >= 0.0 { z } else { 0.0 }),
        ActivationKind::LeakyRelu => a.iter_mut().zip(z).for_each(|(a, &z)| *a = if z >= 0.0 { z } else { beta * z }),
        ActivationKind::Elu => a
            .iter_mut()
            .zip(z)
            .for_each(|(a, &z)| *a = if z >= 0.0 { z } else { beta * z.exp_m1() }),
        _ => a.iter_mut().zip(z).for_each(|(a, &z)| *a = act.eval(z)),
    }
}

/// `d *= act'(z)`, reusing `a = act(z)` to avoid a second exponential for
/// the ELU family. Matches [`Activation::derivative`] up to rounding.
fn scale_by_slope(act: &Activation, z: &[f64], a: &[f64], d: &mut [f64]) {
    let beta = act.beta();
    let lanes = d.iter_mut().zip(z).zip(a);
    match act.kind() {
        ActivationKind::Relu => lanes.for_each(|((d, &z), _)| *d = if z > 0.0 { *d } else { 0.0 }),
        ActivationKind::LeakyRelu => lanes.for_each(|((d, &z), _)| *d = if z > 0.0 { *d } else { beta * *d }),
        ActivationKind::Elu => lanes.for_each(|((d, &z), &a)| *d *= if z > 0.0 { 1.0 } else { a + beta }),
        ActivationKind::Celu => lanes.for_each(|((d, &z), &a)| *d *= if z > 0.0 { 1.0 } else { a / beta + 1.0 }),
        ActivationKind::Selu => {
            let (lambda, lb) = (act.lambda(), act.lambda() * beta);
            lanes.for_each(|((d, &z), &a)| *d *= if z > 0.0 { lambda } else { a + lb })
        }
        _ => lanes.for_each(|((d, &z), _)| *d *= act.derivative(z)),
    }
}

fn sum4(a: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.chunks_exact(4);
    let tail = chunks.remainder();
    for c in chunks {
        for k in 0..4 {
            acc[k] += c[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for &v in tail {
        s += v;
    }
    s
}

fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ta.iter().zip(tb) {
        s += x * y;
    }
    s
}

fn sum_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            let d = x[k] - y[k];
            acc[k] += d * d;
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ta.iter().zip(tb) {
        s += (x - y) * (x - y);
    }
    s
}
