//! Seeded network initialization.
//!
//! All randomness in the crate comes from ChaCha8 (`rand_chacha::ChaCha8Rng`)
//! seeded through `seed_from_u64`, whose output stream is stable across
//! platforms and crate versions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::Matrix;
use super::net::{AffineMap, Layer, NeuralNet};
use crate::activations::Activation;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_affine<R: Rng>(rng: &mut R, rows: usize, cols: usize, bias_half_width: f64) -> AffineMap {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    let weight = Matrix::from_row_major(rows, cols, data).expect("shape");
    let b = (0..rows)
        .map(|_| {
            if bias_half_width > 0.0 {
                rng.gen_range(-bias_half_width..bias_half_width)
            } else {
                0.0
            }
        })
        .collect();
    AffineMap::new(weight, b).expect("finite")
}

fn build<R: Rng>(rng: &mut R, input: usize, hidden: &[usize], output: usize, act: Activation, bias: f64) -> NeuralNet {
    let mut layers = Vec::with_capacity(hidden.len());
    let mut dim = input;
    for &h in hidden {
        layers.push(Layer {
            affine: uniform_affine(rng, h, dim, bias),
            activation: act,
        });
        dim = h;
    }
    let out = uniform_affine(rng, output, dim, bias);
    NeuralNet::new(layers, out).expect("consistent dims")
}

/// Glorot-uniform weights in `(-sqrt(6/(fan_in+fan_out)), +sqrt(...))`,
/// zero biases.
pub fn glorot_net(input: usize, hidden: &[usize], output: usize, act: Activation, seed: u64) -> NeuralNet {
    build(&mut rng_from_seed(seed), input, hidden, output, act, 0.0)
}

/// Glorot-uniform weights and biases uniform in `(-0.5, 0.5)`; handy for
/// tests that need generic parameters.
pub fn random_net(input: usize, hidden: &[usize], output: usize, act: Activation, seed: u64) -> NeuralNet {
    build(&mut rng_from_seed(seed), input, hidden, output, act, 0.5)
}
