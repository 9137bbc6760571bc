use crate::activations::Activation;
use crate::netcore::{AffineMap, Layer, NeuralNet};

/// Incrementally assembles a width-1 network from scalar affine steps and
/// activations. Consecutive affine steps are fused into one.
#[derive(Debug, Clone)]
pub struct ScalarNetBuilder {
    layers: Vec<Layer>,
    scale: f64,
    shift: f64,
}

impl Default for ScalarNetBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ScalarNetBuilder {
    pub fn new() -> Self {
        ScalarNetBuilder {
            layers: Vec::new(),
            scale: 1.0,
            shift: 0.0,
        }
    }

    /// Appends `x -> scale * x + shift`.
    pub fn affine(&mut self, scale: f64, shift: f64) -> &mut Self {
        self.scale *= scale;
        self.shift = scale * self.shift + shift;
        self
    }

    pub fn shift(&mut self, shift: f64) -> &mut Self {
        self.affine(1.0, shift)
    }

    pub fn activation(&mut self, act: Activation) -> &mut Self {
        self.layers.push(Layer {
            affine: AffineMap::scalar(self.scale, self.shift),
            activation: act,
        });
        self.scale = 1.0;
        self.shift = 0.0;
        self
    }

    /// Appends `LeakyReLU_{beta^power}` realized with `LeakyReLU_beta` layers.
    /// Negative powers use `LeakyReLU_{1/b}(x) = -(1/b) LeakyReLU_b(-x)`.
    pub fn leaky_power(&mut self, beta: f64, power: i32) -> &mut Self {
        let act = Activation::leaky_relu(beta).expect("beta validated by caller");
        if power >= 0 {
            for _ in 0..power {
                self.activation(act);
            }
        } else {
            for _ in 0..(-power) {
                self.affine(-1.0, 0.0);
                self.activation(act);
                self.affine(-1.0 / beta, 0.0);
            }
        }
        self
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn finish(self) -> NeuralNet {
        NeuralNet::new(self.layers, AffineMap::scalar(self.scale, self.shift))
            .expect("scalar layers always chain")
    }
}
