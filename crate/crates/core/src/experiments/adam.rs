use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    /// `beta1^t` and `beta2^t`, kept as running products.
    p1: f64,
    p2: f64,
}

impl Adam {
    pub fn new(len: usize, params: AdamParams) -> Self {
        Adam {
            params,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            p1: 1.0,
            p2: 1.0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        let AdamParams { beta1, beta2, eps } = self.params;
        self.t += 1;
        self.p1 *= beta1;
        self.p2 *= beta2;
        let (c1, c2) = (1.0 / (1.0 - self.p1), 1.0 / (1.0 - self.p2));
        for (((x, &g), m), v) in theta.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *x -= lr * (*m * c1) / ((*v * c2).sqrt() + eps);
        }
    }
}
