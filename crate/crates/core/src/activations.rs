//! Scalar activation functions and their iterates.
//!
//! Every activation is a monotone nondecreasing, piecewise `C^1` map applied
//! componentwise. Parametrized kinds carry a positive `beta` (and SELU a
//! positive `lambda`); invalid parameters are rejected when the value is
//! constructed, so evaluation itself never fails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::Interval;

/// Default number of grid points for one-dimensional sup estimates.
pub const DEFAULT_GRID: usize = 10_001;

/// Default far-left endpoint used when sampling `sigma(x) / x`.
pub const DEFAULT_X_LO: f64 = -100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    LeakyRelu,
    Elu,
    Celu,
    Selu,
    Softplus,
    Hardtanh,
    Relu6,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 8] = [
        ActivationKind::Relu,
        ActivationKind::LeakyRelu,
        ActivationKind::Elu,
        ActivationKind::Celu,
        ActivationKind::Selu,
        ActivationKind::Softplus,
        ActivationKind::Hardtanh,
        ActivationKind::Relu6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::LeakyRelu => "leaky_relu",
            ActivationKind::Elu => "elu",
            ActivationKind::Celu => "celu",
            ActivationKind::Selu => "selu",
            ActivationKind::Softplus => "softplus",
            ActivationKind::Hardtanh => "hardtanh",
            ActivationKind::Relu6 => "relu6",
        }
    }

    /// Parses a kind name. Accepts the canonical snake_case names plus the
    /// short aliases used on the command line (`leaky`, `leakyrelu`).
    pub fn parse(name: &str) -> Result<Self> {
        let lowered = name.trim().to_ascii_lowercase();
        let kind = match lowered.as_str() {
            "relu" => ActivationKind::Relu,
            "leaky" | "leaky_relu" | "leakyrelu" | "leaky-relu" => ActivationKind::LeakyRelu,
            "elu" => ActivationKind::Elu,
            "celu" => ActivationKind::Celu,
            "selu" => ActivationKind::Selu,
            "softplus" => ActivationKind::Softplus,
            "hardtanh" => ActivationKind::Hardtanh,
            "relu6" => ActivationKind::Relu6,
            _ => return Err(Error::InvalidActivation(format!("unknown activation kind `{name}`"))),
        };
        Ok(kind)
    }

    pub fn is_parametrized(self) -> bool {
        !matches!(
            self,
            ActivationKind::Relu | ActivationKind::Hardtanh | ActivationKind::Relu6
        )
    }
}

/// A validated activation function.
///
/// Construct through [`Activation::new`] or the typed helpers; the fields are
/// private so that `beta > 0` and `lambda > 0` always hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActivationToken", into = "ActivationToken")]
pub struct Activation {
    kind: ActivationKind,
    beta: f64,
    lambda: f64,
}

/// Serialized form: `{"kind": "...", "beta": ..., "lambda": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActivationToken {
    pub kind: ActivationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl TryFrom<ActivationToken> for Activation {
    type Error = Error;

    fn try_from(token: ActivationToken) -> Result<Self> {
        if token.kind.is_parametrized() && token.beta.is_none() {
            return Err(Error::InvalidActivation(format!(
                "activation `{}` requires a beta parameter",
                token.kind.name()
            )));
        }
        if token.kind == ActivationKind::Selu && token.lambda.is_none() {
            return Err(Error::InvalidActivation("selu requires a lambda parameter".into()));
        }
        Activation::new(token.kind, token.beta.unwrap_or(1.0), token.lambda.unwrap_or(1.0))
    }
}

impl From<Activation> for ActivationToken {
    fn from(act: Activation) -> Self {
        let beta = act.kind.is_parametrized().then_some(act.beta);
        let lambda = (act.kind == ActivationKind::Selu).then_some(act.lambda);
        ActivationToken {
            kind: act.kind,
            beta,
            lambda,
        }
    }
}

impl Activation {
    /// Builds an activation, validating `beta` (and `lambda` for SELU).
    /// Unparametrized kinds ignore both values.
    pub fn new(kind: ActivationKind, beta: f64, lambda: f64) -> Result<Self> {
        if kind.is_parametrized() && !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidActivation(format!(
                "{} requires beta > 0, got {beta}",
                kind.name()
            )));
        }
        if kind == ActivationKind::Selu && !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidActivation(format!(
                "selu requires lambda > 0, got {lambda}"
            )));
        }
        let beta = if kind.is_parametrized() { beta } else { 1.0 };
        let lambda = if kind == ActivationKind::Selu { lambda } else { 1.0 };
        Ok(Activation { kind, beta, lambda })
    }

    pub fn relu() -> Self {
        Activation {
            kind: ActivationKind::Relu,
            beta: 1.0,
            lambda: 1.0,
        }
    }

    pub fn leaky_relu(beta: f64) -> Result<Self> {
        Self::new(ActivationKind::LeakyRelu, beta, 1.0)
    }

    pub fn elu(beta: f64) -> Result<Self> {
        Self::new(ActivationKind::Elu, beta, 1.0)
    }

    pub fn celu(beta: f64) -> Result<Self> {
        Self::new(ActivationKind::Celu, beta, 1.0)
    }

    pub fn selu(lambda: f64, beta: f64) -> Result<Self> {
        Self::new(ActivationKind::Selu, beta, lambda)
    }

    pub fn softplus(beta: f64) -> Result<Self> {
        Self::new(ActivationKind::Softplus, beta, 1.0)
    }

    pub fn hardtanh() -> Self {
        Activation {
            kind: ActivationKind::Hardtanh,
            beta: 1.0,
            lambda: 1.0,
        }
    }

    pub fn relu6() -> Self {
        Activation {
            kind: ActivationKind::Relu6,
            beta: 1.0,
            lambda: 1.0,
        }
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let beta = self.beta;
        match self.kind {
            ActivationKind::Relu => {
                if x >= 0.0 {
                    x
                } else {
                    0.0
                }
            }
            ActivationKind::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    beta * x
                }
            }
            ActivationKind::Elu => {
                if x >= 0.0 {
                    x
                } else {
                    beta * x.exp_m1()
                }
            }
            ActivationKind::Celu => {
                if x >= 0.0 {
                    x
                } else {
                    beta * (x / beta).exp_m1()
                }
            }
            ActivationKind::Selu => {
                if x >= 0.0 {
                    self.lambda * x
                } else {
                    self.lambda * beta * x.exp_m1()
                }
            }
            // max(x, 0) + ln(1 + e^{-beta|x|}) / beta; never overflows.
            ActivationKind::Softplus => x.max(0.0) + (-beta * x.abs()).exp().ln_1p() / beta,
            ActivationKind::Hardtanh => x.clamp(-1.0, 1.0),
            ActivationKind::Relu6 => x.clamp(0.0, 6.0),
        }
    }

    /// Derivative used by reverse-mode training.
    ///
    /// At a kink the left-sided derivative is returned, so `ReLU'(0) = 0`
    /// and `LeakyReLU_beta'(0) = beta`.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        let beta = self.beta;
        match self.kind {
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::LeakyRelu => {
                if x > 0.0 {
                    1.0
                } else {
                    beta
                }
            }
            ActivationKind::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    beta * x.exp()
                }
            }
            ActivationKind::Celu => {
                if x > 0.0 {
                    1.0
                } else {
                    (x / beta).exp()
                }
            }
            ActivationKind::Selu => {
                if x > 0.0 {
                    self.lambda
                } else {
                    self.lambda * beta * x.exp()
                }
            }
            ActivationKind::Softplus => {
                // logistic(beta x), evaluated without overflow
                if x >= 0.0 {
                    1.0 / (1.0 + (-beta * x).exp())
                } else {
                    let e = (beta * x).exp();
                    e / (1.0 + e)
                }
            }
            ActivationKind::Hardtanh => {
                if x > -1.0 && x <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Relu6 => {
                if x > 0.0 && x <= 6.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Branch break points of the closed form.
    pub fn breakpoints(&self) -> &'static [f64] {
        match self.kind {
            ActivationKind::Softplus => &[],
            ActivationKind::Hardtanh => &[-1.0, 1.0],
            ActivationKind::Relu6 => &[0.0, 6.0],
            _ => &[0.0],
        }
    }

    /// Left and right branch formulas evaluated at `x`, for continuity checks
    /// at the break points.
    pub fn branch_values(&self, x: f64) -> (f64, f64) {
        let beta = self.beta;
        match self.kind {
            ActivationKind::Relu => (0.0, x),
            ActivationKind::LeakyRelu => (beta * x, x),
            ActivationKind::Elu => (beta * x.exp_m1(), x),
            ActivationKind::Celu => (beta * (x / beta).exp_m1(), x),
            ActivationKind::Selu => (self.lambda * beta * x.exp_m1(), self.lambda * x),
            ActivationKind::Softplus => (self.eval(x), self.eval(x)),
            ActivationKind::Hardtanh => {
                if x <= -0.5 {
                    (-1.0, x)
                } else {
                    (x, 1.0)
                }
            }
            ActivationKind::Relu6 => {
                if x <= 3.0 {
                    (0.0, x)
                } else {
                    (x, 6.0)
                }
            }
        }
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.eval(v)).collect()
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = self.eval(*v);
        }
    }

    /// n-fold composition `sigma^n(x)`.
    pub fn iterate(&self, n: usize, x: f64) -> f64 {
        (0..n).fold(x, |acc, _| self.eval(acc))
    }

    /// Grid check of the iteration hypotheses: `sigma(x) = x` for `x >= 0`
    /// and `0 <= sigma(x)/x <= b < 1` on `[x_lo, c]`. Evidence, not proof.
    pub fn check_iteration_hypotheses(&self, c: f64, samples: usize) -> IterationCheck {
        self.check_iteration_hypotheses_from(DEFAULT_X_LO.min(c), c, samples)
    }

    pub fn check_iteration_hypotheses_from(&self, x_lo: f64, c: f64, samples: usize) -> IterationCheck {
        assert!(c < 0.0, "c must be negative");
        assert!(samples >= 2, "need at least two samples");
        let identity_right = Interval::new(0.0, (-x_lo.min(c)).max(1.0))
            .grid(samples)
            .all(|x| self.eval(x) == x);
        let mut b = f64::NEG_INFINITY;
        let mut negative_ratio = false;
        for x in Interval::new(x_lo.min(c), c).grid(samples) {
            let ratio = self.eval(x) / x;
            if ratio < 0.0 {
                negative_ratio = true;
            }
            b = b.max(ratio);
        }
        IterationCheck {
            holds: identity_right && !negative_ratio && b < 1.0,
            b,
        }
    }

    /// Sup over a uniform grid on `domain` of `|sigma^n(x) - ReLU(x)|`.
    pub fn iterated_relu_error(&self, n: usize, domain: Interval) -> f64 {
        self.iterated_relu_error_on(n, domain, DEFAULT_GRID)
    }

    pub fn iterated_relu_error_on(&self, n: usize, domain: Interval, grid: usize) -> f64 {
        domain
            .grid(grid)
            .map(|x| (self.iterate(n, x) - x.max(0.0)).abs())
            .fold(0.0, f64::max)
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ActivationKind::Selu => write!(f, "selu(lambda={}, beta={})", self.lambda, self.beta),
            k if k.is_parametrized() => write!(f, "{}({})", k.name(), self.beta),
            k => write!(f, "{}", k.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationCheck {
    pub holds: bool,
    /// Largest sampled ratio `sigma(x) / x`.
    pub b: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn all_samples() -> Vec<Activation> {
        vec![
            Activation::relu(),
            Activation::leaky_relu(0.2).unwrap(),
            Activation::leaky_relu(3.0).unwrap(),
            Activation::elu(1.0).unwrap(),
            Activation::elu(0.5).unwrap(),
            Activation::celu(0.7).unwrap(),
            Activation::selu(1.0507, 1.67326).unwrap(),
            Activation::softplus(1.0).unwrap(),
            Activation::softplus(3.0).unwrap(),
            Activation::hardtanh(),
            Activation::relu6(),
        ]
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(Activation::leaky_relu(0.2).unwrap().eval(-1.0), -0.2);
        assert_eq!(Activation::elu(1.0).unwrap().eval(0.0), 0.0);
        assert_relative_eq!(
            Activation::softplus(1.0).unwrap().eval(0.0),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn vector_examples() {
        assert_eq!(Activation::relu().eval_vec(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(
            Activation::leaky_relu(0.5).unwrap().eval_vec(&[-2.0, 0.0, 4.0]),
            vec![-1.0, 0.0, 4.0]
        );
        let v = Activation::elu(1.0).unwrap().eval_vec(&[-std::f64::consts::LN_2]);
        assert_relative_eq!(v[0], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected_at_construction() {
        assert!(Activation::leaky_relu(0.0).is_err());
        assert!(Activation::elu(-1.0).is_err());
        assert!(Activation::softplus(f64::NAN).is_err());
        assert!(Activation::selu(0.0, 1.0).is_err());
        // beta is ignored for unparametrized kinds
        assert!(Activation::new(ActivationKind::Relu, -3.0, -3.0).is_ok());
    }

    #[test]
    fn softplus_does_not_overflow() {
        let sp = Activation::softplus(2.0).unwrap();
        assert_eq!(sp.eval(1e6), 1e6);
        assert_eq!(sp.eval(-1e6), 0.0);
        assert!(sp.eval(800.0).is_finite());
    }

    #[test]
    fn continuity_at_breakpoints() {
        for act in all_samples() {
            for &x0 in act.breakpoints() {
                let (left, right) = act.branch_values(x0);
                assert!((left - right).abs() < 1e-15, "{act} discontinuous at {x0}");
                assert_eq!(act.eval(x0), right);
            }
        }
    }

    #[test]
    fn monotone_nondecreasing() {
        for act in all_samples() {
            let xs: Vec<f64> = Interval::new(-20.0, 20.0).grid(4001).collect();
            for w in xs.windows(2) {
                assert!(act.eval(w[0]) <= act.eval(w[1]), "{act} decreases near {}", w[0]);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences_off_kinks() {
        for act in all_samples() {
            for &x in &[-3.3, -0.7, 0.4, 2.5, 7.1] {
                if act.breakpoints().iter().any(|b| (b - x).abs() < 1e-3) {
                    continue;
                }
                let h = 1e-6;
                let fd = (act.eval(x + h) - act.eval(x - h)) / (2.0 * h);
                assert_relative_eq!(act.derivative(x), fd, epsilon = 1e-7);
            }
        }
        assert_eq!(Activation::relu().derivative(0.0), 0.0);
    }

    #[test]
    fn iterate_examples() {
        let lr = Activation::leaky_relu(0.5).unwrap();
        assert_eq!(lr.iterate(3, -8.0), -1.0);
        for act in all_samples().into_iter().filter(|a| a.eval(2.0) == 2.0) {
            assert_eq!(act.iterate(100, 2.0), 2.0);
        }
        let elu = Activation::elu(0.5).unwrap();
        let mut direct = -1.0;
        for _ in 0..10 {
            direct = 0.5 * (f64::exp(direct) - 1.0);
        }
        let it = elu.iterate(10, -1.0);
        assert!(it > -1.0 && it < 0.0);
        assert_relative_eq!(it, direct, max_relative = 1e-12);
    }

    #[test]
    fn hypotheses_examples() {
        let check = Activation::leaky_relu(0.3).unwrap().check_iteration_hypotheses(-1.0, 1000);
        assert!(check.holds);
        assert_relative_eq!(check.b, 0.3, epsilon = 1e-15);

        let check = Activation::elu(0.5).unwrap().check_iteration_hypotheses(-1.0, 1000);
        let oracle = Interval::new(-100.0, -1.0)
            .grid(1000)
            .map(|x| 0.5 * (f64::exp(x) - 1.0) / x)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(check.holds);
        assert!(check.b < 1.0);
        assert_relative_eq!(check.b, oracle, max_relative = 1e-12);

        let check = Activation::leaky_relu(1.5).unwrap().check_iteration_hypotheses(-1.0, 1000);
        assert!(!check.holds);
        assert_relative_eq!(check.b, 1.5, epsilon = 1e-15);

        // ELU with beta > 1 exceeds ratio 1 near the origin.
        assert!(!Activation::elu(2.0).unwrap().check_iteration_hypotheses(-1.0, 1000).holds);
        // Softplus is not the identity on x >= 0.
        assert!(!Activation::softplus(1.0).unwrap().check_iteration_hypotheses(-1.0, 1000).holds);
    }

    #[test]
    fn iterated_relu_error_examples() {
        let lr = Activation::leaky_relu(0.5).unwrap();
        let err = lr.iterated_relu_error(20, Interval::new(-1.0, 1.0));
        assert!((err - 0.5f64.powi(20)).abs() < 1e-12);
        assert_eq!(Activation::relu().iterated_relu_error(1, Interval::new(-5.0, 5.0)), 0.0);

        let elu = Activation::elu(0.5).unwrap();
        let oracle = Interval::new(-2.0, 2.0)
            .grid(DEFAULT_GRID)
            .map(|x| {
                let mut v = x;
                for _ in 0..30 {
                    v = if v >= 0.0 { v } else { 0.5 * (v.exp() - 1.0) };
                }
                (v - x.max(0.0)).abs()
            })
            .fold(0.0, f64::max);
        let err = elu.iterated_relu_error(30, Interval::new(-2.0, 2.0));
        assert!(err < 1e-3);
        assert_relative_eq!(err, oracle, max_relative = 1e-9);
    }

    #[test]
    fn leaky_error_is_geometric() {
        let beta = 0.35;
        let lr = Activation::leaky_relu(beta).unwrap();
        let dom = Interval::new(-2.0, 3.0);
        for n in 1..15 {
            let ratio = lr.iterated_relu_error(n + 1, dom) / lr.iterated_relu_error(n, dom);
            assert_relative_eq!(ratio, beta, max_relative = 1e-12);
        }
    }

    #[test]
    fn token_round_trip_and_validation() {
        let act = Activation::selu(1.05, 1.67).unwrap();
        let text = serde_json::to_string(&act).unwrap();
        assert_eq!(text, r#"{"kind":"selu","beta":1.67,"lambda":1.05}"#);
        let back: Activation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, act);
        assert_eq!(serde_json::to_string(&Activation::relu()).unwrap(), r#"{"kind":"relu"}"#);
        assert!(serde_json::from_str::<Activation>(r#"{"kind":"elu","beta":-1}"#).is_err());
        assert!(serde_json::from_str::<Activation>(r#"{"kind":"elu"}"#).is_err());
    }

    proptest! {
        #[test]
        fn eval_vec_is_componentwise(xs in prop::collection::vec(-50.0f64..50.0, 0..16), which in 0usize..11) {
            let act = all_samples()[which];
            let v = act.eval_vec(&xs);
            for (i, &x) in xs.iter().enumerate() {
                prop_assert_eq!(v[i].to_bits(), act.eval(x).to_bits());
            }
        }

        #[test]
        fn iterate_composes(m in 0usize..8, n in 0usize..8, x in -10.0f64..10.0, which in 0usize..11) {
            let act = all_samples()[which];
            prop_assert_eq!(act.iterate(m + n, x).to_bits(), act.iterate(m, act.iterate(n, x)).to_bits());
        }

        #[test]
        fn selu_with_unit_lambda_is_elu(beta in 0.01f64..5.0, x in -20.0f64..20.0) {
            let selu = Activation::selu(1.0, beta).unwrap();
            let elu = Activation::elu(beta).unwrap();
            prop_assert_eq!(selu.eval(x), elu.eval(x));
        }
    }
}
