use super::{ceil_tolerant, check_stage_count, check_domain, check_epsilon, verified, Construction, ConstructionReport, ConstructionRequest, ScalarNetBuilder};
use crate::activations::{Activation, ActivationKind};
use crate::error::{Error, Result};
use crate::netcore::{Interval, NeuralNet};

/// Width-1 `LeakyReLU_alpha` network computing `LeakyReLU_{1/alpha}` exactly:
/// `x -> -(1/alpha) * LeakyReLU_alpha(-x)`.
pub fn leaky_reciprocal(alpha: f64) -> Result<NeuralNet> {
    Activation::leaky_relu(alpha)?;
    let mut b = ScalarNetBuilder::new();
    b.leaky_power(alpha, -1);
    Ok(b.finish())
}

/// Powers of `beta` around `alpha`: `beta1 = beta^p1 < alpha < beta2 = beta^p2`,
/// or an exact hit `alpha = beta^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeakyBracket {
    Exact { power: i32 },
    Between { p1: i32, p2: i32, beta1: f64, beta2: f64 },
}

const EXACT_RTOL: f64 = 1e-12;

pub fn leaky_bracket(alpha: f64, beta: f64) -> Result<LeakyBracket> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite() && beta != 1.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive and not 1, got {beta}")));
    }
    let ratio = alpha.ln() / beta.ln();
    let nearest = ratio.round();
    if (beta.powi(nearest as i32) - alpha).abs() <= EXACT_RTOL * alpha {
        return Ok(LeakyBracket::Exact { power: nearest as i32 });
    }
    let j = ratio.floor() as i32;
    // For beta < 1, beta^j > alpha > beta^(j+1); for beta > 1 the order flips.
    let (p1, p2) = if beta < 1.0 { (j + 1, j) } else { (j, j + 1) };
    let (beta1, beta2) = (beta.powi(p1), beta.powi(p2));
    debug_assert!(beta1 < alpha && alpha < beta2);
    Ok(LeakyBracket::Between { p1, p2, beta1, beta2 })
}

/// Approximates `LeakyReLU_alpha` on `domain` with a width-1 network whose
/// activations are all `LeakyReLU_beta`.
pub fn build_leaky_from_leaky(alpha: f64, beta: f64, epsilon: f64, domain: Interval, grid: usize) -> Result<ConstructionReport> {
    check_epsilon(epsilon)?;
    check_domain(domain)?;
    let target = Activation::leaky_relu(alpha)?;
    let mut net = ScalarNetBuilder::new();
    let (p1, p2, beta1, beta2) = match leaky_bracket(alpha, beta)? {
        LeakyBracket::Exact { power } => {
            net.leaky_power(beta, power);
            return verified(LeakyFromLeaky.name(), net.finish(), target, epsilon, domain, 0, grid);
        }
        LeakyBracket::Between { p1, p2, beta1, beta2 } => (p1, p2, beta1, beta2),
    };
    let k = if domain.lo < 0.0 {
        ceil_tolerant(alpha * -domain.lo / epsilon).max(1)
    } else {
        0
    };
    check_stage_count(k.saturating_mul(2))?;
    if k > 0 {
        let b = leaky_offset(alpha, beta1, beta2, epsilon);
        net.leaky_power(beta, p2);
        for m in 1..=k {
            let s = (m - 1) as f64 * epsilon;
            if m >= 2 {
                net.shift(s).leaky_power(beta, p2 - p1).shift(-s);
            }
            net.shift(s + b).leaky_power(beta, p1 - p2).shift(-s - b);
        }
    }
    verified(LeakyFromLeaky.name(), net.finish(), target, epsilon, domain, k, grid)
}

/// The constant `b` placing the second knot of each stage pair.
pub fn leaky_offset(alpha: f64, beta1: f64, beta2: f64, epsilon: f64) -> f64 {
    (1.0 / beta1 - 1.0 / alpha) / (1.0 / beta1 - 1.0 / beta2) * epsilon
}

#[derive(Debug, Clone, Copy)]
pub struct LeakyFromLeaky;

impl Construction for LeakyFromLeaky {
    fn name(&self) -> &'static str {
        "leaky-from-leaky"
    }

    fn source(&self) -> ActivationKind {
        ActivationKind::LeakyRelu
    }

    fn target(&self) -> ActivationKind {
        ActivationKind::LeakyRelu
    }

    fn build(&self, request: &ConstructionRequest) -> Result<ConstructionReport> {
        let beta = request
            .source_beta
            .ok_or_else(|| Error::InvalidArgument("leaky-from-leaky needs the source beta".into()))?;
        build_leaky_from_leaky(request.target.beta(), beta, request.epsilon, request.domain, request.grid)
    }
}
