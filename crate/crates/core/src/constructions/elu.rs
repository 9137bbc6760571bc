use super::{ceil_tolerant, check_stage_count, check_domain, check_epsilon, verified, Construction, ConstructionReport, ConstructionRequest, ScalarNetBuilder};
use crate::activations::{Activation, ActivationKind};
use crate::error::{Error, Result};
use crate::netcore::Interval;

/// Approximates `LeakyReLU_alpha` on `domain` with a width-1 ELU network.
///
/// Stage `n` is `x -> ELU_{k_n}(x + (n-1) eps) - (n-1) eps`, with `k_n`
/// chosen so that the network passes through `(-n eps/alpha, -n eps)`.
pub fn build_leaky_from_elu(alpha: f64, epsilon: f64, domain: Interval, grid: usize) -> Result<ConstructionReport> {
    check_epsilon(epsilon)?;
    check_domain(domain)?;
    let target = Activation::leaky_relu(alpha)?;
    let stages = if domain.lo < 0.0 {
        ceil_tolerant(alpha * -domain.lo / epsilon)
    } else {
        0
    };
    check_stage_count(stages)?;
    let mut builder = ScalarNetBuilder::new();
    let mut acts: Vec<Activation> = Vec::with_capacity(stages);
    for n in 1..=stages {
        let shift = (n - 1) as f64 * epsilon;
        let knot = -(n as f64) * epsilon / alpha;
        let s = eval_stages(&acts, epsilon, knot) + shift;
        let k_n = -epsilon / s.exp_m1();
        let act = Activation::elu(k_n).map_err(|_| {
            Error::InvalidArgument(format!("stage {n} produced an invalid ELU parameter {k_n}"))
        })?;
        acts.push(act);
        builder.shift(shift).activation(act).shift(-shift);
    }
    verified(LeakyFromElu.name(), builder.finish(), target, epsilon, domain, stages, grid)
}

/// Evaluates the stages built so far directly (the network's own forward
/// pass without the final fused affine map).
fn eval_stages(acts: &[Activation], epsilon: f64, x: f64) -> f64 {
    acts.iter().enumerate().fold(x, |y, (i, act)| {
        let shift = i as f64 * epsilon;
        act.eval(y + shift) - shift
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LeakyFromElu;

impl Construction for LeakyFromElu {
    fn name(&self) -> &'static str {
        "leaky-from-elu"
    }

    fn source(&self) -> ActivationKind {
        ActivationKind::Elu
    }

    fn target(&self) -> ActivationKind {
        ActivationKind::LeakyRelu
    }

    fn build(&self, request: &ConstructionRequest) -> Result<ConstructionReport> {
        build_leaky_from_elu(request.target.beta(), request.epsilon, request.domain, request.grid)
    }
}
