use super::{ceil_tolerant, check_domain, check_epsilon, verified, Construction, ConstructionReport, ConstructionRequest, ScalarNetBuilder};
use crate::activations::{Activation, ActivationKind, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::netcore::Interval;

/// Default verification window; the bound itself holds on all of `R`.
pub const SOFTPLUS_VERIFY_DOMAIN: Interval = Interval { lo: -10.0, hi: 10.0 };

/// Smallest `n` with `2 / (n beta) <= epsilon`.
pub fn softplus_scale(beta: f64, epsilon: f64) -> usize {
    ceil_tolerant(2.0 / (beta * epsilon)).max(1)
}

/// `x -> Softplus_beta(n x) / n` with `n = softplus_scale(beta, epsilon)`,
/// verified on `[-10, 10]`.
pub fn build_relu_from_softplus(beta: f64, epsilon: f64) -> Result<ConstructionReport> {
    build_relu_from_softplus_on(beta, epsilon, SOFTPLUS_VERIFY_DOMAIN, DEFAULT_GRID)
}

pub fn build_relu_from_softplus_on(beta: f64, epsilon: f64, domain: Interval, grid: usize) -> Result<ConstructionReport> {
    check_epsilon(epsilon)?;
    check_domain(domain)?;
    let act = Activation::softplus(beta)?;
    let n = softplus_scale(beta, epsilon);
    let mut builder = ScalarNetBuilder::new();
    builder.affine(n as f64, 0.0).activation(act).affine(1.0 / n as f64, 0.0);
    verified(ReluFromSoftplus.name(), builder.finish(), Activation::relu(), epsilon, domain, n, grid)
}

#[derive(Debug, Clone, Copy)]
pub struct ReluFromSoftplus;

impl Construction for ReluFromSoftplus {
    fn name(&self) -> &'static str {
        "relu-from-softplus"
    }

    fn source(&self) -> ActivationKind {
        ActivationKind::Softplus
    }

    fn target(&self) -> ActivationKind {
        ActivationKind::Relu
    }

    fn build(&self, request: &ConstructionRequest) -> Result<ConstructionReport> {
        let beta = request
            .source_beta
            .ok_or_else(|| Error::InvalidArgument("relu-from-softplus needs the source beta".into()))?;
        build_relu_from_softplus_on(beta, request.epsilon, request.domain, request.grid)
    }
}
