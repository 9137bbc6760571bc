use super::{check_domain, check_epsilon, verified, Construction, ConstructionReport, ConstructionRequest, ScalarNetBuilder};
use crate::activations::{Activation, ActivationKind, DEFAULT_X_LO};
use crate::error::{Error, Result};
use crate::netcore::Interval;

/// Upper limit on the iteration count searched.
pub const MAX_ITERATIONS: usize = 1 << 20;

const HYPOTHESIS_SAMPLES: usize = 10_001;

/// Approximates ReLU on `domain` by `act` composed with itself `n` times,
/// for the least `n` whose grid error is at most `epsilon`.
pub fn build_relu_from_iteration(act: Activation, epsilon: f64, domain: Interval, grid: usize) -> Result<ConstructionReport> {
    check_epsilon(epsilon)?;
    check_domain(domain)?;
    let err = |n: usize| act.iterated_relu_error_on(n, domain, grid);
    if act.kind() != ActivationKind::Relu {
        let check = act.check_iteration_hypotheses_from(DEFAULT_X_LO.min(domain.lo), -epsilon, HYPOTHESIS_SAMPLES);
        if !check.holds {
            return Err(Error::Hypotheses(format!(
                "{act}: sampled sup of sigma(x)/x on the left is {}, identity on x >= 0 required",
                check.b
            )));
        }
    }
    // Doubling, then bisection on the last bracket; the grid error is
    // nonincreasing in n under the hypotheses.
    let mut hi = 1;
    while err(hi) > epsilon {
        if hi >= MAX_ITERATIONS {
            return Err(Error::InvalidArgument(format!(
                "{act}: more than {MAX_ITERATIONS} iterations needed for epsilon {epsilon}"
            )));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if err(mid) <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut builder = ScalarNetBuilder::new();
    for _ in 0..hi {
        builder.activation(act);
    }
    let name = iteration_name(act.kind());
    verified(name, builder.finish(), Activation::relu(), epsilon, domain, hi, grid)
}

fn iteration_name(kind: ActivationKind) -> &'static str {
    match kind {
        ActivationKind::Celu => "relu-from-celu",
        ActivationKind::Elu => "relu-from-elu",
        ActivationKind::LeakyRelu => "relu-from-leaky",
        ActivationKind::Relu => "relu-from-relu",
        ActivationKind::Selu => "relu-from-selu",
        ActivationKind::Softplus => "relu-from-softplus-iteration",
        ActivationKind::Hardtanh => "relu-from-hardtanh",
        ActivationKind::Relu6 => "relu-from-relu6",
    }
}

/// Iterated-activation construction for one source family.
#[derive(Debug, Clone, Copy)]
pub struct ReluFromIteration {
    kind: ActivationKind,
}

impl ReluFromIteration {
    pub fn new(kind: ActivationKind) -> Self {
        ReluFromIteration { kind }
    }
}

impl Construction for ReluFromIteration {
    fn name(&self) -> &'static str {
        iteration_name(self.kind)
    }

    fn source(&self) -> ActivationKind {
        self.kind
    }

    fn target(&self) -> ActivationKind {
        ActivationKind::Relu
    }

    fn build(&self, request: &ConstructionRequest) -> Result<ConstructionReport> {
        let act = if self.kind.is_parametrized() {
            let beta = request
                .source_beta
                .ok_or_else(|| Error::InvalidArgument(format!("{} needs the source beta", self.name())))?;
            Activation::new(self.kind, beta, 1.0)?
        } else {
            Activation::new(self.kind, 1.0, 1.0)?
        };
        build_relu_from_iteration(act, request.epsilon, request.domain, request.grid)
    }
}
