//! Explicit networks that approximate one activation with another.
//!
//! Each scalar construction implements [`Construction`] and is registered by
//! name in a [`ConstructionRegistry`]; callers (the CLI, and
//! [`substitute_activations`]) select one at runtime by name or by the
//! `(network family, approximated function)` pair.

mod builder;
mod depth_witness;
mod elu;
mod iteration;
mod leaky;
mod softplus;
mod substitute;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use builder::ScalarNetBuilder;
pub use depth_witness::{best_fit, depth_witness_check, witness_error, witness_target, WitnessFit, WitnessForm, WitnessVerdict, WITNESS_EPSILON};
pub use elu::{build_leaky_from_elu, LeakyFromElu};
pub use iteration::{build_relu_from_iteration, ReluFromIteration, MAX_ITERATIONS};
pub use leaky::{build_leaky_from_leaky, leaky_bracket, leaky_offset, leaky_reciprocal, LeakyBracket, LeakyFromLeaky};
pub use softplus::{build_relu_from_softplus, build_relu_from_softplus_on, softplus_scale, ReluFromSoftplus, SOFTPLUS_VERIFY_DOMAIN};
pub use substitute::{substitute_activations, SubstitutionReport, MAX_SUBNET_DEPTH};

use crate::activations::{Activation, ActivationKind, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::netcore::{scalar_map, sup_gap, BoxDomain, Interval, NeuralNet};

/// Absolute slack allowed when a build-time grid check compares against
/// epsilon; covers rounding in fused affine maps.
pub const VERIFY_SLACK: f64 = 1e-12;

/// A verified approximating network.
#[derive(Debug, Clone)]
pub struct ConstructionReport {
    pub construction: String,
    pub net: NeuralNet,
    /// The activation being approximated.
    pub target: Activation,
    pub epsilon: f64,
    pub valid_domain: Interval,
    pub measured_gap: f64,
    /// Number of construction stages (knot pairs, ELU stages, iterations, ...).
    pub stages: usize,
    pub grid: usize,
}

/// Sidecar document written next to a constructed network.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportSidecar {
    pub construction: String,
    pub target: Activation,
    pub epsilon: f64,
    pub domain: [f64; 2],
    pub measured_gap: f64,
    pub stages: usize,
    pub depth: usize,
    pub grid: usize,
}

impl ConstructionReport {
    pub fn sidecar(&self) -> ReportSidecar {
        ReportSidecar {
            construction: self.construction.clone(),
            target: self.target,
            epsilon: self.epsilon,
            domain: [self.valid_domain.lo, self.valid_domain.hi],
            measured_gap: self.measured_gap,
            stages: self.stages,
            depth: self.net.depth(),
            grid: self.grid,
        }
    }
}

/// Grid sup of `|net(x) - target(x)|` on a one-dimensional domain.
pub fn scalar_gap(net: &NeuralNet, target: &Activation, domain: Interval, grid: usize) -> f64 {
    let t = *target;
    sup_gap(
        net,
        &scalar_map(move |x| t.eval(x)),
        &BoxDomain::from_intervals(&[domain]),
        grid,
    )
}

/// Measures the gap and fails loudly if it exceeds epsilon.
pub(crate) fn verified(
    construction: &str,
    net: NeuralNet,
    target: Activation,
    epsilon: f64,
    domain: Interval,
    stages: usize,
    grid: usize,
) -> Result<ConstructionReport> {
    let measured_gap = scalar_gap(&net, &target, domain, grid);
    if !(measured_gap <= epsilon + VERIFY_SLACK) {
        return Err(Error::Verification {
            measured: measured_gap,
            epsilon,
        });
    }
    Ok(ConstructionReport {
        construction: construction.to_string(),
        net,
        target,
        epsilon,
        valid_domain: domain,
        measured_gap,
        stages,
        grid,
    })
}

/// `ceil(x)` that treats values within a relative `1e-9` above an integer as
/// that integer, so `0.1 * 3 / 0.3` gives 1 rather than 2.
pub(crate) fn ceil_tolerant(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

/// Largest stage count a scalar construction will emit.
pub const MAX_STAGES: usize = 100_000;

pub(crate) fn check_stage_count(stages: usize) -> Result<()> {
    if stages > MAX_STAGES {
        return Err(Error::InvalidArgument(format!(
            "{stages} stages needed, limit is {MAX_STAGES}"
        )));
    }
    Ok(())
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

pub(crate) fn check_domain(domain: Interval) -> Result<()> {
    if !(domain.lo.is_finite() && domain.hi.is_finite()) {
        return Err(Error::InvalidArgument("domain must be bounded".into()));
    }
    Ok(())
}

/// Parameters of a construction request.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionRequest {
    /// The activation to approximate, e.g. `LeakyReLU_0.1` or `ReLU`.
    pub target: Activation,
    /// Parameter of the network's own activation family, when it has one
    /// (`beta` of `LeakyReLU_beta`, `Softplus_beta`, `CELU_beta`, ...).
    pub source_beta: Option<f64>,
    pub epsilon: f64,
    pub domain: Interval,
    pub grid: usize,
}

impl ConstructionRequest {
    pub fn new(target: Activation, epsilon: f64, domain: Interval) -> Self {
        ConstructionRequest {
            target,
            source_beta: None,
            epsilon,
            domain,
            grid: DEFAULT_GRID,
        }
    }

    pub fn with_source_beta(mut self, beta: f64) -> Self {
        self.source_beta = Some(beta);
        self
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }
}

/// A scalar construction: builds a width-1 network in the `source` family
/// approximating an activation of kind `target`.
pub trait Construction: Send + Sync {
    fn name(&self) -> &'static str;

    /// Activation family the produced network uses.
    fn source(&self) -> ActivationKind;

    /// Kind of activation the network approximates.
    fn target(&self) -> ActivationKind;

    fn build(&self, request: &ConstructionRequest) -> Result<ConstructionReport>;
}

/// Name-keyed table of constructions.
#[derive(Clone, Default)]
pub struct ConstructionRegistry {
    entries: BTreeMap<String, Arc<dyn Construction>>,
}

impl ConstructionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding every construction this crate provides.
    pub fn with_defaults() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(LeakyFromLeaky));
        reg.register(Arc::new(LeakyFromElu));
        reg.register(Arc::new(ReluFromSoftplus));
        for kind in [
            ActivationKind::Celu,
            ActivationKind::Elu,
            ActivationKind::LeakyRelu,
            ActivationKind::Relu,
        ] {
            reg.register(Arc::new(ReluFromIteration::new(kind)));
        }
        reg
    }

    pub fn register(&mut self, construction: Arc<dyn Construction>) {
        self.entries.insert(construction.name().to_string(), construction);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Construction>> {
        self.entries.get(name).cloned()
    }

    /// Looks up the construction producing `source` networks that
    /// approximate `target`.
    pub fn find(&self, source: ActivationKind, target: ActivationKind) -> Option<Arc<dyn Construction>> {
        self.entries
            .values()
            .find(|c| c.source() == source && c.target() == target)
            .cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl std::fmt::Debug for ConstructionRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}
