use super::{check_epsilon, Construction, ConstructionRequest};
use crate::activations::{Activation, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::netcore::{sup_gap, AffineMap, BoxDomain, Interval, Layer, NeuralNet};

/// Scalar sub-networks deeper than this are treated as an infeasible budget.
pub const MAX_SUBNET_DEPTH: usize = 100_000;

/// Budget attempts; each retry halves every per-layer tolerance.
const BUDGET_ATTEMPTS: usize = 6;

#[derive(Debug, Clone)]
pub struct SubstitutionReport {
    pub net: NeuralNet,
    /// Grid sup gap between the substituted and the original network on K.
    pub measured_gap: f64,
    /// Tolerance handed to the scalar construction of each layer.
    pub layer_budgets: Vec<f64>,
    /// Pre-activation interval each scalar construction was built for.
    pub layer_domains: Vec<Interval>,
    /// Depth of each scalar sub-network.
    pub layer_depths: Vec<usize>,
}

/// Replaces every activation layer of `net` by the scalar network that
/// `construction` builds for it, applied componentwise.
///
/// Layer `i` gets `epsilon / (L * D_i)`, where `D_i` bounds the
/// infinity-norm Lipschitz constant of everything downstream of it (weight
/// norms times grid-sampled activation slopes). Budgets are halved until the
/// grid check on `domain` passes.
pub fn substitute_activations(
    net: &NeuralNet,
    construction: &dyn Construction,
    source_beta: Option<f64>,
    epsilon: f64,
    domain: &BoxDomain,
    grid_per_axis: usize,
) -> Result<SubstitutionReport> {
    check_epsilon(epsilon)?;
    if domain.dim() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "domain has dimension {}, network input {}",
            domain.dim(),
            net.input_dim()
        )));
    }
    for (i, layer) in net.layers().iter().enumerate() {
        if layer.activation.kind() != construction.target() {
            return Err(Error::InvalidArgument(format!(
                "layer {i} uses {}, but {} approximates {}",
                layer.activation,
                construction.name(),
                construction.target().name()
            )));
        }
    }
    let depth = net.depth();
    if depth == 0 {
        return Ok(SubstitutionReport {
            net: net.clone(),
            measured_gap: 0.0,
            layer_budgets: Vec::new(),
            layer_domains: Vec::new(),
            layer_depths: Vec::new(),
        });
    }

    let ranges = preactivation_ranges(net, domain, grid_per_axis);
    let slopes: Vec<f64> = net
        .layers()
        .iter()
        .zip(&ranges)
        .map(|(l, r)| max_slope(&l.activation, r.widen(0.05 * r.width().max(1.0))))
        .collect();
    let downstream = downstream_lipschitz(net, &slopes);
    let share = epsilon / depth as f64;
    let base: Vec<f64> = downstream
        .iter()
        .map(|&d| if d > 0.0 { (share / d).min(epsilon) } else { share })
        .collect();

    let mut scale = 0.5;
    let mut last = None;
    for _ in 0..BUDGET_ATTEMPTS {
        let budgets: Vec<f64> = base.iter().map(|b| b * scale).collect();
        let domains = layer_domains(net, &ranges, &slopes, &budgets);
        let subnets = build_subnets(net, construction, source_beta, &budgets, &domains)?;
        let substituted = splice(net, &subnets, depth)?;
        let gap = sup_gap(&substituted, net, domain, grid_per_axis);
        if gap <= epsilon {
            return Ok(SubstitutionReport {
                layer_depths: subnets.iter().map(NeuralNet::depth).collect(),
                net: substituted,
                measured_gap: gap,
                layer_budgets: budgets,
                layer_domains: domains,
            });
        }
        last = Some((subnets, gap));
        scale *= 0.5;
    }
    let (subnets, gap) = last.expect("at least one attempt");
    // Blame the first layer whose substitution pushes the prefix past epsilon.
    let mut layer = depth - 1;
    for k in 1..=depth {
        if sup_gap(&splice(net, &subnets, k)?, net, domain, grid_per_axis) > epsilon {
            layer = k - 1;
            break;
        }
    }
    Err(Error::BudgetInfeasible {
        layer,
        reason: format!("grid gap {gap} still exceeds {epsilon} after {BUDGET_ATTEMPTS} budget attempts"),
    })
}

fn build_subnets(
    net: &NeuralNet,
    construction: &dyn Construction,
    source_beta: Option<f64>,
    budgets: &[f64],
    domains: &[Interval],
) -> Result<Vec<NeuralNet>> {
    net.layers()
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let request = ConstructionRequest {
                target: layer.activation,
                source_beta,
                epsilon: budgets[i],
                domain: domains[i],
                grid: DEFAULT_GRID,
            };
            let report = construction.build(&request).map_err(|e| Error::BudgetInfeasible {
                layer: i,
                reason: e.to_string(),
            })?;
            if report.net.depth() > MAX_SUBNET_DEPTH {
                return Err(Error::BudgetInfeasible {
                    layer: i,
                    reason: format!("scalar network needs depth {}", report.net.depth()),
                });
            }
            Ok(report.net)
        })
        .collect()
}

/// Per-layer `[min, max]` of pre-activations over all units and grid points.
fn preactivation_ranges(net: &NeuralNet, domain: &BoxDomain, grid_per_axis: usize) -> Vec<Interval> {
    let mut lo = vec![f64::INFINITY; net.depth()];
    let mut hi = vec![f64::NEG_INFINITY; net.depth()];
    let mut x = vec![0.0; domain.dim()];
    for idx in 0..domain.grid_len(grid_per_axis) {
        domain.grid_point_into(idx, grid_per_axis, &mut x);
        for (i, z) in net.pre_activations(&x).iter().enumerate() {
            for &v in z {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
    }
    lo.into_iter().zip(hi).map(|(l, h)| Interval::new(l, h)).collect()
}

fn max_slope(act: &Activation, range: Interval) -> f64 {
    range
        .grid(DEFAULT_GRID)
        .map(|x| act.derivative(x).abs())
        .fold(0.0, f64::max)
        .max(1.0)
}

/// `D_i`: Lipschitz bound of the map from layer `i`'s activation output to
/// the network output.
fn downstream_lipschitz(net: &NeuralNet, slopes: &[f64]) -> Vec<f64> {
    let depth = net.depth();
    let mut out = vec![0.0; depth];
    let mut acc = net.output().weight().norm_inf();
    for i in (0..depth).rev() {
        out[i] = acc;
        acc *= net.layers()[i].affine.weight().norm_inf() * slopes[i];
    }
    out
}

/// Pre-activation ranges widened by the worst-case drift from upstream
/// substitutions plus a 5% sampling margin.
fn layer_domains(net: &NeuralNet, ranges: &[Interval], slopes: &[f64], budgets: &[f64]) -> Vec<Interval> {
    let mut drift = 0.0;
    let mut out = Vec::with_capacity(ranges.len());
    for (i, r) in ranges.iter().enumerate() {
        if i > 0 {
            drift = net.layers()[i].affine.weight().norm_inf() * (slopes[i - 1] * drift + budgets[i - 1]);
        }
        out.push(r.widen(drift + 0.05 * r.width().max(1.0)));
    }
    out
}

/// `net` with its first `count` activation layers replaced by `subnets`,
/// each scalar step lifted to the layer width as `scale * I`, `shift * 1`.
fn splice(net: &NeuralNet, subnets: &[NeuralNet], count: usize) -> Result<NeuralNet> {
    let mut layers = Vec::new();
    let mut carry: Option<AffineMap> = None;
    for (i, layer) in net.layers().iter().enumerate() {
        let mut pre = match carry.take() {
            Some(c) => layer.affine.compose(&c)?,
            None => layer.affine.clone(),
        };
        if i >= count {
            layers.push(Layer {
                affine: pre,
                activation: layer.activation,
            });
            continue;
        }
        let n = pre.out_dim();
        for sub in subnets[i].layers() {
            let (s, t) = scalar_parts(&sub.affine);
            layers.push(Layer {
                affine: AffineMap::diagonal(n, s, t).compose(&pre)?,
                activation: sub.activation,
            });
            pre = AffineMap::identity(n);
        }
        let (s, t) = scalar_parts(subnets[i].output());
        carry = Some(AffineMap::diagonal(n, s, t).compose(&pre)?);
    }
    let output = match carry {
        Some(c) => net.output().compose(&c)?,
        None => net.output().clone(),
    };
    NeuralNet::new(layers, output)
}

fn scalar_parts(a: &AffineMap) -> (f64, f64) {
    debug_assert!(a.in_dim() == 1 && a.out_dim() == 1);
    (a.weight()[(0, 0)], a.bias()[0])
}
