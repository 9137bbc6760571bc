use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::netcore::random::glorot_net;
use crate::netcore::NeuralNet;

use super::adam::{Adam, AdamParams};
use super::data::{csv_error, gen_disk, Dataset};
use super::engine::{flatten, unflatten, BatchEngine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr_init: f64,
    /// Subtracted from the rate every `decay_interval_steps` steps.
    pub lr_decay: f64,
    pub decay_interval_steps: u64,
    /// Lower bound on the decayed rate.
    pub lr_floor: f64,
    pub max_steps: u64,
    /// Both losses must fall strictly below this.
    pub success_threshold: f64,
    pub eval_interval_steps: u64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamParams::default();
        TrainConfig {
            lr_init: 1e-4,
            lr_decay: 5e-6,
            decay_interval_steps: 2_000_000,
            lr_floor: 1e-5,
            max_steps: 500_000,
            success_threshold: 1e-3,
            eval_interval_steps: 1_000,
            seed: 0,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_eps: adam.eps,
        }
    }
}

impl TrainConfig {
    /// Collects every invalid field into one message.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let positive = [
            ("lr_init", self.lr_init),
            ("lr_floor", self.lr_floor),
            ("success_threshold", self.success_threshold),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                problems.push(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.lr_decay.is_finite() && self.lr_decay >= 0.0) {
            problems.push(format!("lr_decay must be nonnegative, got {}", self.lr_decay));
        }
        for (name, v) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&v) {
                problems.push(format!("{name} must lie in [0, 1), got {v}"));
            }
        }
        for (name, v) in [
            ("decay_interval_steps", self.decay_interval_steps),
            ("max_steps", self.max_steps),
            ("eval_interval_steps", self.eval_interval_steps),
        ] {
            if v == 0 {
                problems.push(format!("{name} must be positive"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    /// Learning rate used for step `step` (0-based).
    pub fn learning_rate(&self, step: u64) -> f64 {
        let decays = (step / self.decay_interval_steps) as f64;
        (self.lr_init - self.lr_decay * decays).max(self.lr_floor)
    }

    fn adam(&self) -> AdamParams {
        AdamParams {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: u64,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub width: usize,
    pub depth: usize,
    pub seed: u64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub steps: u64,
    pub success: bool,
    pub loss_curve: Vec<LossPoint>,
}

impl TrainReport {
    /// `step,train_loss,val_loss` rows.
    pub fn write_curve_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.loss_curve {
            w.serialize(p).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_curve(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_curve_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// Trains a width-uniform `2 -> width^depth -> 2` network.
pub fn train(width: usize, depth: usize, act: Activation, data: (&Dataset, &Dataset), cfg: &TrainConfig) -> Result<TrainReport> {
    train_network(width, depth, act, data, cfg).map(|(_, report)| report)
}

/// Like [`train`], also returning the final network.
///
/// Weights start Glorot-uniform from `cfg.seed`, biases at zero. Every step
/// is one full-batch Adam update; both losses are evaluated every
/// `eval_interval_steps` steps and after the last one, and training stops at
/// the first evaluation where both are below the threshold. `depth = 0`
/// trains a purely affine map.
pub fn train_network(
    width: usize,
    depth: usize,
    act: Activation,
    data: (&Dataset, &Dataset),
    cfg: &TrainConfig,
) -> Result<(NeuralNet, TrainReport)> {
    cfg.validate()?;
    if width == 0 && depth > 0 {
        return Err(Error::InvalidArgument("width must be at least 1".into()));
    }
    let init = glorot_net(2, &vec![width; depth], 2, act, cfg.seed);
    let (train_set, val_set) = data;
    let mut train_engine = BatchEngine::new(&init, train_set)?;
    let mut val_engine = BatchEngine::new(&init, val_set)?;
    let mut params = flatten(&init);
    debug_assert_eq!(params.len(), train_engine.parameter_count());
    let mut grad = vec![0.0; params.len()];
    let mut adam = Adam::new(params.len(), cfg.adam());
    let mut curve = Vec::new();
    let mut step = 0;
    let (mut l_train, mut l_val);
    loop {
        let loss = train_engine.loss_and_grad(&params, &mut grad);
        if !loss.is_finite() {
            // Diverged; report the non-finite loss rather than continuing.
            l_train = loss;
            l_val = val_engine.loss(&params);
            curve.push(LossPoint {
                step,
                train_loss: l_train,
                val_loss: l_val,
            });
            break;
        }
        adam.step(&mut params, &grad, cfg.learning_rate(step));
        step += 1;
        if step % cfg.eval_interval_steps == 0 || step == cfg.max_steps {
            l_train = train_engine.loss(&params);
            l_val = val_engine.loss(&params);
            curve.push(LossPoint {
                step,
                train_loss: l_train,
                val_loss: l_val,
            });
            if success(l_train, l_val, cfg.success_threshold) || step == cfg.max_steps {
                break;
            }
        }
    }
    let net = unflatten(&init, &params)?;
    let report = TrainReport {
        width,
        depth,
        seed: cfg.seed,
        train_loss: l_train,
        val_loss: l_val,
        steps: step,
        success: success(l_train, l_val, cfg.success_threshold),
        loss_curve: curve,
    };
    Ok((net, report))
}

fn success(l_train: f64, l_val: f64, threshold: f64) -> bool {
    l_train < threshold && l_val < threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub width: usize,
    pub k: u32,
    pub runs: Vec<TrainReport>,
    /// Smallest depth whose run met the dual criterion.
    pub min_success_depth: Option<usize>,
}

#[derive(Serialize)]
struct SweepRow {
    width: usize,
    depth: usize,
    seed: u64,
    steps: u64,
    train_loss: f64,
    val_loss: f64,
    success: bool,
}

impl SweepReport {
    /// One `width,depth,seed,steps,train_loss,val_loss,success` row per run.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.runs {
            w.serialize(SweepRow {
                width: r.width,
                depth: r.depth,
                seed: r.seed,
                steps: r.steps,
                train_loss: r.train_loss,
                val_loss: r.val_loss,
                success: r.success,
            })
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains one network per depth, in order, stopping at the first success.
///
/// Depth `d` uses seed `cfg.seed + d`, so every depth starts from fresh
/// weights and a run can be reproduced on its own.
pub fn depth_sweep(width: usize, act: Activation, k: u32, depths: &[usize], cfg: &TrainConfig) -> Result<SweepReport> {
    if depths.is_empty() {
        return Err(Error::InvalidArgument("no depths to sweep".into()));
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("depths must be strictly ascending".into()));
    }
    let (train_set, val_set) = gen_disk(k);
    let mut runs = Vec::new();
    let mut min_success_depth = None;
    for &d in depths {
        let run_cfg = TrainConfig {
            seed: cfg.seed.wrapping_add(d as u64),
            ..cfg.clone()
        };
        let report = train(width, d, act, (&train_set, &val_set), &run_cfg)?;
        let ok = report.success;
        runs.push(report);
        if ok {
            min_success_depth = Some(d);
            break;
        }
    }
    Ok(SweepReport {
        width,
        k,
        runs,
        min_success_depth,
    })
}
