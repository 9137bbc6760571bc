//! DISK experiments: `rot_k` targets on grid-sampled unit disks, mean
//! squared losses, reverse-mode gradients and full-batch Adam training.

mod adam;
mod data;
mod engine;
mod train;

pub use adam::{Adam, AdamParams};
pub use data::{gen_disk, rot_k, Dataset, Role, TRAIN_GRID, VAL_GRID};
pub use engine::{flatten, gradients, unflatten, NetGradient};
pub use train::{depth_sweep, train, train_network, LossPoint, SweepReport, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::netcore::NeuralNet;

/// `sum ||y - f(x)||^2 / (N n)` with `n = 2`, summed in dataset order.
pub fn mse(net: &NeuralNet, data: &Dataset) -> Result<f64> {
    if net.input_dim() != 2 || net.output_dim() != 2 {
        return Err(Error::Dimension(format!(
            "DISK networks map R^2 -> R^2, got R^{} -> R^{}",
            net.input_dim(),
            net.output_dim()
        )));
    }
    data.require_nonempty()?;
    let mut total = 0.0;
    for (x, y) in data.pairs() {
        let f = net.forward_unchecked(x);
        total += (y[0] - f[0]).powi(2) + (y[1] - f[1]).powi(2);
    }
    Ok(total / (data.len() * 2) as f64)
}

/// Training and validation losses `(L, L~)`.
pub fn mse_losses(net: &NeuralNet, train: &Dataset, val: &Dataset) -> Result<(f64, f64)> {
    Ok((mse(net, train)?, mse(net, val)?))
}
