//! Trains one DISK network and prints the loss curve.
//!
//! `cargo run --release --example disk_train -- WIDTH DEPTH SEED [MAX_STEPS]`

use std::time::Instant;

use minwidth_core::experiments::{gen_disk, train, TrainConfig};
use minwidth_core::Activation;

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (width, depth, seed) = (args[0] as usize, args[1] as usize, args[2]);
    let cfg = TrainConfig {
        seed,
        max_steps: args.get(3).copied().unwrap_or(500_000),
        ..TrainConfig::default()
    };
    let (train_set, val_set) = gen_disk(2);
    let start = Instant::now();
    let r = train(width, depth, Activation::elu(1.0).unwrap(), (&train_set, &val_set), &cfg).unwrap();
    for p in r.loss_curve.iter().step_by(10) {
        println!("{:>7} {:.4e} {:.4e}", p.step, p.train_loss, p.val_loss);
    }
    println!(
        "w{width} d{depth} seed {seed}: steps {} L {:.4e} Lv {:.4e} success {} in {:.1?}",
        r.steps,
        r.train_loss,
        r.val_loss,
        r.success,
        start.elapsed()
    );
}
