//! Runs the plain / ℓ1 → Bℓ1 recipe on MNIST and prints the history.
//!
//! `cargo run --release -p bitslice-core --example recipe -- data/mnist [phase_epochs] [plain_epochs]`

use std::time::Instant;

use bitslice_core::trainkit::{load_mnist, train_from, MlpModel, Regularizer, TrainingConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/mnist".into());
    let phase_epochs: usize = std::env::args().nth(2).map_or(Ok(10), |s| s.parse())?;
    let plain_epochs: usize = std::env::args().nth(3).map_or(Ok(15), |s| s.parse())?;
    let data = load_mnist::<f32>(&dir)?;
    let run = |name: &str, model: &mut MlpModel<f32>, cfg: &TrainingConfig| {
        let t = Instant::now();
        train_from(model, &data.train, &data.test, cfg, 0, |r, _| {
            println!(
                "{name:>8} ep {:>2} acc {:.4} ratios {:?} mean {:.4} loss {:.4} ({:.1}s)",
                r.epoch,
                r.test_accuracy,
                r.slice_ratios
                    .iter()
                    .map(|v| format!("{v:.4}"))
                    .collect::<Vec<_>>(),
                r.mean,
                r.loss,
                t.elapsed().as_secs_f64()
            )
        })
    };
    let base = TrainingConfig {
        epochs: phase_epochs,
        ..Default::default()
    };
    let mut plain = MlpModel::mnist(128, 0)?;
    run(
        "plain",
        &mut plain,
        &TrainingConfig {
            epochs: plain_epochs,
            ..base.clone()
        },
    )?;
    let mut l1 = MlpModel::mnist(128, 0)?;
    run(
        "l1",
        &mut l1,
        &TrainingConfig {
            mode: Regularizer::L1,
            alpha: 1e-4,
            ..base.clone()
        },
    )?;
    let fine = TrainingConfig {
        lr: 0.05,
        seed: 1,
        ..base.clone()
    };
    let mut bl1 = l1.clone();
    run(
        "bl1",
        &mut bl1,
        &TrainingConfig {
            mode: Regularizer::Bl1,
            alpha: 2e-6,
            ..fine.clone()
        },
    )?;
    let mut l1c = l1.clone();
    run(
        "l1-cont",
        &mut l1c,
        &TrainingConfig {
            mode: Regularizer::L1,
            alpha: 1e-4,
            ..fine
        },
    )?;
    Ok(())
}
