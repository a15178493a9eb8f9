use serde::{Deserialize, Serialize};

use super::config::TrainingConfig;
use super::data::Dataset;
use super::model::MlpModel;
use super::step::train_step_with;
use crate::error::Result;
use crate::numkit::RngState;
use crate::quant::QuantConfig;
use crate::scalar::Scalar;
use crate::slicekit::{sparsity_report, DigitTable};

const SHUFFLE_STREAM: u64 = 0x5487;
const EVAL_BATCH: usize = 1000;

/// One line of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based index of the completed epoch.
    pub epoch: usize,
    pub test_accuracy: f64,
    /// Nonzero-digit ratio per slice, MSB first.
    pub slice_ratios: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Mean batch cross-entropy over the epoch.
    pub loss: f64,
    /// Mean unweighted regularizer value over the epoch.
    pub penalty: f64,
}

/// Trains for `cfg.epochs` epochs from scratch counting.
pub fn train<T: Scalar>(
    model: &mut MlpModel<T>,
    train_set: &Dataset<T>,
    test_set: &Dataset<T>,
    cfg: &TrainingConfig,
) -> Result<Vec<EpochRecord>> {
    train_from(model, train_set, test_set, cfg, 0, |_, _| {})
}

/// Runs epochs `start_epoch..cfg.epochs`. Epoch `e` shuffles with the
/// stream `(seed, e)`, so resuming from a checkpoint taken after epoch `e`
/// reproduces the uninterrupted run. `on_epoch` sees each record and the
/// model right after that epoch.
pub fn train_from<T: Scalar>(
    model: &mut MlpModel<T>,
    train_set: &Dataset<T>,
    test_set: &Dataset<T>,
    cfg: &TrainingConfig,
    start_epoch: usize,
    mut on_epoch: impl FnMut(&EpochRecord, &MlpModel<T>),
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    let table = DigitTable::new(cfg.quant);
    let shuffle_root = RngState::new(cfg.seed).fork(SHUFFLE_STREAM);
    let n = train_set.len();
    let steps_per_epoch = n.div_ceil(cfg.batch_size) as u64;
    let mut history = Vec::new();
    for epoch in start_epoch..cfg.epochs {
        let order = shuffle_root.fork(epoch as u64).permutation(n);
        let (mut loss_sum, mut penalty_sum, mut steps) = (0.0, 0.0, 0u64);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let x = train_set.images.select_rows(chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| train_set.labels[i]).collect();
            let stats = train_step_with(
                model,
                &x,
                &y,
                cfg,
                epoch as u64 * steps_per_epoch + b as u64,
                &table,
            )?;
            loss_sum += stats.loss;
            penalty_sum += stats.penalty;
            steps += 1;
        }
        let accuracy = evaluate(model, test_set, cfg.quant)?;
        let report = sparsity_report(&model.quantize(cfg.quant)?, Some(accuracy))?;
        let record = EpochRecord {
            epoch: epoch + 1,
            test_accuracy: accuracy,
            slice_ratios: report.slice_ratios,
            mean: report.mean,
            std: report.std,
            loss: loss_sum / steps.max(1) as f64,
            penalty: penalty_sum / steps.max(1) as f64,
        };
        on_epoch(&record, model);
        history.push(record);
    }
    Ok(history)
}

/// Top-1 accuracy of the quantized model.
pub fn evaluate<T: Scalar>(
    model: &MlpModel<T>,
    data: &Dataset<T>,
    quant: QuantConfig,
) -> Result<f64> {
    evaluate_batched(model, data, quant, EVAL_BATCH)
}

pub fn evaluate_batched<T: Scalar>(
    model: &MlpModel<T>,
    data: &Dataset<T>,
    quant: QuantConfig,
    batch: usize,
) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let qm = model.quantized_view(quant)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut correct = 0usize;
    for chunk in idx.chunks(batch.max(1)) {
        let logits = qm.forward(&data.images.select_rows(chunk))?;
        correct += logits
            .argmax_rows()
            .iter()
            .zip(chunk)
            .filter(|(&p, &i)| p == data.labels[i])
            .count();
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Zeroes every weight with `|w| < threshold` and freezes those positions.
/// Returns the number of newly pruned weights. Existing masks are kept.
pub fn magnitude_prune<T: Scalar>(model: &mut MlpModel<T>, threshold: f64) -> usize {
    let t = T::lit(threshold);
    let mut pruned = 0;
    for layer in model.layers_mut() {
        let mut mask = layer
            .mask
            .take()
            .unwrap_or_else(|| vec![false; layer.weights.len()]);
        for (w, m) in layer.weights.as_mut_slice().iter_mut().zip(mask.iter_mut()) {
            if !*m && w.abs() < t {
                *w = T::zero();
                *m = true;
                pruned += 1;
            }
        }
        layer.mask = if mask.iter().any(|&m| m) {
            Some(mask)
        } else {
            None
        };
    }
    pruned
}
