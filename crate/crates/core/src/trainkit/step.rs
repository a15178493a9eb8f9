use super::config::{Regularizer, TrainingConfig, UpdateBase};
use super::model::{Layer, MlpModel, QuantizedModel};
use crate::error::{Error, Result};
use crate::numkit::{matmul, relu_backward, softmax_cross_entropy, Matrix};
use crate::quant::QuantizedLayer;
use crate::scalar::Scalar;
use crate::slicekit::{bl1_penalty, DigitTable, PenaltyMove};

/// Loss gradients w.r.t. the recovered weights `Q(w)` and the biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Mean cross-entropy of the batch.
    pub loss: f64,
    /// Unweighted regularizer value at `Q(w)` (0 for mode `none`).
    pub penalty: f64,
}

/// Mean cross-entropy and its backpropagated gradients.
pub fn loss_and_gradients<T: Scalar>(
    model: &QuantizedModel<T>,
    x: &Matrix<T>,
    labels: &[usize],
) -> Result<(T, Gradients<T>)> {
    let (trace, logits) = model.trace(x)?;
    let (loss, mut upstream) = softmax_cross_entropy(&logits, labels)?;
    let n = model.weights().len();
    let mut gw = vec![Matrix::zeros(0, 0); n];
    let mut gb = vec![Vec::new(); n];
    for l in (0..n).rev() {
        gw[l] = matmul(&trace.inputs[l].transpose(), &upstream)?;
        gb[l] = upstream.column_sums();
        if l > 0 {
            let back = matmul(&upstream, &model.weights()[l].transpose())?;
            upstream = relu_backward(&trace.pre_activations[l - 1], &back)?;
        }
    }
    Ok((
        loss,
        Gradients {
            weights: gw,
            biases: gb,
        },
    ))
}

/// Regularizer value of one quantized layer.
fn penalty_value<T: Scalar>(mode: Regularizer, q: &QuantizedLayer<T>, qw: &Matrix<T>) -> f64 {
    match mode {
        Regularizer::None => 0.0,
        Regularizer::L1 => qw.as_slice().iter().map(|v| v.abs().to_f64_lossy()).sum(),
        Regularizer::Bl1 => bl1_penalty(q).to_f64_lossy(),
    }
}

/// Applies one update to `layer` given its quantization `q`, recovered
/// weights `qw` and the CE gradients at `qw`:
///
/// `w ← base − lr·(g_ce + α·g_pen)`, with `base` = `w` or `Q(w)` per
/// [`UpdateBase`]. The penalty acts on magnitudes and its part of the step
/// is clipped: it never crosses zero, and under `bl1` it never crosses a code
/// boundary that would raise the digit sum (see
/// [`DigitTable::descent_move`]). Pruned positions are held at zero.
pub fn apply_update<T: Scalar>(
    layer: &mut Layer<T>,
    q: &QuantizedLayer<T>,
    qw: &Matrix<T>,
    grad_w: &Matrix<T>,
    grad_b: &[T],
    cfg: &TrainingConfig,
    table: &DigitTable,
) -> Result<()> {
    if grad_w.shape() != layer.weights.shape() || qw.shape() != layer.weights.shape() {
        return Err(Error::Shape(format!(
            "gradient {:?} for weights {:?}",
            grad_w.shape(),
            layer.weights.shape()
        )));
    }
    let lr = T::lit(cfg.lr);
    let alpha = T::lit(cfg.alpha);
    let step = q.q_step();
    let step_f = step.to_f64_lossy();
    let penalized = cfg.mode != Regularizer::None && cfg.alpha > 0.0;
    let mask = layer.mask.as_deref();
    let codes = q.codes();
    for (i, w) in layer.weights.as_mut_slice().iter_mut().enumerate() {
        if mask.is_some_and(|m| m[i]) {
            *w = T::zero();
            continue;
        }
        let base = match cfg.update_base {
            UpdateBase::Latent => *w,
            UpdateBase::Quantized => qw.as_slice()[i],
        };
        let ce = grad_w.as_slice()[i];
        if !penalized {
            *w = base - lr * ce;
            continue;
        }
        let dir = if base < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        // Penalty gradient magnitude in weight units.
        let pen = match cfg.mode {
            Regularizer::L1 if qw.as_slice()[i] == T::zero() => T::zero(),
            Regularizer::L1 => T::one(),
            _ => T::from_i32(table.slope(codes[i])).expect("small int") / step,
        };
        if pen == T::zero() {
            *w = base - lr * ce;
            continue;
        }
        let magnitude = base.abs();
        let decision = match cfg.mode {
            Regularizer::L1 => {
                if magnitude - lr * alpha * pen < T::zero() {
                    PenaltyMove::Land(0.0)
                } else {
                    PenaltyMove::Free
                }
            }
            _ => {
                let x = magnitude.to_f64_lossy() / step_f;
                let delta = -(lr * alpha * pen).to_f64_lossy() / step_f;
                table.descent_move(x, delta)
            }
        };
        *w = match decision {
            PenaltyMove::Free => base - lr * (ce + alpha * (dir * pen)),
            PenaltyMove::Land(code) => dir * T::lit(code) * step - lr * ce,
            PenaltyMove::Hold => base - lr * ce,
        };
    }
    for (b, &g) in layer.bias.iter_mut().zip(grad_b) {
        *b = *b - lr * g;
    }
    Ok(())
}

/// One quantize → forward → loss → update step on a batch.
pub fn train_step<T: Scalar>(
    model: &mut MlpModel<T>,
    x: &Matrix<T>,
    labels: &[usize],
    cfg: &TrainingConfig,
    step_index: u64,
) -> Result<StepStats> {
    let table = DigitTable::new(cfg.quant);
    train_step_with(model, x, labels, cfg, step_index, &table)
}

pub(crate) fn train_step_with<T: Scalar>(
    model: &mut MlpModel<T>,
    x: &Matrix<T>,
    labels: &[usize],
    cfg: &TrainingConfig,
    step_index: u64,
    table: &DigitTable,
) -> Result<StepStats> {
    let qm = model.quantized_view(cfg.quant)?;
    let (loss, grads) = loss_and_gradients(&qm, x, labels)?;
    let loss = loss.to_f64_lossy();
    if !loss.is_finite() {
        return Err(Error::Divergence {
            step: step_index,
            loss,
        });
    }
    let mut penalty = 0.0;
    for (l, layer) in model.layers_mut().iter_mut().enumerate() {
        let q = &qm.quantized_layers()[l];
        let qw = &qm.weights()[l];
        penalty += penalty_value(cfg.mode, q, qw);
        apply_update(
            layer,
            q,
            qw,
            &grads.weights[l],
            &grads.biases[l],
            cfg,
            table,
        )?;
    }
    Ok(StepStats { loss, penalty })
}
