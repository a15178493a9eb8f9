//! Bit-slicing of quantized codes and the penalties built on it.
//!
//! A code `c` is written in base `2^w` (w = slice width) as
//! `c = Σ_k d_k · 2^(w·k)`; slice `k = 0` is the least significant. The
//! bit-slice ℓ1 penalty is the digit sum `Σ_k d_k`, summed over the layer.
//! Its gradient uses the piecewise-linear interpolation of the digit sum
//! between adjacent integer codes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;
use crate::quant::{QuantConfig, QuantizedLayer};
use crate::scalar::Scalar;

/// Sum of the base-`2^slice_width` digits of `code`.
pub fn digit_sum(code: u32, cfg: QuantConfig) -> u32 {
    (0..cfg.num_slices()).map(|k| cfg.digit(code, k)).sum()
}

/// Digit sums of every code `0..=max_code`, plus one sentinel entry for
/// `max_code + 1` so right-neighbour lookups never go out of bounds.
#[derive(Debug, Clone)]
pub struct DigitTable {
    cfg: QuantConfig,
    sums: Vec<u32>,
}

impl DigitTable {
    pub fn new(cfg: QuantConfig) -> Self {
        let sums = (0..=cfg.max_code() + 1)
            .map(|c| digit_sum(c, cfg))
            .collect();
        Self { cfg, sums }
    }

    pub fn config(&self) -> QuantConfig {
        self.cfg
    }

    #[inline]
    pub fn sum(&self, code: u32) -> u32 {
        self.sums[code as usize]
    }

    /// Slope of the interpolated digit sum on the unit segment starting at
    /// `code`; the top code uses the segment ending at it.
    #[inline]
    pub fn slope(&self, code: u32) -> i32 {
        let code = code.min(self.cfg.max_code());
        if code == self.cfg.max_code() {
            if code == 0 {
                return 0;
            }
            self.sums[code as usize] as i32 - self.sums[code as usize - 1] as i32
        } else {
            self.sums[code as usize + 1] as i32 - self.sums[code as usize] as i32
        }
    }

    /// Interpolated digit sum at a real code position in `[0, max_code]`.
    pub fn relaxed(&self, x: f64) -> f64 {
        let max = self.cfg.max_code();
        let m = (x.floor().max(0.0) as u32).min(max);
        if m == max {
            return self.sums[m as usize] as f64;
        }
        let lo = self.sums[m as usize] as f64;
        let hi = self.sums[m as usize + 1] as f64;
        lo + (x - m as f64) * (hi - lo)
    }

    /// Moves a magnitude `x` (in code units, `x >= 0`) by `delta` under the
    /// digit-sum descent rule used for penalty steps.
    ///
    /// A step is taken whole only if every code boundary it crosses lowers
    /// the digit sum. An upward step otherwise stops on the last lowering
    /// boundary; a downward step that would pass zero stops at zero; any other
    /// downward step that meets a non-lowering boundary is dropped.
    pub fn descent_move(&self, x: f64, delta: f64) -> PenaltyMove {
        if delta == 0.0 || !delta.is_finite() {
            return PenaltyMove::Free;
        }
        let max = self.cfg.max_code();
        let cell = (x.floor().max(0.0) as u32).min(max);
        let target = x + delta;
        if delta < 0.0 {
            // Boundaries b in [max(ceil(target), 1), cell] are crossed going down;
            // landing exactly on a boundary counts as crossing it.
            let lowest = if target <= 0.0 {
                1
            } else {
                (target.ceil() as u32).max(1)
            };
            let mut b = cell;
            while b >= lowest && b >= 1 {
                if self.sums[b as usize - 1] >= self.sums[b as usize] {
                    return PenaltyMove::Hold;
                }
                b -= 1;
            }
            if target < 0.0 {
                PenaltyMove::Land(0.0)
            } else {
                PenaltyMove::Free
            }
        } else {
            let highest = if target >= max as f64 {
                max
            } else {
                target.floor() as u32
            };
            let mut last_ok = None;
            for b in cell + 1..=highest {
                if self.sums[b as usize] < self.sums[b as usize - 1] {
                    last_ok = Some(b);
                } else {
                    return match last_ok {
                        Some(b) => PenaltyMove::Land(b as f64),
                        None => PenaltyMove::Hold,
                    };
                }
            }
            if target > max as f64 {
                PenaltyMove::Land(max as f64)
            } else {
                PenaltyMove::Free
            }
        }
    }
}

/// Outcome of [`DigitTable::descent_move`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyMove {
    /// Apply the step unchanged.
    Free,
    /// Replace the step by moving to this magnitude (code units).
    Land(f64),
    /// Drop the step.
    Hold,
}

/// Digit planes of a quantized layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BitSlicedLayer {
    rows: usize,
    cols: usize,
    /// `slices[k]` holds digit `k`; index 0 is the LSB slice.
    slices: Vec<Vec<u8>>,
    signs: Vec<i8>,
    scale_exp: i32,
    config: QuantConfig,
}

impl BitSlicedLayer {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    /// Digit plane `k` (0 = LSB).
    pub fn slice(&self, k: usize) -> &[u8] {
        &self.slices[k]
    }

    /// Planes from the most to the least significant.
    pub fn msb_first(&self) -> impl Iterator<Item = &[u8]> {
        self.slices.iter().rev().map(Vec::as_slice)
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn scale_exp(&self) -> i32 {
        self.scale_exp
    }

    pub fn config(&self) -> QuantConfig {
        self.config
    }

    /// Reassembles codes from the digit planes.
    pub fn reconstruct(&self) -> Vec<u32> {
        let w = self.config.slice_width();
        (0..self.len())
            .map(|i| {
                self.slices
                    .iter()
                    .enumerate()
                    .map(|(k, s)| (s[i] as u32) << (w * k as u32))
                    .sum()
            })
            .collect()
    }
}

pub fn bit_slice<T: Scalar>(q: &QuantizedLayer<T>) -> BitSlicedLayer {
    let cfg = q.config();
    let slices = (0..cfg.num_slices())
        .map(|k| q.codes().iter().map(|&c| cfg.digit(c, k) as u8).collect())
        .collect();
    BitSlicedLayer {
        rows: q.rows(),
        cols: q.cols(),
        slices,
        signs: q.signs().to_vec(),
        scale_exp: q.scale_exp(),
        config: cfg,
    }
}

/// Total digit sum over all elements and slices.
pub fn bl1_penalty<T: Scalar>(q: &QuantizedLayer<T>) -> T {
    let cfg = q.config();
    let total: u64 = q.codes().iter().map(|&c| digit_sum(c, cfg) as u64).sum();
    T::from_count(total)
}

/// Surrogate gradient of the digit-sum penalty w.r.t. the recovered weight:
/// `sign × slope(code) / Q_step`.
pub fn bl1_gradient<T: Scalar>(q: &QuantizedLayer<T>) -> Matrix<T> {
    bl1_gradient_with(q, &DigitTable::new(q.config()))
}

pub fn bl1_gradient_with<T: Scalar>(q: &QuantizedLayer<T>, table: &DigitTable) -> Matrix<T> {
    let inv_step = T::one() / q.q_step();
    let data = q
        .codes()
        .iter()
        .zip(q.signs())
        .map(|(&c, &s)| T::from_i32(table.slope(c) * s as i32).expect("small int") * inv_step)
        .collect();
    Matrix::from_vec(q.rows(), q.cols(), data).expect("shape preserved")
}

/// `(Σ|w|, sign(w))` with subgradient 0 at 0.
pub fn l1_penalty_and_gradient<T: Scalar>(w: &Matrix<T>) -> (T, Matrix<T>) {
    let penalty = w.as_slice().iter().map(|x| x.abs()).sum();
    let grad = w.map(|x| {
        if x > T::zero() {
            T::one()
        } else if x < T::zero() {
            -T::one()
        } else {
            T::zero()
        }
    });
    (penalty, grad)
}

/// Model-wide share of nonzero digits in each slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    /// Most significant slice first.
    pub slice_ratios: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `slice_ratios`.
    pub std: f64,
    pub accuracy: Option<f64>,
}

impl SparsityReport {
    /// Builds the summary statistics from per-slice ratios (MSB first).
    pub fn from_ratios(slice_ratios: Vec<f64>, accuracy: Option<f64>) -> Result<Self> {
        if slice_ratios.is_empty() {
            return Err(Error::EmptyModel);
        }
        let n = slice_ratios.len() as f64;
        let mean = slice_ratios.iter().sum::<f64>() / n;
        let var = slice_ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            slice_ratios,
            mean,
            std: var.sqrt(),
            accuracy,
        })
    }

    /// `"4.68±3.14%"`.
    pub fn average_label(&self) -> String {
        format!("{:.2}±{:.2}%", self.mean * 100.0, self.std * 100.0)
    }
}

pub fn sparsity_report<T: Scalar>(
    model: &[QuantizedLayer<T>],
    accuracy: Option<f64>,
) -> Result<SparsityReport> {
    let first = model.first().ok_or(Error::EmptyModel)?;
    let cfg = first.config();
    if model.iter().any(|q| q.config() != cfg) {
        return Err(Error::Config(
            "layers quantized with different configurations".into(),
        ));
    }
    let slices = cfg.num_slices();
    let mut nonzero = vec![0u64; slices];
    let mut total = 0u64;
    for q in model {
        total += q.len() as u64;
        for &c in q.codes() {
            for (k, nz) in nonzero.iter_mut().enumerate() {
                if cfg.digit(c, k) != 0 {
                    *nz += 1;
                }
            }
        }
    }
    let ratios = nonzero
        .iter()
        .rev()
        .map(|&nz| {
            if total == 0 {
                0.0
            } else {
                nz as f64 / total as f64
            }
        })
        .collect();
    SparsityReport::from_ratios(ratios, accuracy)
}
