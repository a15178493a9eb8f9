use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::QuantConfig;

/// Sparsity penalty added to the cross-entropy loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    #[default]
    None,
    /// ℓ1 on the recovered weights.
    L1,
    /// Digit sum of the bit slices.
    Bl1,
}

impl FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "l1" => Ok(Self::L1),
            "bl1" => Ok(Self::Bl1),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected none, l1 or bl1)"
            ))),
        }
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::L1 => "l1",
            Self::Bl1 => "bl1",
        })
    }
}

/// What the gradient step is subtracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateBase {
    /// Keep full-precision weights across steps; gradients are evaluated at
    /// `Q(w)` and subtracted from `w`.
    #[default]
    Latent,
    /// Replace `w` by `Q(w)` before every step: `w ← Q(w) − lr·g`.
    Quantized,
}

impl FromStr for UpdateBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "latent" => Ok(Self::Latent),
            "quantized" => Ok(Self::Quantized),
            other => Err(Error::Config(format!(
                "unknown update base `{other}` (expected latent or quantized)"
            ))),
        }
    }
}

impl fmt::Display for UpdateBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Latent => "latent",
            Self::Quantized => "quantized",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub lr: f64,
    /// Penalty weight.
    pub alpha: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub mode: Regularizer,
    pub warm_start: Option<PathBuf>,
    pub prune_threshold: Option<f64>,
    pub hidden: usize,
    pub quant: QuantConfig,
    pub update_base: UpdateBase,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            alpha: 0.0,
            epochs: 10,
            batch_size: 64,
            seed: 0,
            mode: Regularizer::None,
            warm_start: None,
            prune_threshold: None,
            hidden: 128,
            quant: QuantConfig::default(),
            update_base: UpdateBase::Latent,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Config(format!("lr must be >= 0, got {}", self.lr)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden must be >= 1".into()));
        }
        if let Some(t) = self.prune_threshold {
            if t.is_nan() || t < 0.0 {
                return Err(Error::Config(format!(
                    "prune_threshold must be >= 0, got {t}"
                )));
            }
        }
        Ok(())
    }
}
