//! Checkpoint file: an 8-byte magic, a little-endian `u64` header length,
//! a JSON header, then the payload. The payload holds, per layer, the
//! row-major weights followed by the bias as little-endian `f32`; if the
//! header says `masked`, one byte per weight (1 = pruned) follows for every
//! layer.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainingConfig;
use super::model::{Layer, MlpModel};
use crate::error::{Error, Result};
use crate::numkit::{Matrix, RngState};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"BSL1CKPT";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    /// Input width followed by each layer's output width.
    pub dims: Vec<usize>,
    pub config: TrainingConfig,
    /// Number of completed epochs.
    pub epoch: usize,
    pub seed: u64,
    pub rng: RngState,
    pub test_accuracy: Option<f64>,
    pub masked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub header: CheckpointHeader,
    pub model: MlpModel<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(
        model: MlpModel<T>,
        config: TrainingConfig,
        epoch: usize,
        test_accuracy: Option<f64>,
    ) -> Self {
        let header = CheckpointHeader {
            format_version: FORMAT_VERSION,
            dims: model.dims(),
            seed: config.seed,
            rng: RngState::new(config.seed),
            config,
            epoch,
            test_accuracy,
            masked: model.layers().iter().any(|l| l.mask.is_some()),
        };
        Self { header, model }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let mut out = Vec::with_capacity(16 + header.len() + 4 * self.model.weight_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for layer in self.model.layers() {
            for v in layer.weights.as_slice().iter().chain(&layer.bias) {
                let f = v.to_f32().unwrap_or(f32::NAN);
                out.extend_from_slice(&f.to_le_bytes());
            }
        }
        if self.header.masked {
            for layer in self.model.layers() {
                let n = layer.weights.len();
                match &layer.mask {
                    Some(m) => out.extend(m.iter().map(|&b| b as u8)),
                    None => out.extend(std::iter::repeat_n(0u8, n)),
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |reason: String| Error::format(origin, reason);
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint (bad magic)".into()));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let body = bytes
            .get(16..16usize.saturating_add(hlen))
            .ok_or_else(|| bad("truncated header".into()))?;
        let header: CheckpointHeader =
            serde_json::from_slice(body).map_err(|e| bad(format!("header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(bad(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        if header.dims.len() < 2 {
            return Err(bad("header lists fewer than two layer widths".into()));
        }
        let mut payload = &bytes[16 + hlen..];
        let mut take_f32 = |count: usize| -> Result<Vec<T>> {
            let need = count * 4;
            if payload.len() < need {
                return Err(bad("truncated weight payload".into()));
            }
            let (head, rest) = payload.split_at(need);
            payload = rest;
            Ok(head
                .chunks_exact(4)
                .map(|c| T::from_f32(f32::from_le_bytes(c.try_into().unwrap())).unwrap())
                .collect())
        };
        let mut layers = Vec::new();
        for d in header.dims.windows(2) {
            let w = take_f32(d[0] * d[1])?;
            let b = take_f32(d[1])?;
            let weights = Matrix::from_vec(d[0], d[1], w)?;
            if !weights.all_finite() || b.iter().any(|v| !v.is_finite()) {
                return Err(bad("non-finite weight in payload".into()));
            }
            layers.push(Layer::new(weights, b)?);
        }
        if header.masked {
            for layer in &mut layers {
                let n = layer.weights.len();
                if payload.len() < n {
                    return Err(bad("truncated mask payload".into()));
                }
                let (head, rest) = payload.split_at(n);
                payload = rest;
                let mask: Vec<bool> = head.iter().map(|&b| b != 0).collect();
                layer.mask = mask.iter().any(|&m| m).then_some(mask);
            }
        }
        if !payload.is_empty() {
            return Err(bad(format!("{} trailing bytes", payload.len())));
        }
        let model = MlpModel::new(layers).map_err(|e| bad(e.to_string()))?;
        Ok(Self { header, model })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}
