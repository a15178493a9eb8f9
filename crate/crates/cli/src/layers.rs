use std::path::PathBuf;

use bitslice_core::slicekit::bit_slice;
use bitslice_core::trainkit::Checkpoint;
use bitslice_core::QuantizedLayer;
use serde::Serialize;

use crate::config::{Defaults, RunConfig};
use crate::error::{CliError, Result};
use crate::LayerArgs;

const DEFAULTS: Defaults = &[("checkpoint", ""), ("out", "")];

#[derive(Serialize)]
struct QuantizedJson<'a> {
    rows: usize,
    cols: usize,
    scale_exp: i32,
    q_step: f64,
    codes: &'a [u32],
    signs: &'a [i8],
}

#[derive(Serialize)]
struct SlicedJson<'a> {
    rows: usize,
    cols: usize,
    scale_exp: i32,
    /// MSB slice first.
    slices: Vec<&'a [u8]>,
    signs: &'a [i8],
}

fn load(a: &LayerArgs) -> Result<(RunConfig, Vec<QuantizedLayer<f32>>)> {
    let rc = RunConfig::resolve(
        DEFAULTS,
        a.config.as_deref(),
        vec![
            (
                "checkpoint",
                a.checkpoint.as_ref().map(|p| p.display().to_string()),
            ),
            ("out", a.out.as_ref().map(|p| p.display().to_string())),
        ],
    )?;
    let path: PathBuf = rc.get("checkpoint")?;
    let ck = Checkpoint::<f32>::load(&path)?;
    let q = ck.model.quantize(ck.header.config.quant)?;
    Ok((rc, q))
}

fn write(rc: &RunConfig, name: &str, json: String) -> Result<()> {
    if let Some(out) = rc.opt::<PathBuf>("out")? {
        rc.echo_into(&out)?;
        let path = out.join(name);
        std::fs::write(&path, json + "\n").map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

pub fn quantize(a: LayerArgs) -> Result<()> {
    let (rc, layers) = load(&a)?;
    for (i, q) in layers.iter().enumerate() {
        let nonzero = q.codes().iter().filter(|&&c| c != 0).count();
        println!(
            "layer {i}: {}x{}  S={}  Q_step=2^{}  nonzero codes {:.2}%",
            q.rows(),
            q.cols(),
            q.scale_exp(),
            q.scale_exp() - q.config().bits() as i32,
            100.0 * nonzero as f64 / q.len().max(1) as f64
        );
    }
    let body: Vec<QuantizedJson> = layers
        .iter()
        .map(|q| QuantizedJson {
            rows: q.rows(),
            cols: q.cols(),
            scale_exp: q.scale_exp(),
            q_step: q.q_step() as f64,
            codes: q.codes(),
            signs: q.signs(),
        })
        .collect();
    write(
        &rc,
        "quantized.json",
        serde_json::to_string(&body).expect("serializes"),
    )
}

pub fn slice(a: LayerArgs) -> Result<()> {
    let (rc, layers) = load(&a)?;
    let sliced: Vec<_> = layers.iter().map(bit_slice).collect();
    for (i, s) in sliced.iter().enumerate() {
        let ratios: Vec<String> = s
            .msb_first()
            .map(|p| {
                let nz = p.iter().filter(|&&d| d != 0).count();
                format!("{:.2}%", 100.0 * nz as f64 / p.len().max(1) as f64)
            })
            .collect();
        println!(
            "layer {i}: {}x{}  nonzero per slice (MSB first) {}",
            s.rows(),
            s.cols(),
            ratios.join(" ")
        );
    }
    let body: Vec<SlicedJson> = sliced
        .iter()
        .map(|s| SlicedJson {
            rows: s.rows(),
            cols: s.cols(),
            scale_exp: s.scale_exp(),
            slices: s.msb_first().collect(),
            signs: s.signs(),
        })
        .collect();
    write(
        &rc,
        "slices.json",
        serde_json::to_string(&body).expect("serializes"),
    )
}
