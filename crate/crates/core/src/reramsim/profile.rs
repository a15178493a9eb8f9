use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::adc::reference_resolutions;
use super::mapping::{CrossbarMapping, Polarity, Tile};
use crate::error::{Error, Result};

/// Bit-serial 0/1 input vectors driven onto each layer's wordlines.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPlanes {
    per_layer: Vec<Vec<Vec<u8>>>,
    empirical: bool,
}

impl InputPlanes {
    /// `per_layer[l]` lists the planes applied to layer `l`.
    pub fn new(per_layer: Vec<Vec<Vec<u8>>>) -> Result<Self> {
        for (l, planes) in per_layer.iter().enumerate() {
            if let Some(p) = planes.iter().flatten().find(|&&v| v > 1) {
                return Err(Error::Config(format!(
                    "layer {l} input plane holds {p}; planes must be 0/1"
                )));
            }
        }
        Ok(Self {
            per_layer,
            empirical: true,
        })
    }

    /// One plane of ones per layer: every wordline active.
    pub fn all_ones(mapping: &CrossbarMapping) -> Self {
        Self {
            per_layer: mapping
                .layers()
                .iter()
                .map(|l| vec![vec![1; l.rows]])
                .collect(),
            empirical: false,
        }
    }

    pub fn layer(&self, l: usize) -> &[Vec<u8>] {
        &self.per_layer[l]
    }

    pub fn num_layers(&self) -> usize {
        self.per_layer.len()
    }

    pub fn is_empirical(&self) -> bool {
        self.empirical
    }

    fn check(&self, mapping: &CrossbarMapping) -> Result<()> {
        if self.per_layer.len() != mapping.layers().len() {
            return Err(Error::Shape(format!(
                "input planes for {} layers, mapping has {}",
                self.per_layer.len(),
                mapping.layers().len()
            )));
        }
        for (l, (planes, p)) in self.per_layer.iter().zip(mapping.layers()).enumerate() {
            if let Some(bad) = planes.iter().find(|v| v.len() != p.rows) {
                return Err(Error::Shape(format!(
                    "layer {l} has {} wordlines, input plane has {}",
                    p.rows,
                    bad.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupProfile {
    pub group: usize,
    pub max_accumulation: u64,
    /// Accumulated value -> number of (bitline, input plane) events.
    pub histogram: BTreeMap<u64, u64>,
    /// Nonzero cells per bitline, positive tiles first, `tile_size` entries per tile.
    pub nonzero_per_bitline: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitlineProfile {
    pub empirical: bool,
    /// Indexed by group; the last entry is the MSB group.
    pub groups: Vec<GroupProfile>,
}

fn tile_accumulations(tile: &Tile, input: &[u8], row0: usize, live_cols: usize, out: &mut [u64]) {
    let t = tile.size();
    let cells = tile.cells();
    out[..live_cols].iter_mut().for_each(|v| *v = 0);
    for (r, &x) in input[row0..].iter().take(t).enumerate() {
        if x == 0 {
            continue;
        }
        let row = &cells[r * t..r * t + live_cols];
        for (acc, &c) in out.iter_mut().zip(row) {
            *acc += c as u64;
        }
    }
}

/// Per-group bitline statistics. Without `inputs`, every wordline is driven
/// with 1, which bounds any 0/1 input.
pub fn bitline_profile(
    mapping: &CrossbarMapping,
    inputs: Option<&InputPlanes>,
) -> Result<BitlineProfile> {
    let ones;
    let inputs = match inputs {
        Some(i) => {
            i.check(mapping)?;
            i
        }
        None => {
            ones = InputPlanes::all_ones(mapping);
            &ones
        }
    };
    let t = mapping.tile_size();
    let mut acc = vec![0u64; t];
    let mut groups = Vec::with_capacity(mapping.groups().len());
    for g in mapping.groups() {
        let mut histogram = BTreeMap::new();
        let mut max_accumulation = 0;
        let mut nonzero_per_bitline = Vec::new();
        for pol in [Polarity::Positive, Polarity::Negative] {
            for tile in g.tiles(pol) {
                for c in 0..t {
                    let n = (0..t).filter(|&r| tile.cell(r, c) != 0).count();
                    nonzero_per_bitline.push(n as u32);
                }
                let p = &mapping.layers()[tile.layer];
                let row0 = tile.tile_row * t;
                let live = (p.cols - tile.tile_col * t).min(t);
                for plane in inputs.layer(tile.layer) {
                    tile_accumulations(tile, plane, row0, live, &mut acc);
                    for &v in &acc[..live] {
                        *histogram.entry(v).or_insert(0) += 1;
                        max_accumulation = max_accumulation.max(v);
                    }
                }
            }
        }
        groups.push(GroupProfile {
            group: g.index,
            max_accumulation,
            histogram,
            nonzero_per_bitline,
        });
    }
    Ok(BitlineProfile {
        empirical: inputs.is_empirical(),
        groups,
    })
}

/// Bits needed to read `max_accumulation` without clipping (at least 1).
pub fn required_bits(max_accumulation: u64) -> u32 {
    (64 - max_accumulation.leading_zeros()).max(1)
}

/// Required ADC resolution per group, indexed like `profile.groups`.
pub fn required_adc_bits(profile: &BitlineProfile) -> Vec<u32> {
    profile
        .groups
        .iter()
        .map(|g| required_bits(g.max_accumulation))
        .collect()
}

/// Column sums of one polarity of one group for one layer, with the row-tile
/// partial sums added together.
pub fn bitline_sums(
    mapping: &CrossbarMapping,
    layer: usize,
    group: usize,
    polarity: Polarity,
    input: &[u8],
) -> Result<Vec<u64>> {
    let p = mapping
        .layers()
        .get(layer)
        .ok_or_else(|| Error::Index(format!("layer {layer}")))?;
    let g = mapping
        .groups()
        .get(group)
        .ok_or_else(|| Error::Index(format!("group {group}")))?;
    if input.len() != p.rows {
        return Err(Error::Shape(format!(
            "layer {layer} has {} wordlines, input has {}",
            p.rows,
            input.len()
        )));
    }
    let t = mapping.tile_size();
    let mut out = vec![0u64; p.cols];
    let mut acc = vec![0u64; t];
    for tile in &g.tiles(polarity)[p.first_tile..p.first_tile + p.tiles_per_group()] {
        let c0 = tile.tile_col * t;
        let live = (p.cols - c0).min(t);
        tile_accumulations(tile, input, tile.tile_row * t, live, &mut acc);
        for (o, &v) in out[c0..c0 + live].iter_mut().zip(&acc) {
            *o += v;
        }
    }
    Ok(out)
}

/// Signed integer product `input · codes` of one layer, recombined from the
/// slice groups (shifted by their digit weight) and the two polarities.
pub fn crossbar_matvec(mapping: &CrossbarMapping, layer: usize, input: &[u8]) -> Result<Vec<i64>> {
    let width = mapping.config().slice_width();
    let mut out: Vec<i64> = Vec::new();
    for k in 0..mapping.groups().len() {
        for pol in [Polarity::Positive, Polarity::Negative] {
            let sums = bitline_sums(mapping, layer, k, pol, input)?;
            if out.is_empty() {
                out = vec![0; sums.len()];
            }
            for (o, s) in out.iter_mut().zip(sums) {
                *o += pol.sign() * ((s as i64) << (width as usize * k));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: usize,
    pub tile_count_pos: usize,
    pub tile_count_neg: usize,
    pub nonzero_cell_fraction: f64,
    pub max_accumulation: u64,
    pub required_bits: u32,
    pub target_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingSummary {
    pub tile_size: usize,
    pub empirical: bool,
    /// MSB group first.
    pub groups: Vec<GroupSummary>,
}

pub fn summarize(mapping: &CrossbarMapping, profile: &BitlineProfile) -> MappingSummary {
    let targets = reference_resolutions(mapping.groups().len());
    let groups = mapping
        .groups()
        .iter()
        .zip(&profile.groups)
        .rev()
        .map(|(g, p)| GroupSummary {
            group: g.index,
            tile_count_pos: g.positive.len(),
            tile_count_neg: g.negative.len(),
            nonzero_cell_fraction: mapping.nonzero_cell_fraction(g.index),
            max_accumulation: p.max_accumulation,
            required_bits: required_bits(p.max_accumulation),
            target_bits: targets[g.index],
        })
        .collect();
    MappingSummary {
        tile_size: mapping.tile_size(),
        empirical: profile.empirical,
        groups,
    }
}
