use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::QuantConfig;
use crate::slicekit::BitSlicedLayer;

pub const DEFAULT_TILE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn of(sign: i8) -> Self {
        if sign < 0 {
            Self::Negative
        } else {
            Self::Positive
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            Self::Positive => 1,
            Self::Negative => -1,
        }
    }
}

/// A square crossbar holding one block of one layer's digit plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub layer: usize,
    pub tile_row: usize,
    pub tile_col: usize,
    size: usize,
    cells: Vec<u8>,
}

impl Tile {
    fn new(layer: usize, tile_row: usize, tile_col: usize, size: usize) -> Self {
        Self {
            layer,
            tile_row,
            tile_col,
            size,
            cells: vec![0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Cell on wordline `row`, bitline `col`.
    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.size + col]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn nonzero_cells(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }
}

/// All tiles of one slice group. Within each polarity, tiles are ordered by
/// layer, then tile row, then tile column.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGroup {
    pub index: usize,
    pub positive: Vec<Tile>,
    pub negative: Vec<Tile>,
}

impl SliceGroup {
    pub fn tiles(&self, polarity: Polarity) -> &[Tile] {
        match polarity {
            Polarity::Positive => &self.positive,
            Polarity::Negative => &self.negative,
        }
    }

    fn tiles_mut(&mut self, polarity: Polarity) -> &mut Vec<Tile> {
        match polarity {
            Polarity::Positive => &mut self.positive,
            Polarity::Negative => &mut self.negative,
        }
    }
}

/// Where one layer sits in every group's tile lists.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPlacement {
    pub rows: usize,
    pub cols: usize,
    pub tile_rows: usize,
    pub tile_cols: usize,
    /// Index of the layer's first tile in each polarity list.
    pub first_tile: usize,
    pub scale_exp: i32,
    signs: Vec<i8>,
}

impl LayerPlacement {
    pub fn tiles_per_group(&self) -> usize {
        self.tile_rows * self.tile_cols
    }

    pub fn q_step(&self, cfg: QuantConfig) -> f64 {
        2f64.powi(self.scale_exp - cfg.bits() as i32)
    }
}

/// Physical address of one digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellAddress {
    pub group: usize,
    pub polarity: Polarity,
    /// Index into the group's tile list for `polarity`.
    pub tile: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarMapping {
    tile_size: usize,
    config: QuantConfig,
    groups: Vec<SliceGroup>,
    layers: Vec<LayerPlacement>,
}

impl CrossbarMapping {
    pub fn tile_size(&self) -> usize {
        self.tile_size
    }

    pub fn config(&self) -> QuantConfig {
        self.config
    }

    /// Group `k` holds slice `k`; the last group is the MSB group.
    pub fn groups(&self) -> &[SliceGroup] {
        &self.groups
    }

    pub fn layers(&self) -> &[LayerPlacement] {
        &self.layers
    }

    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(|l| l.rows * l.cols).sum()
    }

    /// Address of digit `group` of weight `(row, col)` in `layer`.
    pub fn locate(
        &self,
        layer: usize,
        row: usize,
        col: usize,
        group: usize,
    ) -> Result<CellAddress> {
        let p = self
            .layers
            .get(layer)
            .ok_or_else(|| Error::Index(format!("layer {layer}")))?;
        if row >= p.rows || col >= p.cols || group >= self.groups.len() {
            return Err(Error::Index(format!(
                "({row}, {col}) group {group} in a {}x{} layer",
                p.rows, p.cols
            )));
        }
        let t = self.tile_size;
        Ok(CellAddress {
            group,
            polarity: Polarity::of(p.signs[row * p.cols + col]),
            tile: p.first_tile + (row / t) * p.tile_cols + col / t,
            row: row % t,
            col: col % t,
        })
    }

    pub fn cell(&self, addr: CellAddress) -> u8 {
        self.groups[addr.group].tiles(addr.polarity)[addr.tile].cell(addr.row, addr.col)
    }

    pub fn nonzero_cells(&self, group: usize) -> usize {
        let g = &self.groups[group];
        g.positive
            .iter()
            .chain(&g.negative)
            .map(Tile::nonzero_cells)
            .sum()
    }

    /// Nonzero cells of a group over the number of mapped weights.
    pub fn nonzero_cell_fraction(&self, group: usize) -> f64 {
        let n = self.weight_count();
        if n == 0 {
            0.0
        } else {
            self.nonzero_cells(group) as f64 / n as f64
        }
    }
}

pub fn map_model(layers: &[BitSlicedLayer]) -> Result<CrossbarMapping> {
    map_model_with_tile(layers, DEFAULT_TILE)
}

pub fn map_model_with_tile(layers: &[BitSlicedLayer], tile_size: usize) -> Result<CrossbarMapping> {
    let first = layers.first().ok_or(Error::EmptyModel)?;
    if tile_size == 0 {
        return Err(Error::Config("tile size must be positive".into()));
    }
    let config = first.config();
    if layers.iter().any(|l| l.config() != config) {
        return Err(Error::Config(
            "layers sliced with different configurations".into(),
        ));
    }
    let t = tile_size;
    let mut groups: Vec<SliceGroup> = (0..config.num_slices())
        .map(|index| SliceGroup {
            index,
            positive: Vec::new(),
            negative: Vec::new(),
        })
        .collect();
    let mut placements = Vec::with_capacity(layers.len());
    let mut next_tile = 0;
    for (li, layer) in layers.iter().enumerate() {
        let (rows, cols) = (layer.rows(), layer.cols());
        let (tile_rows, tile_cols) = (rows.div_ceil(t), cols.div_ceil(t));
        for g in &mut groups {
            for pol in [Polarity::Positive, Polarity::Negative] {
                let list = g.tiles_mut(pol);
                for tr in 0..tile_rows {
                    for tc in 0..tile_cols {
                        list.push(Tile::new(li, tr, tc, t));
                    }
                }
            }
        }
        for (k, g) in groups.iter_mut().enumerate() {
            let plane = layer.slice(k);
            for r in 0..rows {
                for c in 0..cols {
                    let i = r * cols + c;
                    let digit = plane[i];
                    if digit == 0 {
                        continue;
                    }
                    let tile = next_tile + (r / t) * tile_cols + c / t;
                    let list = g.tiles_mut(Polarity::of(layer.signs()[i]));
                    let tl = &mut list[tile];
                    tl.cells[(r % t) * t + c % t] = digit;
                }
            }
        }
        placements.push(LayerPlacement {
            rows,
            cols,
            tile_rows,
            tile_cols,
            first_tile: next_tile,
            scale_exp: layer.scale_exp(),
            signs: layer.signs().to_vec(),
        });
        next_tile += tile_rows * tile_cols;
    }
    Ok(CrossbarMapping {
        tile_size,
        config,
        groups,
        layers: placements,
    })
}
