//! Digital-functional model of bit-sliced ReRAM deployment.
//!
//! Each slice group `k` (slice `k` of every weight, group `num_slices-1` is
//! the MSB group) gets its own set of crossbar tiles, split again by weight
//! sign. Weight rows drive wordlines and columns sit on bitlines. With
//! bit-serial 0/1 inputs, a bitline's accumulated value
//! `Σ_rows input × cell` is the integer proxy for its current and sets the
//! ADC resolution the group needs.

mod adc;
mod inputs;
mod mapping;
mod profile;

pub use adc::{overhead_report, reference_resolutions, AdcSpec, GroupOverhead, OverheadReport};
pub use inputs::activation_planes;
pub use mapping::{
    map_model, map_model_with_tile, CellAddress, CrossbarMapping, LayerPlacement, Polarity,
    SliceGroup, Tile, DEFAULT_TILE,
};
pub use profile::{
    bitline_profile, bitline_sums, crossbar_matvec, required_adc_bits, summarize, BitlineProfile,
    GroupProfile, GroupSummary, InputPlanes, MappingSummary,
};
