//! Dynamic fixed-point training with a bit-slice ℓ1 regularizer, plus a
//! digital-functional model of bit-sliced ReRAM crossbar deployment.
//!
//! The pipeline is:
//!
//! 1. [`quant`]: per-layer dynamic range, n-bit magnitude codes, signs.
//! 2. [`slicekit`]: base-2^w digit slices of the codes, the digit-sum penalty
//!    and its piecewise-linear surrogate gradient, sparsity reporting.
//! 3. [`trainkit`]: quantize → forward → CE + penalty → SGD update, on a small
//!    MLP, with MNIST IDX loading and checkpoints.
//! 4. [`reramsim`]: tiling onto 128×128 crossbars per slice group and sign,
//!    bitline accumulation analysis, ADC resolution and overhead model.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! pin the common instantiations.

pub mod error;
pub mod numkit;
pub mod quant;
pub mod reramsim;
pub mod scalar;
pub mod slicekit;
pub mod trainkit;

pub use error::{Error, Result};
pub use numkit::{Matrix, RngState};
pub use quant::{QuantConfig, QuantizedLayer};
pub use scalar::Scalar;
pub use slicekit::{BitSlicedLayer, SparsityReport};

pub type MatrixF32 = numkit::Matrix<f32>;
pub type MatrixF64 = numkit::Matrix<f64>;
pub type QuantizedLayerF32 = quant::QuantizedLayer<f32>;
pub type QuantizedLayerF64 = quant::QuantizedLayer<f64>;
pub type MlpModelF32 = trainkit::MlpModel<f32>;
pub type MlpModelF64 = trainkit::MlpModel<f64>;
pub type DatasetF32 = trainkit::Dataset<f32>;
pub type DatasetF64 = trainkit::Dataset<f64>;
