//! Dense row-major matrices, a portable counter-based RNG, and the
//! forward/backward primitives the trainer needs.

mod matrix;
mod ops;
mod rng;

pub use matrix::Matrix;
pub use ops::{matmul, relu, relu_backward, relu_forward_backward, softmax_cross_entropy};
pub use rng::RngState;
