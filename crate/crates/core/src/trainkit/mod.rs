//! Quantization-aware training of a small MLP with an optional sparsity
//! penalty, following the quantize → forward → loss → update routine.

mod checkpoint;
mod config;
mod data;
mod model;
mod step;
mod train;

pub use checkpoint::{Checkpoint, CheckpointHeader};
pub use config::{Regularizer, TrainingConfig, UpdateBase};
pub use data::{load_mnist, parse_idx_images, parse_idx_labels, Dataset, Mnist};
pub use model::{Layer, MlpModel, QuantizedModel};
pub use step::{apply_update, loss_and_gradients, train_step, Gradients, StepStats};
pub use train::{evaluate, evaluate_batched, magnitude_prune, train, train_from, EpochRecord};
