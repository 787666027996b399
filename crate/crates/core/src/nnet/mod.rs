//! Small feed-forward networks with reverse-mode gradients, Deep Sets models
//! built from them, and a deterministic trainer.

pub mod deepsets;
pub mod mlp;
pub mod train;

pub use deepsets::{deepsets_eval, DeepSetsModel};
pub use mlp::{gradient_check, Activation, ForwardTrace, Layer, Mlp};
pub use train::{canonical_grid, grid_error, train, Checkpoint, Task, TrainConfig, TrainMetrics};
