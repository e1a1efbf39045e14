//! Adapter-only fine-tuning on a toy per-position classifier.
//!
//! The base weights stay frozen; training touches only per-layer scales and
//! shifts and the optional prompt vectors. The shipped character vocabulary
//! is [`DEFAULT_CHARS`] with id 0 for anything else.

mod checkpoint;
mod model;
mod optim;
pub mod reference;
mod schedule;
mod train;
mod vocab;

pub use checkpoint::{restore_checkpoint, AdapterCheckpoint, CheckpointError};
pub use model::{
    add_adapter_parameters, cross_entropy, mark_only_adapter_trainable, softmax, AdapterLayout, Adapters, Batch,
    LinearLayer, LossOutput, ModelError, ToyModel,
};
pub use optim::{adamw_step, AdamState, TrainConfig, TrainConfigError, ADAM_EPS};
pub use schedule::{lr_at, FINAL_LR_FRACTION};
pub use train::{full_batch, get_batch, mean_loss, train, Example, TrainError, TrainOutcome};
pub use vocab::{CharVocab, DEFAULT_CHARS};
