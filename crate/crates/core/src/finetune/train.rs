use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::AdapterCheckpoint;
use super::model::{Batch, ModelError, ToyModel};
use super::optim::{adamw_step, AdamState, TrainConfig, TrainConfigError};
use super::schedule::lr_at;

/// One aligned id/target sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub input_ids: Vec<usize>,
    pub targets: Vec<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] TrainConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0} set is empty")]
    EmptyData(&'static str),
}

/// Draws `batch_size` examples uniformly with replacement.
pub fn get_batch(data: &[Example], batch_size: usize, rng: &mut impl Rng) -> Batch {
    let mut batch = Batch { input_ids: Vec::with_capacity(batch_size), targets: Vec::with_capacity(batch_size) };
    for _ in 0..batch_size {
        let e = &data[rng.random_range(0..data.len())];
        batch.input_ids.push(e.input_ids.clone());
        batch.targets.push(e.targets.clone());
    }
    batch
}

/// The whole set as one batch.
pub fn full_batch(data: &[Example]) -> Batch {
    Batch {
        input_ids: data.iter().map(|e| e.input_ids.clone()).collect(),
        targets: data.iter().map(|e| e.targets.clone()).collect(),
    }
}

/// Mean cross-entropy over every position of `data`.
pub fn mean_loss(model: &ToyModel, data: &[Example]) -> Result<f64, ModelError> {
    Ok(model.compute_loss(&full_batch(data))?.loss)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ToyModel,
    pub checkpoints: Vec<AdapterCheckpoint>,
    /// Mini-batch loss at each iteration, before that iteration's update.
    pub losses: Vec<f64>,
    /// Full training-set loss before the first and after the last update.
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
}

/// Adapter-only training. Iterations are numbered from 1, so with
/// `eval_interval = k` a checkpoint is taken after iterations k, 2k, ...
pub fn train(model: ToyModel, train_data: &[Example], val_data: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if !model.adapter_only {
        return Err(if model.adapters.is_none() { ModelError::NoAdapters } else { ModelError::NotTrainable }.into());
    }
    if train_data.is_empty() {
        return Err(TrainError::EmptyData("training"));
    }
    if val_data.is_empty() {
        return Err(TrainError::EmptyData("validation"));
    }
    let mut model = model;
    let layout = model.adapter_layout().ok_or(ModelError::NoAdapters)?;
    let digest = cfg.digest();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = model.adapter_values();
    let mut state = AdamState::new(params.len());
    let initial_train_loss = mean_loss(&model, train_data)?;
    let mut losses = Vec::with_capacity(cfg.max_iterations);
    let mut checkpoints = Vec::new();

    for iteration in 1..=cfg.max_iterations {
        let lr = lr_at(iteration - 1, cfg);
        let batch = get_batch(train_data, cfg.batch_size, &mut rng);
        let (loss, grad) = model.loss_and_adapter_grad(&batch)?;
        losses.push(loss);
        adamw_step(&mut params, &grad, &mut state, cfg, lr)?;
        model.set_adapter_values(&params)?;
        if iteration % cfg.eval_interval == 0 {
            let validation_loss = mean_loss(&model, val_data)?;
            log::debug!("iteration {iteration}: train {loss:.6}, validation {validation_loss:.6}");
            checkpoints.push(AdapterCheckpoint {
                iteration,
                validation_loss,
                weight_decay: cfg.weight_decay,
                cfg_digest: digest.clone(),
                layout: layout.clone(),
                values: params.clone(),
            });
        }
    }
    let final_train_loss = mean_loss(&model, train_data)?;
    Ok(TrainOutcome { model, checkpoints, losses, initial_train_loss, final_train_loss })
}
