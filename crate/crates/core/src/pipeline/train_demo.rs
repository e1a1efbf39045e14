use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::PipelineConfig;
use super::PipelineError;
use crate::dataset::{read_samples, Split};
use crate::finetune::{
    add_adapter_parameters, mark_only_adapter_trainable, train, AdapterCheckpoint, CharVocab, ToyModel, TrainOutcome,
};

pub const LOSS_LOG: &str = "losses.tsv";

#[derive(Debug, Clone)]
pub struct TrainDemoSummary {
    pub out_dir: PathBuf,
    pub checkpoint_paths: Vec<PathBuf>,
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
    pub frozen_params: usize,
    pub trainable_params: usize,
}

fn stage(stage: &'static str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage { stage, message: e.to_string() }
}

/// The toy model the demo trains, with adapters injected and marked.
pub fn demo_model(cfg: &PipelineConfig, vocab: &CharVocab) -> ToyModel {
    let base = ToyModel::new(vocab.size(), &[cfg.demo.hidden], cfg.demo.model_seed);
    let adapted = add_adapter_parameters(base, cfg.demo.prompt_len).expect("fresh model has no adapters");
    mark_only_adapter_trainable(adapted).expect("adapters were just added")
}

/// Adapter-only training on a record file; writes one checkpoint per
/// evaluation interval and a tab-separated loss log to `out`.
pub fn cmd_train_demo(cfg: &PipelineConfig, out: &Path) -> Result<TrainDemoSummary, PipelineError> {
    cfg.validate()?;
    let samples = read_samples(&cfg.demo.data).map_err(|e| stage("load", e))?;
    let vocab = CharVocab::default();
    let pick = |split: Split| {
        let subset: Vec<_> = samples.iter().filter(|s| s.split == split).cloned().collect();
        vocab.examples(&subset, cfg.demo.max_len)
    };
    let (train_set, val_set) = (pick(Split::Train), pick(Split::Validation));
    let model = demo_model(cfg, &vocab);
    let frozen_params = model.frozen_param_count();
    let trainable_params = model.trainable_param_count();
    let outcome = train(model, &train_set, &val_set, &cfg.demo.train).map_err(|e| stage("train", e))?;

    std::fs::create_dir_all(out).map_err(|e| stage("train", format!("{}: {e}", out.display())))?;
    let mut checkpoint_paths = Vec::new();
    for ck in &outcome.checkpoints {
        let path = out.join(AdapterCheckpoint::file_name(ck.iteration));
        ck.save(&path).map_err(|e| stage("checkpoint", e))?;
        checkpoint_paths.push(path);
    }
    let log_path = out.join(LOSS_LOG);
    crate::util::write_atomic(&log_path, loss_log(&outcome).as_bytes())
        .map_err(|e| stage("train", format!("{}: {e}", log_path.display())))?;
    Ok(TrainDemoSummary {
        out_dir: out.to_path_buf(),
        checkpoint_paths,
        initial_train_loss: outcome.initial_train_loss,
        final_train_loss: outcome.final_train_loss,
        frozen_params,
        trainable_params,
    })
}

/// `iteration  train_loss  validation_loss` rows; validation is blank
/// between checkpoints. Two trailing comment lines hold the full-set losses.
pub fn loss_log(outcome: &TrainOutcome) -> String {
    let mut s = String::from("iteration\ttrain_loss\tvalidation_loss\n");
    let mut cks = outcome.checkpoints.iter().peekable();
    for (i, loss) in outcome.losses.iter().enumerate() {
        let it = i + 1;
        let val = match cks.peek() {
            Some(c) if c.iteration == it => format!("{:.9}", cks.next().expect("peeked").validation_loss),
            _ => String::new(),
        };
        let _ = writeln!(s, "{it}\t{loss:.9}\t{val}");
    }
    let _ = writeln!(s, "# initial_train_loss\t{:.9}", outcome.initial_train_loss);
    let _ = writeln!(s, "# final_train_loss\t{:.9}", outcome.final_train_loss);
    s
}
