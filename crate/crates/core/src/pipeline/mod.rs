//! The command-line workflow: mine, build, rouge, eval and train-demo.
//!
//! Each `cmd_*` function is what the corresponding subcommand runs; the
//! binary only parses flags, calls one of them and maps the error to an exit
//! code with [`PipelineError::exit_code`].

mod build;
mod config;
mod eval;
mod mine;
mod rouge;
mod train_demo;

pub use build::{cmd_build, BuildSummary, DATASET_FILE};
pub use config::{
    ConfigError, DemoSettings, EnhanceSettings, MineSettings, PipelineConfig, DEFAULT_REPOS, DEMO_LEARNING_RATE,
};
pub use eval::{cmd_eval, eval_meta_path, EvalOptions, EvalRunMeta, EvalSummary};
pub use mine::{cmd_mine, raw_dir, repo_raw_dir, MineOptions, RepoMineSummary, COMMITS_FILE, ISSUES_FILE, PRS_FILE};
pub use rouge::{format_f1s, rouge_f1s};
pub use train_demo::{cmd_train_demo, demo_model, loss_log, TrainDemoSummary, LOSS_LOG};

use crate::eval::AdapterError;
use crate::vcs::MinerError;

/// Exit code for bad flags or configuration.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("GITHUB_TOKEN is not set; live mining needs a token (or pass --replay <dir>)")]
    MissingToken,
    #[error("mining {repo}: {source}")]
    Mine { repo: String, source: MinerError },
    #[error(transparent)]
    Adapter(AdapterError),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl PipelineError {
    /// 1 authentication, 2 rate limit, 3 other runtime failures, 64 usage.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => EXIT_USAGE,
            PipelineError::MissingToken => 1,
            PipelineError::Mine { source, .. } => source.exit_code(),
            PipelineError::Adapter(_) | PipelineError::Stage { .. } => 3,
        }
    }
}
