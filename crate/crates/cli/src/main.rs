use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdlbugs_core::eval::{AdapterKind, EvalTask, ModelAdapterSpec};
use hdlbugs_core::metrics::{SplitMode, DEFAULT_WEIGHT};
use hdlbugs_core::par::Execution;
use hdlbugs_core::pipeline::{
    cmd_build, cmd_eval, cmd_mine, cmd_train_demo, format_f1s, rouge_f1s, EvalOptions, MineOptions, PipelineConfig,
    PipelineError, EXIT_USAGE,
};

/// Build HDL bug-fix datasets from repository history, score model answers
/// and run the adapter fine-tuning demo.
#[derive(Debug, Parser)]
#[command(name = "hdlbugs", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory (same as `--set out_dir=...`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Run every stage on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch commits, pull requests and issues into `<out_dir>/raw/`.
    Mine {
        /// Serve API responses from a recorded fixture directory.
        #[arg(long, conflicts_with = "record")]
        replay: Option<PathBuf>,
        /// Record live responses into this directory.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Bypass the on-disk HTTP cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Turn mined records into `<out_dir>/dataset.jsonl` and its manifest.
    Build,
    /// Print ROUGE-1, ROUGE-2, ROUGE-L and ROUGE-W F1 for two files.
    Rouge {
        candidate: PathBuf,
        reference: PathBuf,
        #[arg(long, value_enum)]
        tokens: Option<Tokens>,
        /// ROUGE-W weight exponent.
        #[arg(long, default_value_t = DEFAULT_WEIGHT)]
        alpha: f64,
    },
    /// Score a model on the validation samples of one task.
    Eval {
        #[arg(long, value_enum)]
        task: TaskArg,
        /// `replay:<file>`, `command:<program and args>` or `http:<url>`.
        #[arg(long, value_parser = parse_adapter)]
        adapter: (AdapterKind, String),
        /// Model column of the report; defaults to the adapter kind.
        #[arg(long)]
        model: Option<String>,
        /// Per-case timeout in seconds.
        #[arg(long, default_value_t = 120.0)]
        timeout: f64,
        /// Append the mean row.
        #[arg(long)]
        with_means: bool,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train the adapters of the toy model on the copy task.
    TrainDemo {
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        iters: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        eval_interval: Option<u64>,
        /// Defaults to `<out_dir>/train-demo`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Tokens {
    CodeAware,
    Whitespace,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TaskArg {
    Localize,
    Repair,
}

fn parse_adapter(s: &str) -> Result<(AdapterKind, String), String> {
    let (kind, location) = s.split_once(':').ok_or("expected <kind>:<location>")?;
    let kind = match kind {
        "replay" => AdapterKind::Replay,
        "command" => AdapterKind::Command,
        "http" => AdapterKind::Http,
        other => return Err(format!("unknown adapter kind {other:?} (replay, command, http)")),
    };
    if location.trim().is_empty() {
        return Err("adapter location is empty".into());
    }
    Ok((kind, location.to_string()))
}

fn load_config(g: &Global) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &g.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    for kv in &g.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| PipelineError::Config(format!("--set {kv:?}: expected KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(dir) = &g.out_dir {
        cfg.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = load_config(&cli.global)?;
    let exec = if cli.global.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Mine { replay, record, no_cache } => {
            for s in cmd_mine(&cfg, &MineOptions { replay, record, no_cache })? {
                println!(
                    "{}: commits={} pull_requests={} issues={} file_versions={}",
                    s.repo, s.commits, s.pull_requests, s.issues, s.file_versions
                );
            }
        }
        Command::Build => {
            let s = cmd_build(&cfg, exec)?;
            let m = &s.manifest;
            let f = &m.pair_funnel;
            println!("commits: {}", s.commits);
            println!("pairs: extracted={} after_dedup={} after_length={}", f.extracted, f.after_dedup, f.after_length);
            println!("samples: {}", m.sample_count);
            for (task, n) in &m.task_counts {
                println!("  {}: {n}", task.as_str());
            }
            if let Some(split) = &m.split {
                println!("split: train={} validation={} test={}", split.counts.train, split.counts.validation, split.counts.test);
            }
            println!("tokens: {} ({})", m.token_total, m.token_counter);
            println!("records: {}", s.records_path.display());
        }
        Command::Rouge { candidate, reference, tokens, alpha } => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(PipelineError::Config(format!("--alpha must be positive, got {alpha}")));
            }
            let read = |p: &PathBuf| {
                std::fs::read_to_string(p).map_err(|e| PipelineError::Stage { stage: "rouge", message: format!("{}: {e}", p.display()) })
            };
            let (c, r) = (read(&candidate)?, read(&reference)?);
            let mut tok = cfg.scoring;
            if let Some(t) = tokens {
                tok.split_mode = match t {
                    Tokens::CodeAware => SplitMode::CodeAware,
                    Tokens::Whitespace => SplitMode::Whitespace,
                };
            }
            println!("{}", format_f1s(&rouge_f1s(&c, &r, &tok, alpha)));
        }
        Command::Eval { task, adapter: (kind, location), model, timeout, with_means, dataset, report } => {
            let task = match task {
                TaskArg::Localize => EvalTask::Localize,
                TaskArg::Repair => EvalTask::Repair,
            };
            let model_name = model.unwrap_or_else(|| format!("{kind:?}").to_lowercase());
            let adapter = ModelAdapterSpec { kind, location, timeout_secs: timeout, model_name };
            adapter.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
            let opts = EvalOptions { task, adapter, dataset, report, with_means, adapter_parallelism: cfg.parallelism };
            let s = cmd_eval(&cfg, &opts, exec)?;
            println!("cases: {} scored: {}", s.meta.cases, s.meta.scored);
            match s.meta.mean_f1 {
                Some(m) => println!("mean rouge1 rouge2 rougeL rougeW: {}", format_f1s(&m)),
                None => println!("mean: no scored cases"),
            }
            println!("report: {}", s.report_path.display());
        }
        Command::TrainDemo { lr, iters, eval_interval, out } => {
            if let Some(lr) = lr {
                cfg.set("demo.learning_rate", &lr.to_string())?;
            }
            if let Some(n) = iters {
                cfg.set("demo.max_iterations", &n.to_string())?;
            }
            if let Some(n) = eval_interval {
                cfg.set("demo.eval_interval", &n.to_string())?;
            }
            let out = out.unwrap_or_else(|| cfg.out_dir.join("train-demo"));
            let s = cmd_train_demo(&cfg, &out)?;
            println!("parameters: frozen={} trainable={}", s.frozen_params, s.trainable_params);
            println!("initial_train_loss: {:.9}", s.initial_train_loss);
            println!("final_train_loss: {:.9}", s.final_train_loss);
            for p in &s.checkpoint_paths {
                println!("checkpoint: {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
