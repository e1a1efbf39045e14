use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::PipelineConfig;
use super::PipelineError;
use crate::dataset::{read_samples, Split};
use crate::eval::{
    aggregate_report, build_cases, mean_rows, run_model, score_case, EvalReportRow, EvalTask, ModelAdapterSpec,
    PromptTemplate, RunLog,
};
use crate::metrics::WordTokenizerConfig;
use crate::par::{self, Execution};

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub task: EvalTask,
    pub adapter: ModelAdapterSpec,
    /// Defaults to `<out_dir>/dataset.jsonl`.
    pub dataset: Option<PathBuf>,
    /// Defaults to `<out_dir>/eval-<task>-<model>.csv`.
    pub report: Option<PathBuf>,
    /// Append one mean row per (task, model).
    pub with_means: bool,
    /// Concurrent adapter calls.
    pub adapter_parallelism: usize,
}

/// Everything needed to reproduce a report, written next to it.
#[derive(Debug, Clone, Serialize)]
pub struct EvalRunMeta {
    pub task: EvalTask,
    pub adapter: ModelAdapterSpec,
    pub prompts: PromptTemplate,
    pub tokenizer: String,
    pub dataset: String,
    pub cases: usize,
    pub scored: usize,
    pub mean_f1: Option<[f64; 4]>,
    pub run_log: RunLog,
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub report_path: PathBuf,
    pub meta_path: PathBuf,
    pub rows: Vec<EvalReportRow>,
    pub meta: EvalRunMeta,
}

pub fn eval_meta_path(report: &Path) -> PathBuf {
    report.with_extension("meta.json")
}

fn stage(stage: &'static str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage { stage, message: e.to_string() }
}

/// Scores the validation samples of one task against a model adapter.
///
/// Cases without a response are left out of the report and listed in the
/// run log of the sidecar file.
pub fn cmd_eval(cfg: &PipelineConfig, opts: &EvalOptions, exec: Execution) -> Result<EvalSummary, PipelineError> {
    cfg.validate()?;
    let dataset = opts.dataset.clone().unwrap_or_else(|| cfg.out_dir.join(super::build::DATASET_FILE));
    let samples: Vec<_> = read_samples(&dataset)
        .map_err(|e| stage("load", e))?
        .into_iter()
        .filter(|s| s.split == Split::Validation && s.task.eval_task() == Some(opts.task))
        .collect();
    let cases = build_cases(&samples, &cfg.prompts).map_err(|e| stage("cases", e))?;
    let (responses, run_log) =
        run_model(&cases, &opts.adapter, opts.adapter_parallelism.max(1)).map_err(PipelineError::Adapter)?;

    let answered: Vec<_> = cases.iter().filter_map(|c| responses.get(&c.case_id).map(|r| (c, r))).collect();
    let tok: WordTokenizerConfig = cfg.scoring;
    let scores = par::map(exec, &answered, |(case, response)| score_case(response, case, &tok).f1s());
    let mut rows: Vec<EvalReportRow> = answered
        .iter()
        .zip(&scores)
        .map(|((case, _), f)| {
            let (org, name) = case.repo.split_once('/').unwrap_or(("", case.repo.as_str()));
            EvalReportRow {
                task: opts.task.as_str().to_string(),
                organization: org.to_string(),
                repository: name.to_string(),
                sha: case.sha.clone(),
                model: opts.adapter.model_name.clone(),
                rouge1_f1: f[0],
                rouge2_f1: f[1],
                rouge_l_f1: f[2],
                rouge_w_f1: f[3],
            }
        })
        .collect();
    let means = mean_rows(&rows);
    let mean_f1 = means.first().map(|m| [m.rouge1_f1, m.rouge2_f1, m.rouge_l_f1, m.rouge_w_f1]);
    if opts.with_means {
        rows.extend(means);
    }

    let report_path = opts.report.clone().unwrap_or_else(|| {
        let model: String =
            opts.adapter.model_name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect();
        cfg.out_dir.join(format!("eval-{}-{model}.csv", opts.task.as_str()))
    });
    aggregate_report(&rows, &report_path).map_err(|e| stage("report", e))?;
    let meta = EvalRunMeta {
        task: opts.task,
        adapter: opts.adapter.clone(),
        prompts: cfg.prompts.clone(),
        tokenizer: tok.label(),
        dataset: dataset.display().to_string(),
        cases: cases.len(),
        scored: answered.len(),
        mean_f1,
        run_log,
        config: cfg.entries(),
    };
    let meta_path = eval_meta_path(&report_path);
    let mut json = serde_json::to_vec_pretty(&meta).expect("meta serializes");
    json.push(b'\n');
    crate::util::write_atomic(&meta_path, &json).map_err(|e| stage("report", format!("{}: {e}", meta_path.display())))?;
    Ok(EvalSummary { report_path, meta_path, rows, meta })
}
