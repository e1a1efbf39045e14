use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Serialize;

use super::config::PipelineConfig;
use super::mine::{raw_dir, read_raw};
use super::PipelineError;
use crate::dataset::{
    apply_split, dedup_pairs_with, enhancement_samples, export_records, length_filter_with, localization_sample,
    manifest_path, repair_sample, split_dataset, DatasetManifest, DatasetSample, EnhanceConfig, MessageHook, PairFunnel,
};
use crate::hdl::{
    extract_design_pairs, screen_prs, screened_out_shas, DesignPair, DirResolver, ExternalPreprocessor, IncludeResolver,
    NoIncludes, PairContext,
};
use crate::par::{self, Execution};
use crate::vcs::RepoRef;

pub const DATASET_FILE: &str = "dataset.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildSummary {
    pub records_path: PathBuf,
    pub manifest_path: PathBuf,
    pub commits: usize,
    pub manifest: DatasetManifest,
}

fn stage(stage: &'static str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage { stage, message: e.to_string() }
}

/// Repo directories under `raw/`, sorted by name.
fn raw_repos(out_dir: &Path) -> Result<Vec<(RepoRef, PathBuf)>, PipelineError> {
    let dir = raw_dir(out_dir);
    let entries = std::fs::read_dir(&dir).map_err(|e| stage("load", format!("{}: {e}", dir.display())))?;
    let mut repos = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| stage("load", e))?;
        if !entry.file_type().map_err(|e| stage("load", e))?.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let repo = name
            .split_once("__")
            .and_then(|(o, n)| RepoRef::new(o, n).ok())
            .ok_or_else(|| stage("load", format!("{}: not an <org>__<name> directory", entry.path().display())))?;
        repos.push((repo, entry.path()));
    }
    repos.sort();
    Ok(repos)
}

/// Screen, extract, dedup, length filter, enhance, split and export.
///
/// Reads every repo directory written by `mine` and writes
/// `<out_dir>/dataset.jsonl` plus its manifest. Nothing is left behind when a
/// stage fails.
pub fn cmd_build(cfg: &PipelineConfig, exec: Execution) -> Result<BuildSummary, PipelineError> {
    cfg.validate()?;
    let records_path = cfg.out_dir.join(DATASET_FILE);
    let mpath = manifest_path(&records_path);
    let result = build_inner(cfg, exec, &records_path);
    if result.is_err() {
        for p in [&records_path, &mpath] {
            if p.exists() {
                let _ = std::fs::remove_file(p);
            }
        }
    }
    result
}

fn build_inner(cfg: &PipelineConfig, exec: Execution, records_path: &Path) -> Result<BuildSummary, PipelineError> {
    let filter = cfg.filter.clone().normalized();
    let counter = cfg.clean.token_counter.resolve().map_err(|e| stage("length_filter", e))?;
    let repos = raw_repos(&cfg.out_dir)?;

    let no_content: HashMap<(String, String), Vec<u8>> = HashMap::new();
    let mut pairs: Vec<DesignPair> = Vec::new();
    let mut commits_seen = 0;
    let mut newest: Option<DateTime<Utc>> = None;
    for (repo, dir) in &repos {
        let mut raw = read_raw(dir)?;
        // oldest first, so dedup keeps the earliest occurrence of a fix
        raw.commits.sort_by(|a, b| (a.date, &a.sha).cmp(&(b.date, &b.sha)));
        commits_seen += raw.commits.len();
        newest = raw.commits.iter().map(|c| c.date).chain(newest).max();
        let kept = screen_prs(&raw.prs, &filter);
        let dropped = screened_out_shas(&raw.prs, &kept);
        let ctx = PairContext::new(&kept, &raw.issues);
        let candidates: Vec<_> = raw.commits.iter().filter(|c| !dropped.contains(&c.sha)).collect();
        let extracted = par::map(exec, &candidates, |c| extract_design_pairs(repo, c, &no_content, &ctx, &filter));
        for r in extracted {
            pairs.extend(r.map_err(|e| stage("extract", e))?);
        }
    }

    let extracted = pairs.len();
    let pairs = dedup_pairs_with(&pairs, exec);
    let after_dedup = pairs.len();
    let pairs = length_filter_with(&pairs, &counter, &cfg.clean, exec);
    let funnel = PairFunnel { extracted, after_dedup, after_length: pairs.len() };

    let resolver: Box<dyn IncludeResolver> = if cfg.enhance.include_dirs.is_empty() {
        Box::new(NoIncludes)
    } else {
        Box::new(DirResolver(cfg.enhance.include_dirs.clone()))
    };
    let external = cfg.enhance.verilator.as_ref().map(|b| ExternalPreprocessor {
        binary: b.clone(),
        include_dirs: cfg.enhance.include_dirs.clone(),
    });
    let hook = match &cfg.enhance.message_hook {
        Some(cmd) => {
            let mut words = cmd.split_whitespace().map(str::to_string);
            let program = words.next().ok_or_else(|| stage("enhance", "empty message hook command"))?;
            Some(MessageHook {
                program,
                args: words.collect(),
                timeout: Duration::from_secs_f64(cfg.enhance.hook_timeout_secs),
            })
        }
        None => None,
    };
    let enhance = EnhanceConfig {
        defines: cfg.enhance.defines.clone(),
        includes: resolver.as_ref(),
        external: external.as_ref(),
        hook: hook.as_ref(),
    };

    // one pass per pair keeps a pair's samples together in the record file
    let mut samples: Vec<DatasetSample> = Vec::new();
    for pair in &pairs {
        samples.extend(repair_sample(pair, &cfg.prompts));
        samples.extend(localization_sample(pair, &cfg.prompts));
        samples.extend(enhancement_samples(pair, &enhance));
    }

    let split = split_dataset(&samples, cfg.split_ratios, cfg.split_seed).map_err(|e| stage("split", e))?;
    apply_split(&mut samples, &split);

    let token_counts = par::map(exec, &samples, |s| (counter.count(&s.input) + counter.count(&s.output)) as u64);
    let mut task_counts = BTreeMap::new();
    for s in &samples {
        *task_counts.entry(s.task).or_insert(0) += 1;
    }
    let manifest = DatasetManifest {
        created_at: newest.unwrap_or(DateTime::UNIX_EPOCH),
        repos: repos.iter().map(|(r, _)| r.to_string()).collect(),
        filter_config_digest: filter.digest(),
        filter_config: filter,
        clean_config: cfg.clean.clone(),
        token_counter: counter.identity(),
        pair_funnel: funnel,
        pair_count: pairs.len(),
        sample_count: samples.len(),
        task_counts,
        token_total: token_counts.iter().sum(),
        split: Some(split),
        config: cfg.entries(),
    };
    export_records(&samples, &manifest, records_path).map_err(|e| stage("export", e))?;
    Ok(BuildSummary {
        records_path: records_path.to_path_buf(),
        manifest_path: manifest_path(records_path),
        commits: commits_seen,
        manifest,
    })
}
