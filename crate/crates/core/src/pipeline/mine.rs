use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use super::config::PipelineConfig;
use super::PipelineError;
use crate::hdl::{is_hdl_file, screen_prs, screened_out_shas, FilterConfig};
use crate::par;
use crate::vcs::{
    link_prs_to_issues, ChangeStatus, CommitRecord, IssueRecord, LiveTransport, MinerCache, MinerClient, MinerConfig,
    MinerError, PullRequestRecord, RecordingTransport, RepoRef, ReplayTransport, SystemClock, Transport,
};

pub const COMMITS_FILE: &str = "commits.jsonl";
pub const PRS_FILE: &str = "prs.jsonl";
pub const ISSUES_FILE: &str = "issues.jsonl";

#[derive(Debug, Clone, Default)]
pub struct MineOptions {
    /// Serve responses from a fixture directory instead of the network.
    pub replay: Option<PathBuf>,
    /// Also record every live response into this directory.
    pub record: Option<PathBuf>,
    /// Skip the on-disk HTTP cache.
    pub no_cache: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepoMineSummary {
    pub repo: String,
    pub commits: usize,
    pub pull_requests: usize,
    pub issues: usize,
    /// File versions attached to commit records for later pair extraction.
    pub file_versions: usize,
}

pub fn raw_dir(out_dir: &Path) -> PathBuf {
    out_dir.join("raw")
}

pub fn repo_raw_dir(out_dir: &Path, repo: &RepoRef) -> PathBuf {
    raw_dir(out_dir).join(repo.slug())
}

/// Fetches commits, pull requests and issues for every configured repo and
/// writes them under `<out_dir>/raw/<org>__<name>/`.
///
/// Commits that can yield pairs carry the pre- and post-fix bytes of their
/// modified HDL files inline, so later stages never touch the network.
pub fn cmd_mine(cfg: &PipelineConfig, opts: &MineOptions) -> Result<Vec<RepoMineSummary>, PipelineError> {
    cfg.validate()?;
    if cfg.repos.is_empty() {
        return Err(PipelineError::Config("no repositories configured".into()));
    }
    let mut miner_cfg = MinerConfig {
        api_base: cfg.mine.api_base.clone(),
        token: None,
        wait_on_rate_limit: cfg.mine.wait_on_rate_limit,
        parallelism: cfg.parallelism,
    };
    let transport: Box<dyn Transport> = match &opts.replay {
        Some(dir) => Box::new(ReplayTransport::new(dir).map_err(|e| PipelineError::Mine { repo: "-".into(), source: e })?),
        None => {
            miner_cfg.token = MinerConfig::from_env().token;
            if miner_cfg.token.is_none() {
                return Err(PipelineError::MissingToken);
            }
            let live = LiveTransport::new(Duration::from_secs_f64(cfg.mine.timeout_secs));
            match &opts.record {
                Some(dir) => Box::new(RecordingTransport::new(live, dir).map_err(|e| stage("mine", e))?),
                None => Box::new(live),
            }
        }
    };
    let mut client = MinerClient::new(miner_cfg, transport, SystemClock);
    if !opts.no_cache {
        let dir = cfg.effective_cache_dir();
        client = client.with_cache(MinerCache::open(&dir).map_err(|e| stage("mine", format!("{}: {e}", dir.display())))?);
    }
    let filter = cfg.filter.clone().normalized();
    let mut summaries = Vec::new();
    for repo in &cfg.repos {
        let mined = mine_repo(&client, repo, cfg, &filter).map_err(|e| PipelineError::Mine { repo: repo.to_string(), source: e })?;
        let summary = write_raw(&cfg.out_dir, repo, &mined)?;
        log::info!(
            "{}: {} commits, {} pull requests, {} issues, {} file versions",
            summary.repo,
            summary.commits,
            summary.pull_requests,
            summary.issues,
            summary.file_versions
        );
        summaries.push(summary);
    }
    Ok(summaries)
}

pub(crate) struct MinedRepo {
    pub commits: Vec<CommitRecord>,
    pub prs: Vec<PullRequestRecord>,
    pub issues: Vec<IssueRecord>,
}

fn mine_repo(client: &MinerClient<'_>, repo: &RepoRef, cfg: &PipelineConfig, filter: &FilterConfig) -> Result<MinedRepo, MinerError> {
    let listing = client.fetch_commits(repo, cfg.mine.since)?;
    let limit = cfg.mine.max_commits.unwrap_or(usize::MAX);
    let shas: Vec<String> = listing.into_iter().take(limit).map(|c| c.sha).collect();
    let issues = client.fetch_issues(repo)?;
    let prs = link_prs_to_issues(&client.fetch_pulls(repo)?, &issues);
    let screened_out = screened_out_shas(&prs, &screen_prs(&prs, filter));
    let mut commits = client.fetch_commit_details(repo, &shas).into_iter().collect::<Result<Vec<_>, _>>()?;
    attach_contents(client, repo, &mut commits, &screened_out, filter)?;
    Ok(MinedRepo { commits, prs, issues })
}

/// Which side of a change a fetch job fills.
#[derive(Clone, Copy)]
enum Side {
    Pre,
    Post,
}

fn attach_contents(
    client: &MinerClient<'_>,
    repo: &RepoRef,
    commits: &mut [CommitRecord],
    screened_out: &HashSet<String>,
    filter: &FilterConfig,
) -> Result<(), MinerError> {
    let mut jobs = Vec::new();
    for (ci, c) in commits.iter().enumerate() {
        if c.is_merge() || screened_out.contains(&c.sha) {
            continue;
        }
        let Some(parent) = c.first_parent() else { continue };
        for (fi, f) in c.file_changes.iter().enumerate() {
            if f.status == ChangeStatus::Modified && is_hdl_file(&f.path, filter) {
                jobs.push((ci, fi, Side::Pre, f.path.clone(), parent.to_string()));
                jobs.push((ci, fi, Side::Post, f.path.clone(), c.sha.clone()));
            }
        }
    }
    let fetched = par::map_bounded(client.config().parallelism, &jobs, |(_, _, _, path, git_ref)| {
        match client.fetch_file_at_ref(repo, path, git_ref) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e @ (MinerError::NotFound { .. } | MinerError::Decode { .. })) => {
                log::warn!("{repo}: {path}@{git_ref} unavailable: {e}");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    });
    for ((ci, fi, side, _, _), bytes) in jobs.into_iter().zip(fetched) {
        let change = &mut commits[ci].file_changes[fi];
        match side {
            Side::Pre => change.pre_content = bytes?,
            Side::Post => change.post_content = bytes?,
        }
    }
    Ok(())
}

fn stage(stage: &'static str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage { stage, message: e.to_string() }
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("record serializes");
        out.push(b'\n');
    }
    out
}

fn write_raw(out_dir: &Path, repo: &RepoRef, mined: &MinedRepo) -> Result<RepoMineSummary, PipelineError> {
    let dir = repo_raw_dir(out_dir, repo);
    let write = |name: &str, bytes: Vec<u8>| {
        let path = dir.join(name);
        crate::util::write_atomic(&path, &bytes).map_err(|e| stage("mine", format!("{}: {e}", path.display())))
    };
    write(COMMITS_FILE, jsonl(&mined.commits))?;
    write(PRS_FILE, jsonl(&mined.prs))?;
    write(ISSUES_FILE, jsonl(&mined.issues))?;
    let file_versions = mined
        .commits
        .iter()
        .flat_map(|c| &c.file_changes)
        .map(|f| usize::from(f.pre_content.is_some()) + usize::from(f.post_content.is_some()))
        .sum();
    Ok(RepoMineSummary {
        repo: repo.to_string(),
        commits: mined.commits.len(),
        pull_requests: mined.prs.len(),
        issues: mined.issues.len(),
        file_versions,
    })
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| stage("load", format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| stage("load", format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

/// Loads what [`cmd_mine`] wrote for one repo directory.
pub(crate) fn read_raw(dir: &Path) -> Result<MinedRepo, PipelineError> {
    Ok(MinedRepo {
        commits: read_jsonl(&dir.join(COMMITS_FILE))?,
        prs: read_jsonl(&dir.join(PRS_FILE))?,
        issues: read_jsonl(&dir.join(ISSUES_FILE))?,
    })
}
