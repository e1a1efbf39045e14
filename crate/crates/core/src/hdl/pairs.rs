use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::diff::{line_set_changes, patch_line_changes};
use super::filter::{is_hdl_file, FilterConfig};
use crate::vcs::{ChangeStatus, CommitRecord, IssueRecord, MinerClient, MinerError, PullRequestRecord, RepoRef};

/// A buggy/fixed version of one file, with the commit context around it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignPair {
    pub repo: RepoRef,
    pub sha: String,
    pub pr_number: Option<u64>,
    pub path: String,
    pub buggy_code: String,
    pub fixed_code: String,
    pub removed_lines: Vec<String>,
    pub commit_message: String,
    pub pr_description: Option<String>,
    pub issue_text: Option<String>,
}

/// Resolves `(path, ref)` to file bytes.
pub trait ContentSource: Sync {
    fn content(&self, repo: &RepoRef, path: &str, git_ref: &str) -> Result<Vec<u8>, MinerError>;
}

impl ContentSource for MinerClient<'_> {
    fn content(&self, repo: &RepoRef, path: &str, git_ref: &str) -> Result<Vec<u8>, MinerError> {
        self.fetch_file_at_ref(repo, path, git_ref)
    }
}

/// In-memory lookup keyed by `(path, ref)`; repo is ignored.
impl ContentSource for HashMap<(String, String), Vec<u8>> {
    fn content(&self, _repo: &RepoRef, path: &str, git_ref: &str) -> Result<Vec<u8>, MinerError> {
        self.get(&(path.to_string(), git_ref.to_string()))
            .cloned()
            .ok_or_else(|| MinerError::NotFound { url: format!("{path}@{git_ref}") })
    }
}

/// PR and issue context for pair extraction.
#[derive(Debug, Default)]
pub struct PairContext<'a> {
    by_sha: HashMap<&'a str, &'a PullRequestRecord>,
    issues: HashMap<u64, &'a IssueRecord>,
}

impl<'a> PairContext<'a> {
    /// `prs` should already be screened. When a commit appears in several
    /// PRs the lowest-numbered one wins.
    pub fn new(prs: &'a [PullRequestRecord], issues: &'a [IssueRecord]) -> Self {
        let mut sorted: Vec<&PullRequestRecord> = prs.iter().collect();
        sorted.sort_by_key(|p| p.number);
        let mut by_sha = HashMap::new();
        for pr in sorted {
            for sha in &pr.commit_shas {
                by_sha.entry(sha.as_str()).or_insert(pr);
            }
        }
        Self { by_sha, issues: issues.iter().map(|i| (i.number, i)).collect() }
    }

    fn pr_for(&self, sha: &str) -> Option<&'a PullRequestRecord> {
        self.by_sha.get(sha).copied()
    }

    fn issue_text(&self, pr: &PullRequestRecord) -> Option<String> {
        let parts: Vec<String> = pr
            .linked_issue_numbers
            .iter()
            .filter_map(|n| self.issues.get(n))
            .map(|i| if i.body.trim().is_empty() { i.title.clone() } else { format!("{}\n\n{}", i.title, i.body) })
            .collect();
        (!parts.is_empty()).then(|| parts.join("\n\n"))
    }
}

fn load(
    source: &dyn ContentSource,
    repo: &RepoRef,
    inline: Option<&Vec<u8>>,
    path: &str,
    git_ref: &str,
) -> Result<Option<String>, MinerError> {
    let bytes = match inline {
        Some(b) => b.clone(),
        None => match source.content(repo, path, git_ref) {
            Ok(b) => b,
            Err(e @ (MinerError::NotFound { .. } | MinerError::Decode { .. })) => {
                log::warn!("skipping {path}@{git_ref}: content unavailable ({e})");
                return Ok(None);
            }
            Err(e) => return Err(e),
        },
    };
    match String::from_utf8(bytes) {
        Ok(s) => Ok(Some(s)),
        Err(_) => {
            log::warn!("skipping {path}@{git_ref}: not valid UTF-8");
            Ok(None)
        }
    }
}

fn removed_lines(patch: Option<&str>, buggy: &str, fixed: &str) -> Vec<String> {
    let raw = match patch {
        Some(p) => {
            let present: HashSet<&str> = buggy.lines().map(str::trim_end).collect();
            patch_line_changes(p)
                .removed
                .into_iter()
                .map(|l| l.trim_end().to_string())
                .filter(|l| present.contains(l.as_str()))
                .collect()
        }
        None => line_set_changes(buggy, fixed).removed,
    };
    raw.into_iter().filter(|l| !l.trim().is_empty()).collect()
}

/// One pair per modified HDL file of a non-merge commit.
///
/// Files whose content cannot be resolved (missing, undecodable, not UTF-8)
/// are skipped with a warning. Authentication, rate-limit and transport
/// failures are returned.
pub fn extract_design_pairs(
    repo: &RepoRef,
    commit: &CommitRecord,
    source: &dyn ContentSource,
    ctx: &PairContext<'_>,
    cfg: &FilterConfig,
) -> Result<Vec<DesignPair>, MinerError> {
    if commit.is_merge() {
        return Ok(Vec::new());
    }
    let Some(parent) = commit.first_parent() else {
        return Ok(Vec::new());
    };
    let pr = ctx.pr_for(&commit.sha);
    let mut pairs = Vec::new();
    for change in &commit.file_changes {
        if change.status != ChangeStatus::Modified || !is_hdl_file(&change.path, cfg) {
            continue;
        }
        let Some(buggy) = load(source, repo, change.pre_content.as_ref(), &change.path, parent)? else {
            continue;
        };
        let Some(fixed) = load(source, repo, change.post_content.as_ref(), &change.path, &commit.sha)? else {
            continue;
        };
        if buggy == fixed {
            continue;
        }
        pairs.push(DesignPair {
            repo: repo.clone(),
            sha: commit.sha.clone(),
            pr_number: pr.map(|p| p.number),
            path: change.path.clone(),
            removed_lines: removed_lines(change.patch.as_deref(), &buggy, &fixed),
            buggy_code: buggy,
            fixed_code: fixed,
            commit_message: commit.message.clone(),
            pr_description: pr.map(|p| p.description.clone()).filter(|d| !d.trim().is_empty()),
            issue_text: pr.and_then(|p| ctx.issue_text(p)),
        });
    }
    Ok(pairs)
}

/// Counts of modified HDL files per commit sha, for funnel reporting.
pub fn modified_hdl_files(commit: &CommitRecord, cfg: &FilterConfig) -> usize {
    commit.file_changes.iter().filter(|c| c.status == ChangeStatus::Modified && is_hdl_file(&c.path, cfg)).count()
}

/// Groups pairs by commit sha, preserving order within each group.
pub fn pairs_by_commit(pairs: &[DesignPair]) -> BTreeMap<&str, Vec<&DesignPair>> {
    let mut out: BTreeMap<&str, Vec<&DesignPair>> = BTreeMap::new();
    for p in pairs {
        out.entry(p.sha.as_str()).or_default().push(p);
    }
    out
}
