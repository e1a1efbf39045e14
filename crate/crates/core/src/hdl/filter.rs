use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::util::sha256_hex;
use crate::vcs::PullRequestRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub hdl_extensions: BTreeSet<String>,
    pub deny_labels: BTreeSet<String>,
    /// When set, a PR must carry at least one of these.
    pub allow_labels: Option<BTreeSet<String>>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            hdl_extensions: [".v", ".sv", ".svh", ".vh"].into_iter().map(String::from).collect(),
            deny_labels: ["documentation", "ci", "tooling"].into_iter().map(String::from).collect(),
            allow_labels: None,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid filter config: {0}")]
pub struct FilterConfigError(pub String);

impl FilterConfig {
    /// Lowercases everything and prefixes bare extensions with a dot.
    pub fn normalized(self) -> Self {
        let lower = |s: BTreeSet<String>| s.into_iter().map(|x| x.trim().to_lowercase()).collect();
        Self {
            hdl_extensions: self
                .hdl_extensions
                .into_iter()
                .map(|e| {
                    let e = e.trim().to_lowercase();
                    if e.starts_with('.') { e } else { format!(".{e}") }
                })
                .collect(),
            deny_labels: lower(self.deny_labels),
            allow_labels: self.allow_labels.map(lower),
        }
    }

    pub fn validate(&self) -> Result<(), FilterConfigError> {
        if let Some(e) = self.hdl_extensions.iter().find(|e| !e.starts_with('.') || e.len() < 2) {
            return Err(FilterConfigError(format!("extension {e:?} must start with '.'")));
        }
        let labels = self.deny_labels.iter().chain(self.allow_labels.iter().flatten());
        if let Some(l) = labels.into_iter().find(|l| **l != l.to_lowercase()) {
            return Err(FilterConfigError(format!("label {l:?} must be lowercase")));
        }
        Ok(())
    }

    /// Stable hash of the configuration, recorded in dataset manifests.
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("filter config serializes"))
    }
}

pub fn is_hdl_file(path: &str, cfg: &FilterConfig) -> bool {
    let name = path.rsplit('/').next().unwrap_or(path);
    match name.rfind('.') {
        Some(i) if i > 0 || name.len() > 1 => cfg.hdl_extensions.contains(&name[i..].to_lowercase()),
        _ => false,
    }
}

fn pr_passes(pr: &PullRequestRecord, cfg: &FilterConfig) -> bool {
    let labels: Vec<String> = pr.labels.iter().map(|l| l.to_lowercase()).collect();
    if labels.iter().any(|l| cfg.deny_labels.contains(l)) {
        return false;
    }
    match &cfg.allow_labels {
        Some(allow) => labels.iter().any(|l| allow.contains(l)),
        None => true,
    }
}

pub fn screen_prs(prs: &[PullRequestRecord], cfg: &FilterConfig) -> Vec<PullRequestRecord> {
    prs.iter().filter(|pr| pr_passes(pr, cfg)).cloned().collect()
}

/// Shas that only appear in PRs removed by screening. Commits outside any PR
/// (direct pushes) are not affected.
pub fn screened_out_shas(all: &[PullRequestRecord], kept: &[PullRequestRecord]) -> HashSet<String> {
    let keep: HashSet<&str> = kept.iter().flat_map(|p| p.commit_shas.iter().map(String::as_str)).collect();
    all.iter()
        .flat_map(|p| p.commit_shas.iter())
        .filter(|s| !keep.contains(s.as_str()))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(n: u64, labels: &[&str]) -> PullRequestRecord {
        PullRequestRecord {
            number: n,
            title: String::new(),
            description: String::new(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            commit_shas: vec![format!("{n:040x}")],
            linked_issue_numbers: vec![],
            merged: true,
        }
    }

    #[test]
    fn extensions() {
        let cfg = FilterConfig::default();
        assert!(is_hdl_file("rtl/core/alu.sv", &cfg));
        assert!(!is_hdl_file("docs/alu.md", &cfg));
        assert!(is_hdl_file("hw/top.SV", &cfg));
        assert!(is_hdl_file("inc/defs.svh", &cfg));
        assert!(!is_hdl_file("rtl.sv/Makefile", &cfg));
        assert!(!is_hdl_file("sv", &cfg));
    }

    #[test]
    fn deny_and_allow() {
        let cfg = FilterConfig { deny_labels: ["ci".to_string()].into(), ..FilterConfig::default() };
        let out = screen_prs(&[pr(1, &["rtl"]), pr(2, &["ci", "rtl"])], &cfg);
        assert_eq!(out.iter().map(|p| p.number).collect::<Vec<_>>(), vec![1]);

        let cfg = FilterConfig::default();
        assert!(screen_prs(&[pr(1, &["Documentation"])], &cfg).is_empty());
        assert_eq!(screen_prs(&[pr(1, &[])], &cfg).len(), 1);

        let cfg = FilterConfig { allow_labels: Some(["bug".to_string()].into()), ..FilterConfig::default() };
        let out = screen_prs(&[pr(1, &[]), pr(2, &["bug"]), pr(3, &["bug", "ci"])], &cfg);
        assert_eq!(out.iter().map(|p| p.number).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn normalization_and_validation() {
        let cfg = FilterConfig {
            hdl_extensions: ["SV".to_string()].into(),
            deny_labels: ["CI".to_string()].into(),
            allow_labels: None,
        };
        assert!(cfg.validate().is_err());
        let n = cfg.normalized();
        assert!(n.validate().is_ok());
        assert!(n.hdl_extensions.contains(".sv"));
        assert_eq!(n.digest(), n.clone().digest());
        assert_ne!(n.digest(), FilterConfig::default().digest());
    }

    #[test]
    fn screened_shas() {
        let all = vec![pr(1, &[]), pr(2, &["ci"])];
        let kept = screen_prs(&all, &FilterConfig::default());
        let out = screened_out_shas(&all, &kept);
        assert_eq!(out.len(), 1);
        assert!(out.contains(&format!("{:040x}", 2)));
    }
}
