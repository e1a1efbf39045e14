use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use super::types::{IssueRecord, PullRequestRecord};

// Closing keywords are optional: a bare "#N" already links. Keeping them in
// the pattern documents which phrasings are recognised.
static ISSUE_REF: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:\b(?:fix|fixes|fixed|close|closes|closed|resolve|resolves|resolved)\s+)?#(\d+)\b")
        .expect("valid issue reference pattern")
});

/// Issue numbers mentioned in `text`, in order of appearance.
pub fn issue_references(text: &str) -> Vec<u64> {
    ISSUE_REF.captures_iter(text).filter_map(|c| c[1].parse().ok()).collect()
}

/// Fills `linked_issue_numbers` from references in each PR's title and
/// description that name an existing issue. Existing links are kept, so the
/// function is idempotent.
pub fn link_prs_to_issues(prs: &[PullRequestRecord], issues: &[IssueRecord]) -> Vec<PullRequestRecord> {
    let known: BTreeSet<u64> = issues.iter().map(|i| i.number).collect();
    prs.iter()
        .map(|pr| {
            let mut linked: BTreeSet<u64> = pr.linked_issue_numbers.iter().copied().collect();
            for n in issue_references(&pr.title).into_iter().chain(issue_references(&pr.description)) {
                if known.contains(&n) {
                    linked.insert(n);
                }
            }
            PullRequestRecord { linked_issue_numbers: linked.into_iter().collect(), ..pr.clone() }
        })
        .collect()
}
