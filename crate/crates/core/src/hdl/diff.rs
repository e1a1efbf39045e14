//! Just enough unified-diff handling to recover removed and added lines.

use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HunkHeader {
    pub old_start: u64,
    pub old_len: u64,
    pub new_start: u64,
    pub new_len: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed hunk header: {0}")]
pub struct HunkHeaderError(pub String);

/// Parses `@@ -a,b +c,d @@ ...`; the `,b` / `,d` parts default to 1.
pub fn parse_hunk_header(line: &str) -> Result<HunkHeader, HunkHeaderError> {
    let err = || HunkHeaderError(line.to_string());
    let inner = line.strip_prefix("@@ ").ok_or_else(err)?;
    let end = inner.find(" @@").ok_or_else(err)?;
    let mut parts = inner[..end].split_whitespace();
    let old = parts.next().and_then(|p| p.strip_prefix('-')).ok_or_else(err)?;
    let new = parts.next().and_then(|p| p.strip_prefix('+')).ok_or_else(err)?;
    if parts.next().is_some() {
        return Err(err());
    }
    let range = |s: &str| -> Result<(u64, u64), HunkHeaderError> {
        let (start, len) = match s.split_once(',') {
            Some((a, b)) => (a, b),
            None => (s, "1"),
        };
        Ok((start.parse().map_err(|_| err())?, len.parse().map_err(|_| err())?))
    };
    let (old_start, old_len) = range(old)?;
    let (new_start, new_len) = range(new)?;
    Ok(HunkHeader { old_start, old_len, new_start, new_len })
}

/// Checks every hunk header in `patch`.
pub fn validate_patch(patch: &str) -> Result<Vec<HunkHeader>, HunkHeaderError> {
    patch.lines().filter(|l| l.starts_with("@@")).map(parse_hunk_header).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineChanges {
    pub removed: Vec<String>,
    pub added: Vec<String>,
}

/// Removed (`-`) and added (`+`) lines of a patch body, in order. File
/// headers (`---`/`+++`) and the "no newline" marker are ignored.
pub fn patch_line_changes(patch: &str) -> LineChanges {
    let mut changes = LineChanges::default();
    let mut in_hunk = false;
    for line in patch.lines() {
        if line.starts_with("@@") {
            in_hunk = true;
            continue;
        }
        if !in_hunk {
            continue;
        }
        if let Some(rest) = line.strip_prefix('-') {
            changes.removed.push(rest.to_string());
        } else if let Some(rest) = line.strip_prefix('+') {
            changes.added.push(rest.to_string());
        }
    }
    changes
}

/// Fallback when no patch is available: lines of `old` whose
/// trailing-whitespace-stripped form does not occur in `new`, and vice versa.
/// Blank lines are ignored.
pub fn line_set_changes(old: &str, new: &str) -> LineChanges {
    let set = |s: &str| -> HashSet<String> { s.lines().map(|l| l.trim_end().to_string()).collect() };
    let old_set = set(old);
    let new_set = set(new);
    let only_in = |text: &str, other: &HashSet<String>| {
        text.lines()
            .map(|l| l.trim_end())
            .filter(|l| !l.trim().is_empty() && !other.contains(*l))
            .map(str::to_string)
            .collect()
    };
    LineChanges { removed: only_in(old, &new_set), added: only_in(new, &old_set) }
}
