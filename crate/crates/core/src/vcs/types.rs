use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::error::MinerError;

/// `organization/name` on the hosting service.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RepoRef {
    pub organization: String,
    pub name: String,
}

impl RepoRef {
    pub fn new(organization: &str, name: &str) -> Result<Self, MinerError> {
        let ok = |s: &str| !s.is_empty() && !s.contains('/') && !s.chars().any(char::is_whitespace);
        if !ok(organization) || !ok(name) {
            return Err(MinerError::InvalidRepo(format!("{organization}/{name}")));
        }
        Ok(Self { organization: organization.to_string(), name: name.to_string() })
    }

    /// Directory-safe form used for per-repo output folders.
    pub fn slug(&self) -> String {
        format!("{}__{}", self.organization, self.name)
    }
}

impl fmt::Display for RepoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.organization, self.name)
    }
}

impl FromStr for RepoRef {
    type Err = MinerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (org, name) = s.split_once('/').ok_or_else(|| MinerError::InvalidRepo(s.to_string()))?;
        RepoRef::new(org, name)
    }
}

pub fn is_valid_sha(sha: &str) -> bool {
    sha.len() == 40 && sha.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeStatus {
    Added,
    Modified,
    Removed,
    Renamed,
}

impl ChangeStatus {
    /// Maps the service's status strings; `copied` counts as an addition and
    /// `changed`/`unchanged` as modifications.
    pub fn from_wire(s: &str) -> Option<Self> {
        Some(match s {
            "added" | "copied" => ChangeStatus::Added,
            "modified" | "changed" | "unchanged" => ChangeStatus::Modified,
            "removed" => ChangeStatus::Removed,
            "renamed" => ChangeStatus::Renamed,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub status: ChangeStatus,
    pub previous_path: Option<String>,
    pub patch: Option<String>,
    #[serde(with = "b64_opt")]
    pub pre_content: Option<Vec<u8>>,
    #[serde(with = "b64_opt")]
    pub post_content: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub sha: String,
    pub author: String,
    pub date: DateTime<Utc>,
    pub message: String,
    pub parent_shas: Vec<String>,
    pub file_changes: Vec<FileChange>,
}

impl CommitRecord {
    pub fn is_merge(&self) -> bool {
        self.parent_shas.len() >= 2
    }

    pub fn first_parent(&self) -> Option<&str> {
        self.parent_shas.first().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRequestRecord {
    pub number: u64,
    pub title: String,
    pub description: String,
    pub labels: Vec<String>,
    pub commit_shas: Vec<String>,
    pub linked_issue_numbers: Vec<u64>,
    pub merged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub number: u64,
    pub title: String,
    pub body: String,
    pub labels: Vec<String>,
}

/// Byte strings travel as standard base64 in the record files.
mod b64_opt {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(bytes) => s.serialize_some(&STANDARD.encode(bytes)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| STANDARD.decode(s).map_err(serde::de::Error::custom)).transpose()
    }
}
