use std::sync::Mutex;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use chrono::{DateTime, TimeZone, Utc};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::cache::{MinerCache, MinerCacheEntry};
use super::error::MinerError;
use super::transport::{Clock, Request, Response, Transport};
use super::types::{is_valid_sha, ChangeStatus, CommitRecord, FileChange, IssueRecord, PullRequestRecord, RepoRef};
use crate::par;

pub const DEFAULT_API_BASE: &str = "https://api.github.com";
const PER_PAGE: u32 = 100;

#[derive(Debug, Clone)]
pub struct MinerConfig {
    pub api_base: String,
    pub token: Option<String>,
    /// Sleep until the reset time instead of failing with `RateLimited`.
    pub wait_on_rate_limit: bool,
    /// Maximum in-flight requests for fan-out calls.
    pub parallelism: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self { api_base: DEFAULT_API_BASE.to_string(), token: None, wait_on_rate_limit: false, parallelism: 4 }
    }
}

impl MinerConfig {
    /// Default config with the token taken from `GITHUB_TOKEN`, if set.
    pub fn from_env() -> Self {
        Self { token: std::env::var("GITHUB_TOKEN").ok().filter(|t| !t.is_empty()), ..Self::default() }
    }
}

/// A response body plus how it was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
    pub from_cache: bool,
}

impl Fetched {
    fn header(&self, name: &str) -> Option<&str> {
        super::transport::find_header(&self.headers, name)
    }
}

/// REST client for the hosting service.
pub struct MinerClient<'a> {
    cfg: MinerConfig,
    transport: Box<dyn Transport + 'a>,
    clock: Box<dyn Clock + 'a>,
    cache: Option<MinerCache>,
    /// Requests are refused (or delayed) until this instant.
    gate: Mutex<Option<DateTime<Utc>>>,
}

impl<'a> MinerClient<'a> {
    pub fn new(cfg: MinerConfig, transport: impl Transport + 'a, clock: impl Clock + 'a) -> Self {
        Self { cfg, transport: Box::new(transport), clock: Box::new(clock), cache: None, gate: Mutex::new(None) }
    }

    pub fn with_cache(mut self, cache: MinerCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn config(&self) -> &MinerConfig {
        &self.cfg
    }

    fn repo_url(&self, repo: &RepoRef, tail: &str) -> String {
        format!("{}/repos/{}/{}{}", self.cfg.api_base.trim_end_matches('/'), repo.organization, repo.name, tail)
    }

    fn request(&self, url: &str) -> Request {
        let mut req = Request::get(url);
        req.headers.push(("Accept".into(), "application/vnd.github+json".into()));
        if let Some(token) = &self.cfg.token {
            req.headers.push(("Authorization".into(), format!("Bearer {token}")));
        }
        req
    }

    fn check_gate(&self) -> Result<(), MinerError> {
        let reset = *self.gate.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(reset) = reset {
            if self.clock.now() < reset {
                if !self.cfg.wait_on_rate_limit {
                    return Err(MinerError::RateLimited { reset });
                }
                self.clock.sleep_until(reset);
            }
        }
        Ok(())
    }

    fn close_gate(&self, reset: DateTime<Utc>) {
        let mut gate = self.gate.lock().unwrap_or_else(|e| e.into_inner());
        *gate = Some(gate.map_or(reset, |g| g.max(reset)));
    }

    fn reset_time(&self, resp: &Response) -> Option<DateTime<Utc>> {
        if let Some(epoch) = resp.header("x-ratelimit-reset").and_then(|v| v.trim().parse::<i64>().ok()) {
            return Utc.timestamp_opt(epoch, 0).single();
        }
        let secs = resp.header("retry-after").and_then(|v| v.trim().parse::<i64>().ok())?;
        Some(self.clock.now() + chrono::Duration::seconds(secs))
    }

    /// Sends one request through the rate-limit gate and maps error statuses.
    fn send(&self, req: &Request) -> Result<Response, MinerError> {
        self.check_gate()?;
        let resp = self.transport.send(req)?;
        let exhausted = resp.header("x-ratelimit-remaining").is_some_and(|v| v.trim() == "0");
        match resp.status {
            200..=299 | 304 => {
                if exhausted {
                    if let Some(reset) = self.reset_time(&resp) {
                        self.close_gate(reset);
                    }
                }
                Ok(resp)
            }
            401 => Err(MinerError::Auth { status: 401 }),
            403 | 429 => {
                let limited = exhausted || resp.header("retry-after").is_some();
                match (limited, self.reset_time(&resp)) {
                    (true, Some(reset)) => {
                        self.close_gate(reset);
                        Err(MinerError::RateLimited { reset })
                    }
                    (true, None) | (false, _) if resp.status == 429 => {
                        let reset = self.clock.now() + chrono::Duration::seconds(60);
                        self.close_gate(reset);
                        Err(MinerError::RateLimited { reset })
                    }
                    _ => Err(MinerError::Auth { status: resp.status }),
                }
            }
            404 => Err(MinerError::NotFound { url: req.url.clone() }),
            s => Err(MinerError::Transport(format!("HTTP {s} from {}", req.url))),
        }
    }

    /// GET through the on-disk cache when one is configured.
    ///
    /// An entry with an etag triggers a conditional request and is served
    /// as-is on 304; a 200 overwrites the entry.
    pub fn cached_get(&self, url: &str) -> Result<Fetched, MinerError> {
        let Some(cache) = &self.cache else {
            let resp = self.send(&self.request(url))?;
            return Ok(Fetched { status: resp.status, headers: resp.headers, body: resp.body, from_cache: false });
        };
        let cached = cache.get(url);
        let mut req = self.request(url);
        if let Some(etag) = cached.as_ref().and_then(|e| e.etag.clone()) {
            req.headers.push(("If-None-Match".into(), etag));
        }
        let resp = self.send(&req)?;
        if resp.status == 304 {
            if let Some(entry) = cached {
                return Ok(Fetched {
                    status: entry.status_code,
                    headers: entry.headers,
                    body: entry.body,
                    from_cache: true,
                });
            }
            return Err(MinerError::Transport(format!("unexpected 304 for uncached {url}")));
        }
        if resp.status == 200 {
            cache.put(&MinerCacheEntry {
                url: url.to_string(),
                etag: resp.header("etag").map(str::to_string),
                fetched_at: self.clock.now(),
                body: resp.body.clone(),
                status_code: resp.status,
                headers: resp.headers.clone(),
            })?;
        }
        Ok(Fetched { status: resp.status, headers: resp.headers, body: resp.body, from_cache: false })
    }

    fn get_json<T: DeserializeOwned>(&self, url: &str) -> Result<(T, Fetched), MinerError> {
        let fetched = self.cached_get(url)?;
        let value = serde_json::from_slice(&fetched.body)
            .map_err(|e| MinerError::Decode { url: url.to_string(), msg: e.to_string() })?;
        Ok((value, fetched))
    }

    /// Follows `Link: <...>; rel="next"` until exhausted.
    fn get_paginated<T: DeserializeOwned>(&self, first_url: &str) -> Result<Vec<T>, MinerError> {
        let mut items = Vec::new();
        let mut next = Some(first_url.to_string());
        let mut seen = std::collections::HashSet::new();
        while let Some(url) = next {
            if !seen.insert(url.clone()) {
                return Err(MinerError::Decode { url, msg: "pagination loop".into() });
            }
            let (mut page, fetched): (Vec<T>, _) = self.get_json(&url)?;
            items.append(&mut page);
            next = fetched.header("link").and_then(next_link);
        }
        Ok(items)
    }

    /// Shallow commit records (no file changes), newest first.
    pub fn fetch_commits(&self, repo: &RepoRef, since: Option<DateTime<Utc>>) -> Result<Vec<CommitRecord>, MinerError> {
        let mut tail = format!("/commits?per_page={PER_PAGE}");
        if let Some(since) = since {
            tail.push_str(&format!("&since={}", since.format("%Y-%m-%dT%H:%M:%SZ")));
        }
        let wire: Vec<WireCommit> = self.get_paginated(&self.repo_url(repo, &tail))?;
        wire.into_iter().map(|c| c.into_record(false)).collect()
    }

    pub fn fetch_commit_detail(&self, repo: &RepoRef, sha: &str) -> Result<CommitRecord, MinerError> {
        if !is_valid_sha(sha) {
            return Err(MinerError::InvalidSha(sha.to_string()));
        }
        let (wire, _): (WireCommit, _) = self.get_json(&self.repo_url(repo, &format!("/commits/{sha}")))?;
        wire.into_record(true)
    }

    /// [`Self::fetch_commit_detail`] for many shas with bounded fan-out.
    /// Results come back in input order.
    pub fn fetch_commit_details(&self, repo: &RepoRef, shas: &[String]) -> Vec<Result<CommitRecord, MinerError>>
    where
        Self: Sync,
    {
        par::map_bounded(self.cfg.parallelism, shas, |sha| self.fetch_commit_detail(repo, sha))
    }

    /// All pull requests (open and closed) with their commit shas.
    pub fn fetch_pulls(&self, repo: &RepoRef) -> Result<Vec<PullRequestRecord>, MinerError>
    where
        Self: Sync,
    {
        let wire: Vec<WirePull> = self.get_paginated(&self.repo_url(repo, &format!("/pulls?state=all&per_page={PER_PAGE}")))?;
        let commits = par::map_bounded(self.cfg.parallelism, &wire, |pr| {
            let url = self.repo_url(repo, &format!("/pulls/{}/commits?per_page={PER_PAGE}", pr.number));
            self.get_paginated::<WireSha>(&url).map(|v| v.into_iter().map(|s| s.sha).collect::<Vec<_>>())
        });
        wire.into_iter()
            .zip(commits)
            .map(|(pr, shas)| {
                Ok(PullRequestRecord {
                    number: pr.number,
                    title: pr.title,
                    description: pr.body.unwrap_or_default(),
                    labels: pr.labels.into_iter().map(|l| l.name).collect(),
                    commit_shas: shas?,
                    linked_issue_numbers: Vec::new(),
                    merged: pr.merged_at.is_some(),
                })
            })
            .collect()
    }

    /// Issues only; entries the listing marks as pull requests are dropped.
    pub fn fetch_issues(&self, repo: &RepoRef) -> Result<Vec<IssueRecord>, MinerError> {
        let wire: Vec<WireIssue> = self.get_paginated(&self.repo_url(repo, &format!("/issues?state=all&per_page={PER_PAGE}")))?;
        Ok(wire
            .into_iter()
            .filter(|i| i.pull_request.is_none())
            .map(|i| IssueRecord {
                number: i.number,
                title: i.title,
                body: i.body.unwrap_or_default(),
                labels: i.labels.into_iter().map(|l| l.name).collect(),
            })
            .collect())
    }

    /// Exact file bytes at `git_ref` (a sha or branch name).
    pub fn fetch_file_at_ref(&self, repo: &RepoRef, path: &str, git_ref: &str) -> Result<Vec<u8>, MinerError> {
        if git_ref.is_empty() || git_ref.chars().any(char::is_whitespace) {
            return Err(MinerError::InvalidSha(git_ref.to_string()));
        }
        let url = self.repo_url(repo, &format!("/contents/{}?ref={}", encode_path(path), encode_path(git_ref)));
        let (wire, _): (WireContent, _) = self.get_json(&url)?;
        if wire.encoding.as_deref().is_some_and(|e| e != "base64") {
            return Err(MinerError::Decode { url, msg: format!("unsupported encoding {:?}", wire.encoding) });
        }
        let packed: String = wire.content.unwrap_or_default().chars().filter(|c| !c.is_whitespace()).collect();
        STANDARD.decode(packed).map_err(|e| MinerError::Decode { url, msg: e.to_string() })
    }
}

/// Extracts the `rel="next"` target of a Link header.
pub fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let mut pieces = part.split(';');
        let target = pieces.next()?.trim();
        let is_next = pieces.any(|p| {
            let p = p.trim();
            p == "rel=\"next\"" || p == "rel=next"
        });
        if is_next {
            target.strip_prefix('<')?.strip_suffix('>').map(str::to_string)
        } else {
            None
        }
    })
}

fn encode_path(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~/".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

#[derive(Deserialize)]
struct WireSha {
    sha: String,
}

#[derive(Deserialize)]
struct WireSignature {
    name: Option<String>,
    date: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
struct WireCommitInner {
    author: Option<WireSignature>,
    committer: Option<WireSignature>,
    message: String,
}

#[derive(Deserialize)]
struct WireFile {
    filename: String,
    status: String,
    previous_filename: Option<String>,
    patch: Option<String>,
}

#[derive(Deserialize)]
struct WireCommit {
    sha: String,
    commit: WireCommitInner,
    #[serde(default)]
    parents: Vec<WireSha>,
    files: Option<Vec<WireFile>>,
}

impl WireCommit {
    fn into_record(self, with_files: bool) -> Result<CommitRecord, MinerError> {
        let bad = |msg: String| MinerError::Decode { url: format!("commit {}", self.sha), msg };
        if !is_valid_sha(&self.sha) {
            return Err(bad("malformed sha".into()));
        }
        let author = self.commit.author.as_ref().and_then(|a| a.name.clone()).unwrap_or_default();
        let date = self
            .commit
            .author
            .as_ref()
            .and_then(|a| a.date)
            .or_else(|| self.commit.committer.as_ref().and_then(|c| c.date))
            .unwrap_or(DateTime::<Utc>::UNIX_EPOCH);
        let mut file_changes = Vec::new();
        if with_files {
            for f in self.files.iter().flatten() {
                let status = ChangeStatus::from_wire(&f.status).ok_or_else(|| bad(format!("unknown file status {}", f.status)))?;
                if let Some(patch) = &f.patch {
                    crate::hdl::diff::validate_patch(patch).map_err(|e| bad(e.to_string()))?;
                }
                file_changes.push(FileChange {
                    path: f.filename.clone(),
                    status,
                    previous_path: f.previous_filename.clone(),
                    patch: f.patch.clone(),
                    pre_content: None,
                    post_content: None,
                });
            }
        }
        Ok(CommitRecord {
            sha: self.sha.clone(),
            author,
            date,
            message: self.commit.message.clone(),
            parent_shas: self.parents.iter().map(|p| p.sha.clone()).collect(),
            file_changes,
        })
    }
}

#[derive(Deserialize)]
struct WireLabel {
    name: String,
}

#[derive(Deserialize)]
struct WirePull {
    number: u64,
    title: String,
    body: Option<String>,
    #[serde(default)]
    labels: Vec<WireLabel>,
    merged_at: Option<String>,
}

#[derive(Deserialize)]
struct WireIssue {
    number: u64,
    title: String,
    body: Option<String>,
    #[serde(default)]
    labels: Vec<WireLabel>,
    pull_request: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct WireContent {
    content: Option<String>,
    encoding: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_header_next() {
        let h = r#"<https://api.github.com/x?page=2>; rel="next", <https://api.github.com/x?page=5>; rel="last""#;
        assert_eq!(next_link(h).as_deref(), Some("https://api.github.com/x?page=2"));
        assert_eq!(next_link(r#"<https://a/x?page=1>; rel="prev""#), None);
    }

    #[test]
    fn path_encoding() {
        assert_eq!(encode_path("hw/ip/a b.sv"), "hw/ip/a%20b.sv");
        assert_eq!(encode_path("main"), "main");
    }
}
