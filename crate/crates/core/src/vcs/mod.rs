//! Mining commits, pull requests, issues and file contents from the hosting
//! service's REST API.

mod cache;
mod client;
mod error;
mod link;
mod transport;
mod types;

pub use cache::{MinerCache, MinerCacheEntry};
pub use client::{next_link, Fetched, MinerClient, MinerConfig, DEFAULT_API_BASE};
pub use error::MinerError;
pub use link::{issue_references, link_prs_to_issues};
pub use transport::{
    url_key, Clock, CountingTransport, FixtureWriter, LiveTransport, ManualClock, RecordedMeta, RecordingTransport,
    ReplayTransport, Request, Response, SentRequest, SystemClock, Transport,
};
pub use types::{is_valid_sha, ChangeStatus, CommitRecord, FileChange, IssueRecord, PullRequestRecord, RepoRef};
