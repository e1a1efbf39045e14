//! On-disk response cache keyed by URL hash.
//!
//! Layout: `<dir>/<sha256(url)>` holds the body, `<dir>/<sha256(url)>.meta.json`
//! the metadata. Both are written atomically. A body that fails its checksum
//! or a sidecar that fails to parse is treated as absent and removed.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::transport::{body_path, meta_path};
use crate::util::{sha256_hex, write_atomic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinerCacheEntry {
    pub url: String,
    pub etag: Option<String>,
    pub fetched_at: DateTime<Utc>,
    pub body: Vec<u8>,
    pub status_code: u16,
    /// Response headers worth keeping (pagination links, rate-limit info).
    pub headers: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheMeta {
    url: String,
    etag: Option<String>,
    fetched_at: DateTime<Utc>,
    status_code: u16,
    headers: Vec<(String, String)>,
    body_len: u64,
    body_sha256: String,
}

#[derive(Debug, Clone)]
pub struct MinerCache {
    dir: PathBuf,
}

impl MinerCache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, url: &str) -> Option<MinerCacheEntry> {
        let meta_file = meta_path(&self.dir, url);
        if !meta_file.exists() {
            return None;
        }
        match self.load(url, &meta_file) {
            Ok(entry) => Some(entry),
            Err(reason) => {
                log::warn!("discarding corrupted cache entry for {url}: {reason}");
                let _ = std::fs::remove_file(&meta_file);
                let _ = std::fs::remove_file(body_path(&self.dir, url));
                None
            }
        }
    }

    fn load(&self, url: &str, meta_file: &Path) -> Result<MinerCacheEntry, String> {
        let meta: CacheMeta =
            serde_json::from_slice(&std::fs::read(meta_file).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let body = std::fs::read(body_path(&self.dir, url)).map_err(|e| e.to_string())?;
        if meta.url != url {
            return Err("url mismatch".into());
        }
        if body.len() as u64 != meta.body_len || sha256_hex(&body) != meta.body_sha256 {
            return Err("body checksum mismatch".into());
        }
        if meta.status_code == 200 && body.is_empty() {
            return Err("empty body for a 200 entry".into());
        }
        Ok(MinerCacheEntry {
            url: meta.url,
            etag: meta.etag,
            fetched_at: meta.fetched_at,
            body,
            status_code: meta.status_code,
            headers: meta.headers,
        })
    }

    pub fn put(&self, entry: &MinerCacheEntry) -> std::io::Result<()> {
        let meta = CacheMeta {
            url: entry.url.clone(),
            etag: entry.etag.clone(),
            fetched_at: entry.fetched_at,
            status_code: entry.status_code,
            headers: entry.headers.clone(),
            body_len: entry.body.len() as u64,
            body_sha256: sha256_hex(&entry.body),
        };
        // body first: a crash in between leaves a checksum mismatch, not a
        // sidecar pointing at stale bytes that happen to verify
        write_atomic(&body_path(&self.dir, &entry.url), &entry.body)?;
        let json = serde_json::to_vec_pretty(&meta).map_err(std::io::Error::other)?;
        write_atomic(&meta_path(&self.dir, &entry.url), &json)
    }
}
