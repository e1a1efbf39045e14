//! HTTP transport and clock seams.
//!
//! The client only ever sees [`Transport`] and [`Clock`]; live runs use
//! [`LiveTransport`]/[`SystemClock`], tests and `--replay` runs use
//! [`ReplayTransport`] over a recorded fixture directory and [`ManualClock`].

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::error::MinerError;
use crate::util::{sha256_hex, write_atomic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub url: String,
    pub headers: Vec<(String, String)>,
}

impl Request {
    pub fn get(url: impl Into<String>) -> Self {
        Self { url: url.into(), headers: Vec::new() }
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        find_header(&self.headers, name)
    }

    /// A request carrying `If-None-Match` is conditional.
    pub fn is_conditional(&self) -> bool {
        self.header("if-none-match").is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Response {
    pub fn header(&self, name: &str) -> Option<&str> {
        find_header(&self.headers, name)
    }
}

pub(crate) fn find_header<'a>(headers: &'a [(String, String)], name: &str) -> Option<&'a str> {
    headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
}

pub trait Transport: Send + Sync {
    fn send(&self, req: &Request) -> Result<Response, MinerError>;
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
    fn sleep_until(&self, t: DateTime<Utc>);
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn sleep_until(&self, t: DateTime<Utc>) {
        if let Ok(d) = (t - Utc::now()).to_std() {
            std::thread::sleep(d);
        }
    }
}

impl<C: Clock + ?Sized> Clock for &C {
    fn now(&self) -> DateTime<Utc> {
        (**self).now()
    }

    fn sleep_until(&self, t: DateTime<Utc>) {
        (**self).sleep_until(t)
    }
}

/// Clock that only moves when told to (or when slept on).
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self(Mutex::new(start))
    }

    pub fn advance(&self, by: chrono::Duration) {
        let mut t = self.0.lock().unwrap_or_else(|e| e.into_inner());
        *t += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn sleep_until(&self, t: DateTime<Utc>) {
        let mut now = self.0.lock().unwrap_or_else(|e| e.into_inner());
        if *now < t {
            *now = t;
        }
    }
}

/// Real HTTPS transport.
pub struct LiveTransport {
    agent: ureq::Agent,
}

impl LiveTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .user_agent("hdlbugs-miner")
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for LiveTransport {
    fn send(&self, req: &Request) -> Result<Response, MinerError> {
        let mut builder = self.agent.get(&req.url);
        for (k, v) in &req.headers {
            builder = builder.header(k, v);
        }
        let mut resp = builder.call().map_err(|e| MinerError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .map(|(k, v)| (k.as_str().to_ascii_lowercase(), String::from_utf8_lossy(v.as_bytes()).into_owned()))
            .collect();
        let body = resp
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| MinerError::Transport(e.to_string()))?;
        Ok(Response { status, headers, body })
    }
}

/// Sidecar metadata for one recorded response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedMeta {
    pub url: String,
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body_len: u64,
    pub body_sha256: String,
}

/// File stem for a URL inside a fixture or cache directory.
pub fn url_key(url: &str) -> String {
    sha256_hex(url.as_bytes())
}

pub(crate) fn meta_path(dir: &Path, url: &str) -> PathBuf {
    dir.join(format!("{}.meta.json", url_key(url)))
}

pub(crate) fn body_path(dir: &Path, url: &str) -> PathBuf {
    dir.join(url_key(url))
}

/// Writes recorded responses in the layout [`ReplayTransport`] reads:
/// `<sha256(url)>` holds the body bytes, `<sha256(url)>.meta.json` the
/// status, headers and a body checksum.
pub struct FixtureWriter {
    dir: PathBuf,
}

impl FixtureWriter {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn record(&self, url: &str, resp: &Response) -> std::io::Result<()> {
        let meta = RecordedMeta {
            url: url.to_string(),
            status: resp.status,
            headers: resp.headers.clone(),
            body_len: resp.body.len() as u64,
            body_sha256: sha256_hex(&resp.body),
        };
        write_atomic(&body_path(&self.dir, url), &resp.body)?;
        let mut json = serde_json::to_vec_pretty(&meta).map_err(std::io::Error::other)?;
        json.push(b'\n');
        write_atomic(&meta_path(&self.dir, url), &json)
    }

    /// Convenience for hand-built fixtures: a 200 JSON response.
    pub fn json(&self, url: &str, body: &serde_json::Value, extra_headers: &[(&str, &str)]) -> std::io::Result<()> {
        let mut headers = vec![("content-type".to_string(), "application/json".to_string())];
        headers.extend(extra_headers.iter().map(|(k, v)| (k.to_string(), v.to_string())));
        let mut body = serde_json::to_vec_pretty(body).map_err(std::io::Error::other)?;
        body.push(b'\n');
        self.record(url, &Response { status: 200, headers, body })
    }
}

/// Loads one recorded response; `Ok(None)` when there is no entry.
pub(crate) fn load_recorded(dir: &Path, url: &str) -> Result<Option<(RecordedMeta, Vec<u8>)>, String> {
    let meta_file = meta_path(dir, url);
    if !meta_file.exists() {
        return Ok(None);
    }
    let meta_bytes = std::fs::read(&meta_file).map_err(|e| e.to_string())?;
    let meta: RecordedMeta = serde_json::from_slice(&meta_bytes).map_err(|e| e.to_string())?;
    let body = std::fs::read(body_path(dir, url)).map_err(|e| e.to_string())?;
    if meta.url != url || body.len() as u64 != meta.body_len || sha256_hex(&body) != meta.body_sha256 {
        return Err(format!("entry for {url} does not match its checksum"));
    }
    Ok(Some((meta, body)))
}

/// Serves responses recorded in a fixture directory.
///
/// Conditional requests whose `If-None-Match` equals the recorded `etag`
/// get a bodiless 304. Unknown URLs are a transport error.
pub struct ReplayTransport {
    dir: PathBuf,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, MinerError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(MinerError::Transport(format!("replay directory {} does not exist", dir.display())));
        }
        Ok(Self { dir })
    }
}

impl Transport for ReplayTransport {
    fn send(&self, req: &Request) -> Result<Response, MinerError> {
        let (meta, body) = load_recorded(&self.dir, &req.url)
            .map_err(MinerError::Transport)?
            .ok_or_else(|| MinerError::Transport(format!("no recorded response for {}", req.url)))?;
        if let (Some(want), Some(etag)) = (req.header("if-none-match"), find_header(&meta.headers, "etag")) {
            if want == etag {
                return Ok(Response { status: 304, headers: meta.headers, body: Vec::new() });
            }
        }
        Ok(Response { status: meta.status, headers: meta.headers, body })
    }
}

/// Forwards to an inner transport and records every exchange into a fixture
/// directory, producing input for later `--replay` runs.
pub struct RecordingTransport<T> {
    inner: T,
    writer: FixtureWriter,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        Ok(Self { inner, writer: FixtureWriter::new(dir)? })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn send(&self, req: &Request) -> Result<Response, MinerError> {
        let resp = self.inner.send(req)?;
        if resp.status != 304 {
            self.writer.record(&req.url, &resp)?;
        }
        Ok(resp)
    }
}

/// One entry of a [`CountingTransport`] log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentRequest {
    pub url: String,
    pub conditional: bool,
    pub at: Option<DateTime<Utc>>,
}

/// Instrumentation wrapper: remembers every request it forwards.
pub struct CountingTransport<'c, T> {
    inner: T,
    clock: Option<&'c dyn Clock>,
    calls: AtomicUsize,
    log: Mutex<Vec<SentRequest>>,
}

impl<'c, T: Transport> CountingTransport<'c, T> {
    pub fn new(inner: T) -> Self {
        Self { inner, clock: None, calls: AtomicUsize::new(0), log: Mutex::new(Vec::new()) }
    }

    pub fn with_clock(inner: T, clock: &'c dyn Clock) -> Self {
        Self { clock: Some(clock), ..Self::new(inner) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn unconditional_calls(&self) -> usize {
        self.log().iter().filter(|r| !r.conditional).count()
    }

    pub fn log(&self) -> Vec<SentRequest> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl<T: Transport> Transport for CountingTransport<'_, T> {
    fn send(&self, req: &Request) -> Result<Response, MinerError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.log.lock().unwrap_or_else(|e| e.into_inner()).push(SentRequest {
            url: req.url.clone(),
            conditional: req.is_conditional(),
            at: self.clock.map(|c| c.now()),
        });
        self.inner.send(req)
    }
}

impl<T: Transport + ?Sized> Transport for &T {
    fn send(&self, req: &Request) -> Result<Response, MinerError> {
        (**self).send(req)
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send(&self, req: &Request) -> Result<Response, MinerError> {
        (**self).send(req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_serves_recorded_and_304s_on_matching_etag() {
        let dir = tempfile::tempdir().unwrap();
        let w = FixtureWriter::new(dir.path()).unwrap();
        let url = "https://api.example/x";
        w.record(url, &Response { status: 200, headers: vec![("ETag".into(), "\"v1\"".into())], body: b"hello".to_vec() })
            .unwrap();
        let t = ReplayTransport::new(dir.path()).unwrap();
        let r = t.send(&Request::get(url)).unwrap();
        assert_eq!((r.status, r.body.as_slice()), (200, &b"hello"[..]));

        let mut cond = Request::get(url);
        cond.headers.push(("If-None-Match".into(), "\"v1\"".into()));
        let r = t.send(&cond).unwrap();
        assert_eq!(r.status, 304);
        assert!(r.body.is_empty());

        assert!(matches!(t.send(&Request::get("https://api.example/missing")), Err(MinerError::Transport(_))));
    }

    #[test]
    fn replay_rejects_tampered_body() {
        let dir = tempfile::tempdir().unwrap();
        let w = FixtureWriter::new(dir.path()).unwrap();
        let url = "https://api.example/y";
        w.record(url, &Response { status: 200, headers: vec![], body: b"abcdef".to_vec() }).unwrap();
        std::fs::write(body_path(dir.path(), url), b"abc").unwrap();
        let t = ReplayTransport::new(dir.path()).unwrap();
        assert!(t.send(&Request::get(url)).is_err());
    }
}
