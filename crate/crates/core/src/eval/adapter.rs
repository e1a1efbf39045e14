use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::score::EvalCase;
use crate::par;
use crate::util::{run_with_timeout, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    /// Newline-delimited `{case_id, response}` records.
    Replay,
    /// Executable plus whitespace-separated arguments; prompt on stdin.
    Command,
    /// Endpoint receiving `{case_id, prompt}` and answering `{response}`.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAdapterSpec {
    pub kind: AdapterKind,
    pub location: String,
    pub timeout_secs: f64,
    pub model_name: String,
}

#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("model adapter unavailable: {0}")]
    Unavailable(String),
    #[error("invalid adapter spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CaseOutcome {
    Ok,
    Missing,
    Timeout,
    NonzeroExit { detail: String },
    Failed { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub case_id: String,
    #[serde(flatten)]
    pub outcome: CaseOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLog {
    pub entries: Vec<RunLogEntry>,
}

impl RunLog {
    pub fn failures(&self) -> impl Iterator<Item = &RunLogEntry> {
        self.entries.iter().filter(|e| e.outcome != CaseOutcome::Ok)
    }
}

#[derive(Deserialize)]
struct ReplayRecord {
    case_id: String,
    response: String,
}

#[derive(Serialize)]
struct HttpRequest<'a> {
    case_id: &'a str,
    prompt: &'a str,
}

#[derive(Deserialize)]
struct HttpResponse {
    response: String,
}

impl ModelAdapterSpec {
    pub fn validate(&self) -> Result<(), AdapterError> {
        if self.location.trim().is_empty() {
            return Err(AdapterError::InvalidSpec("location is empty".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(AdapterError::InvalidSpec(format!("timeout must be positive, got {}", self.timeout_secs)));
        }
        Ok(())
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

/// Loads a replay file into a `case_id -> response` map; later records win.
pub fn load_replay(path: &Path) -> Result<BTreeMap<String, String>, AdapterError> {
    let file = std::fs::File::open(path).map_err(|e| AdapterError::Unavailable(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AdapterError::Unavailable(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ReplayRecord = serde_json::from_str(&line)
            .map_err(|e| AdapterError::Unavailable(format!("{}:{}: {e}", path.display(), i + 1)))?;
        map.insert(rec.case_id, rec.response);
    }
    Ok(map)
}

fn find_executable(program: &str) -> bool {
    let p = Path::new(program);
    if program.contains('/') {
        return p.is_file();
    }
    std::env::var_os("PATH").is_some_and(|paths| std::env::split_paths(&paths).any(|d| d.join(program).is_file()))
}

/// Sends every case to the adapter. Per-case failures are logged and the
/// case is left out of the response map; only an unusable adapter is an
/// error. `parallelism` bounds concurrent command/http calls.
pub fn run_model(
    cases: &[EvalCase],
    adapter: &ModelAdapterSpec,
    parallelism: usize,
) -> Result<(BTreeMap<String, String>, RunLog), AdapterError> {
    adapter.validate()?;
    let results: Vec<Result<String, CaseOutcome>> = match adapter.kind {
        AdapterKind::Replay => {
            let replay = load_replay(Path::new(&adapter.location))?;
            cases.iter().map(|c| replay.get(&c.case_id).cloned().ok_or(CaseOutcome::Missing)).collect()
        }
        AdapterKind::Command => {
            let mut words = adapter.location.split_whitespace().map(str::to_string);
            let program = words.next().expect("validated non-empty");
            let args: Vec<String> = words.collect();
            if !find_executable(&program) {
                return Err(AdapterError::Unavailable(format!("executable {program:?} not found")));
            }
            par::map_bounded(parallelism, cases, |c| {
                match run_with_timeout(&program, &args, c.prompt_text.as_bytes(), adapter.timeout()) {
                    Ok(out) => String::from_utf8(out).map_err(|_| CaseOutcome::Failed { detail: "output is not UTF-8".into() }),
                    Err(RunError::Timeout { .. }) => Err(CaseOutcome::Timeout),
                    Err(e @ RunError::NonzeroExit { .. }) => Err(CaseOutcome::NonzeroExit { detail: e.to_string() }),
                    Err(e) => Err(CaseOutcome::Failed { detail: e.to_string() }),
                }
            })
        }
        AdapterKind::Http => {
            if !(adapter.location.starts_with("http://") || adapter.location.starts_with("https://")) {
                return Err(AdapterError::Unavailable(format!("{} is not an http(s) URL", adapter.location)));
            }
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(adapter.timeout()))
                .http_status_as_error(false)
                .build()
                .into();
            par::map_bounded(parallelism, cases, |c| http_call(&agent, &adapter.location, c))
        }
    };

    let mut responses = BTreeMap::new();
    let mut log = RunLog::default();
    for (case, result) in cases.iter().zip(results) {
        let outcome = match result {
            Ok(resp) => {
                responses.insert(case.case_id.clone(), resp);
                CaseOutcome::Ok
            }
            Err(outcome) => {
                log::warn!("case {}: {:?}", case.case_id, outcome);
                outcome
            }
        };
        log.entries.push(RunLogEntry { case_id: case.case_id.clone(), outcome });
    }
    Ok((responses, log))
}

fn http_call(agent: &ureq::Agent, url: &str, case: &EvalCase) -> Result<String, CaseOutcome> {
    let failed = |detail: String| CaseOutcome::Failed { detail };
    let resp = agent
        .post(url)
        .send_json(HttpRequest { case_id: &case.case_id, prompt: &case.prompt_text })
        .map_err(|e| match e {
            ureq::Error::Timeout(_) => CaseOutcome::Timeout,
            other => failed(other.to_string()),
        })?;
    if resp.status() != 200 {
        return Err(failed(format!("HTTP {}", resp.status())));
    }
    let body: HttpResponse = resp.into_body().read_json().map_err(|e| failed(e.to_string()))?;
    Ok(body.response)
}
