use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::clean::CleanConfig;
use super::sample::{DatasetSample, Task};
use super::split::SplitManifest;
use crate::hdl::FilterConfig;

/// How many pairs survived each cleaning stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFunnel {
    pub extracted: usize,
    pub after_dedup: usize,
    pub after_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub created_at: DateTime<Utc>,
    pub repos: Vec<String>,
    pub filter_config_digest: String,
    pub filter_config: FilterConfig,
    pub clean_config: CleanConfig,
    pub token_counter: String,
    pub pair_funnel: PairFunnel,
    pub pair_count: usize,
    pub sample_count: usize,
    pub task_counts: BTreeMap<Task, usize>,
    pub token_total: u64,
    pub split: Option<SplitManifest>,
    /// Effective pipeline configuration, `key = value` form.
    #[serde(default)]
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordsError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Schema { path: PathBuf, line: usize, msg: String },
}

/// `dataset.jsonl` -> `dataset.manifest.json`.
pub fn manifest_path(records: &Path) -> PathBuf {
    records.with_extension("manifest.json")
}

fn io_err(p: &Path) -> impl FnOnce(std::io::Error) -> RecordsError + '_ {
    move |source| RecordsError::Io { path: p.to_path_buf(), source }
}

pub fn export_records(samples: &[DatasetSample], manifest: &DatasetManifest, path: &Path) -> Result<(), RecordsError> {
    let mut body = Vec::new();
    {
        let mut w = BufWriter::new(&mut body);
        for s in samples {
            serde_json::to_writer(&mut w, s).expect("sample serializes");
            w.write_all(b"\n").map_err(io_err(path))?;
        }
        w.flush().map_err(io_err(path))?;
    }
    crate::util::write_atomic(path, &body).map_err(io_err(path))?;
    let mpath = manifest_path(path);
    let mut json = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    json.push(b'\n');
    crate::util::write_atomic(&mpath, &json).map_err(io_err(&mpath))
}

pub fn read_samples(path: &Path) -> Result<Vec<DatasetSample>, RecordsError> {
    let io = |source| RecordsError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |msg: String| RecordsError::Schema { path: path.to_path_buf(), line: i + 1, msg };
        let sample: DatasetSample = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if sample.id != sample.expected_id() {
            return Err(schema(format!("id {} does not match record content", sample.id)));
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn import_records(path: &Path) -> Result<(Vec<DatasetSample>, DatasetManifest), RecordsError> {
    let samples = read_samples(path)?;
    let mpath = manifest_path(path);
    let text = std::fs::read_to_string(&mpath).map_err(|source| RecordsError::Io { path: mpath.clone(), source })?;
    let manifest = serde_json::from_str(&text)
        .map_err(|e| RecordsError::Schema { path: mpath.clone(), line: e.line(), msg: e.to_string() })?;
    Ok((samples, manifest))
}
