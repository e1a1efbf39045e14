use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const REPORT_HEADER: [&str; 9] =
    ["task", "organization", "repository", "sha", "model", "rouge1_f1", "rouge2_f1", "rougeL_f1", "rougeW_f1"];

/// Label used in the `sha` column of mean rows.
pub const MEAN_LABEL: &str = "mean";
const ALL: &str = "*";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReportRow {
    pub task: String,
    pub organization: String,
    pub repository: String,
    pub sha: String,
    pub model: String,
    pub rouge1_f1: f64,
    pub rouge2_f1: f64,
    #[serde(rename = "rougeL_f1")]
    pub rouge_l_f1: f64,
    #[serde(rename = "rougeW_f1")]
    pub rouge_w_f1: f64,
}

impl EvalReportRow {
    fn key(&self) -> (&str, &str, &str, &str, &str) {
        (&self.task, &self.organization, &self.repository, &self.sha, &self.model)
    }

    fn scores(&self) -> [f64; 4] {
        [self.rouge1_f1, self.rouge2_f1, self.rouge_l_f1, self.rouge_w_f1]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: unexpected header {found:?}")]
    Header { path: String, found: Vec<String> },
}

/// One mean row per (task, model), labeled `*`, `*`, `mean`.
pub fn mean_rows(rows: &[EvalReportRow]) -> Vec<EvalReportRow> {
    let mut groups: BTreeMap<(&str, &str), (usize, [f64; 4])> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.sha != MEAN_LABEL) {
        let g = groups.entry((&r.task, &r.model)).or_insert((0, [0.0; 4]));
        g.0 += 1;
        for (acc, v) in g.1.iter_mut().zip(r.scores()) {
            *acc += v;
        }
    }
    groups
        .into_iter()
        .map(|((task, model), (n, sums))| {
            let m = sums.map(|s| s / n as f64);
            EvalReportRow {
                task: task.to_string(),
                organization: ALL.to_string(),
                repository: ALL.to_string(),
                sha: MEAN_LABEL.to_string(),
                model: model.to_string(),
                rouge1_f1: m[0],
                rouge2_f1: m[1],
                rouge_l_f1: m[2],
                rouge_w_f1: m[3],
            }
        })
        .collect()
}

/// Writes the CSV report, rows sorted by (task, organization, repository,
/// sha, model), scores with nine decimals.
pub fn aggregate_report(rows: &[EvalReportRow], out_path: &Path) -> Result<(), ReportError> {
    let path = out_path.display().to_string();
    let mut sorted: Vec<&EvalReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.key().cmp(&b.key()));
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |source| ReportError::Csv { path: path.clone(), source };
    w.write_record(REPORT_HEADER).map_err(csv_err)?;
    for r in sorted {
        let [a, b, c, d] = r.scores().map(|v| format!("{v:.9}"));
        w.write_record([r.task.as_str(), &r.organization, &r.repository, &r.sha, &r.model, &a, &b, &c, &d])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io { path: path.clone(), source: e.into_error() })?;
    crate::util::write_atomic(out_path, &bytes).map_err(|source| ReportError::Io { path, source })
}

pub fn read_report(path: &Path) -> Result<Vec<EvalReportRow>, ReportError> {
    let name = path.display().to_string();
    let csv_err = |source| ReportError::Csv { path: name.clone(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(ReportError::Header { path: name, found: header });
    }
    r.deserialize().collect::<Result<Vec<_>, _>>().map_err(csv_err)
}
