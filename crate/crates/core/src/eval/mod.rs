//! Evaluation: cases from the validation split, model adapters, ROUGE
//! scoring and the CSV report.

mod adapter;
mod prompt;
mod report;
mod score;

pub use adapter::{load_replay, run_model, AdapterError, AdapterKind, CaseOutcome, ModelAdapterSpec, RunLog, RunLogEntry};
pub use prompt::{EvalTask, PromptTemplate, TemplateError, DEFAULT_LAYOUT, LOCALIZATION_PROMPT, REPAIR_PROMPT};
pub use report::{aggregate_report, mean_rows, read_report, EvalReportRow, ReportError, MEAN_LABEL, REPORT_HEADER};
pub use score::{build_cases, score_case, CaseError, EvalCase};
