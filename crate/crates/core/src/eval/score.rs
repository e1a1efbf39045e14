use serde::{Deserialize, Serialize};

use super::prompt::{EvalTask, PromptTemplate};
use crate::dataset::{DatasetSample, Split};
use crate::metrics::{word_tokenize, RougeSuite, WordTokenizerConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub case_id: String,
    pub task: EvalTask,
    pub prompt_text: String,
    pub golden: String,
    pub repo: String,
    pub sha: String,
    pub path: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CaseError {
    #[error("sample {id} is in the {split} split, expected validation")]
    NotValidation { id: String, split: &'static str },
    #[error("sample {id} has task {task}, which is not evaluated")]
    UnsupportedTask { id: String, task: &'static str },
    #[error("sample {id} has an empty golden output")]
    EmptyGolden { id: String },
}

pub fn build_cases(samples: &[DatasetSample], template: &PromptTemplate) -> Result<Vec<EvalCase>, CaseError> {
    samples
        .iter()
        .map(|s| {
            if s.split != Split::Validation {
                return Err(CaseError::NotValidation { id: s.id.clone(), split: s.split.as_str() });
            }
            let task = s.task.eval_task().ok_or(CaseError::UnsupportedTask { id: s.id.clone(), task: s.task.as_str() })?;
            if s.output.is_empty() {
                return Err(CaseError::EmptyGolden { id: s.id.clone() });
            }
            Ok(EvalCase {
                case_id: s.id.clone(),
                task,
                prompt_text: template.render(task, &s.input),
                golden: s.output.clone(),
                repo: s.repo.clone(),
                sha: s.sha.clone(),
                path: s.path.clone(),
            })
        })
        .collect()
}

/// Response is the candidate, golden the reference.
pub fn score_case(response: &str, case: &EvalCase, tok_cfg: &WordTokenizerConfig) -> RougeSuite {
    RougeSuite::score(&word_tokenize(response, tok_cfg), &word_tokenize(&case.golden, tok_cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Task;
    use crate::metrics::SplitMode;

    fn sample(task: Task, split: Split) -> DatasetSample {
        let mut s = DatasetSample::new(task, "i".into(), "ctx = 0;".into(), "ctx = 0;".into(), "o/r".into(), "s".into(), "p".into());
        s.split = split;
        s
    }

    #[test]
    fn cases_from_validation_samples() {
        let t = PromptTemplate::default();
        let cases = build_cases(&[sample(Task::Localize, Split::Validation)], &t).unwrap();
        assert_eq!(cases[0].golden, "ctx = 0;");
        assert!(cases[0].prompt_text.contains("Could you identify the possible bug inside the design?"));
        let err = build_cases(&[sample(Task::Repair, Split::Train)], &t).unwrap_err();
        assert!(err.to_string().contains(&sample(Task::Repair, Split::Train).id));
        assert!(build_cases(&[sample(Task::Linkage, Split::Validation)], &t).is_err());
    }

    #[test]
    fn scores() {
        let mut c = build_cases(&[sample(Task::Repair, Split::Validation)], &PromptTemplate::default()).unwrap().remove(0);
        let cfg = WordTokenizerConfig::default();
        assert_eq!(score_case("ctx = 0;", &c, &cfg).f1s(), [1.0; 4]);
        assert_eq!(score_case("foo bar", &c, &cfg).f1s(), [0.0; 4]);
        c.golden = "the cat ate".into();
        let ws = WordTokenizerConfig { split_mode: SplitMode::Whitespace, ..Default::default() };
        let s = score_case("the cat sat", &c, &ws);
        assert!((s.rouge_1.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.rouge_2.f1 - 0.5).abs() < 1e-12);
        assert!((s.rouge_l.f1 - 2.0 / 3.0).abs() < 1e-12);
    }
}
