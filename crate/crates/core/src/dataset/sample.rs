use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::{EvalTask, PromptTemplate};
use crate::hdl::{extract_fsm, lex_hdl, preprocess, strip_comments_and_indent, DesignPair, ExternalPreprocessor, IncludeResolver};

use super::message::{synthesize_commit_message, MessageHook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Repair,
    Localize,
    PreprocessPair,
    Linkage,
    FsmPair,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Repair, Task::Localize, Task::PreprocessPair, Task::Linkage, Task::FsmPair];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Repair => "repair",
            Task::Localize => "localize",
            Task::PreprocessPair => "preprocess_pair",
            Task::Linkage => "linkage",
            Task::FsmPair => "fsm_pair",
        }
    }

    pub fn eval_task(self) -> Option<EvalTask> {
        match self {
            Task::Repair => Some(EvalTask::Repair),
            Task::Localize => Some(EvalTask::Localize),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSample {
    pub id: String,
    pub task: Task,
    pub instruction: String,
    pub input: String,
    pub output: String,
    pub repo: String,
    pub sha: String,
    pub path: String,
    pub split: Split,
}

/// 128-bit content hash over the identifying fields, as 32 hex digits.
pub fn sample_id(task: Task, repo: &str, sha: &str, path: &str, input: &str, output: &str) -> String {
    let mut h = Sha256::new();
    for field in [task.as_str(), repo, sha, path, input, output] {
        h.update((field.len() as u64).to_le_bytes());
        h.update(field.as_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

impl DatasetSample {
    pub fn new(task: Task, instruction: String, input: String, output: String, repo: String, sha: String, path: String) -> Self {
        let id = sample_id(task, &repo, &sha, &path, &input, &output);
        Self { id, task, instruction, input, output, repo, sha, path, split: Split::Unassigned }
    }

    fn from_pair(pair: &DesignPair, task: Task, instruction: &str, input: String, output: String) -> Self {
        Self::new(task, instruction.to_string(), input, output, pair.repo.to_string(), pair.sha.clone(), pair.path.clone())
    }

    pub fn expected_id(&self) -> String {
        sample_id(self.task, &self.repo, &self.sha, &self.path, &self.input, &self.output)
    }
}

pub const PREPROCESS_INSTRUCTION: &str = "Preprocess the design: expand macros and resolve conditional compilation.";
pub const FSM_INSTRUCTION: &str = "List the finite-state machines in the design with their states and transition counts.";
pub const LINKAGE_INSTRUCTION: &str =
    "Write a commit message for the fix of this design, using the linked issue and pull request.";

/// Comment- and indent-free code as stored in samples.
pub fn sample_code(code: &str) -> String {
    strip_comments_and_indent(code)
}

/// One sample per pair whose stripped sides differ.
pub fn build_repair_samples(pairs: &[DesignPair], template: &PromptTemplate) -> Vec<DatasetSample> {
    pairs.iter().filter_map(|p| repair_sample(p, template)).collect()
}

pub fn repair_sample(pair: &DesignPair, template: &PromptTemplate) -> Option<DatasetSample> {
    let (input, output) = (sample_code(&pair.buggy_code), sample_code(&pair.fixed_code));
    if input.is_empty() || output.is_empty() || input == output {
        log::warn!("{}@{}: no code difference after stripping comments and indentation", pair.path, pair.sha);
        return None;
    }
    Some(DatasetSample::from_pair(pair, Task::Repair, &template.repair_prompt, input, output))
}

/// The removed lines in sample form: comments and indentation stripped,
/// lines that become empty dropped.
pub fn localization_golden(pair: &DesignPair) -> String {
    pair.removed_lines
        .iter()
        .map(|l| strip_comments_and_indent(l))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn build_localization_samples(pairs: &[DesignPair], template: &PromptTemplate) -> Vec<DatasetSample> {
    pairs.iter().filter_map(|p| localization_sample(p, template)).collect()
}

pub fn localization_sample(pair: &DesignPair, template: &PromptTemplate) -> Option<DatasetSample> {
    let output = localization_golden(pair);
    let input = sample_code(&pair.buggy_code);
    if output.is_empty() || input.is_empty() {
        return None;
    }
    Some(DatasetSample::from_pair(pair, Task::Localize, &template.localization_prompt, input, output))
}

/// Settings for the three enhancement families.
pub struct EnhanceConfig<'a> {
    pub defines: BTreeMap<String, String>,
    pub includes: &'a dyn IncludeResolver,
    pub external: Option<&'a ExternalPreprocessor>,
    pub hook: Option<&'a MessageHook>,
}

impl Default for EnhanceConfig<'_> {
    fn default() -> Self {
        Self { defines: BTreeMap::new(), includes: &crate::hdl::NoIncludes, external: None, hook: None }
    }
}

pub fn preprocess_sample(pair: &DesignPair, cfg: &EnhanceConfig<'_>) -> Option<DatasetSample> {
    let expanded = match preprocess(&pair.fixed_code, &cfg.defines, cfg.includes, cfg.external) {
        Ok(text) => text,
        Err(e) => {
            log::warn!("{}@{}: preprocessing skipped: {e}", pair.path, pair.sha);
            return None;
        }
    };
    let (input, output) = (sample_code(&pair.fixed_code), sample_code(&expanded));
    if input == output || input.is_empty() || output.is_empty() {
        return None;
    }
    Some(DatasetSample::from_pair(pair, Task::PreprocessPair, PREPROCESS_INSTRUCTION, input, output))
}

pub fn fsm_sample(pair: &DesignPair) -> Option<DatasetSample> {
    let input = sample_code(&pair.fixed_code);
    let summaries = extract_fsm(&lex_hdl(&input));
    if summaries.is_empty() {
        return None;
    }
    let output = serde_json::to_string(&summaries).expect("summaries serialize");
    Some(DatasetSample::from_pair(pair, Task::FsmPair, FSM_INSTRUCTION, input, output))
}

/// Buggy code followed by the issue and PR text that motivated the fix.
pub fn linkage_input(pair: &DesignPair) -> Option<String> {
    if pair.issue_text.is_none() && pair.pr_description.is_none() {
        return None;
    }
    let mut input = sample_code(&pair.buggy_code);
    if let Some(issue) = &pair.issue_text {
        input.push_str("\n\nIssue:\n");
        input.push_str(issue.trim());
    }
    if let Some(pr) = &pair.pr_description {
        input.push_str("\n\nPull request:\n");
        input.push_str(pr.trim());
    }
    Some(input)
}

pub fn linkage_sample(pair: &DesignPair, cfg: &EnhanceConfig<'_>) -> Option<DatasetSample> {
    let input = linkage_input(pair)?;
    let output = match cfg.hook {
        Some(hook) => match hook.generate(pair) {
            Ok(msg) => msg,
            Err(e) => {
                log::warn!("{}@{}: message hook failed: {e}", pair.path, pair.sha);
                return None;
            }
        },
        None => synthesize_commit_message(pair),
    };
    Some(DatasetSample::from_pair(pair, Task::Linkage, LINKAGE_INSTRUCTION, input, output))
}

/// Enhancement samples for one pair, in the order preprocess, fsm, linkage.
pub fn enhancement_samples(pair: &DesignPair, cfg: &EnhanceConfig<'_>) -> Vec<DatasetSample> {
    [preprocess_sample(pair, cfg), fsm_sample(pair), linkage_sample(pair, cfg)].into_iter().flatten().collect()
}

pub fn build_enhancement_samples(pairs: &[DesignPair], cfg: &EnhanceConfig<'_>) -> Vec<DatasetSample> {
    pairs.iter().flat_map(|p| enhancement_samples(p, cfg)).collect()
}
