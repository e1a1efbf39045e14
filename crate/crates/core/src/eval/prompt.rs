use serde::{Deserialize, Serialize};

pub const LOCALIZATION_PROMPT: &str = "Could you identify the possible bug inside the design?";
pub const REPAIR_PROMPT: &str = "Could you fix the possible bug inside the design?";
pub const DEFAULT_LAYOUT: &str = "{prompt}\n\n{design}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTask {
    Localize,
    Repair,
}

impl EvalTask {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalTask::Localize => "localize",
            EvalTask::Repair => "repair",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub localization_prompt: String,
    pub repair_prompt: String,
    /// Must contain `{prompt}` and `{design}` exactly once each.
    pub layout: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            localization_prompt: LOCALIZATION_PROMPT.to_string(),
            repair_prompt: REPAIR_PROMPT.to_string(),
            layout: DEFAULT_LAYOUT.to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid prompt template: {0}")]
pub struct TemplateError(pub String);

impl PromptTemplate {
    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.localization_prompt.trim().is_empty() || self.repair_prompt.trim().is_empty() {
            return Err(TemplateError("prompts must be non-empty".into()));
        }
        for slot in ["{prompt}", "{design}"] {
            let n = self.layout.matches(slot).count();
            if n != 1 {
                return Err(TemplateError(format!("layout must contain {slot} exactly once (found {n})")));
            }
        }
        Ok(())
    }

    pub fn prompt_for(&self, task: EvalTask) -> &str {
        match task {
            EvalTask::Localize => &self.localization_prompt,
            EvalTask::Repair => &self.repair_prompt,
        }
    }

    /// Fills the layout. Slot text inside the substituted values is left alone.
    pub fn render(&self, task: EvalTask, design: &str) -> String {
        let (before_p, after_p) = self.layout.split_once("{prompt}").unwrap_or((&self.layout, ""));
        let fill = |s: &str| s.replacen("{design}", design, 1);
        // design may sit on either side of the prompt slot
        if before_p.contains("{design}") {
            format!("{}{}{}", fill(before_p), self.prompt_for(task), after_p)
        } else {
            format!("{}{}{}", before_p, self.prompt_for(task), fill(after_p))
        }
    }
}
