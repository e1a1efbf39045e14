use std::time::Duration;

use crate::hdl::diff::line_set_changes;
use crate::hdl::{lex_hdl, DesignPair, TokenKind};
use crate::util::run_with_timeout;

/// Replaces the template with an external program. The program receives the
/// pair as one JSON object on stdin and prints the message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageHook {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

#[derive(Debug, thiserror::Error)]
#[error("commit message hook failed: {0}")]
pub struct HookError(pub String);

impl MessageHook {
    pub fn generate(&self, pair: &DesignPair) -> Result<String, HookError> {
        let input = serde_json::to_vec(pair).map_err(|e| HookError(e.to_string()))?;
        let out = run_with_timeout(&self.program, &self.args, &input, self.timeout).map_err(|e| HookError(e.to_string()))?;
        let text = String::from_utf8(out).map_err(|_| HookError("output is not UTF-8".into()))?;
        let text = text.trim().to_string();
        if text.is_empty() {
            return Err(HookError("empty output".into()));
        }
        Ok(text)
    }
}

fn identifiers<'a>(lines: impl Iterator<Item = &'a String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in lines {
        for tok in lex_hdl(line) {
            if tok.kind == TokenKind::Identifier && !out.contains(&tok.lexeme) {
                out.push(tok.lexeme);
            }
        }
    }
    out
}

/// Template commit message built from the original message and the diff.
pub fn synthesize_commit_message(pair: &DesignPair) -> String {
    let added: Vec<String> = line_set_changes(&pair.buggy_code, &pair.fixed_code).added;
    let removed = &pair.removed_lines;
    let plural = |n: usize| if n == 1 { "line" } else { "lines" };
    let summary = format!(
        "Fix {}: {} {} removed, {} {} added",
        pair.path,
        removed.len(),
        plural(removed.len()),
        added.len(),
        plural(added.len())
    );

    let mut msg = String::new();
    let original = pair.commit_message.trim();
    if !original.is_empty() {
        msg.push_str(original);
        msg.push_str("\n\n");
    }
    msg.push_str(&summary);
    if !removed.is_empty() {
        msg.push_str("\n\nRemoved:");
        for l in removed {
            msg.push_str("\n- ");
            msg.push_str(l.trim());
        }
    }
    if !added.is_empty() {
        msg.push_str("\n\nAdded:");
        for l in &added {
            msg.push_str("\n+ ");
            msg.push_str(l.trim());
        }
    }
    let idents = identifiers(removed.iter().chain(added.iter()));
    if !idents.is_empty() {
        msg.push_str("\n\nChanged identifiers: ");
        msg.push_str(&idents.join(", "));
    }
    msg
}
