use serde::{Deserialize, Serialize};

use crate::hdl::{lex_hdl, strip_comments_and_indent, TokenKind};

/// An ordered token sequence. Empty tokens are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { tokens: tokens.into_iter().map(Into::into).filter(|t: &String| !t.is_empty()).collect() }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self::new(iter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    #[default]
    CodeAware,
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordTokenizerConfig {
    pub strip_comments: bool,
    pub lowercase: bool,
    pub split_mode: SplitMode,
}

impl Default for WordTokenizerConfig {
    fn default() -> Self {
        Self { strip_comments: true, lowercase: false, split_mode: SplitMode::CodeAware }
    }
}

impl WordTokenizerConfig {
    /// Short stable label, e.g. `code_aware+strip_comments`.
    pub fn label(&self) -> String {
        let mut s = match self.split_mode {
            SplitMode::CodeAware => "code_aware".to_string(),
            SplitMode::Whitespace => "whitespace".to_string(),
        };
        if self.strip_comments {
            s.push_str("+strip_comments");
        }
        if self.lowercase {
            s.push_str("+lowercase");
        }
        s
    }
}

/// Splits text into word tokens for ROUGE scoring.
///
/// Code-aware mode uses the HDL lexer and keeps every non-trivia token; when
/// comments are kept they are split on whitespace. Whitespace mode splits on
/// whitespace runs, after comment stripping if requested.
pub fn word_tokenize(text: &str, cfg: &WordTokenizerConfig) -> TokenSeq {
    let mut tokens: Vec<String> = match cfg.split_mode {
        SplitMode::CodeAware => {
            let mut out = Vec::new();
            for tok in lex_hdl(text) {
                match tok.kind {
                    TokenKind::Whitespace => {}
                    TokenKind::Comment if cfg.strip_comments => {}
                    TokenKind::Comment => out.extend(tok.lexeme.split_whitespace().map(str::to_string)),
                    _ => out.push(tok.lexeme),
                }
            }
            out
        }
        SplitMode::Whitespace => {
            let body = if cfg.strip_comments { strip_comments_and_indent(text) } else { text.to_string() };
            body.split_whitespace().map(str::to_string).collect()
        }
    };
    if cfg.lowercase {
        for t in &mut tokens {
            *t = t.to_lowercase();
        }
    }
    TokenSeq::new(tokens)
}
