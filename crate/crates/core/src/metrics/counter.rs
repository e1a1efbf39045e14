use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bpe::{Bpe, BpeError, BpeSpec};
use crate::util::sha256_hex;

/// How to count tokens for cleaning and manifest totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CounterSpec {
    /// Byte-pair encoding from vocabulary and merges files.
    Bpe { vocab: PathBuf, merges: PathBuf, byte_level: bool },
    /// `ceil(1.3 × whitespace-separated words)`.
    #[default]
    WordHeuristic,
}

#[derive(Debug, thiserror::Error)]
#[error("tokenizer unavailable: {0}")]
pub struct TokenizerUnavailable(#[from] pub BpeError);

#[derive(Debug, Clone)]
pub enum TokenCounter {
    Bpe { bpe: Arc<Bpe>, identity: String },
    WordHeuristic,
}

/// `ceil(words * 1.3)` in integer arithmetic.
pub fn word_heuristic_count(text: &str) -> usize {
    let words = text.split_whitespace().count();
    (words * 13).div_ceil(10)
}

impl CounterSpec {
    pub fn resolve(&self) -> Result<TokenCounter, TokenizerUnavailable> {
        match self {
            CounterSpec::WordHeuristic => Ok(TokenCounter::WordHeuristic),
            CounterSpec::Bpe { vocab, merges, byte_level } => {
                let spec = BpeSpec::load(vocab, merges, *byte_level)?;
                Ok(TokenCounter::from_spec(&spec)?)
            }
        }
    }
}

impl TokenCounter {
    pub fn from_spec(spec: &BpeSpec) -> Result<Self, BpeError> {
        let bpe = Bpe::new(spec)?;
        let mut sorted_vocab: Vec<(&String, &u32)> = spec.vocabulary.iter().collect();
        sorted_vocab.sort();
        let fingerprint = serde_json::to_vec(&(&sorted_vocab, &spec.merges, spec.byte_level)).expect("serializable");
        let identity = format!("bpe:{}:{}", spec.merges.len(), &sha256_hex(&fingerprint)[..16]);
        Ok(TokenCounter::Bpe { bpe: Arc::new(bpe), identity })
    }

    pub fn count(&self, text: &str) -> usize {
        match self {
            TokenCounter::Bpe { bpe, .. } => bpe.count(text),
            TokenCounter::WordHeuristic => word_heuristic_count(text),
        }
    }

    /// Recorded in manifests so token totals can be interpreted later.
    pub fn identity(&self) -> String {
        match self {
            TokenCounter::Bpe { identity, .. } => identity.clone(),
            TokenCounter::WordHeuristic => "word_heuristic:ceil(1.3*words)".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heuristic_rounds_up() {
        assert_eq!(word_heuristic_count(""), 0);
        assert_eq!(word_heuristic_count("a"), 2);
        assert_eq!(word_heuristic_count("a b c d e f g h i j"), 13);
        assert_eq!(word_heuristic_count(&"w ".repeat(11)), 15);
        assert_eq!(word_heuristic_count(&"w ".repeat(10)), 13);
    }

    #[test]
    fn missing_files_are_unavailable() {
        let spec = CounterSpec::Bpe { vocab: "/nonexistent/v".into(), merges: "/nonexistent/m".into(), byte_level: true };
        assert!(spec.resolve().is_err());
    }

    #[test]
    fn identities_differ() {
        let a = TokenCounter::from_spec(&BpeSpec { byte_level: true, ..Default::default() }).unwrap();
        let b = TokenCounter::from_spec(&BpeSpec {
            byte_level: true,
            merges: vec![("a".into(), "b".into())],
            ..Default::default()
        })
        .unwrap();
        assert_ne!(a.identity(), b.identity());
        assert_eq!(a.count("ab"), 2);
        assert_eq!(b.count("ab"), 1);
    }
}
