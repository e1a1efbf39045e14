use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::hdl::{normalize_for_dedup, DesignPair};
use crate::metrics::{CounterSpec, TokenCounter, TokenizerUnavailable};
use crate::par::{self, Execution};
use crate::util::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub token_counter: CounterSpec,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self { min_tokens: 15, max_tokens: 2048, token_counter: CounterSpec::WordHeuristic }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid clean config: {0}")]
pub struct CleanConfigError(pub String);

impl CleanConfig {
    pub fn validate(&self) -> Result<(), CleanConfigError> {
        if self.min_tokens == 0 {
            return Err(CleanConfigError("min_tokens must be positive".into()));
        }
        if self.min_tokens >= self.max_tokens {
            return Err(CleanConfigError(format!(
                "min_tokens ({}) must be below max_tokens ({})",
                self.min_tokens, self.max_tokens
            )));
        }
        Ok(())
    }
}

/// Equivalence key for duplicate detection.
pub fn dedup_key(pair: &DesignPair) -> String {
    let mut buf = normalize_for_dedup(&pair.buggy_code);
    buf.push('\u{0}');
    buf.push_str(&normalize_for_dedup(&pair.fixed_code));
    sha256_hex(buf.as_bytes())
}

/// Keeps the first pair of each normalized (buggy, fixed) class.
pub fn dedup_pairs(pairs: &[DesignPair]) -> Vec<DesignPair> {
    dedup_pairs_with(pairs, Execution::Sequential)
}

/// [`dedup_pairs`] with the key computation spread over threads. The
/// survivor scan itself stays sequential so order is unaffected.
pub fn dedup_pairs_with(pairs: &[DesignPair], exec: Execution) -> Vec<DesignPair> {
    let keys = par::map(exec, pairs, dedup_key);
    let mut seen = HashSet::with_capacity(pairs.len());
    pairs.iter().zip(keys).filter(|(_, k)| seen.insert(k.clone())).map(|(p, _)| p.clone()).collect()
}

/// Token count of one side of a pair, measured on its normalized form so
/// that the count is a function of the dedup class.
pub fn code_tokens(code: &str, counter: &TokenCounter) -> usize {
    counter.count(&normalize_for_dedup(code))
}

pub fn within_limits(pair: &DesignPair, counter: &TokenCounter, cfg: &CleanConfig) -> bool {
    let ok = |code: &str| (cfg.min_tokens..=cfg.max_tokens).contains(&code_tokens(code, counter));
    ok(&pair.buggy_code) && ok(&pair.fixed_code)
}

pub fn length_filter(pairs: &[DesignPair], cfg: &CleanConfig) -> Result<Vec<DesignPair>, TokenizerUnavailable> {
    let counter = cfg.token_counter.resolve()?;
    Ok(length_filter_with(pairs, &counter, cfg, Execution::default()))
}

pub fn length_filter_with(
    pairs: &[DesignPair],
    counter: &TokenCounter,
    cfg: &CleanConfig,
    exec: Execution,
) -> Vec<DesignPair> {
    let keep = par::map(exec, pairs, |p| within_limits(p, counter, cfg));
    pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p.clone()).collect()
}
