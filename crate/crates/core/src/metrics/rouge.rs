use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tokenize::TokenSeq;

pub const DEFAULT_WEIGHT: f64 = 1.2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub const ZERO: RougeScore = RougeScore { precision: 0.0, recall: 0.0, f1: 0.0 };

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let p = precision.clamp(0.0, 1.0);
        let r = recall.clamp(0.0, 1.0);
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Self { precision: p, recall: r, f1 }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap.
///
/// # Panics
/// If `n == 0`.
pub fn rouge_n(candidate: &TokenSeq, reference: &TokenSeq, n: usize) -> RougeScore {
    assert!(n >= 1, "n-gram order must be positive");
    let (c, r) = (candidate.tokens(), reference.tokens());
    if c.len() < n || r.len() < n {
        return RougeScore::ZERO;
    }
    let cc = ngram_counts(c, n);
    let rc = ngram_counts(r, n);
    let matched: usize = cc.iter().map(|(g, &k)| k.min(rc.get(g).copied().unwrap_or(0))).sum();
    let total_c = (c.len() + 1 - n) as f64;
    let total_r = (r.len() + 1 - n) as f64;
    RougeScore::from_pr(matched as f64 / total_c, matched as f64 / total_r)
}

/// Longest common subsequence length, O(|a|·|b|) time and O(|b|) space.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &TokenSeq, reference: &TokenSeq) -> RougeScore {
    let (c, r) = (candidate.tokens(), reference.tokens());
    if c.is_empty() || r.is_empty() {
        return RougeScore::ZERO;
    }
    let l = lcs_len(c, r) as f64;
    RougeScore::from_pr(l / c.len() as f64, l / r.len() as f64)
}

/// Weighted LCS score `c(m, n)` with weighting function `k^alpha`.
pub fn wlcs(a: &[String], b: &[String], alpha: f64) -> f64 {
    let f = |k: f64| k.powf(alpha);
    let mut c_prev = vec![0.0f64; b.len() + 1];
    let mut w_prev = vec![0usize; b.len() + 1];
    let mut c_cur = vec![0.0f64; b.len() + 1];
    let mut w_cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            if x == y {
                let k = w_prev[j];
                c_cur[j + 1] = c_prev[j] + f((k + 1) as f64) - f(k as f64);
                w_cur[j + 1] = k + 1;
            } else {
                c_cur[j + 1] = c_prev[j + 1].max(c_cur[j]);
                w_cur[j + 1] = 0;
            }
        }
        std::mem::swap(&mut c_prev, &mut c_cur);
        std::mem::swap(&mut w_prev, &mut w_cur);
    }
    c_prev[b.len()]
}

/// Weighted LCS, favouring consecutive matches.
///
/// # Panics
/// If `alpha <= 1`.
pub fn rouge_w(candidate: &TokenSeq, reference: &TokenSeq, alpha: f64) -> RougeScore {
    assert!(alpha > 1.0, "weight factor must exceed 1");
    let (c, r) = (candidate.tokens(), reference.tokens());
    if c.is_empty() || r.is_empty() {
        return RougeScore::ZERO;
    }
    let score = wlcs(c, r, alpha);
    let inv = 1.0 / alpha;
    let p = (score / (c.len() as f64).powf(alpha)).powf(inv);
    let rc = (score / (r.len() as f64).powf(alpha)).powf(inv);
    RougeScore::from_pr(p, rc)
}

/// The four scores reported per case.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeSuite {
    pub rouge_1: RougeScore,
    pub rouge_2: RougeScore,
    pub rouge_l: RougeScore,
    pub rouge_w: RougeScore,
}

impl RougeSuite {
    pub fn score(candidate: &TokenSeq, reference: &TokenSeq) -> Self {
        Self {
            rouge_1: rouge_n(candidate, reference, 1),
            rouge_2: rouge_n(candidate, reference, 2),
            rouge_l: rouge_l(candidate, reference),
            rouge_w: rouge_w(candidate, reference, DEFAULT_WEIGHT),
        }
    }

    pub fn f1s(&self) -> [f64; 4] {
        [self.rouge_1.f1, self.rouge_2.f1, self.rouge_l.f1, self.rouge_w.f1]
    }
}
