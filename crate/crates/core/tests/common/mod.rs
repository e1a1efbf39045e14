//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

/// (precision, recall, f1) with the zero conventions applied.
pub type Prf = (f64, f64, f64);

pub fn prf(p: f64, r: f64) -> Prf {
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Multiset intersection by repeated removal.
pub fn oracle_rouge_n(cand: &[String], reference: &[String], n: usize) -> Prf {
    let grams = |s: &[String]| -> Vec<Vec<String>> {
        if s.len() < n {
            return vec![];
        }
        (0..=s.len() - n).map(|i| s[i..i + n].to_vec()).collect()
    };
    let cg = grams(cand);
    let mut rg = grams(reference);
    if cg.is_empty() || rg.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let (nc, nr) = (cg.len() as f64, rg.len() as f64);
    let mut matched = 0usize;
    for g in &cg {
        if let Some(pos) = rg.iter().position(|x| x == g) {
            rg.swap_remove(pos);
            matched += 1;
        }
    }
    prf(matched as f64 / nc, matched as f64 / nr)
}

fn lcs_rec(a: &[String], b: &[String], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if i == 0 || j == 0 {
        return 0;
    }
    if let Some(&v) = memo.get(&(i, j)) {
        return v;
    }
    let v = if a[i - 1] == b[j - 1] {
        lcs_rec(a, b, i - 1, j - 1, memo) + 1
    } else {
        lcs_rec(a, b, i - 1, j, memo).max(lcs_rec(a, b, i, j - 1, memo))
    };
    memo.insert((i, j), v);
    v
}

pub fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    lcs_rec(a, b, a.len(), b.len(), &mut HashMap::new())
}

pub fn oracle_rouge_l(cand: &[String], reference: &[String]) -> Prf {
    if cand.is_empty() || reference.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let l = oracle_lcs(cand, reference) as f64;
    prf(l / cand.len() as f64, l / reference.len() as f64)
}

/// Returns (c, w) at cell (i, j) of the weighted-LCS table.
fn wlcs_rec(
    a: &[String],
    b: &[String],
    i: usize,
    j: usize,
    alpha: f64,
    memo: &mut HashMap<(usize, usize), (f64, usize)>,
) -> (f64, usize) {
    if i == 0 || j == 0 {
        return (0.0, 0);
    }
    if let Some(&v) = memo.get(&(i, j)) {
        return v;
    }
    let v = if a[i - 1] == b[j - 1] {
        let (c, k) = wlcs_rec(a, b, i - 1, j - 1, alpha, memo);
        let f = |x: usize| (x as f64).powf(alpha);
        (c + f(k + 1) - f(k), k + 1)
    } else {
        let up = wlcs_rec(a, b, i - 1, j, alpha, memo).0;
        let left = wlcs_rec(a, b, i, j - 1, alpha, memo).0;
        (up.max(left), 0)
    };
    memo.insert((i, j), v);
    v
}

pub fn oracle_rouge_w(cand: &[String], reference: &[String], alpha: f64) -> Prf {
    if cand.is_empty() || reference.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let c = wlcs_rec(cand, reference, cand.len(), reference.len(), alpha, &mut HashMap::new()).0;
    let p = (c / (cand.len() as f64).powf(alpha)).powf(1.0 / alpha).min(1.0);
    let r = (c / (reference.len() as f64).powf(alpha)).powf(1.0 / alpha).min(1.0);
    prf(p, r)
}

/// Brute-force LCS over all subsequences of `a` (exponential; |a| ≤ 12).
pub fn exhaustive_lcs(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 12);
    let is_subseq = |sub: &[&String]| {
        let mut it = b.iter();
        sub.iter().all(|x| it.any(|y| y == *x))
    };
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if sub.len() > best && is_subseq(&sub) {
            best = sub.len();
        }
    }
    best
}
