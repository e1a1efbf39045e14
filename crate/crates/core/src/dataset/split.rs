use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sample::{DatasetSample, Split};

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.75, 0.15, 0.10);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: (f64, f64, f64),
    pub assignments: BTreeMap<String, Split>,
    pub counts: SplitCounts,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SplitError {
    #[error("cannot split an empty dataset")]
    EmptyDataset,
    #[error("split ratios {0:?} must be non-negative and sum to 1")]
    BadRatios((f64, f64, f64)),
}

/// Per-split sizes by largest remainder. Ties in the fractional part go to
/// the larger ratio, then to the earlier split.
pub fn allocate(n: usize, ratios: (f64, f64, f64)) -> [usize; 3] {
    let r = [ratios.0, ratios.1, ratios.2];
    // snap products such as 0.29 * 100 = 28.999999999999996 to the integer
    let snap = |x: f64| if (x - x.round()).abs() < 1e-9 { x.round() } else { x };
    let exact: Vec<f64> = r.iter().map(|x| snap(x * n as f64)).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        // remainders equal up to rounding noise count as a tie
        let by_rem = if (fa - fb).abs() < 1e-9 { std::cmp::Ordering::Equal } else { fb.total_cmp(&fa) };
        by_rem.then(r[b].total_cmp(&r[a])).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    [counts[0], counts[1], counts[2]]
}

fn shuffle_key(seed: u64, id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    h.finalize().into()
}

/// Deterministic split keyed on sample ids. Duplicate ids are assigned once.
pub fn split_dataset(samples: &[DatasetSample], ratios: (f64, f64, f64), seed: u64) -> Result<SplitManifest, SplitError> {
    let (a, b, c) = ratios;
    if [a, b, c].iter().any(|x| !x.is_finite() || *x < 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(SplitError::BadRatios(ratios));
    }
    let mut ids: Vec<&str> = samples.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return Err(SplitError::EmptyDataset);
    }
    let mut keyed: Vec<([u8; 32], &str)> = ids.iter().map(|id| (shuffle_key(seed, id), *id)).collect();
    keyed.sort_unstable();
    let [n_train, n_val, _] = allocate(keyed.len(), ratios);
    let mut assignments = BTreeMap::new();
    let mut counts = SplitCounts::default();
    for (i, (_, id)) in keyed.into_iter().enumerate() {
        let split = if i < n_train {
            counts.train += 1;
            Split::Train
        } else if i < n_train + n_val {
            counts.validation += 1;
            Split::Validation
        } else {
            counts.test += 1;
            Split::Test
        };
        assignments.insert(id.to_string(), split);
    }
    Ok(SplitManifest { seed, ratios, assignments, counts })
}

/// Copies assignments onto the samples; unknown ids become `Unassigned`.
pub fn apply_split(samples: &mut [DatasetSample], manifest: &SplitManifest) {
    for s in samples {
        s.split = manifest.assignments.get(&s.id).copied().unwrap_or(Split::Unassigned);
    }
}
