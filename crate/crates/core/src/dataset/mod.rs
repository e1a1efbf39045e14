//! From design pairs to a split, exportable dataset.
//!
//! Cleaning ([`dedup_pairs`], [`length_filter`]) works on pairs; the sample
//! builders then emit repair and localization samples plus the three
//! enhancement families, and [`split_dataset`] assigns each sample id to
//! train, validation or test.

mod clean;
mod message;
mod records;
mod sample;
mod split;

pub use clean::{
    code_tokens, dedup_key, dedup_pairs, dedup_pairs_with, length_filter, length_filter_with, within_limits, CleanConfig,
    CleanConfigError,
};
pub use message::{synthesize_commit_message, HookError, MessageHook};
pub use records::{
    export_records, import_records, manifest_path, read_samples, DatasetManifest, PairFunnel, RecordsError,
};
pub use sample::{
    build_enhancement_samples, build_localization_samples, build_repair_samples, enhancement_samples, fsm_sample,
    linkage_input, linkage_sample, localization_golden, localization_sample, preprocess_sample, repair_sample,
    sample_code, sample_id, DatasetSample, EnhanceConfig, Split, Task, FSM_INSTRUCTION, LINKAGE_INSTRUCTION,
    PREPROCESS_INSTRUCTION,
};
pub use split::{allocate, apply_split, split_dataset, SplitCounts, SplitError, SplitManifest, DEFAULT_RATIOS};
