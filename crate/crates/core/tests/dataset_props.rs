use std::collections::{HashMap, HashSet};

use chrono::TimeZone;
use hdlbugs_core::dataset::{
    allocate, apply_split, dedup_pairs, export_records, import_records, length_filter_with, localization_sample,
    repair_sample, split_dataset, synthesize_commit_message, within_limits, CleanConfig, DatasetManifest,
    DatasetSample, PairFunnel, RecordsError, Split, Task,
};
use hdlbugs_core::eval::PromptTemplate;
use hdlbugs_core::hdl::{DesignPair, FilterConfig};
use hdlbugs_core::metrics::{BpeSpec, TokenCounter};
use hdlbugs_core::par::Execution;
use hdlbugs_core::vcs::RepoRef;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair(buggy: &str, fixed: &str) -> DesignPair {
    DesignPair {
        repo: RepoRef::new("o", "r").unwrap(),
        sha: "a".repeat(40),
        pr_number: None,
        path: "x.sv".into(),
        buggy_code: buggy.into(),
        fixed_code: fixed.into(),
        removed_lines: vec![],
        commit_message: String::new(),
        pr_description: None,
        issue_text: None,
    }
}

/// One token per character: a merge-free BPE over the single symbol `a`.
fn char_counter() -> TokenCounter {
    let spec = BpeSpec { vocabulary: HashMap::from([("a".to_string(), 0)]), merges: vec![], byte_level: false };
    TokenCounter::from_spec(&spec).unwrap()
}

#[test]
fn token_floor_and_ceiling_are_exact() {
    let c = char_counter();
    let cfg = CleanConfig::default();
    let a = |n: usize| "a".repeat(n);
    assert_eq!(c.count(&a(14)), 14);
    assert!(!within_limits(&pair(&a(15), &a(14)), &c, &cfg));
    assert!(within_limits(&pair(&a(15), &a(15)), &c, &cfg));
    assert!(within_limits(&pair(&a(2048), &a(15)), &c, &cfg));
    assert!(!within_limits(&pair(&a(2049), &a(15)), &c, &cfg));
}

#[test]
fn indentation_duplicate_is_dropped() {
    let mut pairs: Vec<DesignPair> = (0..6).map(|i| pair(&format!("wire w{i};\nassign w{i} = 0;"), &format!("wire w{i};"))).collect();
    pairs[5] = pair("    wire w2;\n\t\tassign w2 = 0;   ", "  wire w2;");
    let out = dedup_pairs(&pairs);
    assert_eq!(out, pairs[..5].to_vec());
}

fn pair_strategy() -> impl Strategy<Value = DesignPair> {
    let line = prop_oneof![Just("a = b;"), Just("  a = b;"), Just("c <= 1; // x"), Just("d;"), Just("e f g h;")];
    let code = proptest::collection::vec(line, 1..25).prop_map(|v| v.join("\n"));
    (code.clone(), code).prop_map(|(b, f)| pair(&b, &f))
}

fn word_cfg() -> CleanConfig {
    CleanConfig { min_tokens: 8, max_tokens: 40, ..CleanConfig::default() }
}

proptest! {
    #[test]
    fn dedup_is_idempotent_and_keeps_first_occurrences(pairs in proptest::collection::vec(pair_strategy(), 0..30)) {
        let once = dedup_pairs(&pairs);
        prop_assert_eq!(dedup_pairs(&once), once.clone());
        let doubled: Vec<_> = pairs.iter().chain(&pairs).cloned().collect();
        prop_assert_eq!(dedup_pairs(&doubled), once.clone());
        // survivors appear in input order
        let mut it = pairs.iter();
        for p in &once {
            prop_assert!(it.any(|q| q == p));
        }
    }

    #[test]
    fn dedup_and_length_filter_commute(pairs in proptest::collection::vec(pair_strategy(), 0..30)) {
        let cfg = word_cfg();
        let counter = TokenCounter::WordHeuristic;
        let a = length_filter_with(&dedup_pairs(&pairs), &counter, &cfg, Execution::Sequential);
        let b = dedup_pairs(&length_filter_with(&pairs, &counter, &cfg, Execution::Parallel));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn allocation_matches_exact_largest_remainder(
        n in 0usize..100_000,
        (p, q) in (0u32..=100).prop_flat_map(|p| (Just(p), 0..=100 - p)),
    ) {
        let pct = [p, q, 100 - p - q];
        let ratios = (pct[0] as f64 / 100.0, pct[1] as f64 / 100.0, pct[2] as f64 / 100.0);
        prop_assert_eq!(allocate(n, ratios), oracle_allocate(n, pct));
    }
}

/// Largest remainder in exact integer arithmetic over percentages; ties go
/// to the larger ratio, then the earlier split.
fn oracle_allocate(n: usize, pct: [u32; 3]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    let mut rems = [0usize; 3];
    for i in 0..3 {
        counts[i] = n * pct[i] as usize / 100;
        rems[i] = n * pct[i] as usize % 100;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(pct[b].cmp(&pct[a])).then(a.cmp(&b)));
    let left = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(left) {
        counts[i] += 1;
    }
    counts
}

#[test]
fn allocation_sweeps_every_percentage_split() {
    for p in 0..=100u32 {
        for q in 0..=100 - p {
            let pct = [p, q, 100 - p - q];
            let ratios = (p as f64 / 100.0, q as f64 / 100.0, pct[2] as f64 / 100.0);
            for n in (0..300).chain([4898, 9999, 123_457]) {
                assert_eq!(allocate(n, ratios), oracle_allocate(n, pct), "n={n} pct={pct:?}");
            }
        }
    }
}

fn random_samples(n: usize, seed: u64) -> Vec<DatasetSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks = [Task::Repair, Task::Localize, Task::PreprocessPair, Task::Linkage, Task::FsmPair];
    (0..n)
        .map(|i| {
            let text = |rng: &mut ChaCha8Rng| -> String {
                (0..rng.random_range(1..40)).map(|_| char::from(rng.random_range(b' '..=b'~'))).collect::<String>() + "\n\"é\t"
            };
            let input = text(&mut rng);
            let output = text(&mut rng);
            let sha: String = (0..40).map(|_| char::from_digit(rng.random_range(0..16), 16).unwrap()).collect();
            DatasetSample::new(
                tasks[i % tasks.len()],
                "do it".into(),
                input,
                output,
                "org/repo".into(),
                sha,
                format!("rtl/f{i}.sv"),
            )
        })
        .collect()
}

#[test]
fn split_counts_partition_and_determinism() {
    for (n, seed) in [(20, 1), (100, 2), (1000, 3)] {
        let samples = random_samples(n, seed);
        let ratios = (0.75, 0.15, 0.10);
        let m = split_dataset(&samples, ratios, 42).unwrap();
        let c = [m.counts.train, m.counts.validation, m.counts.test];
        for (k, r) in c.iter().zip([ratios.0, ratios.1, ratios.2]) {
            assert!((*k as f64 - n as f64 * r).abs() < 1.0, "n={n} counts={c:?}");
        }
        let ids: HashSet<&str> = samples.iter().map(|s| s.id.as_str()).collect();
        let assigned: HashSet<&str> = m.assignments.keys().map(String::as_str).collect();
        assert_eq!(ids, assigned);
        for (split, k) in [(Split::Train, c[0]), (Split::Validation, c[1]), (Split::Test, c[2])] {
            assert_eq!(m.assignments.values().filter(|s| **s == split).count(), k);
        }
        assert_eq!(split_dataset(&samples, ratios, 42).unwrap(), m);
    }
    let twenty = split_dataset(&random_samples(20, 9), (0.75, 0.15, 0.10), 0).unwrap();
    assert_eq!([twenty.counts.train, twenty.counts.validation, twenty.counts.test], [15, 3, 2]);
    assert_eq!(allocate(1, (0.75, 0.15, 0.10)), [1, 0, 0]);
}

fn manifest(n: usize) -> DatasetManifest {
    DatasetManifest {
        created_at: chrono::Utc.with_ymd_and_hms(2024, 5, 1, 12, 0, 0).unwrap(),
        repos: vec!["org/repo".into()],
        filter_config_digest: FilterConfig::default().digest(),
        filter_config: FilterConfig::default(),
        clean_config: CleanConfig::default(),
        token_counter: TokenCounter::WordHeuristic.identity(),
        pair_funnel: PairFunnel { extracted: 7, after_dedup: 6, after_length: 5 },
        pair_count: 5,
        sample_count: n,
        task_counts: Default::default(),
        token_total: 0,
        split: None,
        config: [("out_dir".to_string(), "out".to_string())].into(),
    }
}

#[test]
fn records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    let mut samples = random_samples(100, 5);
    let split = split_dataset(&samples, (0.75, 0.15, 0.10), 3).unwrap();
    apply_split(&mut samples, &split);
    let mut m = manifest(samples.len());
    m.split = Some(split);
    export_records(&samples, &m, &path).unwrap();
    let (back, back_m) = import_records(&path).unwrap();
    assert_eq!(back, samples);
    assert_eq!(back_m, m);
    assert!(!std::fs::read(&path).unwrap().contains(&b'\r'));

    let empty = dir.path().join("e.jsonl");
    export_records(&[], &manifest(0), &empty).unwrap();
    assert_eq!(std::fs::read(&empty).unwrap(), b"");
    assert!(import_records(&empty).unwrap().0.is_empty());
}

#[test]
fn missing_task_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    let samples = random_samples(3, 8);
    export_records(&samples, &manifest(3), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut v: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    v.as_object_mut().unwrap().remove("task");
    lines[1] = v.to_string();
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    match import_records(&path) {
        Err(RecordsError::Schema { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn no_id_collisions_in_a_hundred_thousand_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen = HashSet::new();
    for i in 0..100_000u32 {
        let s = DatasetSample::new(
            Task::Repair,
            String::new(),
            format!("{}", rng.random::<u64>()),
            format!("{i}"),
            "o/r".into(),
            "0".repeat(40),
            "p.sv".into(),
        );
        assert_eq!(s.id.len(), 32);
        assert!(seen.insert(s.id), "collision at {i}");
    }
}

const SEC_CM: &str = "virtual class sec_cm_base_if_proxy extends uvm_object;
  sec_cm_type_e sec_cm_type;
  string path;
  pure virtual task inject_fault();
  pure virtual task restore_fault();
endclass
";

#[test]
fn sec_cm_repair_and_two_line_localization() {
    let fixed = SEC_CM.replace("pure virtual task ", "pure virtual task automatic ");
    let mut p = pair(SEC_CM, &fixed);
    p.removed_lines = vec!["  pure virtual task inject_fault();".into(), "  pure virtual task restore_fault();".into()];
    let t = PromptTemplate::default();
    let repair = repair_sample(&p, &t).unwrap();
    assert!(repair.output.contains("task automatic inject_fault"));
    let loc = localization_sample(&p, &t).unwrap();
    assert_eq!(loc.output.lines().count(), 2);

    let mut ctx = pair("  ctx = 0;\nend", "  ctx = null;\nend");
    ctx.removed_lines = vec!["  ctx = 0;".into()];
    assert_eq!(localization_sample(&ctx, &t).unwrap().output, "ctx = 0;");
    let msg = synthesize_commit_message(&ctx);
    assert!(msg.contains("ctx = 0") && msg.contains("ctx = null"));
    assert_eq!(msg, synthesize_commit_message(&ctx));
}
