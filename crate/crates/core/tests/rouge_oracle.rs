mod common;

use common::*;
use hdlbugs_core::metrics::{rouge_l, rouge_n, rouge_w, RougeScore, TokenSeq};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_seq(rng: &mut ChaCha8Rng, max_len: usize, vocab: u32) -> Vec<String> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| format!("t{}", rng.random_range(0..vocab))).collect()
}

fn agrees(s: RougeScore, o: Prf) -> bool {
    (s.precision - o.0).abs() < 1e-9 && (s.recall - o.1).abs() < 1e-9 && (s.f1 - o.2).abs() < 1e-9
}

#[test]
fn thousand_random_pairs_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..1000 {
        let a = random_seq(&mut rng, 20, 10);
        let b = random_seq(&mut rng, 20, 10);
        let (ta, tb) = (TokenSeq::new(a.clone()), TokenSeq::new(b.clone()));
        assert!(agrees(rouge_n(&ta, &tb, 1), oracle_rouge_n(&a, &b, 1)), "rouge-1 case {case}");
        assert!(agrees(rouge_n(&ta, &tb, 2), oracle_rouge_n(&a, &b, 2)), "rouge-2 case {case}");
        assert!(agrees(rouge_l(&ta, &tb), oracle_rouge_l(&a, &b)), "rouge-l case {case}");
        assert!(agrees(rouge_w(&ta, &tb, 1.2), oracle_rouge_w(&a, &b, 1.2)), "rouge-w case {case}");
    }
}

#[test]
fn memoized_lcs_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let a = random_seq(&mut rng, 10, 4);
        let b = random_seq(&mut rng, 14, 4);
        assert_eq!(oracle_lcs(&a, &b), exhaustive_lcs(&a, &b));
    }
}

#[test]
fn frozen_values() {
    let s = |x: &str| TokenSeq::new(x.split_whitespace());
    let r = s("a b c d e");
    // weighted LCS: consecutive match scores 2^1.2, scattered scores 2
    let cons = rouge_w(&s("a b x y z"), &r, 1.2);
    let scat = rouge_w(&s("a x b y z"), &r, 1.2);
    let expect_cons = (2f64.powf(1.2) / 5f64.powf(1.2)).powf(1.0 / 1.2);
    let expect_scat = (2.0 / 5f64.powf(1.2)).powf(1.0 / 1.2);
    assert!((cons.f1 - expect_cons).abs() < 1e-12);
    assert!((scat.f1 - expect_scat).abs() < 1e-12);
    assert!((cons.f1 - 0.4).abs() < 1e-12);
}

fn seq_strategy() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec((0u8..10).prop_map(|i| format!("w{i}")), 0..20)
}

proptest! {
    #[test]
    fn scores_in_unit_range(a in seq_strategy(), b in seq_strategy()) {
        let (ta, tb) = (TokenSeq::new(a), TokenSeq::new(b));
        for s in [rouge_n(&ta, &tb, 1), rouge_n(&ta, &tb, 2), rouge_l(&ta, &tb), rouge_w(&ta, &tb, 1.2)] {
            for v in [s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if s.precision + s.recall > 0.0 {
                prop_assert!((s.f1 - 2.0 * s.precision * s.recall / (s.precision + s.recall)).abs() < 1e-12);
            } else {
                prop_assert_eq!(s.f1, 0.0);
            }
        }
    }

    #[test]
    fn swap_symmetry(a in seq_strategy(), b in seq_strategy()) {
        let (ta, tb) = (TokenSeq::new(a), TokenSeq::new(b));
        let pairs = [
            (rouge_n(&ta, &tb, 1), rouge_n(&tb, &ta, 1)),
            (rouge_n(&ta, &tb, 2), rouge_n(&tb, &ta, 2)),
            (rouge_l(&ta, &tb), rouge_l(&tb, &ta)),
            (rouge_w(&ta, &tb, 1.2), rouge_w(&tb, &ta, 1.2)),
        ];
        for (x, y) in pairs {
            prop_assert!((x.precision - y.recall).abs() < 1e-12);
            prop_assert!((x.recall - y.precision).abs() < 1e-12);
            prop_assert!((x.f1 - y.f1).abs() < 1e-12);
        }
    }

    #[test]
    fn rouge1_order_invariant(a in seq_strategy(), b in seq_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = a.clone();
        shuffled.shuffle(&mut rng);
        let tb = TokenSeq::new(b);
        let x = rouge_n(&TokenSeq::new(a), &tb, 1);
        let y = rouge_n(&TokenSeq::new(shuffled), &tb, 1);
        prop_assert!((x.f1 - y.f1).abs() < 1e-12 && (x.precision - y.precision).abs() < 1e-12);
    }

    #[test]
    fn dominance_chain(a in seq_strategy(), b in seq_strategy()) {
        let (ta, tb) = (TokenSeq::new(a), TokenSeq::new(b));
        let w = rouge_w(&ta, &tb, 1.2).f1;
        let l = rouge_l(&ta, &tb).f1;
        let one = rouge_n(&ta, &tb, 1).f1;
        prop_assert!(w <= l + 1e-12, "w={} l={}", w, l);
        prop_assert!(l <= one + 1e-12, "l={} one={}", l, one);
    }
}
