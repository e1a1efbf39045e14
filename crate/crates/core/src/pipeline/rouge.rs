use crate::metrics::{rouge_l, rouge_n, rouge_w, word_tokenize, RougeScore, WordTokenizerConfig};

/// F1 of ROUGE-1, ROUGE-2, ROUGE-L and ROUGE-W (weight `alpha`) for one
/// candidate/reference pair.
pub fn rouge_f1s(candidate: &str, reference: &str, tok: &WordTokenizerConfig, alpha: f64) -> [f64; 4] {
    let c = word_tokenize(candidate, tok);
    let r = word_tokenize(reference, tok);
    [rouge_n(&c, &r, 1), rouge_n(&c, &r, 2), rouge_l(&c, &r), rouge_w(&c, &r, alpha)].map(|s: RougeScore| s.f1)
}

/// Space-separated, nine decimals.
pub fn format_f1s(f: &[f64; 4]) -> String {
    f.iter().map(|v| format!("{v:.9}")).collect::<Vec<_>>().join(" ")
}
