//! Tokenizers, token counters and the ROUGE family.

mod bpe;
mod counter;
mod rouge;
mod tokenize;

pub use bpe::{bpe_count, byte_to_unicode, pre_split, Bpe, BpeError, BpeSpec};
pub use counter::{word_heuristic_count, CounterSpec, TokenCounter, TokenizerUnavailable};
pub use rouge::{lcs_len, rouge_l, rouge_n, rouge_w, wlcs, RougeScore, RougeSuite, DEFAULT_WEIGHT};
pub use tokenize::{word_tokenize, SplitMode, TokenSeq, WordTokenizerConfig};
