//! Byte-pair-encoding token counter.
//!
//! Only the segmentation matters here, so the vocabulary is carried along
//! for identification but never consulted when counting. Text is pre-split
//! into chunks (a word with at most one leading space, or a whitespace run)
//! and merges never cross chunk boundaries.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BpeSpec {
    pub vocabulary: HashMap<String, u32>,
    /// In rank order; earlier merges apply first.
    pub merges: Vec<(String, String)>,
    /// Base symbols are the 256 bytes (in the printable remapping used by
    /// byte-level vocabularies) rather than Unicode scalar values.
    pub byte_level: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum BpeError {
    #[error("merge {rank} ({left:?}, {right:?}) references unknown symbol {symbol:?}")]
    UnknownSymbol { rank: usize, left: String, right: String, symbol: String },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// The byte to printable-character table used by byte-level vocabularies.
pub fn byte_to_unicode() -> [char; 256] {
    let mut table = ['\0'; 256];
    let mut extra = 0u32;
    for b in 0..=255u8 {
        let printable = matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
        table[b as usize] = if printable {
            char::from(b)
        } else {
            let c = char::from_u32(256 + extra).expect("valid scalar");
            extra += 1;
            c
        };
    }
    table
}

impl BpeSpec {
    /// Loads a vocabulary listing and a merges listing.
    ///
    /// The vocabulary is either a JSON object or one `token id` per line
    /// (split at the last whitespace). Merges are one `left right` pair per
    /// line; blank lines and `#` header lines are skipped.
    pub fn load(vocab_path: &Path, merges_path: &Path, byte_level: bool) -> Result<Self, BpeError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| BpeError::Io { path: p.display().to_string(), source })
        };
        let vocab_text = read(vocab_path)?;
        let vocab_name = vocab_path.display().to_string();
        let vocabulary = if vocab_text.trim_start().starts_with('{') {
            serde_json::from_str(&vocab_text).map_err(|e| BpeError::Parse {
                path: vocab_name.clone(),
                line: e.line(),
                msg: e.to_string(),
            })?
        } else {
            let mut v = HashMap::new();
            for (i, line) in vocab_text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let bad = |msg: &str| BpeError::Parse { path: vocab_name.clone(), line: i + 1, msg: msg.into() };
                let (tok, id) = line.trim_end().rsplit_once(char::is_whitespace).ok_or_else(|| bad("expected `token id`"))?;
                let id = id.parse().map_err(|_| bad("id is not an integer"))?;
                v.insert(tok.to_string(), id);
            }
            v
        };
        let merges_name = merges_path.display().to_string();
        let mut merges = Vec::new();
        for (i, line) in read(merges_path)?.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => merges.push((a.to_string(), b.to_string())),
                _ => {
                    return Err(BpeError::Parse { path: merges_name, line: i + 1, msg: "expected `left right`".into() });
                }
            }
        }
        Ok(Self { vocabulary, merges, byte_level })
    }
}

/// A validated [`BpeSpec`] ready for repeated counting.
#[derive(Debug, Clone)]
pub struct Bpe {
    byte_level: bool,
    byte_symbols: [u32; 256],
    char_symbols: HashMap<char, u32>,
    /// (left, right) -> (rank, merged symbol)
    ranks: HashMap<(u32, u32), (usize, u32)>,
}

const UNKNOWN: u32 = u32::MAX;

impl Bpe {
    pub fn new(spec: &BpeSpec) -> Result<Self, BpeError> {
        let mut symbols: HashMap<String, u32> = HashMap::new();
        let intern = |s: &str, symbols: &mut HashMap<String, u32>| {
            let next = symbols.len() as u32;
            *symbols.entry(s.to_string()).or_insert(next)
        };
        let mut byte_symbols = [0u32; 256];
        if spec.byte_level {
            for (b, c) in byte_to_unicode().into_iter().enumerate() {
                byte_symbols[b] = intern(&c.to_string(), &mut symbols);
            }
        }
        let known = |s: &str, symbols: &HashMap<String, u32>| {
            symbols.contains_key(s) || (!spec.byte_level && s.chars().count() == 1)
        };
        let mut ranks = HashMap::new();
        for (rank, (left, right)) in spec.merges.iter().enumerate() {
            for side in [left, right] {
                if !known(side, &symbols) {
                    return Err(BpeError::UnknownSymbol {
                        rank,
                        left: left.clone(),
                        right: right.clone(),
                        symbol: side.clone(),
                    });
                }
            }
            let l = intern(left, &mut symbols);
            let r = intern(right, &mut symbols);
            let merged = intern(&format!("{left}{right}"), &mut symbols);
            ranks.entry((l, r)).or_insert((rank, merged));
        }
        let char_symbols = symbols
            .iter()
            .filter_map(|(s, &id)| {
                let mut cs = s.chars();
                match (cs.next(), cs.next()) {
                    (Some(c), None) => Some((c, id)),
                    _ => None,
                }
            })
            .collect();
        Ok(Self { byte_level: spec.byte_level, byte_symbols, char_symbols, ranks })
    }

    fn base_symbols(&self, chunk: &str) -> Vec<u32> {
        if self.byte_level {
            chunk.bytes().map(|b| self.byte_symbols[b as usize]).collect()
        } else {
            chunk.chars().map(|c| self.char_symbols.get(&c).copied().unwrap_or(UNKNOWN)).collect()
        }
    }

    fn count_chunk(&self, chunk: &str) -> usize {
        let mut syms = self.base_symbols(chunk);
        while syms.len() > 1 {
            let best = syms
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0], w[1])).map(|&(rank, merged)| (rank, w[0], w[1], merged)))
                .min_by_key(|t| t.0);
            let Some((_, l, r, merged)) = best else { break };
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == l && syms[i + 1] == r {
                    out.push(merged);
                    i += 2;
                } else {
                    out.push(syms[i]);
                    i += 1;
                }
            }
            syms = out;
        }
        syms.len()
    }

    pub fn count(&self, text: &str) -> usize {
        pre_split(text).into_iter().map(|c| self.count_chunk(c)).sum()
    }
}

/// Splits into word chunks (carrying at most one leading space) and
/// whitespace runs. The chunks concatenate back to `text`.
pub fn pre_split(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < text.len() {
        let start = i;
        let c = text[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            let mut end = i;
            for (off, ch) in text[i..].char_indices() {
                if !ch.is_whitespace() {
                    break;
                }
                end = i + off + ch.len_utf8();
            }
            if end < text.len() && bytes[end - 1] == b' ' {
                // the final space belongs to the following word
                if end - 1 > start {
                    out.push(&text[start..end - 1]);
                }
                i = end - 1;
                let word_end = word_end(text, end);
                out.push(&text[i..word_end]);
                i = word_end;
            } else {
                out.push(&text[start..end]);
                i = end;
            }
        } else {
            let e = word_end(text, i);
            out.push(&text[i..e]);
            i = e;
        }
    }
    out
}

fn word_end(text: &str, from: usize) -> usize {
    text[from..].char_indices().find(|(_, c)| c.is_whitespace()).map_or(text.len(), |(o, _)| from + o)
}

/// One-shot count; prefer [`Bpe`] when counting many texts.
pub fn bpe_count(text: &str, spec: &BpeSpec) -> Result<usize, BpeError> {
    Ok(Bpe::new(spec)?.count(text))
}
