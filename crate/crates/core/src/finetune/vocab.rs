use crate::dataset::DatasetSample;

use super::train::Example;

/// Characters of the shipped toy vocabulary. Id 0 is reserved for any
/// character outside this list; the rest follow in order from id 1.
pub const DEFAULT_CHARS: &str = " ;=01abcdx";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
}

impl Default for CharVocab {
    fn default() -> Self {
        Self::new(DEFAULT_CHARS)
    }
}

impl CharVocab {
    /// Duplicate characters keep their first id.
    pub fn new(chars: &str) -> Self {
        let mut seen = Vec::new();
        for c in chars.chars() {
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        Self { chars: seen }
    }

    /// Number of ids, including the unknown id.
    pub fn size(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn id(&self, c: char) -> usize {
        self.chars.iter().position(|&k| k == c).map_or(0, |p| p + 1)
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        text.chars().map(|c| self.id(c)).collect()
    }

    /// Unknown ids decode to `'?'`.
    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter().map(|&i| if i == 0 { '?' } else { self.chars.get(i - 1).copied().unwrap_or('?') }).collect()
    }

    /// Aligns `input` and `output` position by position, truncated to the
    /// shorter of the two and to `max_len`. Empty pairs yield `None`.
    pub fn example(&self, input: &str, output: &str, max_len: usize) -> Option<Example> {
        let x = self.encode(input);
        let y = self.encode(output);
        let n = x.len().min(y.len()).min(max_len);
        (n > 0).then(|| Example { input_ids: x[..n].to_vec(), targets: y[..n].to_vec() })
    }

    pub fn examples(&self, samples: &[DatasetSample], max_len: usize) -> Vec<Example> {
        samples.iter().filter_map(|s| self.example(&s.input, &s.output, max_len)).collect()
    }
}
