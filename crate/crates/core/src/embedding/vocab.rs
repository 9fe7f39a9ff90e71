use std::collections::HashMap;

use crate::error::{Error, Result};

/// Word list ordered by descending count, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    total_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    /// Count tokens over sentences and drop words seen fewer than `min_count` times.
    pub fn build<'a, I>(sentences: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts: HashMap<&'a str, u64> = HashMap::new();
        for sentence in sentences {
            for tok in sentence {
                *counts.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            return Err(Error::Empty("corpus has no tokens"));
        }
        let mut entries: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Ok(Self::from_sorted(
            entries.into_iter().map(|(w, c)| (w.to_string(), c)).collect(),
            min_count,
        ))
    }

    /// Entries must already be in vocabulary order. Used when loading vectors
    /// without counts, in which case every count is 0.
    pub(crate) fn from_sorted(entries: Vec<(String, u64)>, min_count: u64) -> Self {
        let total_tokens = entries.iter().map(|e| e.1).sum();
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Self {
            words,
            counts,
            index,
            total_tokens,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sum of the counts of retained words.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Corpus frequency fraction of a word.
    pub fn frequency(&self, index: usize) -> f64 {
        self.counts[index] as f64 / self.total_tokens as f64
    }
}

/// Drop the top 1% of ranks (rounded up), then take the next `n` words.
pub fn select_medium_frequency(vocab: &Vocabulary, n: usize) -> Vec<String> {
    let skip = vocab.len().div_ceil(100);
    vocab.words().iter().skip(skip).take(n).cloned().collect()
}
