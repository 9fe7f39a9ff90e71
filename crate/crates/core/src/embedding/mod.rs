//! Word embeddings: skip-gram training, similarity queries, the plain-text
//! vector format and Dirichlet-process clustering of the vocabulary.

pub mod dpgmm;
mod huffman;
mod skipgram;
mod vocab;

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub use dpgmm::{cluster_words, ClusterAssignment, ClusterModel, DpgmmOptions, MixtureFit};
pub use huffman::HuffmanTree;
pub use skipgram::{context_pairs, discard_probability, train_skipgram, HierarchicalSoftmax, SkipGramConfig};
pub use vocab::{select_medium_frequency, Vocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub vocab: Vocabulary,
    /// Row-major `V x dim`; row `i` belongs to vocabulary index `i`.
    pub vectors: Vec<f64>,
    pub dim: usize,
    /// Absent for models loaded from disk.
    pub config: Option<SkipGramConfig>,
    pub output: Option<HierarchicalSoftmax>,
}

pub fn build_vocab(corpus: &Corpus, min_count: u64) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    Vocabulary::build(corpus.tweets().iter().map(|t| t.tokens.as_slice()), min_count)
}

/// Train on the token sequences of a preprocessed corpus.
pub fn train_on_corpus(corpus: &Corpus, config: &SkipGramConfig) -> Result<EmbeddingModel> {
    train_skipgram(&corpus.token_sequences(), config)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl EmbeddingModel {
    pub fn vector(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.vocab.index(word).map(|i| self.vector(i))
    }

    /// The `k` words closest by cosine to the mean of the query vectors,
    /// query words excluded, descending.
    pub fn most_similar(&self, query: &[&str], k: usize) -> Result<Vec<(String, f64)>> {
        if query.is_empty() {
            return Err(Error::Empty("similarity query"));
        }
        let missing: Vec<String> = query
            .iter()
            .filter(|w| self.vocab.index(w).is_none())
            .map(|w| w.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::OutOfVocabulary(missing));
        }
        let ids: HashSet<usize> = query.iter().filter_map(|w| self.vocab.index(w)).collect();
        let mut target = vec![0.0; self.dim];
        for w in query {
            let v = self.lookup(w).expect("checked above");
            for (t, x) in target.iter_mut().zip(v) {
                *t += x / query.len() as f64;
            }
        }
        let mut scored: Vec<(String, f64)> = (0..self.vocab.len())
            .filter(|i| !ids.contains(i))
            .map(|i| (self.vocab.word(i).to_string(), cosine(&target, self.vector(i))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }

    /// Text format: a `V d` header, then `word f1 ... fd` per row with six decimals.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.vocab.len(), self.dim)?;
        for i in 0..self.vocab.len() {
            write!(out, "{}", self.vocab.word(i))?;
            for x in self.vector(i) {
                write!(out, " {x:.6}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(Error::Empty("embedding file"))??;
        let mut parts = header.split_whitespace();
        let mut field = |name: &str| -> Result<usize> {
            parts
                .next()
                .ok_or_else(|| Error::format(1, format!("header missing {name}")))?
                .parse()
                .map_err(|_| Error::format(1, format!("header {name} is not a count")))
        };
        let (rows, dim) = (field("V")?, field("d")?);
        if dim == 0 {
            return Err(Error::format(1, "dimension must be at least 1"));
        }
        if parts.next().is_some() {
            return Err(Error::format(1, "header has extra fields"));
        }
        let mut words = Vec::with_capacity(rows.min(1 << 20));
        let mut seen = HashSet::new();
        let mut vectors = Vec::with_capacity(rows.saturating_mul(dim).min(1 << 24));
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            if words.len() == rows {
                return Err(Error::format(lineno, format!("more than {rows} rows")));
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            if word.is_empty() || !seen.insert(word.to_string()) {
                return Err(Error::format(lineno, format!("bad or duplicate word {word:?}")));
            }
            let before = vectors.len();
            for p in parts {
                let x: f64 = p
                    .parse()
                    .map_err(|_| Error::format(lineno, format!("bad number {p:?}")))?;
                if !x.is_finite() {
                    return Err(Error::format(lineno, "non-finite value"));
                }
                vectors.push(x);
            }
            if vectors.len() - before != dim {
                return Err(Error::format(
                    lineno,
                    format!("expected {dim} values, found {}", vectors.len() - before),
                ));
            }
            words.push((word.to_string(), 0));
        }
        if words.len() != rows {
            return Err(Error::format(
                words.len() + 2,
                format!("header promises {rows} rows, file has {}", words.len()),
            ));
        }
        Ok(Self {
            vocab: Vocabulary::from_sorted(words, 0),
            vectors,
            dim,
            config: None,
            output: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> EmbeddingModel {
        EmbeddingModel {
            vocab: Vocabulary::from_sorted(
                vec![("a".into(), 3), ("b".into(), 2), ("c".into(), 1), ("d".into(), 1)],
                1,
            ),
            vectors: vec![
                1.0, 0.0, 0.0, //
                0.9, 0.1, 0.0, //
                0.0, 1.0, 0.0, //
                -1.0, 0.0, 0.1,
            ],
            dim: 3,
            config: None,
            output: None,
        }
    }

    #[test]
    fn cosine_of_self_is_one() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine(&v, &v) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&v, &[0.0; 3]), 0.0);
    }

    #[test]
    fn most_similar_excludes_query() {
        let m = tiny();
        let r = m.most_similar(&["a"], 10).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].0, "b");
        assert!(r.iter().all(|(w, _)| w != "a"));
        assert!(r.windows(2).all(|w| w[0].1 >= w[1].1));
        let r = m.most_similar(&["a", "c"], 1).unwrap();
        assert_eq!(r[0].0, "b");
    }

    #[test]
    fn most_similar_reports_missing() {
        match tiny().most_similar(&["a", "zz", "yy"], 3) {
            Err(Error::OutOfVocabulary(w)) => assert_eq!(w, vec!["zz", "yy"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn save_layout() {
        let mut m = tiny();
        m.vocab = Vocabulary::from_sorted(vec![("a".into(), 1), ("b".into(), 1)], 1);
        m.vectors.truncate(6);
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "2 3\na 1.000000 0.000000 0.000000\nb 0.900000 0.100000 0.000000\n");
    }

    #[test]
    fn round_trip_within_1e6() {
        let mut m = tiny();
        m.vectors.iter_mut().enumerate().for_each(|(i, x)| *x += i as f64 * 1.234567891e-3);
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let back = EmbeddingModel::load(&buf[..]).unwrap();
        assert_eq!(back.vocab.words(), m.vocab.words());
        for (a, b) in m.vectors.iter().zip(&back.vectors) {
            assert!((a - b).abs() <= 5e-7 + 1e-12);
        }
        for i in 0..4 {
            for j in 0..4 {
                let c1 = cosine(m.vector(i), m.vector(j));
                let c2 = cosine(back.vector(i), back.vector(j));
                assert!((c1 - c2).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn load_errors() {
        let bad: &[&str] = &[
            "",
            "2 3\na 1 2 3\n",
            "1 3\na 1 2\n",
            "1 3\na 1 2 x\n",
            "1 2\na 1 2\nb 3 4\n",
            "2 1\na 1\na 2\n",
            "x 3\n",
            "1 0\na\n",
            "1 1\na NaN\n",
        ];
        for b in bad {
            assert!(EmbeddingModel::load(b.as_bytes()).is_err(), "{b:?}");
        }
    }
}
