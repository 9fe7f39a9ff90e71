//! Latent Dirichlet allocation by collapsed Gibbs sampling, topic reports
//! and per-token topic annotation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embedding::Vocabulary;
use crate::error::{Error, Result};

/// Topic counts compared by default.
pub const DEFAULT_TOPIC_GRID: [usize; 5] = [5, 10, 15, 20, 25];
/// Extra topic counts for large corpora.
pub const LARGE_TOPIC_GRID: [usize; 8] = [5, 10, 15, 20, 25, 35, 45, 50];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub sweeps: usize,
    /// Average phi and theta over this many final sweeps; 0 reads the final sample.
    pub average_last: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            k: 10,
            alpha: None,
            beta: 0.01,
            sweeps: 1000,
            average_last: 0,
            seed: 1,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub vocab: Vec<String>,
    /// `k x V`.
    pub phi: Vec<Vec<f64>>,
    /// `D x k`, in corpus order.
    pub theta: Vec<Vec<f64>>,
    /// Final topic of every token, aligned with the document tokens.
    pub z: Vec<Vec<usize>>,
    pub doc_ids: Vec<String>,
    pub seed: u64,
}

/// Unnormalized `p(z = k | rest)` from counts with the current token removed.
pub fn conditional_weight(doc_topic: f64, topic_word: f64, topic_total: f64, vocab_size: usize, alpha: f64, beta: f64) -> f64 {
    (doc_topic + alpha) * (topic_word + beta) / (topic_total + vocab_size as f64 * beta)
}

/// Gibbs chain state over word ids.
pub struct GibbsState {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<Vec<u32>>,
    topic_total: Vec<u64>,
    rng: ChaCha8Rng,
}

impl GibbsState {
    /// Random initial assignments.
    pub fn new(docs: Vec<Vec<usize>>, v: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doc_topic = vec![vec![0u32; k]; docs.len()];
        let mut topic_word = vec![vec![0u32; v]; k];
        let mut topic_total = vec![0u64; k];
        let z: Vec<Vec<usize>> = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.random_range(0..k);
                        doc_topic[d][t] += 1;
                        topic_word[t][w] += 1;
                        topic_total[t] += 1;
                        t
                    })
                    .collect()
            })
            .collect();
        Self {
            k,
            v,
            alpha,
            beta,
            docs,
            z,
            doc_topic,
            topic_word,
            topic_total,
            rng,
        }
    }

    pub fn sweep(&mut self) {
        let mut weights = vec![0.0; self.k];
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.z[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old][w] -= 1;
                self.topic_total[old] -= 1;
                let mut total = 0.0;
                for (t, slot) in weights.iter_mut().enumerate() {
                    *slot = conditional_weight(
                        self.doc_topic[d][t] as f64,
                        self.topic_word[t][w] as f64,
                        self.topic_total[t] as f64,
                        self.v,
                        self.alpha,
                        self.beta,
                    );
                    total += *slot;
                }
                let mut u = self.rng.random::<f64>() * total;
                let mut new = self.k - 1;
                for (t, &wt) in weights.iter().enumerate() {
                    if u < wt {
                        new = t;
                        break;
                    }
                    u -= wt;
                }
                self.z[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new][w] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    /// Whether the cached counts equal a recount from the assignments.
    pub fn counts_consistent(&self) -> bool {
        let mut doc_topic = vec![vec![0u32; self.k]; self.docs.len()];
        let mut topic_word = vec![vec![0u32; self.v]; self.k];
        let mut topic_total = vec![0u64; self.k];
        for (d, doc) in self.docs.iter().enumerate() {
            for (&w, &t) in doc.iter().zip(&self.z[d]) {
                doc_topic[d][t] += 1;
                topic_word[t][w] += 1;
                topic_total[t] += 1;
            }
        }
        doc_topic == self.doc_topic && topic_word == self.topic_word && topic_total == self.topic_total
    }

    pub fn phi(&self) -> Vec<Vec<f64>> {
        let vb = self.v as f64 * self.beta;
        (0..self.k)
            .map(|t| {
                let denom = self.topic_total[t] as f64 + vb;
                self.topic_word[t].iter().map(|&c| (c as f64 + self.beta) / denom).collect()
            })
            .collect()
    }

    pub fn theta(&self) -> Vec<Vec<f64>> {
        let ka = self.k as f64 * self.alpha;
        self.doc_topic
            .iter()
            .zip(&self.docs)
            .map(|(counts, doc)| {
                let denom = doc.len() as f64 + ka;
                counts.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
            })
            .collect()
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }
}

fn add_into(acc: &mut [Vec<f64>], x: &[Vec<f64>]) {
    for (a, b) in acc.iter_mut().zip(x) {
        for (p, q) in a.iter_mut().zip(b) {
            *p += q;
        }
    }
}

/// Fit over token lists with their ids.
pub fn fit_lda_docs(ids: &[String], docs: &[Vec<String>], config: &LdaConfig) -> Result<TopicModel> {
    if docs.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    if ids.len() != docs.len() {
        return Err(Error::invalid("ids and documents differ in length"));
    }
    let k = config.k;
    let alpha = config.alpha();
    if k == 0 {
        return Err(Error::invalid("topic count must be at least 1"));
    }
    if !(alpha > 0.0 && alpha.is_finite() && config.beta > 0.0 && config.beta.is_finite()) {
        return Err(Error::invalid("alpha and beta must be positive"));
    }
    let total: usize = docs.iter().map(Vec::len).sum();
    if k > total {
        return Err(Error::invalid(format!("{k} topics exceed the {total} tokens in the corpus")));
    }
    let vocab = Vocabulary::build(docs.iter().map(Vec::as_slice), 1)?;
    let word_ids: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().map(|w| vocab.index(w).expect("built from docs")).collect())
        .collect();
    let mut state = GibbsState::new(word_ids, vocab.len(), k, alpha, config.beta, config.seed);
    let check = cfg!(debug_assertions) && total <= 10_000;
    let averaged = config.average_last.min(config.sweeps);
    let mut phi_acc = vec![vec![0.0; vocab.len()]; k];
    let mut theta_acc = vec![vec![0.0; k]; docs.len()];
    for s in 0..config.sweeps {
        state.sweep();
        if check {
            debug_assert!(state.counts_consistent(), "count cache drifted at sweep {s}");
        }
        if averaged > 0 && s >= config.sweeps - averaged {
            add_into(&mut phi_acc, &state.phi());
            add_into(&mut theta_acc, &state.theta());
        }
    }
    let (phi, theta) = if averaged > 0 {
        let f = 1.0 / averaged as f64;
        let norm = |m: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.into_iter()
                .map(|row| {
                    let row: Vec<f64> = row.iter().map(|x| x * f).collect();
                    let s: f64 = row.iter().sum();
                    row.iter().map(|x| x / s).collect()
                })
                .collect()
        };
        (norm(phi_acc), norm(theta_acc))
    } else {
        (state.phi(), state.theta())
    };
    Ok(TopicModel {
        k,
        alpha,
        beta: config.beta,
        vocab: vocab.words().to_vec(),
        phi,
        theta,
        z: state.z,
        doc_ids: ids.to_vec(),
        seed: config.seed,
    })
}

/// Fit on a preprocessed corpus; stop words should be kept.
pub fn fit_lda(corpus: &Corpus, config: &LdaConfig) -> Result<TopicModel> {
    let ids: Vec<String> = corpus.tweets().iter().map(|t| t.id.clone()).collect();
    let docs: Vec<Vec<String>> = corpus.tweets().iter().map(|t| t.tokens.clone()).collect();
    fit_lda_docs(&ids, &docs, config)
}

/// One model per topic count, returned in input order.
pub fn sweep_topic_counts(corpus: &Corpus, ks: &[usize], config: &LdaConfig) -> Result<Vec<(usize, TopicModel)>> {
    ks.par_iter()
        .map(|&k| fit_lda(corpus, &LdaConfig { k, ..config.clone() }).map(|m| (k, m)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAnnotation {
    pub tweet_id: String,
    pub tokens: Vec<(String, usize)>,
}

impl TopicAnnotation {
    /// `word(k)` per token, space separated.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (w, k)) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{w}({k})");
        }
        out
    }
}

impl TopicModel {
    /// The `n` highest-probability words, ties lexicographic.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
        let row = self
            .phi
            .get(topic)
            .ok_or_else(|| Error::invalid(format!("topic {topic} out of range 0..{}", self.k)))?;
        let mut ranked: Vec<(String, f64)> = self.vocab.iter().cloned().zip(row.iter().copied()).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(n);
        Ok(ranked)
    }

    fn doc_index(&self, tweet_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|id| id == tweet_id)
    }

    /// Final assignment of every token of a training tweet.
    pub fn annotate(&self, tweet_id: &str, tokens: &[String]) -> Result<TopicAnnotation> {
        let d = self
            .doc_index(tweet_id)
            .ok_or_else(|| Error::invalid(format!("tweet {tweet_id:?} was not in the training corpus")))?;
        if tokens.len() != self.z[d].len() {
            return Err(Error::invalid(format!("tweet {tweet_id:?} tokens differ from training")));
        }
        Ok(TopicAnnotation {
            tweet_id: tweet_id.to_string(),
            tokens: tokens.iter().cloned().zip(self.z[d].iter().copied()).collect(),
        })
    }

    /// Annotations for every tweet of the training corpus.
    pub fn annotate_corpus(&self, corpus: &Corpus) -> Result<Vec<TopicAnnotation>> {
        corpus.tweets().iter().map(|t| self.annotate(&t.id, &t.tokens)).collect()
    }

    /// Ids of tweets where `word` was assigned `topic`.
    pub fn search(&self, corpus: &Corpus, word: &str, topic: usize) -> Vec<String> {
        corpus
            .tweets()
            .iter()
            .filter(|t| {
                self.doc_index(&t.id).is_some_and(|d| {
                    t.tokens.len() == self.z[d].len()
                        && t.tokens.iter().zip(&self.z[d]).any(|(w, &k)| w == word && k == topic)
                })
            })
            .map(|t| t.id.clone())
            .collect()
    }

    /// Map from tweet id to row of `theta`.
    pub fn theta_by_id(&self) -> HashMap<&str, &[f64]> {
        self.doc_ids.iter().map(String::as_str).zip(self.theta.iter().map(Vec::as_slice)).collect()
    }
}

/// Tab-separated `K topic rank word probability` rows after a header.
pub fn write_topic_report<W: Write>(models: &[(usize, TopicModel)], top_n: usize, mut out: W) -> Result<()> {
    writeln!(out, "K\ttopic\trank\tword\tprobability")?;
    for (k, model) in models {
        for topic in 0..model.k {
            for (rank, (word, p)) in model.top_words(topic, top_n)?.iter().enumerate() {
                writeln!(out, "{k}\t{topic}\t{}\t{word}\t{p:.6}", rank + 1)?;
            }
        }
    }
    Ok(())
}

pub fn write_annotations<W: Write>(annotations: &[TopicAnnotation], mut out: W) -> Result<()> {
    for a in annotations {
        serde_json::to_writer(&mut out, a)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::{Label, Tweet};

    /// Half the documents use words `a0..a19`, the rest `b0..b19`.
    pub(crate) fn disjoint_docs(seed: u64) -> (Vec<String>, Vec<Vec<String>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ids = Vec::new();
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for d in 0..200 {
            let group = d % 2;
            let prefix = if group == 0 { "a" } else { "b" };
            ids.push(format!("d{d}"));
            docs.push((0..15).map(|_| format!("{prefix}{}", rng.random_range(0..20))).collect());
            labels.push(group);
        }
        (ids, docs, labels)
    }

    #[test]
    fn conditional_by_hand() {
        assert!((conditional_weight(2.0, 3.0, 10.0, 4, 1.0, 0.5) - 0.875).abs() < 1e-12);
        assert!((conditional_weight(0.0, 0.0, 5.0, 4, 1.0, 0.5) - 0.5 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn single_word_single_topic() {
        let cfg = LdaConfig { k: 1, sweeps: 5, ..Default::default() };
        let m = fit_lda_docs(&["x".into()], &[vec!["w".into()]], &cfg).unwrap();
        assert_eq!(m.phi, vec![vec![1.0]]);
        assert_eq!(m.theta, vec![vec![1.0]]);
        let top = m.top_words(0, 3).unwrap();
        assert_eq!(top, vec![("w".to_string(), 1.0)]);
    }

    #[test]
    fn errors() {
        let cfg = LdaConfig { k: 3, sweeps: 1, ..Default::default() };
        assert!(fit_lda_docs(&[], &[], &cfg).is_err());
        assert!(fit_lda_docs(&["x".into()], &[vec!["a".into(), "b".into()]], &cfg).is_err());
        let cfg = LdaConfig { k: 0, ..cfg };
        assert!(fit_lda_docs(&["x".into()], &[vec!["a".into()]], &cfg).is_err());
    }

    #[test]
    fn recovers_disjoint_vocabularies() {
        let (ids, docs, _) = disjoint_docs(11);
        let cfg = LdaConfig { k: 2, sweeps: 200, seed: 5, ..Default::default() };
        let m = fit_lda_docs(&ids, &docs, &cfg).unwrap();
        for t in 0..2 {
            let top = m.top_words(t, 10).unwrap();
            let first = top[0].0.chars().next().unwrap();
            assert!(top.iter().all(|(w, _)| w.starts_with(first)), "{top:?}");
            assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
        }
        for row in m.phi.iter().chain(&m.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn counts_stay_consistent() {
        let (_, docs, _) = disjoint_docs(2);
        let vocab = Vocabulary::build(docs.iter().map(Vec::as_slice), 1).unwrap();
        let ids: Vec<Vec<usize>> = docs
            .iter()
            .map(|d| d.iter().map(|w| vocab.index(w).unwrap()).collect())
            .collect();
        let mut s = GibbsState::new(ids, vocab.len(), 4, 0.5, 0.1, 9);
        for _ in 0..5 {
            s.sweep();
            assert!(s.counts_consistent());
            assert!(s.assignments().iter().flatten().all(|&t| t < 4));
        }
    }

    #[test]
    fn reproducible_and_averaging() {
        let (ids, docs, _) = disjoint_docs(4);
        let cfg = LdaConfig { k: 3, sweeps: 20, seed: 8, ..Default::default() };
        let a = fit_lda_docs(&ids, &docs, &cfg).unwrap();
        let b = fit_lda_docs(&ids, &docs, &cfg).unwrap();
        assert_eq!(a, b);
        let avg = fit_lda_docs(&ids, &docs, &LdaConfig { average_last: 10, ..cfg }).unwrap();
        assert_eq!(avg.z, a.z);
        for row in avg.phi.iter().chain(&avg.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }

    fn small_corpus() -> Corpus {
        let texts = ["pray for the victims", "the victims need help", "peace now please"];
        Corpus::from_tweets(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Tweet::new(format!("{}", i + 1), *t, Label::Unlabeled).preprocessed()),
        )
        .unwrap()
    }

    #[test]
    fn annotation_and_search() {
        let c = small_corpus();
        let m = fit_lda(&c, &LdaConfig { k: 2, sweeps: 10, ..Default::default() }).unwrap();
        let t = &c.tweets()[0];
        let a = m.annotate(&t.id, &t.tokens).unwrap();
        assert_eq!(a, m.annotate(&t.id, &t.tokens).unwrap());
        assert_eq!(a.tokens.len(), 4);
        assert!(a.tokens.iter().all(|(_, k)| *k < 2));
        let k = a.tokens[3].1;
        assert!(a.render().contains(&format!("victims({k})")));
        assert!(m.search(&c, "victims", k).contains(&"1".to_string()));
        assert!(m.search(&c, "victims", 7).is_empty());
        assert!(m.annotate("99", &[]).is_err());
        assert!(m.top_words(2, 1).is_err());
        let mut buf = Vec::new();
        write_annotations(&m.annotate_corpus(&c).unwrap(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn sweep_keeps_input_order() {
        let c = small_corpus();
        let cfg = LdaConfig { sweeps: 5, ..Default::default() };
        let models = sweep_topic_counts(&c, &[3, 1, 2], &cfg).unwrap();
        assert_eq!(models.iter().map(|m| m.0).collect::<Vec<_>>(), vec![3, 1, 2]);
        assert_eq!(models[1].1.k, 1);
        let mut buf = Vec::new();
        write_topic_report(&models, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "K\ttopic\trank\tword\tprobability");
        assert_eq!(rows.len(), 1 + (3 + 1 + 2) * 2);
        assert!(rows[1].starts_with("3\t0\t1\t"));
    }
}
