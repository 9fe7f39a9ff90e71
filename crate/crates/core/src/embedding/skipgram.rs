//! Skip-gram training with a hierarchical softmax output layer.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::huffman::HuffmanTree;
use super::vocab::Vocabulary;
use super::EmbeddingModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    pub dim: usize,
    /// Context radius.
    pub window: usize,
    pub epochs: usize,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample_t: f64,
    pub min_count: u64,
    pub learning_rate: f64,
    /// Draw the effective radius uniformly from `1..=window` per position.
    pub shrink_window: bool,
    /// More than one thread trains lock-free and is not reproducible.
    pub threads: usize,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            epochs: 5,
            subsample_t: 1e-3,
            min_count: 1,
            learning_rate: 0.025,
            shrink_window: true,
            threads: 1,
            seed: 1,
        }
    }
}

/// Hierarchical softmax output layer: one vector per inner tree node.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalSoftmax {
    pub tree: HuffmanTree,
    pub node_vectors: Vec<f64>,
    pub dim: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl HierarchicalSoftmax {
    /// `p(word | hidden)` as the product of branch probabilities on the
    /// word's path.
    pub fn probability(&self, hidden: &[f64], word: usize) -> f64 {
        self.tree
            .path(word)
            .iter()
            .zip(self.tree.code(word))
            .map(|(&node, &bit)| {
                let v = &self.node_vectors[node * self.dim..(node + 1) * self.dim];
                let x: f64 = hidden.iter().zip(v).map(|(a, b)| a * b).sum();
                if bit == 0 {
                    sigmoid(x)
                } else {
                    sigmoid(-x)
                }
            })
            .product()
    }
}

/// Discard probability `max(0, 1 - sqrt(t / f))` for a word of corpus
/// frequency fraction `f`.
pub fn discard_probability(frequency: f64, t: f64) -> f64 {
    if t <= 0.0 || frequency <= 0.0 {
        return 0.0;
    }
    (1.0 - (t / frequency).sqrt()).max(0.0)
}

/// `(center, context)` pairs for a fixed radius.
pub fn context_pairs<T: Clone>(sentence: &[T], window: usize) -> Vec<(T, T)> {
    let mut pairs = Vec::new();
    for (i, center) in sentence.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(sentence.len() - 1);
        for j in lo..=hi {
            if j != i {
                pairs.push((center.clone(), sentence[j].clone()));
            }
        }
    }
    pairs
}

/// Shared-weight access. Sequential training uses `Cell`, parallel training
/// uses relaxed atomics for lock-free updates.
trait Weights {
    fn get(&self, i: usize) -> f64;
    fn set(&self, i: usize, v: f64);
}

struct CellWeights<'a>(&'a [Cell<f64>]);

impl Weights for CellWeights<'_> {
    fn get(&self, i: usize) -> f64 {
        self.0[i].get()
    }
    fn set(&self, i: usize, v: f64) {
        self.0[i].set(v)
    }
}

struct AtomicWeights<'a>(&'a [AtomicU64]);

impl Weights for AtomicWeights<'_> {
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.0[i].load(Ordering::Relaxed))
    }
    fn set(&self, i: usize, v: f64) {
        self.0[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

struct Trainer<'a, W: Weights> {
    vectors: W,
    nodes: W,
    tree: &'a HuffmanTree,
    vocab: &'a Vocabulary,
    config: &'a SkipGramConfig,
    total_words: f64,
}

impl<W: Weights> Trainer<'_, W> {
    fn learning_rate(&self, processed: u64) -> f64 {
        let start = self.config.learning_rate;
        let progress = processed as f64 / (self.total_words + 1.0);
        (start * (1.0 - progress)).max(start * 1e-4)
    }

    fn train_pair(&self, center: usize, context: usize, alpha: f64, grad: &mut [f64]) {
        let d = self.config.dim;
        let h = center * d;
        grad.fill(0.0);
        for (&node, &bit) in self.tree.path(context).iter().zip(self.tree.code(context)) {
            let n = node * d;
            let mut x = 0.0;
            for k in 0..d {
                x += self.vectors.get(h + k) * self.nodes.get(n + k);
            }
            let g = (1.0 - bit as f64 - sigmoid(x)) * alpha;
            for (k, gk) in grad.iter_mut().enumerate() {
                *gk += g * self.nodes.get(n + k);
            }
            for k in 0..d {
                self.nodes.set(n + k, self.nodes.get(n + k) + g * self.vectors.get(h + k));
            }
        }
        for (k, gk) in grad.iter().enumerate() {
            self.vectors.set(h + k, self.vectors.get(h + k) + gk);
        }
    }

    /// Train on one sentence; returns the number of in-vocabulary tokens seen.
    fn train_sentence(
        &self,
        sentence: &[String],
        processed: u64,
        rng: &mut ChaCha8Rng,
        ids: &mut Vec<usize>,
        grad: &mut [f64],
    ) -> u64 {
        ids.clear();
        let mut seen = 0;
        for tok in sentence {
            let Some(w) = self.vocab.index(tok) else { continue };
            seen += 1;
            let p = discard_probability(self.vocab.frequency(w), self.config.subsample_t);
            if p > 0.0 && rng.random::<f64>() < p {
                continue;
            }
            ids.push(w);
        }
        let alpha = self.learning_rate(processed);
        let window = self.config.window;
        for pos in 0..ids.len() {
            let radius = if self.config.shrink_window && window > 1 {
                window - rng.random_range(0..window)
            } else {
                window
            };
            let lo = pos.saturating_sub(radius);
            let hi = (pos + radius).min(ids.len() - 1);
            for c in lo..=hi {
                if c != pos {
                    self.train_pair(ids[pos], ids[c], alpha, grad);
                }
            }
        }
        seen
    }
}

fn init_vectors(v: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = 0.5 / d as f64;
    (0..v * d).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale).collect()
}

/// Train skip-gram vectors over token sequences.
pub fn train_skipgram(sentences: &[&[String]], config: &SkipGramConfig) -> Result<EmbeddingModel> {
    if config.dim == 0 {
        return Err(Error::invalid("embedding dimension must be at least 1"));
    }
    if config.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    let vocab = Vocabulary::build(sentences.iter().copied(), config.min_count)?;
    if vocab.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 distinct words to train, found {}",
            vocab.len()
        )));
    }
    let tree = HuffmanTree::build(vocab.counts());
    let d = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut vectors = init_vectors(vocab.len(), d, &mut rng);
    let mut nodes = vec![0.0; tree.inner_nodes() * d];
    let total_words = (vocab.total_tokens() * config.epochs as u64) as f64;

    if config.threads <= 1 {
        let trainer = Trainer {
            vectors: CellWeights(Cell::from_mut(vectors.as_mut_slice()).as_slice_of_cells()),
            nodes: CellWeights(Cell::from_mut(nodes.as_mut_slice()).as_slice_of_cells()),
            tree: &tree,
            vocab: &vocab,
            config,
            total_words,
        };
        let mut processed = 0;
        let mut ids = Vec::new();
        let mut grad = vec![0.0; d];
        for _ in 0..config.epochs {
            for s in sentences {
                processed += trainer.train_sentence(s, processed, &mut rng, &mut ids, &mut grad);
            }
        }
    } else {
        let to_atomic = |v: &[f64]| -> Vec<AtomicU64> {
            v.iter().map(|x| AtomicU64::new(x.to_bits())).collect()
        };
        let shared_vectors = to_atomic(&vectors);
        let shared_nodes = to_atomic(&nodes);
        let trainer = Trainer {
            vectors: AtomicWeights(&shared_vectors),
            nodes: AtomicWeights(&shared_nodes),
            tree: &tree,
            vocab: &vocab,
            config,
            total_words,
        };
        let processed = AtomicU64::new(0);
        let chunk = sentences.len().div_ceil(config.threads).max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?;
        for epoch in 0..config.epochs {
            pool.install(|| {
                sentences.par_chunks(chunk).enumerate().for_each(|(shard, part)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(
                        config.seed ^ ((epoch as u64) << 32) ^ (shard as u64 + 1),
                    );
                    let mut ids = Vec::new();
                    let mut grad = vec![0.0; d];
                    for s in part {
                        let p = processed.load(Ordering::Relaxed);
                        let seen = trainer.train_sentence(s, p, &mut rng, &mut ids, &mut grad);
                        processed.fetch_add(seen, Ordering::Relaxed);
                    }
                });
            });
        }
        let from_atomic =
            |v: &[AtomicU64]| -> Vec<f64> { v.iter().map(|x| f64::from_bits(x.load(Ordering::Relaxed))).collect() };
        vectors = from_atomic(&shared_vectors);
        nodes = from_atomic(&shared_nodes);
    }

    if vectors.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("training diverged to non-finite vectors"));
    }
    Ok(EmbeddingModel {
        vocab,
        vectors,
        dim: d,
        config: Some(config.clone()),
        output: Some(HierarchicalSoftmax {
            tree,
            node_vectors: nodes,
            dim: d,
        }),
    })
}
