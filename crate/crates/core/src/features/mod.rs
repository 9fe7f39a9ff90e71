//! Classifier inputs: relative-frequency n-gram vectors, NB-SVM log-count
//! ratio features and mean/std pooling of word vectors.

mod matrix;
mod nbsvm;
mod pipeline;
mod pooling;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub use matrix::{read_sparse_matrix, write_sparse_matrix};
pub use nbsvm::{nbsvm_fit, NbSvmTransform};
pub use pipeline::{featurize_split, FeatureOptions, SplitFeatures};
pub use pooling::{pool_mean, pool_mean_std, PooledFeatures};

/// Joins the tokens of a multi-word gram.
pub const GRAM_SEPARATOR: char = '▸';

static STOPWORDS_TXT: &str = include_str!("stopwords.txt");

/// The shipped English stop list.
pub fn default_stopwords() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS_TXT.lines().map(str::to_string).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizerConfig {
    orders: BTreeSet<usize>,
    remove_stopwords: bool,
    stopwords: HashSet<String>,
}

impl FeaturizerConfig {
    /// Stop-word removal is only allowed for pure unigram features.
    pub fn new(orders: impl IntoIterator<Item = usize>, remove_stopwords: bool) -> Result<Self> {
        Self::with_stopwords(orders, remove_stopwords, default_stopwords().clone())
    }

    pub fn with_stopwords(
        orders: impl IntoIterator<Item = usize>,
        remove_stopwords: bool,
        stopwords: HashSet<String>,
    ) -> Result<Self> {
        let orders: BTreeSet<usize> = orders.into_iter().collect();
        if orders.is_empty() || orders.iter().any(|&n| !(1..=3).contains(&n)) {
            return Err(Error::invalid("n-gram orders must be a non-empty subset of {1,2,3}"));
        }
        if remove_stopwords && orders.iter().ne([1].iter()) {
            return Err(Error::invalid("stop-word removal requires orders = {1}"));
        }
        Ok(Self {
            orders,
            remove_stopwords,
            stopwords,
        })
    }

    pub fn orders(&self) -> &BTreeSet<usize> {
        &self.orders
    }

    pub fn remove_stopwords(&self) -> bool {
        self.remove_stopwords
    }

    /// All grams of the configured orders, in order of appearance.
    pub fn grams(&self, tokens: &[String]) -> Vec<String> {
        let kept: Vec<&str> = tokens
            .iter()
            .map(String::as_str)
            .filter(|t| !self.remove_stopwords || !self.stopwords.contains(*t))
            .collect();
        let sep = GRAM_SEPARATOR.to_string();
        let mut out = Vec::new();
        for &n in &self.orders {
            if kept.len() >= n {
                out.extend(kept.windows(n).map(|w| w.join(&sep)));
            }
        }
        out
    }
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self::new([1, 2], false).expect("valid")
    }
}

/// Gram → column id. Append-only while building, frozen for test data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureRegistry {
    ids: HashMap<String, usize>,
    names: Vec<String>,
    frozen: bool,
}

impl FeatureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    /// Registers unseen names unless frozen.
    pub fn lookup_or_insert(&mut self, name: &str) -> Option<usize> {
        if let Some(&id) = self.ids.get(name) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let id = self.names.len();
        self.ids.insert(name.to_string(), id);
        self.names.push(name.to_string());
        Some(id)
    }
}

/// Sorted `(id, weight)` entries without zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Duplicate ids are summed; zero results are dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for (id, w) in entries {
            *map.entry(id).or_insert(0.0) += w;
        }
        Self {
            entries: map.into_iter().filter(|&(_, w)| w != 0.0).collect(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self {
            entries: values
                .iter()
                .enumerate()
                .filter(|&(_, &w)| w != 0.0)
                .map(|(i, &w)| (i, w))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: usize) -> f64 {
        self.entries
            .binary_search_by_key(&id, |e| e.0)
            .map_or(0.0, |i| self.entries[i].1)
    }

    /// Largest id plus one, or 0.
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0 + 1)
    }

    /// Dot product with a dense vector; ids past its end count as zero.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.0 < dense.len())
            .map(|&(i, w)| w * dense[i])
            .sum()
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_entries(self.entries.iter().map(|&(i, w)| (i, w * factor)))
    }
}

/// Relative gram frequencies. Unknown grams are registered unless the
/// registry is frozen, in which case they only count toward the total.
pub fn ngram_featurize(tokens: &[String], config: &FeaturizerConfig, registry: &mut FeatureRegistry) -> SparseVector {
    let grams = config.grams(tokens);
    if grams.is_empty() {
        return SparseVector::new();
    }
    let total = grams.len() as f64;
    SparseVector::from_entries(
        grams
            .iter()
            .filter_map(|g| registry.lookup_or_insert(g))
            .map(|id| (id, 1.0 / total))
            .collect::<Vec<_>>(),
    )
}

/// The feature set used for one experiment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FeatureSpec {
    Ngrams(Vec<usize>),
    NbSvm(Vec<usize>),
    Mu,
    MuSigma,
}

impl FeatureSpec {
    pub fn uses_embeddings(&self) -> bool {
        matches!(self, Self::Mu | Self::MuSigma)
    }
}

fn parse_orders(s: &str) -> Result<Vec<usize>> {
    let orders: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::invalid(format!("bad n-gram orders {s:?}")))?;
    FeaturizerConfig::new(orders.iter().copied(), false)?;
    let set: BTreeSet<usize> = orders.into_iter().collect();
    Ok(set.into_iter().collect())
}

impl FromStr for FeatureSpec {
    type Err = Error;

    /// `mu`, `mu-sigma`, `nbsvm`, `nbsvm:1,2`, `ngrams:1,2`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(Self::Mu),
            "mu-sigma" => Ok(Self::MuSigma),
            "nbsvm" => Ok(Self::NbSvm(vec![1, 2])),
            _ => {
                if let Some(rest) = s.strip_prefix("ngrams:") {
                    Ok(Self::Ngrams(parse_orders(rest)?))
                } else if let Some(rest) = s.strip_prefix("nbsvm:") {
                    Ok(Self::NbSvm(parse_orders(rest)?))
                } else {
                    Err(Error::invalid(format!("unknown feature set {s:?}")))
                }
            }
        }
    }
}

fn join_orders(o: &[usize]) -> String {
    o.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ngrams(o) => write!(f, "ngrams:{}", join_orders(o)),
            Self::NbSvm(o) if o == &[1, 2] => write!(f, "nbsvm"),
            Self::NbSvm(o) => write!(f, "nbsvm:{}", join_orders(o)),
            Self::Mu => write!(f, "mu"),
            Self::MuSigma => write!(f, "mu-sigma"),
        }
    }
}
