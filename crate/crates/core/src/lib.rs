//! Rare-class short-text mining toolkit.
//!
//! The pipeline runs from raw tweet dumps to classifiers for a severely
//! under-represented positive class:
//!
//! * [`corpus`]: ingestion, language filtering, dedup, tokenization, subsampling
//! * [`lexicon`]: seed-word bootstrapping of a keyword lexicon
//! * [`embedding`]: skip-gram word vectors and Dirichlet-process clustering
//! * [`features`]: n-gram, NB-SVM and mean/std pooled embedding features
//! * [`topics`]: LDA by collapsed Gibbs sampling
//! * [`classify`]: linear classifiers, metrics and repeated cross-validation
//! * [`relabel`]: the false-positive review loop
//! * [`bench`]: the feature-set × classifier benchmark matrix

pub mod bench;
pub mod classify;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod features;
pub mod lexicon;
pub mod relabel;
pub mod topics;

pub use error::{Error, Result};
