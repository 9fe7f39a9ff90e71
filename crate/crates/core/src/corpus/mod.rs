//! Tweet corpora: ingestion, language filtering, deduplication,
//! tokenization and stratified subsampling.

mod ingest;
pub mod langid;
pub mod preprocess;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{
    ingest_jsonl, ingest_sentiment140, parse_jsonl, parse_sentiment140, write_jsonl, IngestReport,
    JsonlRecord,
};
pub use langid::{detect_language, LanguageIdentifier, LanguageProfile};
pub use preprocess::{preprocess, URL_TAG, USER_TAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Label::Unlabeled
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            "unlabeled" => Ok(Label::Unlabeled),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub raw_text: String,
    /// Empty until the corpus is preprocessed.
    #[serde(default)]
    pub tokens: Vec<String>,
    pub label: Label,
    #[serde(default)]
    pub source: String,
}

impl Tweet {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>, label: Label) -> Self {
        Self {
            id: id.into(),
            raw_text: raw_text.into(),
            tokens: Vec::new(),
            label,
            source: String::new(),
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    /// Tokenize `raw_text` in place.
    pub fn preprocessed(mut self) -> Self {
        self.tokens = preprocess(&self.raw_text);
        self
    }
}

/// An ordered, id-unique collection of tweets with a maintained class tally.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    class_counts: BTreeMap<Label, usize>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails on the first duplicate id.
    pub fn from_tweets(tweets: impl IntoIterator<Item = Tweet>) -> Result<Self> {
        let mut corpus = Self::new();
        for t in tweets {
            corpus.push(t)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, tweet: Tweet) -> Result<()> {
        if self.index.contains_key(&tweet.id) {
            return Err(Error::invalid(format!("duplicate tweet id {:?}", tweet.id)));
        }
        self.index.insert(tweet.id.clone(), self.tweets.len());
        *self.class_counts.entry(tweet.label).or_insert(0) += 1;
        self.tweets.push(tweet);
        Ok(())
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn into_tweets(self) -> Vec<Tweet> {
        self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Tweet> {
        self.index.get(id).map(|&i| &self.tweets[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn class_counts(&self) -> &BTreeMap<Label, usize> {
        &self.class_counts
    }

    pub fn count(&self, label: Label) -> usize {
        self.class_counts.get(&label).copied().unwrap_or(0)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.tweets.iter().map(|t| t.label).collect()
    }

    /// Relabel a tweet, returning the previous label. Only the relabeling
    /// engine mutates labels of a built corpus.
    pub(crate) fn set_label(&mut self, id: &str, label: Label) -> Option<Label> {
        let &i = self.index.get(id)?;
        let old = std::mem::replace(&mut self.tweets[i].label, label);
        if old != label {
            if let Some(n) = self.class_counts.get_mut(&old) {
                *n -= 1;
                if *n == 0 {
                    self.class_counts.remove(&old);
                }
            }
            *self.class_counts.entry(label).or_insert(0) += 1;
        }
        Some(old)
    }

    /// Tokenize every tweet.
    pub fn preprocessed(mut self) -> Self {
        use rayon::prelude::*;
        self.tweets
            .par_iter_mut()
            .for_each(|t| t.tokens = preprocess(&t.raw_text));
        self
    }

    pub fn is_preprocessed(&self) -> bool {
        self.tweets
            .iter()
            .all(|t| !t.tokens.is_empty() || preprocess(&t.raw_text).is_empty())
    }

    /// Keep the tweets satisfying `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&Tweet) -> bool) -> Corpus {
        Corpus::from_tweets(self.tweets.iter().filter(|t| keep(t)).cloned())
            .expect("subset of a valid corpus has unique ids")
    }

    pub fn token_sequences(&self) -> Vec<&[String]> {
        self.tweets.iter().map(|t| t.tokens.as_slice()).collect()
    }
}

/// Dedup key: lowercase with whitespace runs collapsed to one space.
pub fn dedup_key(raw_text: &str) -> String {
    raw_text
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Keep the first tweet per [`dedup_key`], preserving order.
pub fn dedup(corpus: &Corpus) -> Corpus {
    let mut seen = HashSet::new();
    corpus.filter(|t| seen.insert(dedup_key(&t.raw_text)))
}

/// Keep tweets identified as `lang` with at least `min_score`.
pub fn language_filter(
    corpus: &Corpus,
    identifier: &LanguageIdentifier,
    lang: &str,
    min_score: f64,
) -> Corpus {
    corpus.filter(|t| {
        matches!(identifier.detect(&t.raw_text), Ok((code, score)) if code == lang && score >= min_score)
    })
}

/// Per-class uniform sampling without replacement of `round(fraction * n_class)`
/// tweets. The sample keeps corpus order.
pub fn stratified_subsample(corpus: &Corpus, fraction: f64, seed: u64) -> Result<Corpus> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction {fraction} not in (0, 1]")));
    }
    if corpus.count(Label::Unlabeled) > 0 {
        return Err(Error::invalid("stratified subsample needs a fully labeled corpus"));
    }
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; corpus.len()];
    for (&label, &n) in corpus.class_counts() {
        let take = (fraction * n as f64).round() as usize;
        if take == 0 {
            return Err(Error::invalid(format!(
                "fraction {fraction} leaves no {label} tweets (class has {n})"
            )));
        }
        let members: Vec<usize> = corpus
            .tweets
            .iter()
            .enumerate()
            .filter(|(_, t)| t.label == label)
            .map(|(i, _)| i)
            .collect();
        for j in rand::seq::index::sample(&mut rng, n, take) {
            keep[members[j]] = true;
        }
    }
    let mut i = 0;
    Ok(corpus.filter(|_| {
        let k = keep[i];
        i += 1;
        k
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus_of(texts: &[&str]) -> Corpus {
        Corpus::from_tweets(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Tweet::new(i.to_string(), *t, Label::Unlabeled)),
        )
        .unwrap()
    }

    fn labeled(pos: usize, neg: usize) -> Corpus {
        Corpus::from_tweets((0..pos + neg).map(|i| {
            let label = if i < pos { Label::Positive } else { Label::Negative };
            Tweet::new(format!("t{i}"), format!("text {i}"), label)
        }))
        .unwrap()
    }

    #[test]
    fn dedup_normalizes_case_and_whitespace() {
        let c = corpus_of(&["Peace now", "peace   NOW"]);
        let d = dedup(&c);
        assert_eq!(d.len(), 1);
        assert_eq!(d.tweets()[0].id, "0");
    }

    #[test]
    fn dedup_keeps_distinct_texts() {
        assert_eq!(dedup(&corpus_of(&["peace", "peace URL"])).len(), 2);
        let unique = corpus_of(&["a", "b", "c"]);
        assert_eq!(dedup(&unique), unique);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut c = Corpus::new();
        c.push(Tweet::new("1", "a", Label::Unlabeled)).unwrap();
        assert!(c.push(Tweet::new("1", "b", Label::Unlabeled)).is_err());
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn subsample_counts_per_class() {
        let c = labeled(1000, 1000);
        let s = stratified_subsample(&c, 0.1, 7).unwrap();
        assert_eq!(s.count(Label::Positive), 100);
        assert_eq!(s.count(Label::Negative), 100);
    }

    #[test]
    fn subsample_full_fraction_is_identity() {
        let c = labeled(5, 7);
        assert_eq!(stratified_subsample(&c, 1.0, 3).unwrap(), c);
    }

    #[test]
    fn subsample_is_seeded() {
        let c = labeled(300, 200);
        let a = stratified_subsample(&c, 0.2, 11).unwrap();
        let b = stratified_subsample(&c, 0.2, 11).unwrap();
        let other = stratified_subsample(&c, 0.2, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn subsample_errors() {
        let c = labeled(10, 1000);
        assert!(stratified_subsample(&c, 0.01, 0).is_err());
        assert!(stratified_subsample(&c, 0.0, 0).is_err());
        assert!(stratified_subsample(&c, 1.5, 0).is_err());
        let mut u = labeled(3, 3);
        u.push(Tweet::new("u", "x", Label::Unlabeled)).unwrap();
        assert!(stratified_subsample(&u, 0.5, 0).is_err());
    }

    #[test]
    fn set_label_keeps_counts() {
        let mut c = labeled(2, 3);
        assert_eq!(c.set_label("t3", Label::Positive), Some(Label::Negative));
        assert_eq!(c.count(Label::Positive), 3);
        assert_eq!(c.count(Label::Negative), 2);
        assert_eq!(c.set_label("nope", Label::Positive), None);
    }

    #[test]
    fn language_filter_keeps_english() {
        let c = corpus_of(&[
            "we need to be united beyond the borders of religion",
            "tunahitaji kuwa na umoja na amani katika nchi yetu",
        ]);
        let en = language_filter(&c, &LanguageIdentifier::builtin(), "en", 0.0);
        assert_eq!(en.len(), 1);
        assert_eq!(en.tweets()[0].id, "0");
    }

    fn recount(c: &Corpus) -> BTreeMap<Label, usize> {
        let mut m = BTreeMap::new();
        for t in c.tweets() {
            *m.entry(t.label).or_insert(0) += 1;
        }
        m
    }

    proptest! {
        #[test]
        fn dedup_is_idempotent(texts in proptest::collection::vec("[ab ]{0,4}", 0..30)) {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let c = corpus_of(&refs);
            let once = dedup(&c);
            prop_assert!(once.len() <= c.len());
            prop_assert_eq!(dedup(&once), once);
        }

        #[test]
        fn subsample_preserves_proportions(pos in 1usize..200, neg in 1usize..200, frac in 0.05f64..1.0, seed in 0u64..1000) {
            let c = labeled(pos, neg);
            if let Ok(s) = stratified_subsample(&c, frac, seed) {
                for (label, n) in [(Label::Positive, pos), (Label::Negative, neg)] {
                    let want = frac * n as f64;
                    prop_assert!((s.count(label) as f64 - want).abs() <= 1.0);
                }
                prop_assert_eq!(s.class_counts(), &recount(&s));
            }
        }

        #[test]
        fn relabeling_keeps_tally(flips in proptest::collection::vec((0usize..20, any::<bool>()), 0..40)) {
            let mut c = labeled(10, 10);
            for (i, pos) in flips {
                let label = if pos { Label::Positive } else { Label::Negative };
                c.set_label(&format!("t{i}"), label);
            }
            prop_assert_eq!(c.class_counts(), &recount(&c));
        }
    }
}
