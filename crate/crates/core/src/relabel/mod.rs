//! The false-positive review loop: score the corpus, queue labeled
//! negatives the classifier calls positive, apply human (or simulated)
//! decisions, retrain.

mod audit;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{stratified_folds, Dataset, TrainerSpec};
use crate::corpus::{Corpus, Label};
use crate::embedding::{train_skipgram, EmbeddingModel, SkipGramConfig};
use crate::error::{Error, Result};
use crate::features::{featurize_split, FeatureOptions, FeatureSpec};
use crate::lexicon::Lexicon;
use crate::topics::TopicModel;

pub use audit::{read_audit_log, replay, write_audit_entry, AuditEntry, SessionStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decider {
    Human,
    OracleSim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub tweet_id: String,
    pub text: String,
    pub score: f64,
    pub current_label: Label,
    pub predicted_label: Label,
    pub iteration: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topic_annotation: Option<String>,
    #[serde(default)]
    pub lexicon_hits: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub tweet_id: String,
    pub new_label: Label,
    pub decider: Decider,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl ReviewDecision {
    pub fn now(tweet_id: impl Into<String>, new_label: Label, decider: Decider) -> Self {
        Self {
            tweet_id: tweet_id.into(),
            new_label,
            decider,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub tp: usize,
    pub fp: usize,
    /// Queued items flipped to positive so far.
    pub accepted: usize,
    pub total_positives: usize,
    pub queued: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ApplyReport {
    pub applied: usize,
    pub rejected: usize,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelabelConfig {
    pub features: FeatureSpec,
    pub trainer: TrainerSpec,
    pub feature_options: FeatureOptions,
    pub embedding: SkipGramConfig,
    /// Score each tweet with a model that did not train on it; 0 scores in-sample.
    pub score_folds: usize,
    /// Longest queue per iteration; `None` queues every disagreement.
    pub review_budget: Option<usize>,
    /// Also queue labeled positives the classifier rejects.
    pub include_false_negatives: bool,
    pub seed: u64,
}

impl RelabelConfig {
    pub fn new(features: FeatureSpec, trainer: TrainerSpec) -> Self {
        Self {
            features,
            trainer,
            feature_options: FeatureOptions::default(),
            embedding: SkipGramConfig::default(),
            score_folds: 5,
            review_budget: None,
            include_false_negatives: false,
            seed: 1,
        }
    }
}

/// Disagreements between labels and scores, highest score first. Only
/// predicted-positive labeled negatives unless `include_false_negatives`.
pub fn rank_false_positives(corpus: &Corpus, scores: &[f64], iteration: usize, include_false_negatives: bool) -> Vec<ReviewItem> {
    let mut items: Vec<ReviewItem> = corpus
        .tweets()
        .iter()
        .zip(scores)
        .filter_map(|(t, &score)| {
            let predicted = if score > 0.0 { Label::Positive } else { Label::Negative };
            let queued = match (t.label, predicted) {
                (Label::Negative, Label::Positive) => true,
                (Label::Positive, Label::Negative) => include_false_negatives,
                _ => false,
            };
            (queued && score.is_finite()).then(|| ReviewItem {
                tweet_id: t.id.clone(),
                text: t.raw_text.clone(),
                score,
                current_label: t.label,
                predicted_label: predicted,
                iteration,
                topic_annotation: None,
                lexicon_hits: Vec::new(),
            })
        })
        .collect();
    items.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.tweet_id.cmp(&b.tweet_id)));
    items
}

/// Live review session over a labeled corpus.
pub struct RelabelState {
    corpus: Corpus,
    config: RelabelConfig,
    iteration: usize,
    queue: Vec<ReviewItem>,
    reviewed: BTreeSet<String>,
    stats: Vec<IterationStats>,
    audit: Vec<AuditEntry>,
    revision: u64,
    embedding: Option<Arc<EmbeddingModel>>,
    topics: Option<TopicModel>,
    lexicon: Option<Lexicon>,
    store: Option<SessionStore>,
}

impl RelabelState {
    pub fn new(corpus: Corpus, config: RelabelConfig) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        if corpus.count(Label::Unlabeled) > 0 {
            return Err(Error::invalid("relabeling needs every tweet labeled"));
        }
        Ok(Self {
            corpus,
            config,
            iteration: 0,
            queue: Vec::new(),
            reviewed: BTreeSet::new(),
            stats: Vec::new(),
            audit: Vec::new(),
            revision: 0,
            embedding: None,
            topics: None,
            lexicon: None,
            store: None,
        })
    }

    /// Continue a session from its initial corpus and stored audit log.
    pub fn resume(initial: Corpus, config: RelabelConfig, store: SessionStore) -> Result<Self> {
        let entries = store.load_audit()?;
        let corpus = replay(&initial, &entries)?;
        let mut state = Self::new(corpus, config)?;
        state.reviewed = entries.iter().filter(|e| e.applied).map(|e| e.tweet_id.clone()).collect();
        state.stats = store.load_stats()?;
        state.iteration = state
            .stats
            .iter()
            .map(|s| s.iteration)
            .chain(entries.iter().map(|e| e.iteration))
            .max()
            .unwrap_or(0);
        state.audit = entries;
        state.store = Some(store);
        Ok(state)
    }

    /// Persist every later decision and stats update under `store`.
    pub fn with_store(mut self, store: SessionStore) -> Self {
        self.store = Some(store);
        self
    }

    /// Context shown alongside queued tweets.
    pub fn with_context(mut self, topics: Option<TopicModel>, lexicon: Option<Lexicon>) -> Self {
        self.topics = topics;
        self.lexicon = lexicon;
        self
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn queue(&self) -> &[ReviewItem] {
        &self.queue
    }

    pub fn stats(&self) -> &[IterationStats] {
        &self.stats
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn reviewed(&self) -> &BTreeSet<String> {
        &self.reviewed
    }

    pub fn config(&self) -> &RelabelConfig {
        &self.config
    }

    pub fn topic_annotation(&self, id: &str) -> Option<String> {
        let topics = self.topics.as_ref()?;
        let t = self.corpus.get(id)?;
        topics.annotate(id, &t.tokens).ok().map(|a| a.render())
    }

    pub fn lexicon_hits(&self, id: &str) -> Vec<String> {
        match (&self.lexicon, self.corpus.get(id)) {
            (Some(lex), Some(t)) => lex.hits(&t.tokens).into_iter().map(str::to_string).collect(),
            _ => Vec::new(),
        }
    }

    /// Snapshot of what retraining needs, so scoring can run without
    /// holding the session.
    pub fn scoring_job(&self) -> ScoringJob {
        ScoringJob {
            corpus: self.corpus.clone(),
            config: self.config.clone(),
            iteration: self.iteration,
            revision: self.revision,
            embedding: self.embedding.clone(),
        }
    }

    /// Classifier scores under the current labels.
    pub fn score(&mut self) -> Result<Vec<f64>> {
        let scored = self.scoring_job().run()?;
        self.embedding = scored.embedding;
        Ok(scored.scores)
    }

    /// Retrain on the current labels and build the next queue. Items
    /// already reviewed are not queued again.
    pub fn run_iteration(&mut self) -> Result<IterationStats> {
        let scored = self.scoring_job().run()?;
        self.finish_iteration(scored)
    }

    /// Install scores from a job started on this session. Fails if labels
    /// changed since the job was taken.
    pub fn finish_iteration(&mut self, scored: Scored) -> Result<IterationStats> {
        if scored.revision != self.revision {
            return Err(Error::invalid("labels changed while retraining; retrain again"));
        }
        self.embedding = scored.embedding;
        let scores = scored.scores;
        self.iteration += 1;
        let labels = self.corpus.labels();
        let (mut tp, mut fp) = (0, 0);
        for (&s, &l) in scores.iter().zip(&labels) {
            if s > 0.0 {
                match l {
                    Label::Positive => tp += 1,
                    _ => fp += 1,
                }
            }
        }
        let mut queue: Vec<ReviewItem> =
            rank_false_positives(&self.corpus, &scores, self.iteration, self.config.include_false_negatives)
                .into_iter()
                .filter(|item| !self.reviewed.contains(&item.tweet_id))
                .collect();
        if let Some(budget) = self.config.review_budget {
            queue.truncate(budget);
        }
        for item in &mut queue {
            item.topic_annotation = self.topic_annotation(&item.tweet_id);
            item.lexicon_hits = self.lexicon_hits(&item.tweet_id);
        }
        let stats = IterationStats {
            iteration: self.iteration,
            tp,
            fp,
            accepted: 0,
            total_positives: self.corpus.count(Label::Positive),
            queued: queue.len(),
        };
        self.queue = queue;
        self.stats.push(stats.clone());
        if let Some(store) = &self.store {
            store.save_stats(&self.stats)?;
        }
        Ok(stats)
    }

    /// Apply decisions for items of the current queue; later decisions for
    /// the same tweet win. Every decision is logged, rejected ones included.
    pub fn apply_decisions(&mut self, decisions: &[ReviewDecision]) -> Result<ApplyReport> {
        let queued: HashMap<&str, &ReviewItem> = self.queue.iter().map(|i| (i.tweet_id.as_str(), i)).collect();
        let mut report = ApplyReport::default();
        let mut entries = Vec::with_capacity(decisions.len());
        for d in decisions {
            let mut entry = AuditEntry {
                seq: self.audit.len() + entries.len(),
                iteration: self.iteration,
                tweet_id: d.tweet_id.clone(),
                old_label: self.corpus.get(&d.tweet_id).map(|t| t.label),
                new_label: d.new_label,
                decider: d.decider,
                timestamp: d.timestamp,
                applied: false,
                reason: None,
            };
            let problem = if self.corpus.get(&d.tweet_id).is_none() {
                Some("unknown tweet id")
            } else if !queued.contains_key(d.tweet_id.as_str()) {
                Some("tweet is not in the current queue")
            } else if !d.new_label.is_labeled() {
                Some("new label must be positive or negative")
            } else {
                None
            };
            match problem {
                Some(reason) => {
                    entry.reason = Some(reason.to_string());
                    report.rejected += 1;
                    report.errors.push(format!("{}: {reason}", d.tweet_id));
                }
                None => {
                    self.corpus.set_label(&d.tweet_id, d.new_label);
                    self.revision += 1;
                    self.reviewed.insert(d.tweet_id.clone());
                    entry.applied = true;
                    report.applied += 1;
                }
            }
            entries.push(entry);
        }
        if let Some(store) = &self.store {
            store.append_audit(&entries)?;
        }
        self.audit.extend(entries);
        let accepted = self
            .queue
            .iter()
            .filter(|i| i.current_label == Label::Negative)
            .filter(|i| self.corpus.get(&i.tweet_id).is_some_and(|t| t.label == Label::Positive))
            .count();
        let total = self.corpus.count(Label::Positive);
        if let Some(last) = self.stats.last_mut() {
            last.accepted = accepted;
            last.total_positives = total;
        }
        if let Some(store) = &self.store {
            store.save_stats(&self.stats)?;
        }
        Ok(report)
    }
}

/// Detached retraining work; see [`RelabelState::scoring_job`].
pub struct ScoringJob {
    corpus: Corpus,
    config: RelabelConfig,
    iteration: usize,
    revision: u64,
    embedding: Option<Arc<EmbeddingModel>>,
}

pub struct Scored {
    pub scores: Vec<f64>,
    revision: u64,
    embedding: Option<Arc<EmbeddingModel>>,
}

impl ScoringJob {
    pub fn run(mut self) -> Result<Scored> {
        if self.config.features.uses_embeddings() && self.embedding.is_none() {
            let config = SkipGramConfig {
                seed: self.config.seed,
                ..self.config.embedding.clone()
            };
            self.embedding = Some(Arc::new(train_skipgram(&self.corpus.token_sequences(), &config)?));
        }
        let tokens = self.corpus.token_sequences();
        let positive: Vec<bool> = self.corpus.labels().iter().map(|&l| l == Label::Positive).collect();
        let n = tokens.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ (self.iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let folds = if self.config.score_folds >= 2 {
            stratified_folds(&positive, self.config.score_folds, &mut rng)
        } else {
            vec![usize::MAX; n]
        };
        let mut trainer = self.config.trainer.clone();
        if matches!(self.config.features, FeatureSpec::NbSvm(_)) && trainer.nbsvm_beta.is_none() {
            trainer.nbsvm_beta = Some(0.25);
        }
        let mut scores = vec![0.0; n];
        for f in 0..self.config.score_folds.max(1) {
            let (test, train): (Vec<usize>, Vec<usize>) = if self.config.score_folds >= 2 {
                (0..n).partition(|&i| folds[i] == f)
            } else {
                ((0..n).collect(), (0..n).collect())
            };
            let pick = |idx: &[usize]| -> Vec<&[String]> { idx.iter().map(|&i| tokens[i]).collect() };
            let train_pos: Vec<bool> = train.iter().map(|&i| positive[i]).collect();
            let split = featurize_split(
                &self.config.features,
                &pick(&train),
                &train_pos,
                &pick(&test),
                self.embedding.as_deref(),
                &self.config.feature_options,
            )?;
            let model = trainer.train(&Dataset::new(split.train, &train_pos, split.dim)?, rng.random())?;
            for (&i, x) in test.iter().zip(&split.test) {
                scores[i] = model.score(x);
            }
        }
        Ok(Scored {
            scores,
            revision: self.revision,
            embedding: self.embedding,
        })
    }
}

/// Decisions an annotator who knows the true labels would make on the queue.
pub fn oracle_decisions(queue: &[ReviewItem], truth: &HashMap<String, Label>) -> Vec<ReviewDecision> {
    queue
        .iter()
        .filter_map(|item| {
            truth.get(&item.tweet_id).map(|&l| ReviewDecision {
                tweet_id: item.tweet_id.clone(),
                new_label: l,
                decider: Decider::OracleSim,
                timestamp: 0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Classifier;
    use crate::corpus::Tweet;

    pub(crate) fn corpus_with_hidden() -> (Corpus, HashMap<String, Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let common = ["the", "day", "news", "road", "market", "city", "people", "today", "rain", "bus"];
        let good = ["peace", "unity", "pray", "together", "love"];
        let mut tweets = Vec::new();
        let mut truth = HashMap::new();
        for i in 0..400 {
            let is_pos = i % 20 == 0;
            let mut words: Vec<&str> = (0..6).map(|_| common[rng.random_range(0..common.len())]).collect();
            if is_pos {
                words.push(good[rng.random_range(0..good.len())]);
                words.push(good[rng.random_range(0..good.len())]);
            }
            let hidden = is_pos && i % 40 == 0;
            let label = if is_pos && !hidden { Label::Positive } else { Label::Negative };
            truth.insert(i.to_string(), if is_pos { Label::Positive } else { Label::Negative });
            tweets.push(Tweet::new(i.to_string(), words.join(" "), label).preprocessed());
        }
        (Corpus::from_tweets(tweets).unwrap(), truth)
    }

    fn config() -> RelabelConfig {
        let mut trainer = TrainerSpec::new(Classifier::Logistic);
        trainer.balanced = true;
        RelabelConfig::new(FeatureSpec::Ngrams(vec![1]), trainer)
    }

    #[test]
    fn ranking_orders_by_score() {
        let c = Corpus::from_tweets([
            Tweet::new("a", "x", Label::Negative),
            Tweet::new("b", "y", Label::Negative),
            Tweet::new("c", "z", Label::Positive),
        ])
        .unwrap();
        let items = rank_false_positives(&c, &[0.2, 0.9, 0.5], 1, false);
        let ids: Vec<&str> = items.iter().map(|i| i.tweet_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "a"]);
        assert!(rank_false_positives(&c, &[-1.0, -1.0, -1.0], 1, false).is_empty());
        assert_eq!(rank_false_positives(&c, &[-1.0, -1.0, -1.0], 1, true).len(), 1);
    }

    #[test]
    fn oracle_loop_recovers_hidden_positives() {
        let (corpus, truth) = corpus_with_hidden();
        let initial = corpus.clone();
        let mut state = RelabelState::new(corpus, config()).unwrap();
        for _ in 0..4 {
            state.run_iteration().unwrap();
            assert!(state.queue().iter().all(|i| i.current_label == Label::Negative));
            let decisions = oracle_decisions(state.queue(), &truth);
            let r = state.apply_decisions(&decisions).unwrap();
            assert_eq!(r.rejected, 0);
            let s = state.stats().last().unwrap();
            assert!(s.accepted <= s.fp);
            assert_eq!(s.total_positives, state.corpus().count(Label::Positive));
        }
        assert_eq!(state.corpus().count(Label::Positive), 20);
        let replayed = replay(&initial, state.audit_log()).unwrap();
        assert_eq!(replayed.labels(), state.corpus().labels());
    }

    #[test]
    fn decisions_outside_queue_are_rejected_and_logged() {
        let (corpus, _) = corpus_with_hidden();
        let mut state = RelabelState::new(corpus, config()).unwrap();
        state.run_iteration().unwrap();
        let first = state.queue()[0].tweet_id.clone();
        let r = state
            .apply_decisions(&[
                ReviewDecision::now("nope", Label::Positive, Decider::Human),
                ReviewDecision::now("1", Label::Positive, Decider::Human),
                ReviewDecision::now(first.clone(), Label::Positive, Decider::Human),
                ReviewDecision::now(first.clone(), Label::Negative, Decider::Human),
            ])
            .unwrap();
        assert_eq!((r.applied, r.rejected), (2, 2));
        assert_eq!(state.audit_log().len(), 4);
        assert_eq!(state.corpus().get(&first).unwrap().label, Label::Negative);
        let before = state.corpus().labels();
        state.apply_decisions(&[]).unwrap();
        assert_eq!(state.corpus().labels(), before);
    }

    #[test]
    fn clean_corpus_yields_no_accepts() {
        let (corpus, truth) = corpus_with_hidden();
        let fixed = Corpus::from_tweets(corpus.tweets().iter().map(|t| {
            let mut t = t.clone();
            t.label = truth[&t.id];
            t
        }))
        .unwrap();
        let mut state = RelabelState::new(fixed, config()).unwrap();
        state.run_iteration().unwrap();
        let decisions = oracle_decisions(state.queue(), &truth);
        state.apply_decisions(&decisions).unwrap();
        assert_eq!(state.stats()[0].accepted, 0);
    }

    #[test]
    fn budget_limits_queue() {
        let (corpus, _) = corpus_with_hidden();
        let mut cfg = config();
        cfg.review_budget = Some(3);
        let mut state = RelabelState::new(corpus, cfg).unwrap();
        state.run_iteration().unwrap();
        assert!(state.queue().len() <= 3);
    }
}
