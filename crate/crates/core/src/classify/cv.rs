use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, Classifier, Dataset, Metrics, TrainerSpec};
use crate::corpus::{Corpus, Label};
use crate::embedding::{train_skipgram, EmbeddingModel, SkipGramConfig};
use crate::error::{Error, Result};
use crate::features::{featurize_split, FeatureOptions, FeatureSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub repetitions: usize,
    pub folds: usize,
    pub seed: u64,
    /// Used by the embedding feature sets; its seed is replaced per repetition.
    pub embedding: SkipGramConfig,
    pub features: FeatureOptions,
    /// Interpolation for SVMs on NB-SVM features.
    pub nbsvm_beta: f64,
    pub dataset: String,
    /// Runs evaluated concurrently; each trainer stays single-threaded.
    pub threads: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            repetitions: 5,
            folds: 5,
            seed: 1,
            embedding: SkipGramConfig::default(),
            features: FeatureOptions::default(),
            nbsvm_beta: 0.25,
            dataset: "dataset".into(),
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RunOutcome {
    Ok { metrics: Metrics },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub repetition: usize,
    pub fold: usize,
    pub outcome: RunOutcome,
    pub featurize_s: f64,
    pub train_s: f64,
    pub predict_s: f64,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std: var.sqrt() }
    }
}

/// Over successful runs only.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: Summary,
    pub precision: Summary,
    pub recall: Summary,
    pub f1: Summary,
    pub featurize_s: Summary,
    pub train_s: Summary,
    pub predict_s: Summary,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub dataset: String,
    pub features: String,
    pub classifier: String,
    pub runs: Vec<RunRecord>,
    /// Word-vector training time per repetition; empty for other features.
    pub embedding_s: Vec<f64>,
    pub aggregate: Aggregate,
}

const TSV_HEADER: &str = "dataset\tfeatures\trun\taccuracy\tprecision\trecall\tf1\tfeaturize_s\ttrain_s\tpredict_s";

impl CvReport {
    fn tsv(&self, timing: bool) -> String {
        let mut out = String::from(TSV_HEADER);
        out.push('\n');
        for r in &self.runs {
            let _ = write!(out, "{}\t{}\t{}", self.dataset, self.features, r.run);
            match &r.outcome {
                RunOutcome::Ok { metrics: m } => {
                    let _ = write!(out, "\t{:.6}\t{:.6}\t{:.6}\t{:.6}", m.accuracy, m.precision, m.recall, m.f1);
                }
                RunOutcome::Failed { .. } => out.push_str("\tERR\tERR\tERR\tERR"),
            }
            if timing {
                let _ = writeln!(out, "\t{:.6}\t{:.6}\t{:.6}", r.featurize_s, r.train_s, r.predict_s);
            } else {
                out.push_str("\t-\t-\t-\n");
            }
        }
        out
    }

    /// One row per run.
    pub fn to_tsv(&self) -> String {
        self.tsv(true)
    }

    /// As [`to_tsv`](Self::to_tsv) with wall times blanked, for comparing runs.
    pub fn to_tsv_without_timing(&self) -> String {
        self.tsv(false)
    }

    /// `metric mean std` rows plus run counts.
    pub fn aggregate_tsv(&self) -> String {
        let a = &self.aggregate;
        let mut out = String::from("metric\tmean\tstd\n");
        for (name, s) in [
            ("accuracy", a.accuracy),
            ("precision", a.precision),
            ("recall", a.recall),
            ("f1", a.f1),
            ("featurize_s", a.featurize_s),
            ("train_s", a.train_s),
            ("predict_s", a.predict_s),
        ] {
            let _ = writeln!(out, "{name}\t{:.6}\t{:.6}", s.mean, s.std);
        }
        let _ = writeln!(out, "succeeded\t{}\t-\nfailed\t{}\t-", a.succeeded, a.failed);
        out
    }

    pub fn failed_reasons(&self) -> Vec<(usize, &str)> {
        self.runs
            .iter()
            .filter_map(|r| match &r.outcome {
                RunOutcome::Failed { reason } => Some((r.run, reason.as_str())),
                RunOutcome::Ok { .. } => None,
            })
            .collect()
    }
}

fn aggregate(runs: &[RunRecord]) -> Aggregate {
    let ok: Vec<(&Metrics, &RunRecord)> = runs
        .iter()
        .filter_map(|r| match &r.outcome {
            RunOutcome::Ok { metrics } => Some((metrics, r)),
            RunOutcome::Failed { .. } => None,
        })
        .collect();
    let col = |f: &dyn Fn(&Metrics, &RunRecord) -> f64| -> Summary {
        Summary::of(&ok.iter().map(|(m, r)| f(m, r)).collect::<Vec<_>>())
    };
    Aggregate {
        accuracy: col(&|m, _| m.accuracy),
        precision: col(&|m, _| m.precision),
        recall: col(&|m, _| m.recall),
        f1: col(&|m, _| m.f1),
        featurize_s: col(&|_, r| r.featurize_s),
        train_s: col(&|_, r| r.train_s),
        predict_s: col(&|_, r| r.predict_s),
        succeeded: ok.len(),
        failed: runs.len() - ok.len(),
    }
}

/// Fold index per item: each class is shuffled and dealt round-robin.
pub fn stratified_folds(positive: &[bool], folds: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut assignment = vec![0; positive.len()];
    let mut offset = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..positive.len()).filter(|&i| positive[i] == class).collect();
        idx.shuffle(rng);
        for (k, i) in idx.into_iter().enumerate() {
            assignment[i] = (k + offset) % folds;
        }
        // keep fold sizes even across classes
        offset += positive.iter().filter(|&&p| p == class).count() % folds;
    }
    assignment
}

struct RunInput<'a> {
    tokens: &'a [&'a [String]],
    positive: &'a [bool],
    gold: &'a [Label],
    embedding: Option<&'a EmbeddingModel>,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn run_fold(
    input: &RunInput<'_>,
    folds: &[usize],
    fold: usize,
    features: &FeatureSpec,
    trainer: &TrainerSpec,
    options: &CvOptions,
    seed: u64,
) -> (RunOutcome, f64, f64, f64) {
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..folds.len()).partition(|&i| folds[i] == fold);
    let missing = |idx: &[usize]| -> Option<&'static str> {
        let pos = idx.iter().filter(|&&i| input.positive[i]).count();
        if pos == 0 {
            Some("positive")
        } else if pos == idx.len() {
            Some("negative")
        } else {
            None
        }
    };
    if let Some(class) = missing(&train_idx) {
        return (RunOutcome::Failed { reason: format!("training folds lack the {class} class") }, 0.0, 0.0, 0.0);
    }
    if let Some(class) = missing(&test_idx) {
        return (RunOutcome::Failed { reason: format!("test fold lacks the {class} class") }, 0.0, 0.0, 0.0);
    }
    let pick = |idx: &[usize]| -> Vec<&[String]> { idx.iter().map(|&i| input.tokens[i]).collect() };
    let train_pos: Vec<bool> = train_idx.iter().map(|&i| input.positive[i]).collect();

    let t = Instant::now();
    let split = featurize_split(
        features,
        &pick(&train_idx),
        &train_pos,
        &pick(&test_idx),
        input.embedding,
        &options.features,
    );
    let featurize_s = secs(t);
    let split = match split {
        Ok(s) => s,
        Err(e) => return (RunOutcome::Failed { reason: e.to_string() }, featurize_s, 0.0, 0.0),
    };

    let t = Instant::now();
    let mut spec = trainer.clone();
    if matches!(features, FeatureSpec::NbSvm(_)) && spec.classifier == Classifier::Svm {
        spec.nbsvm_beta = Some(options.nbsvm_beta);
    }
    let model = Dataset::new(split.train, &train_pos, split.dim).and_then(|d| spec.train(&d, seed));
    let train_s = secs(t);
    let model = match model {
        Ok(m) => m,
        Err(e) => return (RunOutcome::Failed { reason: e.to_string() }, featurize_s, train_s, 0.0),
    };

    let t = Instant::now();
    let predicted: Vec<Label> = split.test.iter().map(|x| model.predict(x).label).collect();
    let predict_s = secs(t);
    let gold: Vec<Label> = test_idx.iter().map(|&i| input.gold[i]).collect();
    let outcome = match evaluate(&predicted, &gold, Label::Positive) {
        Ok(metrics) => RunOutcome::Ok { metrics },
        Err(e) => RunOutcome::Failed { reason: e.to_string() },
    };
    (outcome, featurize_s, train_s, predict_s)
}

/// Repeated stratified k-fold evaluation. For embedding features the word
/// vectors are trained once per repetition on every tweet before splitting.
pub fn cross_validate(corpus: &Corpus, features: &FeatureSpec, trainer: &TrainerSpec, options: &CvOptions) -> Result<CvReport> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    if corpus.count(Label::Unlabeled) > 0 {
        return Err(Error::invalid("cross-validation needs every tweet labeled"));
    }
    if options.folds < 2 || options.repetitions == 0 {
        return Err(Error::invalid("need at least 2 folds and 1 repetition"));
    }
    let tokens: Vec<&[String]> = corpus.token_sequences();
    let gold = corpus.labels();
    let positive: Vec<bool> = gold.iter().map(|&l| l == Label::Positive).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;

    let mut runs = Vec::with_capacity(options.repetitions * options.folds);
    let mut embedding_s = Vec::new();
    for rep in 0..options.repetitions {
        let rep_seed: u64 = rng.random();
        let mut rep_rng = ChaCha8Rng::seed_from_u64(rep_seed);
        let embedding = if features.uses_embeddings() {
            let config = SkipGramConfig {
                seed: rep_rng.random(),
                ..options.embedding.clone()
            };
            let t = Instant::now();
            let model = train_skipgram(&tokens, &config)?;
            embedding_s.push(secs(t));
            Some(model)
        } else {
            let _: u64 = rep_rng.random();
            None
        };
        let folds = stratified_folds(&positive, options.folds, &mut rep_rng);
        let seeds: Vec<u64> = (0..options.folds).map(|_| rep_rng.random()).collect();
        let input = RunInput {
            tokens: &tokens,
            positive: &positive,
            gold: &gold,
            embedding: embedding.as_ref(),
        };
        let results: Vec<_> = pool.install(|| {
            (0..options.folds)
                .into_par_iter()
                .map(|f| run_fold(&input, &folds, f, features, trainer, options, seeds[f]))
                .collect()
        });
        for (fold, (outcome, featurize_s, train_s, predict_s)) in results.into_iter().enumerate() {
            runs.push(RunRecord {
                run: runs.len() + 1,
                repetition: rep + 1,
                fold: fold + 1,
                outcome,
                featurize_s,
                train_s,
                predict_s,
            });
        }
    }
    Ok(CvReport {
        dataset: options.dataset.clone(),
        features: features.to_string(),
        classifier: trainer.classifier.to_string(),
        aggregate: aggregate(&runs),
        runs,
        embedding_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tweet;
    use proptest::prelude::*;

    fn toy(n: usize) -> Corpus {
        Corpus::from_tweets((0..n).map(|i| {
            let (text, label) = if i % 2 == 0 {
                (format!("love peace unity {i}"), Label::Positive)
            } else {
                (format!("hate war fight {i}"), Label::Negative)
            };
            Tweet::new(i.to_string(), text, label).preprocessed()
        }))
        .unwrap()
    }

    fn opts(rep: usize, folds: usize) -> CvOptions {
        CvOptions {
            repetitions: rep,
            folds,
            embedding: SkipGramConfig { dim: 8, epochs: 2, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn four_points_two_folds() {
        let r = cross_validate(&toy(4), &FeatureSpec::Ngrams(vec![1]), &TrainerSpec::new(Classifier::Logistic), &opts(1, 2)).unwrap();
        assert_eq!(r.runs.len(), 2);
        assert_eq!(r.aggregate.succeeded, 2);
    }

    #[test]
    fn default_protocol_has_25_runs() {
        let r = cross_validate(&toy(40), &FeatureSpec::Ngrams(vec![1, 2]), &TrainerSpec::new(Classifier::Svm), &opts(5, 5)).unwrap();
        assert_eq!(r.runs.len(), 25);
        assert!(r.aggregate.f1.mean > 0.9);
        assert_eq!(r.to_tsv().lines().count(), 26);
    }

    #[test]
    fn missing_class_is_recorded() {
        let mut tweets: Vec<Tweet> = toy(10).into_tweets();
        for t in tweets.iter_mut().skip(1) {
            t.label = Label::Negative;
        }
        let c = Corpus::from_tweets(tweets).unwrap();
        let r = cross_validate(&c, &FeatureSpec::Ngrams(vec![1]), &TrainerSpec::new(Classifier::Logistic), &opts(1, 5)).unwrap();
        assert_eq!(r.runs.len(), 5);
        assert_eq!(r.aggregate.failed, 5);
        assert!(r.to_tsv().contains("ERR"));
        assert_eq!(r.failed_reasons().len(), 5);
    }

    #[test]
    fn same_seed_same_report() {
        for spec in [FeatureSpec::MuSigma, FeatureSpec::NbSvm(vec![1, 2])] {
            let a = cross_validate(&toy(20), &spec, &TrainerSpec::new(Classifier::Svm), &opts(2, 2)).unwrap();
            let b = cross_validate(&toy(20), &spec, &TrainerSpec::new(Classifier::Svm), &opts(2, 2)).unwrap();
            assert_eq!(a.to_tsv_without_timing(), b.to_tsv_without_timing());
            if spec.uses_embeddings() {
                assert_eq!(a.embedding_s.len(), 2);
            }
        }
    }

    #[test]
    fn rejects_unlabeled() {
        let c = Corpus::from_tweets([Tweet::new("1", "x", Label::Unlabeled).preprocessed()]).unwrap();
        assert!(cross_validate(&c, &FeatureSpec::Mu, &TrainerSpec::new(Classifier::Svm), &opts(1, 2)).is_err());
    }

    #[test]
    fn summary_stats() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Summary::of(&[]), Summary::default());
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(labels in proptest::collection::vec(any::<bool>(), 1..80), k in 2usize..7, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = stratified_folds(&labels, k, &mut rng);
            prop_assert_eq!(f.len(), labels.len());
            prop_assert!(f.iter().all(|&x| x < k));
            for class in [true, false] {
                let mut sizes = vec![0usize; k];
                for (i, &l) in labels.iter().enumerate() {
                    if l == class {
                        sizes[f[i]] += 1;
                    }
                }
                let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
        }
    }
}
