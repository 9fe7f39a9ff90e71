//! Linear classifiers, minority-class metrics and repeated stratified
//! cross-validation.

mod cv;
mod gd;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

pub use cv::{
    cross_validate, stratified_folds, Aggregate, CvOptions, CvReport, RunOutcome, RunRecord, Summary,
};
pub use gd::{logistic_objective, ridge_objective, train_logistic, train_ridge, DescentTrace};
pub use svm::{hinge_objective, train_svm, train_svm_traced};

/// Training rows with `+1` / `-1` targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<SparseVector>,
    pub targets: Vec<f64>,
    pub dim: usize,
    /// Per-row loss weights; all ones unless class balancing is requested.
    pub weights: Vec<f64>,
}

impl Dataset {
    /// `dim` grows to cover every column used by `rows`.
    pub fn new(rows: Vec<SparseVector>, positive: &[bool], dim: usize) -> Result<Self> {
        if rows.len() != positive.len() {
            return Err(Error::invalid("rows and labels differ in length"));
        }
        if rows.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let dim = rows.iter().map(SparseVector::min_dim).max().unwrap_or(0).max(dim);
        Ok(Self {
            targets: positive.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect(),
            weights: vec![1.0; rows.len()],
            rows,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.targets.iter().filter(|&&t| t > 0.0).count()
    }

    /// Weights inversely proportional to class frequency, mean 1.
    pub fn balanced(mut self) -> Self {
        let n = self.len() as f64;
        let pos = self.positives() as f64;
        let neg = n - pos;
        if pos > 0.0 && neg > 0.0 {
            self.weights = self
                .targets
                .iter()
                .map(|&t| if t > 0.0 { n / (2.0 * pos) } else { n / (2.0 * neg) })
                .collect();
        }
        self
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        let pos = self.positives();
        if pos == 0 || pos == self.len() {
            let only = if pos == 0 { "negative" } else { "positive" };
            return Err(Error::SingleClass(format!("training set is all {only}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Logistic,
    Hinge,
    NbsvmHinge,
    /// Least squares on the targets, read out by sign.
    Ridge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
    pub nbsvm_beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LinearModel {
    pub fn score(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// Positive iff the score is strictly above zero.
    pub fn predict(&self, x: &SparseVector) -> Prediction {
        let score = self.score(x);
        Prediction {
            label: if score > 0.0 { Label::Positive } else { Label::Negative },
            score,
        }
    }

    /// Logistic probability of the positive class.
    pub fn probability(&self, x: &SparseVector) -> f64 {
        sigmoid(self.score(x))
    }

    /// Blend trained weights with their sign times the mean magnitude.
    pub fn interpolate(mut self, beta: f64) -> Self {
        if self.weights.is_empty() {
            return self;
        }
        let mean_abs = self.weights.iter().map(|w| w.abs()).sum::<f64>() / self.weights.len() as f64;
        for w in &mut self.weights {
            let sign = if *w == 0.0 { 0.0 } else { w.signum() };
            *w = (1.0 - beta) * mean_abs * sign + beta * *w;
        }
        self.kind = ModelKind::NbsvmHinge;
        self.nbsvm_beta = Some(beta);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Logistic,
    Svm,
    Ridge,
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" | "lr" => Ok(Self::Logistic),
            "svm" => Ok(Self::Svm),
            "ridge" => Ok(Self::Ridge),
            _ => Err(Error::invalid(format!("unknown classifier {s:?}"))),
        }
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Logistic => "logistic",
            Self::Svm => "svm",
            Self::Ridge => "ridge",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerSpec {
    pub classifier: Classifier,
    pub l2_lambda: f64,
    /// Gradient-descent iterations for logistic and ridge.
    pub max_iters: usize,
    pub tol: f64,
    /// Passes over the data for the SVM.
    pub epochs: usize,
    pub balanced: bool,
    /// Weight interpolation for SVMs trained on NB-SVM features.
    pub nbsvm_beta: Option<f64>,
}

impl TrainerSpec {
    pub fn new(classifier: Classifier) -> Self {
        Self {
            classifier,
            l2_lambda: 1e-4,
            max_iters: 300,
            tol: 1e-6,
            epochs: 20,
            balanced: false,
            nbsvm_beta: None,
        }
    }

    pub fn train(&self, data: &Dataset, seed: u64) -> Result<LinearModel> {
        let data = if self.balanced { data.clone().balanced() } else { data.clone() };
        match self.classifier {
            Classifier::Logistic => train_logistic(&data, self.l2_lambda, self.max_iters, self.tol, seed),
            Classifier::Ridge => train_ridge(&data, self.l2_lambda, self.max_iters, self.tol, seed),
            Classifier::Svm => {
                let m = train_svm(&data, self.l2_lambda, self.epochs, seed)?;
                Ok(match self.nbsvm_beta {
                    Some(beta) => m.interpolate(beta),
                    None => m,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            tn,
            fn_,
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision,
            recall,
            f1,
        }
    }
}

/// Confusion counts and derived metrics for the class `positive`.
pub fn evaluate(predictions: &[Label], gold: &[Label], positive: Label) -> Result<Metrics> {
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if predictions.len() != gold.len() {
        return Err(Error::invalid("predictions and gold labels differ in length"));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (p, g) in predictions.iter().zip(gold) {
        match (*p == positive, *g == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, tn, fn_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precision_from_review_counts() {
        let m = Metrics::from_counts(538, 301, 0, 0);
        assert!((m.precision - 538.0 / 839.0).abs() < 1e-15);
        assert!((m.precision - 0.6413).abs() < 1e-4);
    }

    #[test]
    fn perfect_and_wrong() {
        use Label::*;
        let gold = [Positive, Negative, Positive];
        let m = evaluate(&gold, &gold, Positive).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        let wrong = [Negative, Positive, Negative];
        let m = evaluate(&wrong, &gold, Positive).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(evaluate(&[], &[], Positive).is_err());
        assert!(evaluate(&[Positive], &[], Positive).is_err());
    }

    #[test]
    fn zero_model_predicts_negative() {
        let m = LinearModel {
            kind: ModelKind::Logistic,
            weights: vec![0.0; 3],
            bias: 0.0,
            l2_lambda: 0.0,
            nbsvm_beta: None,
        };
        let x = SparseVector::from_entries([(1, 2.0)]);
        let p = m.predict(&x);
        assert_eq!((p.label, p.score), (Label::Negative, 0.0));
        assert_eq!(m.probability(&x), 0.5);
    }

    #[test]
    fn score_negates_with_input() {
        let m = LinearModel {
            kind: ModelKind::Hinge,
            weights: vec![0.5, -2.0, 1.5],
            bias: 0.0,
            l2_lambda: 0.0,
            nbsvm_beta: None,
        };
        let x = SparseVector::from_entries([(0, 1.0), (2, -3.0)]);
        assert_eq!(m.score(&x), -m.score(&x.scaled(-1.0)));
    }

    #[test]
    fn interpolation_keeps_signs() {
        let m = LinearModel {
            kind: ModelKind::Hinge,
            weights: vec![2.0, -1.0, 0.0, 0.5],
            bias: 0.3,
            l2_lambda: 0.0,
            nbsvm_beta: None,
        }
        .interpolate(0.25);
        // mean |w| = 0.875
        let want = [0.75 * 0.875 + 0.5, -0.75 * 0.875 - 0.25, 0.0, 0.75 * 0.875 + 0.125];
        for (a, b) in m.weights.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(m.bias, 0.3);
        assert_eq!(m.kind, ModelKind::NbsvmHinge);
    }

    #[test]
    fn balanced_weights_have_unit_mean() {
        let rows = vec![SparseVector::new(); 4];
        let d = Dataset::new(rows, &[true, false, false, false], 0).unwrap().balanced();
        assert_eq!(d.weights, vec![2.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-1000.0) >= 0.0 && sigmoid(1000.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn metrics_consistent(tp in 0usize..50, fp in 0usize..50, tn in 0usize..50, fn_ in 0usize..50) {
            prop_assume!(tp + fp + tn + fn_ > 0);
            let mut pred = Vec::new();
            let mut gold = Vec::new();
            for (n, p, g) in [(tp, Label::Positive, Label::Positive), (fp, Label::Positive, Label::Negative), (tn, Label::Negative, Label::Negative), (fn_, Label::Negative, Label::Positive)] {
                pred.extend(std::iter::repeat_n(p, n));
                gold.extend(std::iter::repeat_n(g, n));
            }
            let m = evaluate(&pred, &gold, Label::Positive).unwrap();
            prop_assert_eq!(m, Metrics::from_counts(tp, fp, tn, fn_));
            if m.precision + m.recall > 0.0 {
                prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-15);
            }
        }
    }
}
