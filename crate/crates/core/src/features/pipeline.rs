use super::{ngram_featurize, nbsvm_fit, pool_mean, pool_mean_std, FeatureRegistry, FeatureSpec, FeaturizerConfig, SparseVector};
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureOptions {
    /// NB-SVM count smoothing.
    pub nbsvm_alpha: f64,
    /// Drop stop words when the feature set is unigrams only.
    pub unigram_stopwords: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            nbsvm_alpha: 1.0,
            unigram_stopwords: true,
        }
    }
}

/// Train and test rows in one column space.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFeatures {
    pub train: Vec<SparseVector>,
    pub test: Vec<SparseVector>,
    pub dim: usize,
    /// Test rows with no embedded token.
    pub empty_test_rows: usize,
}

fn ngram_config(orders: &[usize], options: &FeatureOptions) -> Result<FeaturizerConfig> {
    let strip = options.unigram_stopwords && orders == [1];
    FeaturizerConfig::new(orders.iter().copied(), strip)
}

fn ngram_rows(orders: &[usize], train: &[&[String]], test: &[&[String]], options: &FeatureOptions) -> Result<(Vec<SparseVector>, Vec<SparseVector>, usize)> {
    let config = ngram_config(orders, options)?;
    let mut registry = FeatureRegistry::new();
    let tr: Vec<SparseVector> = train.iter().map(|t| ngram_featurize(t, &config, &mut registry)).collect();
    registry.freeze();
    let te = test.iter().map(|t| ngram_featurize(t, &config, &mut registry)).collect();
    Ok((tr, te, registry.len()))
}

/// Fit any data-dependent state on the training side only and map both
/// sides. Embedding features need `embedding`.
pub fn featurize_split(
    spec: &FeatureSpec,
    train: &[&[String]],
    train_positive: &[bool],
    test: &[&[String]],
    embedding: Option<&EmbeddingModel>,
    options: &FeatureOptions,
) -> Result<SplitFeatures> {
    match spec {
        FeatureSpec::Ngrams(orders) => {
            let (train, test, dim) = ngram_rows(orders, train, test, options)?;
            Ok(SplitFeatures {
                train,
                test,
                dim,
                empty_test_rows: 0,
            })
        }
        FeatureSpec::NbSvm(orders) => {
            let (tr, te, dim) = ngram_rows(orders, train, test, options)?;
            let transform = nbsvm_fit(&tr, train_positive, dim, options.nbsvm_alpha)?;
            Ok(SplitFeatures {
                train: tr.iter().map(|r| transform.apply(r)).collect(),
                test: te.iter().map(|r| transform.apply(r)).collect(),
                dim,
                empty_test_rows: 0,
            })
        }
        FeatureSpec::Mu | FeatureSpec::MuSigma => {
            let model = embedding.ok_or_else(|| Error::invalid(format!("feature set {spec} needs word vectors")))?;
            let with_sigma = *spec == FeatureSpec::MuSigma;
            let pool = |tokens: &[String]| -> (SparseVector, bool) {
                if with_sigma {
                    let p = pool_mean_std(model, tokens);
                    (SparseVector::from_dense(&p.combined()), p.is_empty())
                } else {
                    let (mu, n) = pool_mean(model, tokens);
                    (SparseVector::from_dense(&mu), n == 0)
                }
            };
            let train = train.iter().map(|t| pool(t).0).collect();
            let mut empty = 0;
            let test = test
                .iter()
                .map(|t| {
                    let (v, e) = pool(t);
                    empty += e as usize;
                    v
                })
                .collect();
            Ok(SplitFeatures {
                train,
                test,
                dim: if with_sigma { 2 * model.dim } else { model.dim },
                empty_test_rows: empty,
            })
        }
    }
}
