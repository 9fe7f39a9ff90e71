use crate::embedding::EmbeddingModel;

/// Mean and population standard deviation of a tweet's word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledFeatures {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Tokens that had a vector. Zero means the features are a placeholder.
    pub embedded: usize,
}

impl PooledFeatures {
    /// `mu` followed by `sigma`.
    pub fn combined(&self) -> Vec<f64> {
        self.mu.iter().chain(&self.sigma).copied().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.embedded == 0
    }
}

/// Welford accumulation over the embedded tokens; OOV tokens are skipped.
fn accumulate(model: &EmbeddingModel, tokens: &[String]) -> PooledFeatures {
    let d = model.dim;
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    let mut n = 0usize;
    for v in tokens.iter().filter_map(|t| model.lookup(t)) {
        n += 1;
        for j in 0..d {
            let delta = v[j] - mean[j];
            mean[j] += delta / n as f64;
            m2[j] += delta * (v[j] - mean[j]);
        }
    }
    let sigma = if n == 0 {
        vec![0.0; d]
    } else {
        m2.iter().map(|s| (s / n as f64).max(0.0).sqrt()).collect()
    };
    PooledFeatures {
        mu: mean,
        sigma,
        embedded: n,
    }
}

pub fn pool_mean(model: &EmbeddingModel, tokens: &[String]) -> (Vec<f64>, usize) {
    let p = accumulate(model, tokens);
    (p.mu, p.embedded)
}

pub fn pool_mean_std(model: &EmbeddingModel, tokens: &[String]) -> PooledFeatures {
    accumulate(model, tokens)
}
