//! Dirichlet-process mixture of diagonal-covariance Gaussians fitted by
//! truncated stick-breaking variational inference.
//!
//! Per component and dimension the mean and precision carry a Normal-Gamma
//! prior; stick proportions carry `Beta(1, concentration)`. Coordinate
//! ascent alternates the global factors and the responsibilities, and the
//! full evidence lower bound is tracked after every global update, so the
//! recorded bound is non-decreasing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use super::EmbeddingModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DpgmmOptions {
    /// Truncation level.
    pub k_max: usize,
    /// Stick-breaking concentration; `None` means `1 / k_max`.
    pub concentration: Option<f64>,
    pub max_iter: usize,
    /// Stop when the per-point bound improves by less than this.
    pub tol: f64,
    pub variance_floor: f64,
    /// Lloyd iterations used to initialise the responsibilities.
    pub kmeans_iters: usize,
    pub seed: u64,
}

impl Default for DpgmmOptions {
    fn default() -> Self {
        Self {
            k_max: 30,
            concentration: None,
            max_iter: 500,
            tol: 1e-4,
            variance_floor: 1e-6,
            kmeans_iters: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    /// Row per point, column per component.
    pub responsibilities: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Bound after each iteration.
    pub elbo: Vec<f64>,
    pub converged: bool,
}

impl MixtureFit {
    pub fn effective_components(&self, min_weight: f64) -> usize {
        self.weights.iter().filter(|&&w| w > min_weight).count()
    }
}

struct Prior {
    concentration: f64,
    beta0: f64,
    a0: f64,
    mean0: Vec<f64>,
    b0: Vec<f64>,
}

struct Posterior {
    gamma1: Vec<f64>,
    gamma2: Vec<f64>,
    beta: Vec<f64>,
    mean: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: Vec<Vec<f64>>,
}

struct Expectations {
    ln_pi: Vec<f64>,
    ln_v: Vec<f64>,
    ln_1mv: Vec<f64>,
    ln_lambda: Vec<Vec<f64>>,
    lambda: Vec<Vec<f64>>,
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

impl Posterior {
    fn update(data: &[Vec<f64>], resp: &[Vec<f64>], prior: &Prior, k: usize) -> Self {
        let d = prior.mean0.len();
        let mut nk = vec![0.0; k];
        let mut sum = vec![vec![0.0; d]; k];
        for (x, r) in data.iter().zip(resp) {
            for c in 0..k {
                nk[c] += r[c];
                for j in 0..d {
                    sum[c][j] += r[c] * x[j];
                }
            }
        }
        let xbar: Vec<Vec<f64>> = (0..k)
            .map(|c| {
                if nk[c] > 1e-12 {
                    sum[c].iter().map(|s| s / nk[c]).collect()
                } else {
                    prior.mean0.clone()
                }
            })
            .collect();
        let mut scatter = vec![vec![0.0; d]; k];
        for (x, r) in data.iter().zip(resp) {
            for c in 0..k {
                for j in 0..d {
                    let dx = x[j] - xbar[c][j];
                    scatter[c][j] += r[c] * dx * dx;
                }
            }
        }
        let mut tail = 0.0;
        let mut gamma2 = vec![0.0; k];
        for c in (0..k).rev() {
            gamma2[c] = prior.concentration + tail;
            tail += nk[c];
        }
        let gamma1 = nk.iter().map(|n| 1.0 + n).collect();
        let beta: Vec<f64> = nk.iter().map(|n| prior.beta0 + n).collect();
        let mean = (0..k)
            .map(|c| {
                (0..d)
                    .map(|j| (prior.beta0 * prior.mean0[j] + nk[c] * xbar[c][j]) / beta[c])
                    .collect()
            })
            .collect();
        let a = nk.iter().map(|n| prior.a0 + 0.5 * n).collect();
        let b = (0..k)
            .map(|c| {
                (0..d)
                    .map(|j| {
                        let dm = xbar[c][j] - prior.mean0[j];
                        prior.b0[j]
                            + 0.5 * scatter[c][j]
                            + 0.5 * prior.beta0 * nk[c] * dm * dm / beta[c]
                    })
                    .collect()
            })
            .collect();
        Self {
            gamma1,
            gamma2,
            beta,
            mean,
            a,
            b,
        }
    }

    fn expectations(&self) -> Expectations {
        let k = self.beta.len();
        let mut ln_v = vec![0.0; k];
        let mut ln_1mv = vec![0.0; k];
        let mut ln_pi = vec![0.0; k];
        let mut acc = 0.0;
        for c in 0..k {
            if c + 1 < k {
                let total = digamma(self.gamma1[c] + self.gamma2[c]);
                ln_v[c] = digamma(self.gamma1[c]) - total;
                ln_1mv[c] = digamma(self.gamma2[c]) - total;
            }
            // the last stick takes all remaining mass
            ln_pi[c] = ln_v[c] + acc;
            acc += ln_1mv[c];
        }
        let ln_lambda = (0..k)
            .map(|c| self.b[c].iter().map(|b| digamma(self.a[c]) - b.ln()).collect())
            .collect();
        let lambda = (0..k)
            .map(|c| self.b[c].iter().map(|b| self.a[c] / b).collect())
            .collect();
        Expectations {
            ln_pi,
            ln_v,
            ln_1mv,
            ln_lambda,
            lambda,
        }
    }

    /// Expected log density of `x` under component `c`, without the mixing weight.
    fn expected_log_lik(&self, e: &Expectations, c: usize, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(j, &xj)| {
                let dx = xj - self.mean[c][j];
                0.5 * e.ln_lambda[c][j] - HALF_LN_2PI - 0.5 * (1.0 / self.beta[c] + e.lambda[c][j] * dx * dx)
            })
            .sum()
    }

    fn responsibilities(&self, data: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let e = self.expectations();
        let k = self.beta.len();
        data.iter()
            .map(|x| {
                let logits: Vec<f64> = (0..k)
                    .map(|c| e.ln_pi[c] + self.expected_log_lik(&e, c, x))
                    .collect();
                softmax(&logits)
            })
            .collect()
    }

    fn elbo(&self, data: &[Vec<f64>], resp: &[Vec<f64>], prior: &Prior) -> f64 {
        let e = self.expectations();
        let k = self.beta.len();
        let d = prior.mean0.len();
        let mut total = 0.0;
        for (x, r) in data.iter().zip(resp) {
            for c in 0..k {
                if r[c] > 0.0 {
                    total += r[c] * (e.ln_pi[c] + self.expected_log_lik(&e, c, x) - r[c].ln());
                }
            }
        }
        let g = prior.concentration;
        for c in 0..k.saturating_sub(1) {
            let (g1, g2) = (self.gamma1[c], self.gamma2[c]);
            total += g.ln() + (g - 1.0) * e.ln_1mv[c];
            total -= ln_gamma(g1 + g2) - ln_gamma(g1) - ln_gamma(g2)
                + (g1 - 1.0) * e.ln_v[c]
                + (g2 - 1.0) * e.ln_1mv[c];
        }
        let lg_a0 = ln_gamma(prior.a0);
        for c in 0..k {
            let lg_a = ln_gamma(self.a[c]);
            for j in 0..d {
                let (el, ell) = (e.lambda[c][j], e.ln_lambda[c][j]);
                let dm = self.mean[c][j] - prior.mean0[j];
                let log_prior = 0.5 * prior.beta0.ln() + 0.5 * ell
                    - HALF_LN_2PI
                    - 0.5 * prior.beta0 * (1.0 / self.beta[c] + el * dm * dm)
                    + prior.a0 * prior.b0[j].ln()
                    - lg_a0
                    + (prior.a0 - 1.0) * ell
                    - prior.b0[j] * el;
                let log_q = 0.5 * self.beta[c].ln() + 0.5 * ell - HALF_LN_2PI - 0.5
                    + self.a[c] * self.b[c][j].ln()
                    - lg_a
                    + (self.a[c] - 1.0) * ell
                    - self.a[c];
                total += log_prior - log_q;
            }
        }
        total
    }

    fn weights(&self) -> Vec<f64> {
        let k = self.beta.len();
        let mut remaining = 1.0;
        let mut w = Vec::with_capacity(k);
        for c in 0..k {
            let v = if c + 1 < k {
                self.gamma1[c] / (self.gamma1[c] + self.gamma2[c])
            } else {
                1.0
            };
            w.push(remaining * v);
            remaining *= 1.0 - v;
        }
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = exp.iter().sum();
    exp.iter().map(|x| x / s).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Hard responsibilities from k-means++ seeding and a few Lloyd steps.
fn kmeans_init(data: &[Vec<f64>], k: usize, iters: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut centers = vec![data[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = data.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k.min(n) {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &dist) in nearest.iter().enumerate() {
            if target < dist {
                pick = i;
                break;
            }
            target -= dist;
        }
        centers.push(data[pick].clone());
        for (i, x) in data.iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(x, centers.last().expect("non-empty")));
        }
    }
    let assign = |centers: &[Vec<f64>]| -> Vec<usize> {
        data.iter()
            .map(|x| {
                let mut best = (0, f64::INFINITY);
                for (c, m) in centers.iter().enumerate() {
                    let dist = sq_dist(x, m);
                    if dist < best.1 {
                        best = (c, dist);
                    }
                }
                best.0
            })
            .collect()
    };
    let mut labels = assign(&centers);
    for _ in 0..iters {
        let d = data[0].len();
        let mut sums = vec![vec![0.0; d]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (x, &l) in data.iter().zip(&labels) {
            counts[l] += 1;
            for j in 0..d {
                sums[l][j] += x[j];
            }
        }
        for c in 0..centers.len() {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next = assign(&centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
        .into_iter()
        .map(|l| {
            let mut r = vec![0.0; k];
            r[l] = 1.0;
            r
        })
        .collect()
}

/// Fit the mixture to row vectors of equal length.
pub fn fit(data: &[Vec<f64>], options: &DpgmmOptions) -> Result<MixtureFit> {
    if data.len() < 2 {
        return Err(Error::invalid("clustering needs at least 2 points"));
    }
    if options.k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let d = data[0].len();
    if d == 0 || data.iter().any(|x| x.len() != d) {
        return Err(Error::invalid("points must share a non-zero dimension"));
    }
    if data.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::invalid("points must be finite"));
    }
    let n = data.len() as f64;
    let k = options.k_max;
    let mean0: Vec<f64> = (0..d).map(|j| data.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let var: Vec<f64> = (0..d)
        .map(|j| data.iter().map(|x| (x[j] - mean0[j]).powi(2)).sum::<f64>() / n)
        .collect();
    let a0 = 1.0;
    let prior = Prior {
        concentration: options.concentration.unwrap_or(1.0 / k as f64),
        beta0: 1.0,
        a0,
        b0: var.iter().map(|v| a0 * v.max(options.variance_floor)).collect(),
        mean0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut resp = kmeans_init(data, k, options.kmeans_iters, &mut rng);
    let mut elbo = Vec::new();
    let mut converged = false;
    let mut post = Posterior::update(data, &resp, &prior, k);
    for _ in 0..options.max_iter {
        post = Posterior::update(data, &resp, &prior, k);
        let bound = post.elbo(data, &resp, &prior);
        let improved = elbo.last().map(|&prev: &f64| (bound - prev) / n);
        elbo.push(bound);
        if improved.is_some_and(|delta| delta < options.tol) {
            converged = true;
            break;
        }
        resp = post.responsibilities(data);
    }
    let resp = post.responsibilities(data);
    let assignments = resp
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .expect("k >= 1")
        })
        .collect();
    let variances = (0..k)
        .map(|c| {
            post.b[c]
                .iter()
                .map(|b| (b / post.a[c]).max(options.variance_floor))
                .collect()
        })
        .collect();
    Ok(MixtureFit {
        weights: post.weights(),
        means: post.mean.clone(),
        variances,
        responsibilities: resp,
        assignments,
        elbo,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub word: String,
    pub component: usize,
    pub responsibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k_max: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub diag_variances: Vec<Vec<f64>>,
    pub assignments: Vec<ClusterAssignment>,
    pub elbo: Vec<f64>,
}

impl ClusterModel {
    /// One JSON object per word: `{"word", "component", "responsibility"}`.
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for a in &self.assignments {
            serde_json::to_writer(&mut out, a)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Cluster the vectors of `words`.
pub fn cluster_words(model: &EmbeddingModel, words: &[String], options: &DpgmmOptions) -> Result<ClusterModel> {
    let missing: Vec<String> = words
        .iter()
        .filter(|w| model.vocab.index(w).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::OutOfVocabulary(missing));
    }
    let data: Vec<Vec<f64>> = words
        .iter()
        .map(|w| model.lookup(w).expect("checked").to_vec())
        .collect();
    let f = fit(&data, options)?;
    let assignments = words
        .iter()
        .zip(&f.assignments)
        .zip(&f.responsibilities)
        .map(|((w, &c), r)| ClusterAssignment {
            word: w.clone(),
            component: c,
            responsibility: r[c],
        })
        .collect();
    Ok(ClusterModel {
        k_max: options.k_max,
        weights: f.weights,
        means: f.means,
        diag_variances: f.variances,
        assignments,
        elbo: f.elbo,
    })
}
