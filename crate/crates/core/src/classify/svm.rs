//! Pegasos stochastic subgradient descent on the L2-regularized hinge loss.
//!
//! The bias is an extra always-one feature and shares the penalty. The
//! iterate is stored as `scale * v` so the shrink step is O(1), and the
//! average over the second half of the steps is kept lazily as
//! `U + sigma * v`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, LinearModel, ModelKind};
use crate::error::{Error, Result};

/// Weighted mean hinge loss plus `lambda/2 |[w, b]|^2`, with a subgradient
/// that is exact away from margin 1.
pub fn hinge_objective(data: &Dataset, params: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let d = data.dim;
    let (w, b) = params.split_at(d);
    let total_w: f64 = data.weights.iter().sum();
    let mut value = 0.0;
    let mut grad: Vec<f64> = params.iter().map(|p| lambda * p).collect();
    for ((x, &y), &c) in data.rows.iter().zip(&data.targets).zip(&data.weights) {
        let margin = y * (x.dot(w) + b[0]);
        if margin < 1.0 {
            value += c * (1.0 - margin);
            let coef = -c * y / total_w;
            for &(j, v) in x.entries() {
                grad[j] += coef * v;
            }
            grad[d] += coef;
        }
    }
    let reg = 0.5 * lambda * params.iter().map(|p| p * p).sum::<f64>();
    (value / total_w + reg, grad)
}

struct ScaledIterate {
    v: Vec<f64>,
    scale: f64,
    /// Lazy running sum of iterates: `u + sigma * v`.
    u: Vec<f64>,
    sigma: f64,
}

impl ScaledIterate {
    fn margin_score(&self, data: &Dataset, i: usize) -> f64 {
        let d = data.dim;
        self.scale * (data.rows[i].dot(&self.v[..d]) + self.v[d])
    }

    fn shrink(&mut self, factor: f64) {
        self.scale *= factor;
        if self.scale < 1e-9 {
            // fold the scale into v; the running sum must not move
            for (vj, uj) in self.v.iter_mut().zip(&mut self.u) {
                let new = *vj * self.scale;
                *uj -= self.sigma * (new - *vj);
                *vj = new;
            }
            self.scale = 1.0;
        }
    }

    /// `w += step * [x_i, 1]`.
    fn add(&mut self, data: &Dataset, i: usize, step: f64) {
        let d = data.dim;
        let delta = step / self.scale;
        for &(j, x) in data.rows[i].entries() {
            self.v[j] += delta * x;
            self.u[j] -= self.sigma * delta * x;
        }
        self.v[d] += delta;
        self.u[d] -= self.sigma * delta;
    }

    fn current(&self) -> Vec<f64> {
        self.v.iter().map(|x| x * self.scale).collect()
    }

    fn average(&self, count: usize) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| (u + self.sigma * v) / count as f64)
            .collect()
    }
}

/// Also returns the objective of the current iterate after each epoch.
pub fn train_svm_traced(data: &Dataset, lambda: f64, epochs: usize, seed: u64) -> Result<(LinearModel, Vec<f64>)> {
    data.require_both_classes()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("the SVM needs a positive l2 lambda"));
    }
    if epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    let n = data.len();
    let p = data.dim + 1;
    let total = epochs * n;
    let average_from = total / 2 + 1;
    let mut it = ScaledIterate {
        v: vec![0.0; p],
        scale: 1.0,
        u: vec![0.0; p],
        sigma: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(epochs);
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = data.targets[i] * it.margin_score(data, i);
            it.shrink(1.0 - eta * lambda);
            if margin < 1.0 {
                it.add(data, i, eta * data.weights[i] * data.targets[i]);
            }
            if t >= average_from {
                it.sigma += it.scale;
            }
        }
        trace.push(hinge_objective(data, &it.current(), lambda).0);
    }
    let mut params = it.average(total - average_from + 1);
    if params.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("training produced non-finite weights"));
    }
    let bias = params.pop().expect("bias slot");
    Ok((
        LinearModel {
            kind: ModelKind::Hinge,
            weights: params,
            bias,
            l2_lambda: lambda,
            nbsvm_beta: None,
        },
        trace,
    ))
}

pub fn train_svm(data: &Dataset, lambda: f64, epochs: usize, seed: u64) -> Result<LinearModel> {
    train_svm_traced(data, lambda, epochs, seed).map(|r| r.0)
}
