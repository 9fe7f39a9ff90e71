//! Full-batch gradient descent for the smooth losses. Parameters are the
//! weights followed by the bias; the bias is not regularized.

use super::{Dataset, LinearModel, ModelKind};
use crate::error::{Error, Result};

/// Objective value after every accepted step, starting with the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentTrace {
    pub objective: Vec<f64>,
    pub converged: bool,
}

/// `ln(1 + e^(-m))` without overflow.
fn log_loss(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

fn scores(data: &Dataset, params: &[f64]) -> Vec<f64> {
    let (w, b) = params.split_at(data.dim);
    data.rows.iter().map(|x| x.dot(w) + b[0]).collect()
}

/// Accumulate `sum_i coef_i * [x_i, 1]` into the gradient.
fn add_data_gradient(data: &Dataset, coef: &[f64], grad: &mut [f64]) {
    let d = data.dim;
    for (x, &c) in data.rows.iter().zip(coef) {
        if c == 0.0 {
            continue;
        }
        for &(j, v) in x.entries() {
            grad[j] += c * v;
        }
        grad[d] += c;
    }
}

fn l2_terms(data: &Dataset, params: &[f64], lambda: f64, grad: &mut [f64]) -> f64 {
    let w = &params[..data.dim];
    for (g, &wj) in grad.iter_mut().zip(w) {
        *g += lambda * wj;
    }
    0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>()
}

/// Weighted mean log-loss plus `lambda/2 |w|^2`, with its gradient.
pub fn logistic_objective(data: &Dataset, params: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let total_w: f64 = data.weights.iter().sum();
    let s = scores(data, params);
    let mut value = 0.0;
    let mut coef = Vec::with_capacity(s.len());
    for ((&si, &y), &c) in s.iter().zip(&data.targets).zip(&data.weights) {
        let m = y * si;
        value += c * log_loss(m);
        // d/dm ln(1 + e^-m) = -sigmoid(-m)
        coef.push(-c * y * super::sigmoid(-m) / total_w);
    }
    let mut grad = vec![0.0; params.len()];
    add_data_gradient(data, &coef, &mut grad);
    let reg = l2_terms(data, params, lambda, &mut grad);
    (value / total_w + reg, grad)
}

/// Weighted mean of `(y - s)^2 / 2` plus `lambda/2 |w|^2`, with its gradient.
pub fn ridge_objective(data: &Dataset, params: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let total_w: f64 = data.weights.iter().sum();
    let s = scores(data, params);
    let mut value = 0.0;
    let mut coef = Vec::with_capacity(s.len());
    for ((&si, &y), &c) in s.iter().zip(&data.targets).zip(&data.weights) {
        let r = si - y;
        value += 0.5 * c * r * r;
        coef.push(c * r / total_w);
    }
    let mut grad = vec![0.0; params.len()];
    add_data_gradient(data, &coef, &mut grad);
    let reg = l2_terms(data, params, lambda, &mut grad);
    (value / total_w + reg, grad)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Armijo backtracking from a Barzilai-Borwein initial step. Every accepted
/// step lowers the objective, so the trace is non-increasing.
pub(crate) fn descend<F>(objective: F, mut x: Vec<f64>, max_iters: usize, tol: f64) -> (Vec<f64>, DescentTrace)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (mut fx, mut g) = objective(&x);
    let mut trace = DescentTrace {
        objective: vec![fx],
        converged: false,
    };
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for _ in 0..max_iters {
        if inf_norm(&g) < tol {
            trace.converged = true;
            break;
        }
        if let Some((px, pg)) = &prev {
            let s: Vec<f64> = x.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 0.0 {
                step = dot(&s, &s) / sy;
            }
        }
        let gg = dot(&g, &g);
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let (fc, gc) = objective(&cand);
            if fc.is_finite() && fc <= fx - 1e-4 * step * gg {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            break;
        };
        prev = Some((std::mem::replace(&mut x, cand), std::mem::replace(&mut g, gc)));
        fx = fc;
        trace.objective.push(fx);
    }
    if !trace.converged && inf_norm(&g) < tol {
        trace.converged = true;
    }
    (x, trace)
}

fn finish(kind: ModelKind, mut params: Vec<f64>, lambda: f64) -> Result<LinearModel> {
    if params.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("training produced non-finite weights"));
    }
    let bias = params.pop().expect("bias slot");
    Ok(LinearModel {
        kind,
        weights: params,
        bias,
        l2_lambda: lambda,
        nbsvm_beta: None,
    })
}

fn check(data: &Dataset, lambda: f64) -> Result<()> {
    data.require_both_classes()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("l2 lambda must be non-negative"));
    }
    Ok(())
}

/// Logistic regression. Full-batch descent is deterministic, so `_seed`
/// only keeps the trainer signatures uniform.
pub fn train_logistic(data: &Dataset, lambda: f64, max_iters: usize, tol: f64, _seed: u64) -> Result<LinearModel> {
    train_logistic_traced(data, lambda, max_iters, tol).map(|r| r.0)
}

pub(crate) fn train_logistic_traced(data: &Dataset, lambda: f64, max_iters: usize, tol: f64) -> Result<(LinearModel, DescentTrace)> {
    check(data, lambda)?;
    let (x, trace) = descend(|p| logistic_objective(data, p, lambda), vec![0.0; data.dim + 1], max_iters, tol);
    Ok((finish(ModelKind::Logistic, x, lambda)?, trace))
}

/// Ridge regression on the `+1/-1` targets, read out by sign.
pub fn train_ridge(data: &Dataset, lambda: f64, max_iters: usize, tol: f64, _seed: u64) -> Result<LinearModel> {
    check(data, lambda)?;
    let (x, _) = descend(|p| ridge_objective(data, p, lambda), vec![0.0; data.dim + 1], max_iters, tol);
    finish(ModelKind::Ridge, x, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(seed: u64, n: usize, d: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let x: Vec<f64> = (0..d)
                .map(|_| if rng.random::<f64>() < 0.5 { rng.random_range(-2.0..2.0) } else { 0.0 })
                .collect();
            labels.push(i % 2 == 0 || x[0] > 0.5);
            rows.push(SparseVector::from_dense(&x));
        }
        Dataset::new(rows, &labels, d).unwrap()
    }

    fn central_diff(f: &dyn Fn(&[f64]) -> f64, p: &[f64], j: usize, h: f64) -> f64 {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[j] += h;
        b[j] -= h;
        (f(&a) - f(&b)) / (2.0 * h)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let data = random_data(1, 30, 6).balanced();
        for _ in 0..20 {
            let p: Vec<f64> = (0..7).map(|_| rng.random_range(-1.5..1.5)).collect();
            for obj in [logistic_objective, ridge_objective] {
                let (_, g) = obj(&data, &p, 0.3);
                let f = |q: &[f64]| obj(&data, q, 0.3).0;
                for j in 0..7 {
                    let fd = central_diff(&f, &p, j, 1e-5);
                    let rel = (g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1e-8);
                    assert!(rel < 1e-4, "component {j}: {} vs {fd}", g[j]);
                }
            }
        }
    }

    #[test]
    fn symmetric_points() {
        let rows = vec![SparseVector::from_entries([(0, -1.0)]), SparseVector::from_entries([(0, 1.0)])];
        let d = Dataset::new(rows, &[false, true], 1).unwrap();
        let m = train_logistic(&d, 0.1, 500, 1e-10, 0).unwrap();
        assert!(m.weights[0] > 0.0);
        assert!(m.bias.abs() < 1e-8);
    }

    #[test]
    fn descent_never_increases_objective() {
        let d = random_data(3, 80, 10);
        let (_, trace) = train_logistic_traced(&d, 1e-3, 200, 1e-9).unwrap();
        assert!(trace.objective.windows(2).all(|w| w[1] <= w[0]));
        assert!(trace.objective.len() > 5);
    }

    #[test]
    fn stronger_penalty_shrinks_weights() {
        let d = random_data(5, 60, 5);
        let mut last = f64::INFINITY;
        for lambda in [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0] {
            let m = train_logistic(&d, lambda, 2000, 1e-10, 0).unwrap();
            let norm = m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            assert!(norm <= last + 1e-9, "{lambda}: {norm} > {last}");
            last = norm;
        }
        assert!(last < 0.05);
    }

    #[test]
    fn scaling_features_keeps_predictions() {
        let d = random_data(8, 40, 4);
        let scaled = Dataset {
            rows: d.rows.iter().map(|r| r.scaled(3.0)).collect(),
            ..d.clone()
        };
        let a = train_logistic(&d, 0.0, 3000, 1e-10, 0).unwrap();
        let b = train_logistic(&scaled, 0.0, 3000, 1e-10, 0).unwrap();
        for (x, xs) in d.rows.iter().zip(&scaled.rows) {
            let (sa, sb) = (a.score(x), b.score(xs));
            if sa.abs() > 1e-3 {
                assert_eq!(sa > 0.0, sb > 0.0);
            }
        }
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![SparseVector::new(); 3];
        let d = Dataset::new(rows, &[true; 3], 2).unwrap();
        assert!(train_logistic(&d, 0.1, 10, 1e-6, 0).is_err());
        assert!(train_ridge(&d, 0.1, 10, 1e-6, 0).is_err());
    }

    #[test]
    fn ridge_fits_signs() {
        let d = random_data(9, 50, 3);
        let m = train_ridge(&d, 1e-3, 500, 1e-9, 0).unwrap();
        let correct = d
            .rows
            .iter()
            .zip(&d.targets)
            .filter(|(x, &y)| (m.score(x) > 0.0) == (y > 0.0))
            .count();
        assert!(correct * 10 >= d.len() * 6, "{correct}");
    }
}
