//! Linear models: logistic regression and a hinge-loss SVM.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{LogisticParams, SvmParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(features: usize) -> Self {
        LinearModel {
            weights: vec![0.0; features],
            bias: 0.0,
        }
    }

    pub fn decision(&self, row: ArrayView1<f64>) -> f64 {
        self.bias
            + row
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Penalized negative log-likelihood and its gradient.
///
/// `params` holds the feature weights followed by the (unpenalized) intercept:
/// `f = Σ_i [log(1 + e^{z_i}) − y_i z_i] + (l2 / 2)·‖w‖²` with `z_i = w·x_i + b`.
pub fn logistic_objective(
    params: &[f64],
    x: ArrayView2<f64>,
    y: &[bool],
    l2: f64,
) -> (f64, Vec<f64>) {
    let p = x.ncols();
    let (w, b) = (&params[..p], params[p]);
    let mut value = 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    let mut grad: Vec<f64> = w.iter().map(|v| l2 * v).collect();
    grad.push(0.0);
    for (row, &label) in x.rows().into_iter().zip(y) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        let t = if label { 1.0 } else { 0.0 };
        value += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, xi) in grad.iter_mut().zip(row.iter()) {
            *g += r * xi;
        }
        grad[p] += r;
    }
    (value, grad)
}

/// Gradient descent with Armijo backtracking; stops when the gradient's
/// ∞-norm drops below `tol` or after `max_iter` iterations.
pub fn fit_logistic(x: ArrayView2<f64>, y: &[bool], params: &LogisticParams) -> LinearModel {
    let p = x.ncols();
    let mut theta = vec![0.0; p + 1];
    let (mut f, mut g) = logistic_objective(&theta, x, y, params.l2);
    let mut step = 1.0;
    for _ in 0..params.max_iter {
        let gnorm_inf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm_inf < params.tol {
            break;
        }
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, d)| t - step * d).collect();
            let (fc, gc) = logistic_objective(&cand, x, y, params.l2);
            if fc <= f - 1e-4 * step * gg {
                theta = cand;
                f = fc;
                g = gc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step *= 2.0;
    }
    LinearModel {
        bias: theta[p],
        weights: theta[..p].to_vec(),
    }
}

/// Hinge loss + L2 by stochastic subgradient descent (step 1/(λt)) with
/// iterate averaging. The intercept is an extra constant feature and is
/// regularized with the weights; `λ = 1 / (C·n)`.
pub fn fit_svm(
    x: ArrayView2<f64>,
    y: &[bool],
    params: &SvmParams,
    rng: &mut ChaCha8Rng,
) -> LinearModel {
    let (n, p) = x.dim();
    let lambda = 1.0 / (params.c * n as f64);
    let mut w = vec![0.0; p + 1];
    let mut avg = vec![0.0; p + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = x.row(i);
            let label = if y[i] { 1.0 } else { -1.0 };
            let margin = label * (w[p] + row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>());
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(row.iter()) {
                    *wj += eta * label * xj;
                }
                w[p] += eta * label;
            }
            let k = 1.0 / t as f64;
            avg.iter_mut().zip(&w).for_each(|(a, v)| *a += (v - *a) * k);
        }
    }
    LinearModel {
        bias: avg[p],
        weights: avg[..p].to_vec(),
    }
}
