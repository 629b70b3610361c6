//! Gradient-boosted regression trees on the logistic loss.
//!
//! Each round fits a depth-limited tree to the gradient and hessian of the
//! loss at the current margins. Splits are chosen by exact greedy search over
//! midpoints; leaves take the Newton weight `−G/(H + λ)` scaled by the
//! learning rate.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::linear::sigmoid;
use super::params::GbtParams;
use super::tree::{midpoint, normalize, Node, Tree};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_margin: f64,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    pub fn margin(&self, row: ArrayView1<f64>) -> f64 {
        self.base_margin + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn probability(&self, row: ArrayView1<f64>) -> f64 {
        sigmoid(self.margin(row))
    }

    /// Total split gain per feature, normalized.
    pub fn importances(&self, features: usize) -> Vec<f64> {
        let mut acc = vec![0.0; features];
        for t in &self.trees {
            for (a, g) in acc.iter_mut().zip(&t.gain) {
                *a += g;
            }
        }
        normalize(&acc)
    }
}

/// Mean logistic loss of margins against labels.
pub fn logistic_loss(margins: &[f64], y: &[bool]) -> f64 {
    margins
        .iter()
        .zip(y)
        .map(|(&z, &label)| {
            let t = if label { 1.0 } else { 0.0 };
            let sp = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            sp - t * z
        })
        .sum::<f64>()
        / margins.len() as f64
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<Node>,
    gain: Vec<f64>,
}

impl Grower<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let g: f64 = idx.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = idx.iter().map(|&i| self.hess[i]).sum();
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: -g / (h + self.params.lambda) * self.params.learning_rate,
        });
        if depth >= self.params.max_depth || idx.len() < 2 {
            return slot;
        }
        let parent = self.score(g, h);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.clone();
        for f in 0..self.x.ncols() {
            let col = self.x.column(f);
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                gl += self.grad[i];
                hl += self.hess[i];
                let (v, next) = (col[i], col[order[k + 1]]);
                let hr = h - hl;
                if v == next
                    || hl < self.params.min_child_weight
                    || hr < self.params.min_child_weight
                {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(g - gl, hr) - parent)
                    - self.params.gamma;
                if best.is_none_or(|(_, _, b)| gain > b) {
                    best = Some((f, midpoint(v, next), gain));
                }
            }
        }
        let Some((feature, threshold, gain)) = best.filter(|b| b.2 > 0.0) else {
            return slot;
        };
        self.gain[feature] += gain;
        let col = self.x.column(feature);
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| col[i] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }
}

/// Train and return the model with the mean training loss after each round.
pub fn train(
    x: ArrayView2<f64>,
    y: &[bool],
    params: &GbtParams,
    model_seed: u64,
) -> (GbtModel, Vec<f64>) {
    let n = x.nrows();
    let mut margins = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut rng = seed::rng(model_seed);
    let rows_per_round = ((params.subsample * n as f64).floor() as usize).clamp(1, n);
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut losses = Vec::with_capacity(params.n_estimators);
    for _ in 0..params.n_estimators {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - if y[i] { 1.0 } else { 0.0 };
            hess[i] = p * (1.0 - p);
        }
        let rows: Vec<usize> = if rows_per_round < n {
            let mut r = sample(&mut rng, n, rows_per_round).into_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let mut grower = Grower {
            x,
            grad: &grad,
            hess: &hess,
            params,
            nodes: Vec::new(),
            gain: vec![0.0; x.ncols()],
        };
        grower.grow(rows, 0);
        let tree = Tree {
            nodes: grower.nodes,
            gain: grower.gain,
        };
        for (m, row) in margins.iter_mut().zip(x.rows()) {
            *m += tree.predict_row(row);
        }
        losses.push(logistic_loss(&margins, y));
        trees.push(tree);
    }
    (
        GbtModel {
            base_margin: 0.0,
            trees,
        },
        losses,
    )
}
