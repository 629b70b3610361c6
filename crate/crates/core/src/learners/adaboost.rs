//! SAMME boosting of decision stumps for two classes.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::params::{AdaboostParams, TreeParams};
use super::tree::{fit_tree, normalize, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub tree: Tree,
    pub alpha: f64,
    /// Weighted training error at the round the stump was selected.
    pub weighted_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adaboost {
    pub stumps: Vec<Stump>,
}

fn vote(tree: &Tree, row: ArrayView1<f64>) -> f64 {
    if tree.predict_row(row) > 0.5 {
        1.0
    } else {
        -1.0
    }
}

impl Adaboost {
    /// α-weighted vote in [−1, 1]; positive means the empathic class.
    pub fn margin(&self, row: ArrayView1<f64>) -> f64 {
        let total: f64 = self.stumps.iter().map(|s| s.alpha).sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.stumps
            .iter()
            .map(|s| s.alpha * vote(&s.tree, row))
            .sum::<f64>()
            / total
    }

    pub fn importances(&self) -> Vec<f64> {
        let p = self.stumps[0].tree.gain.len();
        let mut acc = vec![0.0; p];
        for s in &self.stumps {
            for (a, g) in acc.iter_mut().zip(s.tree.normalized_gain()) {
                *a += s.alpha * g;
            }
        }
        normalize(&acc)
    }
}

pub fn fit_adaboost(x: ArrayView2<f64>, y: &[bool], params: &AdaboostParams) -> Adaboost {
    let n = x.nrows();
    let stump_params = TreeParams {
        max_depth: Some(1),
        min_samples_leaf: 1,
        max_features: None,
    };
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    for _ in 0..params.n_estimators {
        let tree = fit_tree(x, y, &weights, &stump_params, None);
        let wrong: Vec<bool> = x
            .rows()
            .into_iter()
            .zip(y)
            .map(|(row, &label)| (vote(&tree, row) > 0.0) != label)
            .collect();
        let total: f64 = weights.iter().sum();
        let err = wrong
            .iter()
            .zip(&weights)
            .filter(|(w, _)| **w)
            .map(|(_, v)| v)
            .sum::<f64>()
            / total;
        if err <= 0.0 {
            stumps.push(Stump {
                tree,
                alpha: 1.0,
                weighted_error: 0.0,
            });
            break;
        }
        if err >= 0.5 {
            // no better than chance; keep one majority stump so the model is usable
            if stumps.is_empty() {
                stumps.push(Stump {
                    tree,
                    alpha: 1.0,
                    weighted_error: err,
                });
            }
            break;
        }
        let alpha = params.learning_rate * ((1.0 - err) / err).ln();
        for (w, &bad) in weights.iter_mut().zip(&wrong) {
            if bad {
                *w *= alpha.exp();
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        stumps.push(Stump {
            tree,
            alpha,
            weighted_error: err,
        });
    }
    Adaboost { stumps }
}
