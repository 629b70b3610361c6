//! Bagged trees and random forests.

use ndarray::ArrayView2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::EnsembleParams;
use super::tree::{fit_tree, normalize, Tree};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteEnsemble {
    pub trees: Vec<Tree>,
}

impl VoteEnsemble {
    /// Fraction of member trees voting positive.
    pub fn vote_fraction(&self, row: ndarray::ArrayView1<f64>) -> f64 {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict_row(row) > 0.5)
            .count();
        votes as f64 / self.trees.len() as f64
    }

    pub fn importances(&self) -> Vec<f64> {
        let p = self.trees[0].gain.len();
        let mut acc = vec![0.0; p];
        for t in &self.trees {
            for (a, g) in acc.iter_mut().zip(t.normalized_gain()) {
                *a += g;
            }
        }
        normalize(&acc)
    }
}

/// Multiplicity of each row in one bootstrap resample of `n` rows.
pub fn bootstrap_counts(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1.0;
    }
    counts
}

/// RNG of ensemble member `member`.
pub fn member_rng(model_seed: u64, member: usize) -> ChaCha8Rng {
    seed::rng(seed::derive(model_seed, member as u64))
}

pub fn fit_ensemble(
    x: ArrayView2<f64>,
    y: &[bool],
    params: &EnsembleParams,
    model_seed: u64,
) -> VoteEnsemble {
    let p = x.ncols();
    let mut tree_params = params.tree.clone();
    if params.sqrt_features {
        tree_params.max_features = Some(((p as f64).sqrt().ceil() as usize).max(1));
    }
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|m| {
            let mut rng = member_rng(model_seed, m);
            let counts = bootstrap_counts(x.nrows(), &mut rng);
            fit_tree(x, y, &counts, &tree_params, Some(&mut rng))
        })
        .collect();
    VoteEnsemble { trees }
}
