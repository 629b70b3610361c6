//! Binary decision trees shared by every tree-based learner.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::TreeParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Array-backed tree; node 0 is the root. `gain` holds the total impurity
/// (or loss) reduction credited to each feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub gain: Vec<f64>,
}

impl Tree {
    pub fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Gain per feature scaled to sum to one; all zeros if the tree never split.
    pub fn normalized_gain(&self) -> Vec<f64> {
        normalize(&self.gain)
    }
}

pub(crate) fn normalize(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter().map(|g| g / total).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Midpoint between two consecutive distinct values that still separates them.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

fn gini_weighted(pos: f64, total: f64) -> f64 {
    // total * gini impurity = total * 2 p (1 - p)
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * total * p * (1.0 - p)
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [bool],
    w: &'a [f64],
    params: &'a TreeParams,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
    gain: Vec<f64>,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn best_split(&mut self, idx: &[usize], pos: f64, total: f64) -> Option<Split> {
        let n_features = self.x.ncols();
        let candidates: Vec<usize> = match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < n_features => {
                let mut c = sample(rng, n_features, k).into_vec();
                c.sort_unstable();
                c
            }
            _ => (0..n_features).collect(),
        };
        let parent = gini_weighted(pos, total);
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<Split> = None;
        let mut order = idx.to_vec();
        for f in candidates {
            let col = self.x.column(f);
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let (mut lw, mut lpos) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                lw += self.w[i];
                if self.y[i] {
                    lpos += self.w[i];
                }
                let (v, next) = (col[i], col[order[k + 1]]);
                if v == next || k + 1 < min_leaf || order.len() - k - 1 < min_leaf {
                    continue;
                }
                let g = parent - gini_weighted(lpos, lw) - gini_weighted(pos - lpos, total - lw);
                if best.as_ref().is_none_or(|b| g > b.gain) {
                    best = Some(Split {
                        feature: f,
                        threshold: midpoint(v, next),
                        gain: g,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let total: f64 = idx.iter().map(|&i| self.w[i]).sum();
        let pos: f64 = idx.iter().filter(|&&i| self.y[i]).map(|&i| self.w[i]).sum();
        let value = if total > 0.0 { pos / total } else { 0.0 };
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value });

        let pure = pos <= 0.0 || pos >= total;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || idx.len() < 2 * self.params.min_samples_leaf.max(1) {
            return slot;
        }
        let Some(split) = self.best_split(&idx, pos, total) else {
            return slot;
        };
        self.gain[split.feature] += split.gain.max(0.0);
        let col = self.x.column(split.feature);
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| col[i] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        slot
    }
}

/// Fit a CART classification tree with Gini impurity and exact greedy splits.
///
/// Rows with zero weight are ignored. Leaves hold the weighted fraction of
/// positive rows. `rng` is consulted only when `params.max_features` limits
/// the split candidates.
pub fn fit_tree(
    x: ArrayView2<f64>,
    y: &[bool],
    weights: &[f64],
    params: &TreeParams,
    rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    let idx: Vec<usize> = (0..x.nrows()).filter(|&i| weights[i] > 0.0).collect();
    let mut b = Builder {
        x,
        y,
        w: weights,
        params,
        rng,
        nodes: Vec::new(),
        gain: vec![0.0; x.ncols()],
    };
    b.grow(idx, 0);
    Tree {
        nodes: b.nodes,
        gain: b.gain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separable_line() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [false, false, true, true];
        let t = fit_tree(
            x.view(),
            &y,
            &[1.0; 4],
            &TreeParams {
                min_samples_leaf: 1,
                ..Default::default()
            },
            None,
        );
        assert_eq!(t.depth(), 1);
        match t.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
            }
            _ => panic!("expected a split"),
        }
        for (row, &label) in x.rows().into_iter().zip(&y) {
            assert_eq!(t.predict_row(row) > 0.5, label);
        }
        assert_eq!(t.normalized_gain(), vec![1.0]);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // both columns separate the classes equally well
        let x = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let y = [false, false, true, true];
        let t = fit_tree(
            x.view(),
            &y,
            &[1.0; 4],
            &TreeParams {
                min_samples_leaf: 1,
                ..Default::default()
            },
            None,
        );
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_and_leaf_limits() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]];
        let y = [false, true, false, true, false, true];
        let stump = fit_tree(
            x.view(),
            &y,
            &[1.0; 6],
            &TreeParams {
                max_depth: Some(1),
                min_samples_leaf: 1,
                max_features: None,
            },
            None,
        );
        assert_eq!(stump.depth(), 1);
        let wide = fit_tree(
            x.view(),
            &y,
            &[1.0; 6],
            &TreeParams {
                max_depth: None,
                min_samples_leaf: 3,
                max_features: None,
            },
            None,
        );
        assert!(wide.depth() <= 1);
        let full = fit_tree(
            x.view(),
            &y,
            &[1.0; 6],
            &TreeParams {
                min_samples_leaf: 1,
                ..Default::default()
            },
            None,
        );
        for (row, &label) in x.rows().into_iter().zip(&y) {
            assert_eq!(full.predict_row(row) > 0.5, label);
        }
    }

    #[test]
    fn midpoint_separates_adjacent_floats() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
    }
}
