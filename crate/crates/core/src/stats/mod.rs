//! Evaluation metrics, significance tests and the special functions behind them.

mod anova;
mod hypothesis;
mod metrics;
pub mod special;

pub use anova::anova_f_scores;
pub use hypothesis::{mcnemar_from_counts, mcnemar_test, welch_t_test, TestResult};
pub use metrics::{auc_pr, auc_roc, classification_metrics, MetricReport};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with an n−1 denominator.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}
