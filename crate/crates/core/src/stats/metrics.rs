use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-fold classification quality. AUC fields are `None` when the true
/// labels contain a single class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub auc_roc: Option<f64>,
    pub auc_pr: Option<f64>,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_metrics(
    y_true: &[bool],
    y_pred: &[bool],
    scores: &[f64],
) -> Result<MetricReport> {
    if y_true.is_empty() || y_true.len() != y_pred.len() || y_true.len() != scores.len() {
        return Err(Error::Validation(format!(
            "metric inputs must be non-empty and equally long: {} labels, {} predictions, {} scores",
            y_true.len(),
            y_pred.len(),
            scores.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    Ok(MetricReport {
        accuracy: (tp + tn) as f64 / y_true.len() as f64,
        auc_roc: auc_roc(y_true, scores),
        auc_pr: auc_pr(y_true, scores),
        precision_macro: 0.5 * (ratio(tp, tp + fp) + ratio(tn, tn + fn_)),
        recall_macro: 0.5 * (ratio(tp, tp + fn_) + ratio(tn, tn + fp)),
        tp,
        fp,
        tn,
        fn_,
    })
}

/// Probability that a random positive outscores a random negative, with ties
/// counted as one half. Computed from mid-ranks.
pub fn auc_roc(y_true: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = y_true.iter().filter(|&&t| t).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum_pos += mid * order[i..=j].iter().filter(|&&k| y_true[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Area under the step-wise precision–recall curve (average precision).
pub fn auc_pr(y_true: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = y_true.iter().filter(|&&t| t).count();
    if n_pos == 0 || n_pos == y_true.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            tp += usize::from(y_true[order[i]]);
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / seen as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_filled_confusion_matrix() {
        let m = classification_metrics(
            &[true, true, false, false],
            &[true, false, false, false],
            &[0.9, 0.4, 0.3, 0.1],
        )
        .unwrap();
        assert_eq!((m.tp, m.fn_, m.tn, m.fp), (1, 1, 2, 0));
        assert_eq!(m.accuracy, 0.75);
        assert!((m.precision_macro - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((m.recall_macro - (0.5 + 1.0) / 2.0).abs() < 1e-15);
        assert_eq!(m.auc_roc, Some(1.0));
        assert_eq!(m.auc_pr, Some(1.0));
    }

    #[test]
    fn always_positive_baseline_on_balanced_set() {
        let y = [true, false, true, false, false, true];
        let m = classification_metrics(&y, &[true; 6], &[1.0; 6]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.auc_roc, Some(0.5));
        assert_eq!(m.auc_pr, Some(0.5));
        assert_eq!(m.precision_macro, 0.25);
        assert_eq!(m.recall_macro, 0.5);
    }

    #[test]
    fn single_class_has_undefined_auc() {
        let m = classification_metrics(&[true, true], &[true, false], &[0.7, 0.2]).unwrap();
        assert_eq!(m.auc_roc, None);
        assert_eq!(m.auc_pr, None);
        assert_eq!(m.accuracy, 0.5);
    }

    #[test]
    fn pr_curve_step_interpolation() {
        // ranking: +, -, +, -  -> AP = 0.5 * 1 + 0.5 * 2/3
        let ap = auc_pr(&[true, false, true, false], &[0.9, 0.8, 0.7, 0.1]).unwrap();
        assert!((ap - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(classification_metrics(&[true], &[true, false], &[0.1]).is_err());
        assert!(classification_metrics(&[], &[], &[]).is_err());
    }

    fn brute_auc(y: &[bool], s: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] && !y[j] {
                    den += 1.0;
                    if s[i] > s[j] {
                        num += 1.0;
                    } else if s[i] == s[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    proptest! {
        #[test]
        fn auc_invariants(
            data in proptest::collection::vec((any::<bool>(), 0u8..6), 2..40),
        ) {
            let y: Vec<bool> = data.iter().map(|d| d.0).collect();
            let s: Vec<f64> = data.iter().map(|d| f64::from(d.1) / 5.0).collect();
            let pred: Vec<bool> = s.iter().map(|&v| v > 0.5).collect();
            let m = classification_metrics(&y, &pred, &s).unwrap();
            let errors = y.iter().zip(&pred).filter(|(a, b)| a != b).count() as f64 / y.len() as f64;
            prop_assert!((m.accuracy + errors - 1.0).abs() < 1e-12);

            if let Some(auc) = m.auc_roc {
                prop_assert!((auc - brute_auc(&y, &s)).abs() < 1e-12);
                let transformed: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
                prop_assert!((auc_roc(&y, &transformed).unwrap() - auc).abs() < 1e-12);
                let ap = m.auc_pr.unwrap();
                prop_assert!((0.0..=1.0).contains(&ap));
            }

            // relabeling both truth and prediction swaps the per-class terms
            let ny: Vec<bool> = y.iter().map(|v| !v).collect();
            let np: Vec<bool> = pred.iter().map(|v| !v).collect();
            let flipped = classification_metrics(&ny, &np, &s).unwrap();
            prop_assert!((flipped.precision_macro - m.precision_macro).abs() < 1e-12);
            prop_assert!((flipped.recall_macro - m.recall_macro).abs() < 1e-12);
            prop_assert_eq!((flipped.tp, flipped.tn), (m.tn, m.tp));
        }
    }
}
