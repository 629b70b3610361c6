use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::stats::anova_f_scores;

/// Indices of the `k` columns with the largest ANOVA F between classes, best
/// first. Ties go to the lower index; zero-variance columns rank last.
pub fn select_top_k_features(
    train_x: ArrayView2<f64>,
    train_y: &[bool],
    k: usize,
) -> Result<Vec<usize>> {
    let p = train_x.ncols();
    if k == 0 || k > p {
        return Err(Error::Validation(format!("k = {k} must lie in 1..={p}")));
    }
    let scores = anova_f_scores(train_x, train_y)?;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (scores[a], scores[b]);
        match (fa.is_nan(), fb.is_nan()) {
            (true, true) => a.cmp(&b),
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => fb.total_cmp(&fa).then(a.cmp(&b)),
        }
    });
    order.truncate(k);
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    #[test]
    fn separated_feature_first() {
        let mut rng = crate::seed::rng(9);
        let y: Vec<bool> = (0..40).map(|i| i < 20).collect();
        let x = Array2::from_shape_fn((40, 6), |(i, j)| {
            if j == 4 {
                if y[i] {
                    5.0
                } else {
                    -5.0
                }
            } else {
                rng.random_range(-1.0..1.0)
            }
        });
        assert_eq!(select_top_k_features(x.view(), &y, 1).unwrap(), vec![4]);
    }

    #[test]
    fn k_equal_to_width_keeps_everything() {
        let x = array![
            [1.0, 0.0, 3.0],
            [2.0, 0.0, 1.0],
            [3.0, 0.0, 2.0],
            [4.0, 0.0, 0.0]
        ];
        let y = [false, false, true, true];
        let mut all = select_top_k_features(x.view(), &y, 3).unwrap();
        // the zero-variance column is last
        assert_eq!(all[2], 1);
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2]);
        assert!(select_top_k_features(x.view(), &y, 4).is_err());
    }

    #[test]
    fn ties_prefer_lower_index() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]];
        let y = [false, false, true, true];
        assert_eq!(select_top_k_features(x.view(), &y, 2).unwrap(), vec![0, 1]);
    }
}
