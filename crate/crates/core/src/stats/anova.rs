use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// One-way ANOVA F statistic of each column between the two classes.
///
/// Columns with zero total variance get `NaN`; columns whose classes are
/// internally constant but differ get `+inf`.
pub fn anova_f_scores(x: ArrayView2<f64>, y: &[bool]) -> Result<Vec<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::Validation(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    let n_pos = y.iter().filter(|&&v| v).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let n = y.len() as f64;
    let scores = x
        .columns()
        .into_iter()
        .map(|col| {
            let (mut sum_pos, mut sum_neg) = (0.0, 0.0);
            for (&v, &label) in col.iter().zip(y) {
                if label {
                    sum_pos += v;
                } else {
                    sum_neg += v;
                }
            }
            let mean_pos = sum_pos / n_pos as f64;
            let mean_neg = sum_neg / n_neg as f64;
            let grand = (sum_pos + sum_neg) / n;
            let total: f64 = col.iter().map(|v| (v - grand) * (v - grand)).sum();
            if total == 0.0 {
                return f64::NAN;
            }
            let within: f64 = col
                .iter()
                .zip(y)
                .map(|(&v, &label)| {
                    let d = v - if label { mean_pos } else { mean_neg };
                    d * d
                })
                .sum();
            let between = n_pos as f64 * (mean_pos - grand).powi(2)
                + n_neg as f64 * (mean_neg - grand).powi(2);
            // two groups: 1 between-group and n-2 within-group degrees of freedom
            if within == 0.0 {
                f64::INFINITY
            } else {
                between / (within / (n - 2.0))
            }
        })
        .collect();
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hand_computed_fixture() {
        // 6 samples x 3 features
        let x = array![
            [1.0, 4.0, 2.0],
            [2.0, 3.0, 2.0],
            [3.0, 5.0, 2.0],
            [4.0, 6.0, 2.0],
            [6.0, 2.0, 2.0],
            [8.0, 4.0, 2.0],
        ];
        let y = [false, false, false, true, true, true];
        let f = anova_f_scores(x.view(), &y).unwrap();

        // column 0: group means 2 and 6, grand 4; SSB = 3*4 + 3*4 = 24;
        // SSW = (1+0+1) + (4+0+4) = 10; F = 24 / (10/4) = 9.6
        assert!((f[0] - 9.6).abs() < 1e-10);
        // column 1: means 4 and 4 -> F = 0
        assert!(f[1].abs() < 1e-10);
        assert!(f[2].is_nan());
    }

    #[test]
    fn separated_constant_groups_are_infinite() {
        let x = array![[0.0], [0.0], [1.0], [1.0]];
        let f = anova_f_scores(x.view(), &[false, false, true, true]).unwrap();
        assert_eq!(f[0], f64::INFINITY);
    }

    #[test]
    fn needs_both_classes() {
        let x = array![[0.0], [1.0]];
        assert!(anova_f_scores(x.view(), &[true, true]).is_err());
    }
}
