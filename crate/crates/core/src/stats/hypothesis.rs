use serde::{Deserialize, Serialize};

use super::special::{chi_square_sf, student_t_two_sided};
use super::{mean, sample_variance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub dof: f64,
}

/// McNemar's chi-square with continuity correction from the discordant counts.
///
/// `b` counts pairs where only the first classifier was right, `c` pairs
/// where only the second was.
pub fn mcnemar_from_counts(b: u64, c: u64) -> Result<TestResult> {
    if b + c == 0 {
        return Ok(TestResult {
            test_name: "mcnemar".into(),
            statistic: 0.0,
            p_value: 1.0,
            dof: 1.0,
        });
    }
    let diff = (b as f64 - c as f64).abs();
    let corrected = (diff - 1.0).max(0.0);
    let statistic = corrected * corrected / (b + c) as f64;
    Ok(TestResult {
        test_name: "mcnemar".into(),
        statistic,
        p_value: chi_square_sf(statistic, 1.0)?,
        dof: 1.0,
    })
}

/// Paired comparison of two classifiers' per-sample correctness.
pub fn mcnemar_test(correct_a: &[bool], correct_b: &[bool]) -> Result<TestResult> {
    if correct_a.len() != correct_b.len() {
        return Err(Error::Validation(format!(
            "paired vectors differ in length: {} vs {}",
            correct_a.len(),
            correct_b.len()
        )));
    }
    let mut b = 0;
    let mut c = 0;
    for (&a_ok, &b_ok) in correct_a.iter().zip(correct_b) {
        match (a_ok, b_ok) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    mcnemar_from_counts(b, c)
}

/// Two-sided Welch t-test without the equal-variance assumption.
pub fn welch_t_test(sample_a: &[f64], sample_b: &[f64]) -> Result<TestResult> {
    for (name, s) in [("first", sample_a), ("second", sample_b)] {
        if s.len() < 2 {
            return Err(Error::Validation(format!(
                "Welch's t-test needs at least two values in the {name} sample"
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "{name} sample has non-finite values"
            )));
        }
    }
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let (va, vb) = (sample_variance(sample_a), sample_variance(sample_b));
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Validation(
            "Welch's t-test needs non-zero variance in both samples".into(),
        ));
    }
    let (sa, sb) = (va / na, vb / nb);
    let statistic = (mean(sample_a) - mean(sample_b)) / (sa + sb).sqrt();
    let dof = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TestResult {
        test_name: "welch_t".into(),
        statistic,
        p_value: student_t_two_sided(statistic, dof)?,
        dof,
    })
}
