//! Regularized incomplete gamma and beta functions, and the chi-square and
//! Student t tail probabilities built on them.

use crate::error::{Error, Result};

/// Lower regularized incomplete gamma function P(s, x).
pub fn regularized_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    if !s.is_finite() || s <= 0.0 || x.is_nan() || x < 0.0 {
        return Err(Error::Validation(format!(
            "incomplete gamma needs s > 0 and x >= 0, got s={s}, x={x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(statrs::function::gamma::gamma_lr(s, x).clamp(0.0, 1.0))
}

/// Upper regularized incomplete gamma function Q(s, x) = 1 − P(s, x).
pub fn regularized_upper_gamma(s: f64, x: f64) -> Result<f64> {
    if !s.is_finite() || s <= 0.0 || x.is_nan() || x < 0.0 {
        return Err(Error::Validation(format!(
            "incomplete gamma needs s > 0 and x >= 0, got s={s}, x={x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(statrs::function::gamma::gamma_ur(s, x).clamp(0.0, 1.0))
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() || a <= 0.0 || b <= 0.0 || !(0.0..=1.0).contains(&x) {
        return Err(Error::Validation(format!(
            "incomplete beta needs a, b > 0 and 0 <= x <= 1, got a={a}, b={b}, x={x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    Ok(statrs::function::beta::beta_reg(a, b, x).clamp(0.0, 1.0))
}

/// Upper tail P(X > x) of a chi-square variable with `dof` degrees of freedom.
pub fn chi_square_sf(x: f64, dof: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(1.0);
    }
    regularized_upper_gamma(dof / 2.0, x / 2.0)
}

/// Two-sided tail P(|T| > |t|) of a Student t variable.
pub fn student_t_two_sided(t: f64, dof: f64) -> Result<f64> {
    if dof.is_nan() || dof <= 0.0 {
        return Err(Error::Validation(format!(
            "t distribution needs dof > 0, got {dof}"
        )));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        assert_eq!(regularized_incomplete_gamma(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 1.0).unwrap(), 1.0);
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(chi_square_sf(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(student_t_two_sided(0.0, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn closed_forms() {
        // P(1, x) = 1 - e^-x ; I_x(1, 1) = x ; I_x(a, 1) = x^a
        for &x in &[0.1, 0.5, 2.0, 7.5] {
            assert!(
                (regularized_incomplete_gamma(1.0, x).unwrap() - (1.0 - (-x).exp())).abs() < 1e-13
            );
        }
        for &x in &[0.05, 0.3, 0.9] {
            assert!((regularized_incomplete_beta(1.0, 1.0, x).unwrap() - x).abs() < 1e-14);
            assert!((regularized_incomplete_beta(3.0, 1.0, x).unwrap() - x * x * x).abs() < 1e-14);
        }
        // t with 1 dof is Cauchy: P(|T| > t) = 1 - 2 atan(t) / pi
        let t: f64 = 1.7;
        let cauchy = 1.0 - 2.0 * t.atan() / std::f64::consts::PI;
        assert!((student_t_two_sided(t, 1.0).unwrap() - cauchy).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(regularized_incomplete_gamma(0.0, 1.0).is_err());
        assert!(regularized_incomplete_gamma(1.0, -1.0).is_err());
        assert!(regularized_incomplete_beta(1.0, 1.0, 1.5).is_err());
        assert!(regularized_incomplete_beta(-1.0, 1.0, 0.5).is_err());
        assert!(student_t_two_sided(1.0, 0.0).is_err());
    }

    #[test]
    fn monotone_in_x() {
        let mut prev_g = 0.0;
        let mut prev_b = 0.0;
        for i in 1..200 {
            let x = i as f64 / 200.0;
            let g = regularized_incomplete_gamma(2.5, 10.0 * x).unwrap();
            let b = regularized_incomplete_beta(2.5, 0.7, x).unwrap();
            assert!(g >= prev_g && b >= prev_b);
            prev_g = g;
            prev_b = b;
        }
    }
}
