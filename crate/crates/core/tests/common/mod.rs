//! Independent reference computations shared by the integration tests.

#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

use std::f64::consts::PI;

fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let f = &f as &dyn Fn(f64) -> f64;
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Upper tail of chi-square(1) as twice the standard normal tail beyond sqrt(x).
pub fn chi2_1_sf(x: f64) -> f64 {
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let lo = x.sqrt();
    2.0 * integrate(phi, lo, lo + 40.0, 1e-15)
}

/// Two-sided Student t tail. With s = sqrt(dof) tan(theta) the density
/// becomes proportional to cos(theta)^(dof - 1) on [0, pi/2).
pub fn t_two_sided(t: f64, dof: f64) -> f64 {
    let g = |th: f64| th.cos().powf(dof - 1.0);
    let theta0 = (t.abs() / dof.sqrt()).atan();
    integrate(g, theta0, PI / 2.0, 1e-15) / integrate(g, 0.0, PI / 2.0, 1e-15)
}

pub fn mean(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s / v.len() as f64
}

pub fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    let mut s = 0.0;
    for x in v {
        s += (x - m) * (x - m);
    }
    s / (v.len() - 1) as f64
}

/// Welch statistic and Welch-Satterthwaite degrees of freedom.
pub fn welch(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_var(a), sample_var(b));
    let t = (mean(a) - mean(b)) / (va / na + vb / nb).sqrt();
    let num = (va / na + vb / nb).powi(2);
    let den = (va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0);
    (t, num / den)
}

/// Cronbach's alpha from the definition.
pub fn alpha(rows: &[Vec<f64>]) -> f64 {
    let k = rows[0].len();
    let mut items = 0.0;
    for j in 0..k {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        items += sample_var(&col);
    }
    let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let k = k as f64;
    k / (k - 1.0) * (1.0 - items / sample_var(&totals))
}

/// Two-group one-way ANOVA F via explicit between and within sums of squares.
pub fn anova_f(col: &[f64], y: &[bool]) -> f64 {
    let g1: Vec<f64> = col
        .iter()
        .zip(y)
        .filter(|(_, &l)| l)
        .map(|(&v, _)| v)
        .collect();
    let g0: Vec<f64> = col
        .iter()
        .zip(y)
        .filter(|(_, &l)| !l)
        .map(|(&v, _)| v)
        .collect();
    let grand = mean(col);
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in [&g0, &g1] {
        let m = mean(g);
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        for v in g.iter() {
            ssw += (v - m) * (v - m);
        }
    }
    (ssb / 1.0) / (ssw / (col.len() - 2) as f64)
}

/// Lag autocorrelation from explicit index loops.
pub fn autocorr(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let m = mean(x);
    let mut num = 0.0;
    for t in 0..n - lag {
        num += (x[t] - m) * (x[t + lag] - m);
    }
    let mut den = 0.0;
    for t in 0..n {
        den += (x[t] - m) * (x[t] - m);
    }
    num / den
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

use empathy_core::features::{SummarySample, SummaryTable};
use empathy_core::ingest::{SessionKey, StoryId};
use empathy_core::labels::Label;
use ndarray::Array2;
use std::sync::Arc;

/// Summary table over `x` with labels `y`; sessions are keyed P000, P001, ...
pub fn table_from(x: &Array2<f64>, y: &[bool]) -> SummaryTable {
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("x_{j}__mean")).collect();
    let arc: Arc<[String]> = names.clone().into();
    let samples = x
        .rows()
        .into_iter()
        .zip(y)
        .enumerate()
        .map(|(i, (row, &pos))| SummarySample {
            key: SessionKey::new(format!("P{i:03}"), StoryId::S1),
            names: arc.clone(),
            vector: row.to_vec(),
            label: Some(Label::from_positive(pos)),
        })
        .collect();
    SummaryTable::new(names, samples).unwrap()
}
