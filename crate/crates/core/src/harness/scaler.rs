use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column standardization fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    /// Sample standard deviations; a zero maps the column to 0.
    pub stds: Vec<f64>,
}

pub fn standardize_fit(train: ArrayView2<f64>) -> Result<Scaler> {
    let n = train.nrows();
    if n < 2 {
        return Err(Error::Validation(format!(
            "standardization needs at least two rows, got {n}"
        )));
    }
    if train.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(
            "standardization input has non-finite values".into(),
        ));
    }
    let mut means = Vec::with_capacity(train.ncols());
    let mut stds = Vec::with_capacity(train.ncols());
    for col in train.columns() {
        let m = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        means.push(m);
        stds.push(var.sqrt());
    }
    Ok(Scaler { means, stds })
}

pub fn standardize_apply(scaler: &Scaler, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != scaler.means.len() {
        return Err(Error::Validation(format!(
            "scaler was fitted on {} columns, got {}",
            scaler.means.len(),
            x.ncols()
        )));
    }
    let mut out = x.to_owned();
    for ((mut col, &m), &s) in out
        .columns_mut()
        .into_iter()
        .zip(&scaler.means)
        .zip(&scaler.stds)
    {
        if s > 0.0 {
            col.mapv_inplace(|v| (v - m) / s);
        } else {
            col.fill(0.0);
        }
    }
    Ok(out)
}
