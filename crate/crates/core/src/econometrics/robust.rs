//! Huber-White sandwich covariance for the probit MLE.
//!
//! `V = H⁻¹ (Σ_k s_k s_kᵀ) H⁻¹` with `s_k` the observation score and `H` the
//! Hessian (HC0, no small-sample correction). With clusters the meat sums
//! outer products of within-cluster score totals instead.

use nalgebra::{DMatrix, DVector};

use super::probit;
use crate::error::Result;

pub fn sandwich_covariance(
    x: &DMatrix<f64>,
    y: &[f64],
    beta: &DVector<f64>,
    clusters: Option<&[usize]>,
) -> Result<DMatrix<f64>> {
    let bread = probit::inverse_information(x, y, beta)?;
    let scores = probit::observation_scores(x, y, beta);
    let meat = match clusters {
        None => scores.transpose() * &scores,
        Some(ids) => {
            let n_clusters = ids.iter().copied().max().map_or(0, |m| m + 1);
            let mut totals = DMatrix::zeros(n_clusters, x.ncols());
            for (k, &c) in ids.iter().enumerate() {
                let mut row = totals.row_mut(c);
                row += scores.row(k);
            }
            totals.transpose() * &totals
        }
    };
    Ok(&bread * meat * &bread)
}

/// Robust standard errors: square roots of the sandwich diagonal.
pub fn robust_se(
    x: &DMatrix<f64>,
    y: &[f64],
    beta: &DVector<f64>,
    clusters: Option<&[usize]>,
) -> Result<DVector<f64>> {
    let v = sandwich_covariance(x, y, beta, clusters)?;
    Ok(v.diagonal().map(|d| d.max(0.0).sqrt()))
}

/// Model-based standard errors from the inverse observed information.
pub fn information_se(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> Result<DVector<f64>> {
    let v = probit::inverse_information(x, y, beta)?;
    Ok(v.diagonal().map(|d| d.max(0.0).sqrt()))
}
