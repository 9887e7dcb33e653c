//! Probit maximum likelihood by Newton-Raphson.
//!
//! With `q = 2y - 1` and linear index `η = x'β`, each observation contributes
//! `ln Φ(qη)`. Its derivative in `η` is `q λ(qη)` and its second derivative
//! is `-λ(qη) (qη + λ(qη))`, where `λ = φ / Φ` is the inverse Mills ratio.

use nalgebra::{DMatrix, DVector};

use super::normal;
use crate::error::{Error, Result};

pub const SCORE_TOLERANCE: f64 = 1e-8;
pub const LOGLIK_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 40;

/// Raw Newton-Raphson output.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbitFit {
    pub beta: DVector<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute score component at the final estimate.
    pub max_score: f64,
    /// Log-likelihood at the start and after each iteration.
    pub path: Vec<f64>,
}

fn sign(y: f64) -> f64 {
    if y > 0.5 {
        1.0
    } else {
        -1.0
    }
}

pub fn log_likelihood(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| normal::ln_cdf(sign(yi) * e))
        .sum()
}

/// Per-observation derivative of the log-likelihood in the linear index.
fn index_gradient(eta: f64, y: f64) -> f64 {
    let q = sign(y);
    q * normal::mills(q * eta)
}

/// Per-observation second derivative in the linear index (always negative).
fn index_curvature(eta: f64, y: f64) -> f64 {
    let z = sign(y) * eta;
    let lambda = normal::mills(z);
    -lambda * (z + lambda)
}

/// Observation scores `s_k = g_k x_k`, one row per observation.
pub fn observation_scores(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> DMatrix<f64> {
    let eta = x * beta;
    let mut s = x.clone();
    for (k, mut row) in s.row_iter_mut().enumerate() {
        row *= index_gradient(eta[k], y[k]);
    }
    s
}

pub fn score(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> DVector<f64> {
    let eta = x * beta;
    let g = DVector::from_iterator(
        eta.len(),
        eta.iter().zip(y).map(|(&e, &yi)| index_gradient(e, yi)),
    );
    x.transpose() * g
}

/// Hessian of the log-likelihood (negative definite at a proper maximum).
pub fn hessian(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> DMatrix<f64> {
    let eta = x * beta;
    let mut weighted = x.clone();
    for (k, mut row) in weighted.row_iter_mut().enumerate() {
        row *= index_curvature(eta[k], y[k]);
    }
    x.transpose() * weighted
}

/// Observed information `-H`, inverted via Cholesky.
pub fn inverse_information(
    x: &DMatrix<f64>,
    y: &[f64],
    beta: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let info = -hessian(x, y, beta);
    info.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Estimation("information matrix is singular".into()))
}

/// Maximises the probit log-likelihood starting from β = 0.
///
/// Converges when the largest score component drops below 1e-8 or the
/// relative log-likelihood change of a step drops below 1e-10, within 100
/// iterations. Steps are halved until the log-likelihood does not decrease.
// `!(a >= b)` is deliberate: a NaN log-likelihood must count as a decrease.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn fit(x: &DMatrix<f64>, y: &[f64]) -> Result<ProbitFit> {
    if x.nrows() != y.len() {
        return Err(Error::Estimation(format!(
            "design has {} rows but outcome has {}",
            x.nrows(),
            y.len()
        )));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Estimation("outcome must be binary 0/1".into()));
    }
    let mut beta = DVector::zeros(x.ncols());
    let mut ll = log_likelihood(x, y, &beta);
    let mut g = score(x, y, &beta);
    let mut converged = g.amax() < SCORE_TOLERANCE;
    let mut iterations = 0;
    let mut path = vec![ll];

    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let info = -hessian(x, y, &beta);
        let chol = info
            .cholesky()
            .ok_or_else(|| Error::Estimation("information matrix is singular".into()))?;
        let delta = chol.solve(&g);

        let mut step = 1.0;
        let mut candidate = &beta + &delta;
        let mut ll_new = log_likelihood(x, y, &candidate);
        if (ll_new - ll).abs() <= LOGLIK_TOLERANCE * ll.abs() {
            // at the optimum to working precision: keep the full step when it
            // does not lose likelihood or still shrinks the score
            let g_new = score(x, y, &candidate);
            if ll_new >= ll || g_new.amax() < g.amax() {
                beta = candidate;
                ll = ll_new;
                g = g_new;
                path.push(ll);
            }
            converged = true;
            break;
        }
        let mut halvings = 0;
        while !(ll_new >= ll) && halvings < MAX_HALVINGS {
            step *= 0.5;
            candidate = &beta + &delta * step;
            ll_new = log_likelihood(x, y, &candidate);
            halvings += 1;
        }
        if !(ll_new >= ll) {
            // no ascent direction left at working precision
            break;
        }
        let change = (ll_new - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        beta = candidate;
        ll = ll_new;
        path.push(ll);
        g = score(x, y, &beta);
        converged = g.amax() < SCORE_TOLERANCE || (change < LOGLIK_TOLERANCE && step == 1.0);
    }

    Ok(ProbitFit {
        max_score: g.amax(),
        beta,
        log_likelihood: ll,
        iterations,
        converged,
        path,
    })
}

/// Fitted probabilities `Φ(x'β)`.
pub fn predict(x: &DMatrix<f64>, beta: &DVector<f64>) -> Vec<f64> {
    (x * beta).iter().map(|&e| normal::cdf(e)).collect()
}
