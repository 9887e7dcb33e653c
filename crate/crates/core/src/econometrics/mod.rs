//! Fixed-effects panel probit models of domestic entry and exit.
//!
//! Fixed effects enter as dummy variables. With few observations per group
//! the dummy-variable probit suffers from the incidental-parameters bias;
//! groups whose outcome never varies are dropped before fitting because their
//! dummies would diverge.

pub mod auc;
pub mod design;
pub mod grid;
pub mod normal;
pub mod probit;
pub mod robust;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use auc::auc;
pub use design::{build_design, Design, DesignMatrix};
pub use grid::{run_specification_grid, write_results, Family, GridCell, GridOptions};
pub use robust::robust_se;

use crate::cohesion::CohesionTerm;
use crate::error::{Error, Result};
use crate::panel::PeriodSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Entry,
    Exit,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Entry => "entry",
            Outcome::Exit => "exit",
        })
    }
}

/// One probit specification: outcome, period, regressors and fixed effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub outcome: Outcome,
    pub period: PeriodSpec,
    pub cohesion_terms: Vec<CohesionTerm>,
    pub include_mne_presence: bool,
    pub industry_fe: bool,
    pub region_fe: bool,
    pub cluster_by_region: bool,
}

impl RegressionSpec {
    /// Both fixed effects, MNE presence control, unclustered errors.
    pub fn new(outcome: Outcome, period: PeriodSpec, cohesion_terms: Vec<CohesionTerm>) -> Self {
        RegressionSpec {
            outcome,
            period,
            cohesion_terms,
            include_mne_presence: true,
            industry_fe: true,
            region_fe: true,
            cluster_by_region: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cohesion_terms.is_empty() && !self.include_mne_presence {
            return Err(Error::Estimation(
                "a specification needs a cohesion term or the MNE presence control".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermEstimate {
    pub name: String,
    pub estimate: f64,
    pub robust_se: f64,
    pub information_se: f64,
    pub z: f64,
    pub p_value: f64,
    pub fixed_effect: bool,
}

impl TermEstimate {
    pub fn stars(&self) -> &'static str {
        stars(self.p_value)
    }
}

/// `***` p<0.01, `**` p<0.05, `*` p<0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    /// Intercept and slopes first, then fixed-effect dummies.
    pub terms: Vec<TermEstimate>,
    pub auc: f64,
    pub n_obs: usize,
    pub n_dropped_separation: usize,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
}

impl RegressionResult {
    pub fn term(&self, name: &str) -> Option<&TermEstimate> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.term(name).map(|t| t.estimate)
    }

    /// Terms that are not fixed-effect dummies.
    pub fn slopes(&self) -> impl Iterator<Item = &TermEstimate> {
        self.terms.iter().filter(|t| !t.fixed_effect)
    }
}

/// Quasi-complete separation by a single column: every positive outcome lies
/// on one side of some cut and every negative on the other.
fn separates(column: &[f64], y: &[f64]) -> bool {
    let (mut lo1, mut hi1, mut lo0, mut hi0) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (&v, &yi) in column.iter().zip(y) {
        if yi > 0.5 {
            lo1 = lo1.min(v);
            hi1 = hi1.max(v);
        } else {
            lo0 = lo0.min(v);
            hi0 = hi0.max(v);
        }
    }
    let constant = lo1.min(lo0) == hi1.max(hi0);
    !constant && (hi0 <= lo1 || hi1 <= lo0)
}

/// Fits a probit on `design`: prunes separated fixed-effect groups, checks
/// rank and single-column separation, maximises the likelihood and reports
/// HC0 (or region-clustered) robust standard errors and in-sample AUC.
///
/// A fit that hits the iteration limit is returned with `converged = false`.
pub fn fit_probit(design: &Design) -> Result<RegressionResult> {
    let (pruned, n_dropped) = if design.factors.is_empty() {
        (design.clone(), 0)
    } else {
        design.prune_separated()
    };
    if pruned.nrows() == 0 {
        return Err(Error::Estimation(format!(
            "all {} observations fall in fixed-effect groups with a constant outcome",
            design.nrows()
        )));
    }
    let positives = pruned.y.iter().filter(|&&v| v > 0.5).count();
    if positives == 0 || positives == pruned.nrows() {
        return Err(Error::Estimation(
            "outcome does not vary in the estimation sample".into(),
        ));
    }

    let m = pruned.matrix();
    let collinear = design::collinear_columns(&m.x);
    if !collinear.is_empty() {
        let names: Vec<&str> = collinear.iter().map(|&j| m.names[j].as_str()).collect();
        return Err(Error::Estimation(format!(
            "design is rank deficient; collinear columns: {}",
            names.join(", ")
        )));
    }
    for j in 0..m.n_base {
        let col: Vec<f64> = m.x.column(j).iter().copied().collect();
        if separates(&col, &pruned.y) {
            return Err(Error::Estimation(format!(
                "column {} perfectly separates the outcome",
                m.names[j]
            )));
        }
    }

    let fit = probit::fit(&m.x, &pruned.y)?;
    if !fit.converged {
        log::warn!(
            "probit did not converge after {} iterations (max score {:.3e})",
            fit.iterations,
            fit.max_score
        );
    }
    let rse = robust::robust_se(&m.x, &pruned.y, &fit.beta, pruned.clusters.as_deref())?;
    let ise = robust::information_se(&m.x, &pruned.y, &fit.beta)?;
    let probs = probit::predict(&m.x, &fit.beta);
    let labels: Vec<bool> = pruned.y.iter().map(|&v| v > 0.5).collect();
    let auc = auc::auc(&probs, &labels)?;

    let terms = m
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let z = fit.beta[j] / rse[j];
            TermEstimate {
                name: name.clone(),
                estimate: fit.beta[j],
                robust_se: rse[j],
                information_se: ise[j],
                z,
                p_value: normal::two_sided_p(z),
                fixed_effect: j >= m.n_base,
            }
        })
        .collect();
    Ok(RegressionResult {
        terms,
        auc,
        n_obs: pruned.nrows(),
        n_dropped_separation: n_dropped,
        converged: fit.converged,
        iterations: fit.iterations,
        log_likelihood: fit.log_likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn single_column_separation_is_named() {
        let x = DMatrix::from_row_slice(
            6,
            2,
            &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0, 1.0, 5.0],
        );
        let d = Design::new(
            vec!["const".into(), "z".into()],
            x,
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        match fit_probit(&d) {
            Err(Error::Estimation(m)) => assert!(m.contains("column z"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn multiple_of_dummy_is_rank_deficient() {
        let y = vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
        let ind: Vec<String> = ["a", "a", "b", "b", "c", "c"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        // 2 x industry[b]
        let z = [0.0, 0.0, 2.0, 2.0, 0.0, 0.0];
        let x = DMatrix::from_fn(6, 2, |k, j| if j == 0 { 1.0 } else { z[k] });
        let d = Design::new(vec!["const".into(), "z".into()], x, y)
            .unwrap()
            .with_factor("industry", &ind)
            .unwrap();
        match fit_probit(&d) {
            Err(Error::Estimation(m)) => assert!(m.contains("industry[b]"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.02), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.5), "");
    }

    #[test]
    fn constant_outcome_is_an_error() {
        let d = Design::new(
            vec!["const".into()],
            DMatrix::from_element(3, 1, 1.0),
            vec![1.0; 3],
        )
        .unwrap();
        assert!(matches!(fit_probit(&d), Err(Error::Estimation(_))));
    }
}
