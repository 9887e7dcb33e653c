//! The full table of entry and exit specifications.
//!
//! For each outcome and period the WC and SC families each fit five columns:
//! (1) MNE presence only, (2)-(4) one ownership-partitioned cohesion term,
//! (5) all three terms. The combined family fits WC and SC of the same
//! partition together, one column per partition. Every column controls for
//! MNE presence.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{build_design, fit_probit, stars, Outcome, RegressionResult, RegressionSpec};
use crate::cohesion::{CohesionTable, CohesionTerm, Measure};
use crate::error::{Error, Result};
use crate::format::g12;
use crate::panel::{Partition, PeriodSpec, PresenceCube, TransitionTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "wc")]
    WC,
    #[serde(rename = "sc")]
    SC,
    #[serde(rename = "wc+sc")]
    Combined,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::WC, Family::SC, Family::Combined];

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::WC => "wc",
            Family::SC => "sc",
            Family::Combined => "wc+sc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridOptions {
    pub industry_fe: bool,
    pub region_fe: bool,
    pub cluster_by_region: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            industry_fe: true,
            region_fe: true,
            cluster_by_region: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub family: Family,
    /// Column label, `(1)` .. `(5)`.
    pub column: String,
    pub spec: RegressionSpec,
    /// Failure message when the specification could not be estimated.
    pub result: std::result::Result<RegressionResult, String>,
}

/// The specifications of the grid, in output order.
pub fn grid_specs(
    periods: &[PeriodSpec],
    options: GridOptions,
) -> Vec<(Family, String, RegressionSpec)> {
    let mut out = Vec::new();
    let spec = |outcome, period: &PeriodSpec, terms: Vec<CohesionTerm>| RegressionSpec {
        outcome,
        period: period.clone(),
        cohesion_terms: terms,
        include_mne_presence: true,
        industry_fe: options.industry_fe,
        region_fe: options.region_fe,
        cluster_by_region: options.cluster_by_region,
    };
    for outcome in [Outcome::Entry, Outcome::Exit] {
        for period in periods {
            for (family, measure) in [(Family::WC, Measure::WC), (Family::SC, Measure::SC)] {
                let terms: Vec<CohesionTerm> = Partition::OWNERSHIP
                    .iter()
                    .map(|&p| CohesionTerm::new(measure, p))
                    .collect();
                out.push((family, "(1)".to_string(), spec(outcome, period, vec![])));
                for (k, t) in terms.iter().enumerate() {
                    out.push((
                        family,
                        format!("({})", k + 2),
                        spec(outcome, period, vec![*t]),
                    ));
                }
                out.push((family, "(5)".to_string(), spec(outcome, period, terms)));
            }
            for (k, p) in Partition::OWNERSHIP.iter().enumerate() {
                let terms = vec![
                    CohesionTerm::new(Measure::WC, *p),
                    CohesionTerm::new(Measure::SC, *p),
                ];
                out.push((
                    Family::Combined,
                    format!("({})", k + 1),
                    spec(outcome, period, terms),
                ));
            }
        }
    }
    out
}

/// Fits every specification of the grid; failures are recorded per cell.
pub fn run_specification_grid(
    table: &TransitionTable,
    cohesion: &CohesionTable,
    cube: &PresenceCube,
    periods: &[PeriodSpec],
    options: GridOptions,
) -> Vec<GridCell> {
    run_specs(table, cohesion, cube, grid_specs(periods, options))
}

/// Fits the given labelled specifications in order.
pub fn run_specs(
    table: &TransitionTable,
    cohesion: &CohesionTable,
    cube: &PresenceCube,
    specs: Vec<(Family, String, RegressionSpec)>,
) -> Vec<GridCell> {
    specs
        .into_iter()
        .map(|(family, column, spec)| {
            let result = build_design(table, cohesion, cube, &spec)
                .and_then(|d| fit_probit(&d))
                .map_err(|e| e.to_string());
            if let Err(msg) = &result {
                log::warn!(
                    "{} {} {} {}: {msg}",
                    spec.outcome,
                    spec.period,
                    family.name(),
                    column
                );
            }
            GridCell {
                family,
                column,
                spec,
                result,
            }
        })
        .collect()
}

/// One row per (outcome, period, family, column, term); fixed-effect dummies
/// are omitted. Failed cells produce a single row carrying the error.
pub fn write_results<W: Write>(cells: &[GridCell], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e| Error::csv("results.csv", e);
    wtr.write_record([
        "outcome",
        "period",
        "family",
        "column",
        "term",
        "estimate",
        "robust_se",
        "p_value",
        "stars",
        "auc",
        "n_obs",
        "n_dropped_separation",
        "converged",
        "error",
    ])
    .map_err(err)?;
    for cell in cells {
        let head = [
            cell.spec.outcome.to_string(),
            cell.spec.period.name.clone(),
            cell.family.name().to_string(),
            cell.column.clone(),
        ];
        match &cell.result {
            Ok(res) => {
                for t in res.slopes() {
                    let mut rec: Vec<String> = head.to_vec();
                    rec.extend([
                        t.name.clone(),
                        g12(t.estimate),
                        g12(t.robust_se),
                        g12(t.p_value),
                        stars(t.p_value).to_string(),
                        g12(res.auc),
                        res.n_obs.to_string(),
                        res.n_dropped_separation.to_string(),
                        if res.converged { "1" } else { "0" }.to_string(),
                        String::new(),
                    ]);
                    wtr.write_record(&rec).map_err(err)?;
                }
            }
            Err(msg) => {
                let mut rec: Vec<String> = head.to_vec();
                rec.extend(std::iter::repeat_n(String::new(), 9));
                rec.push(msg.clone());
                wtr.write_record(&rec).map_err(err)?;
            }
        }
    }
    wtr.flush().map_err(|e| Error::io("results.csv", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cardinality() {
        let specs = grid_specs(&PeriodSpec::defaults(), GridOptions::default());
        let count = |f: Family| specs.iter().filter(|s| s.0 == f).count();
        assert_eq!(count(Family::WC), 30);
        assert_eq!(count(Family::SC), 30);
        assert_eq!(count(Family::Combined), 18);
        for (_, col, spec) in &specs {
            if col == "(1)" && spec.cohesion_terms.is_empty() {
                assert!(spec.include_mne_presence);
            }
        }
    }
}
