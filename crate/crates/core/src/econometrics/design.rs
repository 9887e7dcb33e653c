//! Design matrices with industry and region fixed effects.
//!
//! Fixed effects are kept as factor assignments until the matrix is
//! materialised, so that separated groups can be pruned first and reference
//! levels chosen among the levels that remain.

use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;

use super::{Outcome, RegressionSpec};
use crate::cohesion::CohesionTable;
use crate::error::{Error, Result};
use crate::ingest::IndustryCode;
use crate::panel::{PresenceCube, TransitionTable};

pub const INTERCEPT: &str = "const";
pub const MNE_PRESENCE: &str = "mne_presence";

/// A categorical variable expanded into dummies.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    /// Sorted level labels.
    pub levels: Vec<String>,
    /// Level index per row.
    pub codes: Vec<usize>,
}

/// Regression inputs before fixed-effect expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    /// Names of the non-fixed-effect columns (intercept first).
    pub columns: Vec<String>,
    pub base: DMatrix<f64>,
    pub factors: Vec<Factor>,
    pub y: Vec<f64>,
    /// Cluster id per row for clustered standard errors.
    pub clusters: Option<Vec<usize>>,
}

/// Materialised matrix with column names; the first `n_base` columns are the
/// non-fixed-effect terms.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub n_base: usize,
}

impl Design {
    /// Design without fixed effects.
    pub fn new(columns: Vec<String>, base: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        if columns.len() != base.ncols() || y.len() != base.nrows() {
            return Err(Error::Estimation("design dimensions do not match".into()));
        }
        Ok(Design {
            columns,
            base,
            factors: Vec::new(),
            y,
            clusters: None,
        })
    }

    pub fn with_factor(mut self, name: impl Into<String>, labels: &[String]) -> Result<Self> {
        if labels.len() != self.nrows() {
            return Err(Error::Estimation(
                "factor length does not match design".into(),
            ));
        }
        let levels: Vec<String> = labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pos: HashMap<&str, usize> = levels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let codes = labels.iter().map(|l| pos[l.as_str()]).collect();
        self.factors.push(Factor {
            name: name.into(),
            levels,
            codes,
        });
        Ok(self)
    }

    pub fn nrows(&self) -> usize {
        self.y.len()
    }

    /// Keeps the rows flagged in `keep`.
    pub fn select_rows(&self, keep: &[bool]) -> Design {
        let rows: Vec<usize> = (0..self.nrows()).filter(|&k| keep[k]).collect();
        let base = DMatrix::from_fn(rows.len(), self.base.ncols(), |i, j| {
            self.base[(rows[i], j)]
        });
        Design {
            columns: self.columns.clone(),
            base,
            factors: self
                .factors
                .iter()
                .map(|f| Factor {
                    name: f.name.clone(),
                    levels: f.levels.clone(),
                    codes: rows.iter().map(|&k| f.codes[k]).collect(),
                })
                .collect(),
            y: rows.iter().map(|&k| self.y[k]).collect(),
            clusters: self
                .clusters
                .as_ref()
                .map(|c| rows.iter().map(|&k| c[k]).collect()),
        }
    }

    /// Drops fixed-effect groups whose outcome is constant, repeating until
    /// no such group is left. Returns the pruned design and the number of
    /// dropped rows.
    pub fn prune_separated(&self) -> (Design, usize) {
        let mut keep = vec![true; self.nrows()];
        loop {
            let mut changed = false;
            for f in &self.factors {
                let mut seen = vec![(0usize, 0usize); f.levels.len()];
                for k in (0..self.nrows()).filter(|&k| keep[k]) {
                    let slot = &mut seen[f.codes[k]];
                    slot.0 += 1;
                    if self.y[k] > 0.5 {
                        slot.1 += 1;
                    }
                }
                for k in 0..self.nrows() {
                    if keep[k] {
                        let (n, ones) = seen[f.codes[k]];
                        if ones == 0 || ones == n {
                            keep[k] = false;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let dropped = keep.iter().filter(|&&k| !k).count();
        (self.select_rows(&keep), dropped)
    }

    /// Expands factors into dummies, one per present level except the first
    /// present level (lexicographic), which is the reference.
    pub fn matrix(&self) -> DesignMatrix {
        let n = self.nrows();
        let mut names = self.columns.clone();
        let mut dummies: Vec<(usize, usize)> = Vec::new();
        for (fi, f) in self.factors.iter().enumerate() {
            let present: BTreeSet<usize> = f.codes.iter().copied().collect();
            for &level in present.iter().skip(1) {
                names.push(format!("{}[{}]", f.name, f.levels[level]));
                dummies.push((fi, level));
            }
        }
        let p = self.base.ncols();
        let mut x = DMatrix::zeros(n, p + dummies.len());
        x.columns_mut(0, p).copy_from(&self.base);
        for (c, &(fi, level)) in dummies.iter().enumerate() {
            let codes = &self.factors[fi].codes;
            for k in 0..n {
                if codes[k] == level {
                    x[(k, p + c)] = 1.0;
                }
            }
        }
        DesignMatrix {
            names,
            x,
            n_base: p,
        }
    }
}

/// Columns that are (numerically) linear combinations of earlier columns,
/// found by Gram-Schmidt with a relative tolerance.
pub fn collinear_columns(x: &DMatrix<f64>) -> Vec<usize> {
    const TOL: f64 = 1e-9;
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut v = col;
        // two passes for numerical stability
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let residual = v.norm();
        if norm == 0.0 || residual <= TOL * norm {
            dependent.push(j);
        } else {
            basis.push(v / residual);
        }
    }
    dependent
}

/// Builds the regression design for `spec` from the transition labels,
/// cohesion measures and presence cube. Rows are the spec's outcome sample
/// (not yet present for entry, present for exit) within its period.
pub fn build_design(
    table: &TransitionTable,
    cohesion: &CohesionTable,
    cube: &PresenceCube,
    spec: &RegressionSpec,
) -> Result<Design> {
    spec.validate()?;
    let period_idx = table
        .periods
        .iter()
        .position(|p| *p == spec.period)
        .ok_or_else(|| {
            Error::Estimation(format!("period {} has no transition labels", spec.period))
        })?;
    let coh_period = cohesion
        .periods
        .iter()
        .position(|p| *p == spec.period)
        .ok_or_else(|| {
            Error::Estimation(format!("period {} has no cohesion measures", spec.period))
        })?;
    let coh_index: HashMap<(&IndustryCode, &str), usize> = cohesion
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.period == coh_period)
        .map(|(k, r)| ((&r.industry, r.region.as_str()), k))
        .collect();

    let mut columns = vec![INTERCEPT.to_string()];
    columns.extend(spec.cohesion_terms.iter().map(|t| t.name()));
    if spec.include_mne_presence {
        columns.push(MNE_PRESENCE.to_string());
    }

    let mut values: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    let mut industries = Vec::new();
    let mut regions = Vec::new();
    for row in table.rows.iter().filter(|r| r.period == period_idx) {
        let (in_sample, outcome) = match spec.outcome {
            Outcome::Entry => (row.in_entry_sample, row.entry),
            Outcome::Exit => (row.in_exit_sample, row.exit),
        };
        if !in_sample {
            continue;
        }
        let coh = &cohesion.rows[*coh_index
            .get(&(&row.industry, row.region.as_str()))
            .ok_or_else(|| {
                Error::Estimation(format!(
                    "no cohesion measures for industry {} region {}",
                    row.industry, row.region
                ))
            })?];
        values.push(1.0);
        values.extend(spec.cohesion_terms.iter().map(|&t| coh.get(t)));
        if spec.include_mne_presence {
            let i = cube.industry_index(&row.industry).ok_or_else(|| {
                Error::Estimation(format!(
                    "industry {} is not in the presence cube",
                    row.industry
                ))
            })?;
            let r = cube.region_index(&row.region).ok_or_else(|| {
                Error::Estimation(format!("region {} is not in the presence cube", row.region))
            })?;
            values.push(if cube.get(i, r, spec.period.base_year).mne {
                1.0
            } else {
                0.0
            });
        }
        y.push(if outcome { 1.0 } else { 0.0 });
        industries.push(row.industry.to_string());
        regions.push(row.region.clone());
    }
    if y.is_empty() {
        return Err(Error::Estimation(format!(
            "{} sample for period {} is empty",
            spec.outcome, spec.period
        )));
    }
    let base = DMatrix::from_row_slice(y.len(), columns.len(), &values);
    let mut design = Design::new(columns, base, y)?;
    if spec.industry_fe {
        design = design.with_factor("industry", &industries)?;
    }
    if spec.region_fe {
        design = design.with_factor("region", &regions)?;
    }
    if spec.cluster_by_region {
        let levels: Vec<String> = regions
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        design.clusters = Some(
            regions
                .iter()
                .map(|r| levels.binary_search(r).expect("region level"))
                .collect(),
        );
    }
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_flags_dependent_columns() {
        let x = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 2.0, 1.0, //
                1.0, 1.0, 0.0, 3.0, //
                1.0, 0.0, 2.0, 5.0, //
                1.0, 1.0, 0.0, 7.0,
            ],
        );
        // col2 = 2*col0 - 2*col1
        assert_eq!(collinear_columns(&x), vec![2]);
    }

    #[test]
    fn pruning_iterates_to_a_fixed_point() {
        // industry a is all zeros; region R2 is all ones; once R2 goes, b and c
        // each keep a single row and go too; only d survives
        let y = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        let ind: Vec<String> = ["a", "a", "b", "b", "c", "c", "d", "d"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let reg: Vec<String> = ["R1", "R1", "R2", "R1", "R1", "R2", "R1", "R1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let d = Design::new(vec![INTERCEPT.into()], DMatrix::from_element(8, 1, 1.0), y)
            .unwrap()
            .with_factor("industry", &ind)
            .unwrap()
            .with_factor("region", &reg)
            .unwrap();
        let (pruned, dropped) = d.prune_separated();
        assert_eq!(dropped, 6);
        assert_eq!(pruned.y, vec![1.0, 0.0]);
        let m = pruned.matrix();
        assert_eq!(m.names, vec!["const".to_string()]);
    }

    #[test]
    fn reference_level_is_first_present_level() {
        let y = vec![0.0, 1.0, 0.0, 1.0];
        let ind: Vec<String> = ["b", "b", "c", "c"].iter().map(|s| s.to_string()).collect();
        let d = Design::new(vec![INTERCEPT.into()], DMatrix::from_element(4, 1, 1.0), y)
            .unwrap()
            .with_factor("industry", &ind)
            .unwrap();
        let m = d.matrix();
        assert_eq!(
            m.names,
            vec!["const".to_string(), "industry[c]".to_string()]
        );
        assert_eq!(m.x.column(1).as_slice(), &[0.0, 0.0, 1.0, 1.0]);
    }
}
