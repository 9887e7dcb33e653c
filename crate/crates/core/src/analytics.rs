//! Descriptive tables: variable moments, sample-restricted pairwise
//! correlations, and presence counts and sizes per ownership set.

use std::io::Write;

use crate::cohesion::{CohesionTable, CohesionTerm};
use crate::econometrics::design::MNE_PRESENCE;
use crate::error::{Error, Result};
use crate::format::{g12, opt_g12};
use crate::ingest::EmploymentPanel;
use crate::panel::{Partition, PeriodSpec, PresenceCube, TransitionTable};

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorRow {
    pub variable: String,
    /// Which rows the moments were computed over.
    pub sample: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// A column of observations with the label of the sample it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedColumn {
    pub name: String,
    pub sample: String,
    pub values: Vec<f64>,
}

impl NamedColumn {
    pub fn new(name: impl Into<String>, sample: impl Into<String>, values: Vec<f64>) -> Self {
        NamedColumn {
            name: name.into(),
            sample: sample.into(),
            values,
        }
    }
}

/// Count, mean, sample standard deviation (n-1), min and max per column.
/// Empty columns are skipped with a warning.
pub fn describe(columns: &[NamedColumn]) -> Vec<DescriptorRow> {
    let mut out = Vec::with_capacity(columns.len());
    for col in columns {
        let n = col.values.len();
        if n == 0 {
            log::warn!("column {} ({}) is empty; skipped", col.name, col.sample);
            continue;
        }
        let mean = col.values.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = if n > 1 {
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let (min, max) = col
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        out.push(DescriptorRow {
            variable: col.name.clone(),
            sample: col.sample.clone(),
            n,
            // clamp the rounding of a constant column's mean into [min, max]
            mean: mean.clamp(min, max),
            sd,
            min,
            max,
        });
    }
    out
}

/// Pearson correlation; `None` when either side has zero variance or fewer
/// than two observations.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Row-aligned variables over the analysis panel. `mask[k]` marks the rows a
/// variable is defined on; unrestricted variables have all rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisPanel {
    pub names: Vec<String>,
    pub samples: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub masks: Vec<Vec<bool>>,
}

impl AnalysisPanel {
    pub fn nrows(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn push(&mut self, name: &str, sample: &str, values: Vec<f64>, mask: Vec<bool>) {
        self.names.push(name.to_string());
        self.samples.push(sample.to_string());
        self.values.push(values);
        self.masks.push(mask);
    }

    /// The restricted columns, ready for [`describe`].
    pub fn columns(&self) -> Vec<NamedColumn> {
        (0..self.names.len())
            .map(|c| {
                let values = self.values[c]
                    .iter()
                    .zip(&self.masks[c])
                    .filter(|(_, &m)| m)
                    .map(|(&v, _)| v)
                    .collect();
                NamedColumn::new(self.names[c].clone(), self.samples[c].clone(), values)
            })
            .collect()
    }
}

/// Entry and exit restricted to their model samples, MNE presence at the base
/// year, and all eight cohesion measures unrestricted.
pub fn analysis_panel(
    table: &TransitionTable,
    cohesion: &CohesionTable,
    cube: &PresenceCube,
) -> Result<AnalysisPanel> {
    if table.rows.len() != cohesion.rows.len() || table.periods != cohesion.periods {
        return Err(Error::Validation(
            "transition and cohesion tables do not cover the same cells".into(),
        ));
    }
    let n = table.rows.len();
    let mut entry = Vec::with_capacity(n);
    let mut exit = Vec::with_capacity(n);
    let mut entry_mask = Vec::with_capacity(n);
    let mut exit_mask = Vec::with_capacity(n);
    let mut mne = Vec::with_capacity(n);
    for (t, c) in table.rows.iter().zip(&cohesion.rows) {
        if t.industry != c.industry || t.region != c.region || t.period != c.period {
            return Err(Error::Validation(format!(
                "transition and cohesion rows disagree at industry {} region {}",
                t.industry, t.region
            )));
        }
        entry.push(t.entry as u8 as f64);
        exit.push(t.exit as u8 as f64);
        entry_mask.push(t.in_entry_sample);
        exit_mask.push(t.in_exit_sample);
        let i = cube.industry_index(&t.industry);
        let r = cube.region_index(&t.region);
        let present = match (i, r) {
            (Some(i), Some(r)) => cube.get(i, r, table.periods[t.period].base_year).mne,
            _ => false,
        };
        mne.push(present as u8 as f64);
    }
    let all = vec![true; n];
    let mut panel = AnalysisPanel {
        names: Vec::new(),
        samples: Vec::new(),
        values: Vec::new(),
        masks: Vec::new(),
    };
    panel.push("entry", "entry", entry, entry_mask);
    panel.push("exit", "exit", exit, exit_mask);
    panel.push(MNE_PRESENCE, "all", mne, all.clone());
    let mut terms = vec![
        CohesionTerm::new(crate::cohesion::Measure::WC, Partition::All),
        CohesionTerm::new(crate::cohesion::Measure::SC, Partition::All),
    ];
    terms.extend(CohesionTerm::PARTITIONED);
    for term in terms {
        let values = cohesion.rows.iter().map(|r| r.get(term)).collect();
        panel.push(&term.name(), "all", values, all.clone());
    }
    Ok(panel)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub var_a: String,
    pub var_b: String,
    pub sample: String,
    pub n: usize,
    pub r: Option<f64>,
}

/// Pearson correlation of every pair (including each variable with itself)
/// over the intersection of the two variables' masks. Pairs involving entry
/// use the entry sample, pairs involving exit the exit sample, the rest all
/// rows.
pub fn pairwise_correlations(panel: &AnalysisPanel) -> Result<Vec<CorrelationRow>> {
    let p = panel.names.len();
    if p < 2 {
        return Err(Error::Validation(
            "correlations need at least two columns".into(),
        ));
    }
    let mut out = Vec::with_capacity(p * p);
    for a in 0..p {
        for b in 0..p {
            let sample = match (panel.samples[a].as_str(), panel.samples[b].as_str()) {
                ("all", s) | (s, "all") => s.to_string(),
                (s, t) if s == t => s.to_string(),
                (s, t) => format!("{s}&{t}"),
            };
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for k in 0..panel.nrows() {
                if panel.masks[a][k] && panel.masks[b][k] {
                    xs.push(panel.values[a][k]);
                    ys.push(panel.values[b][k]);
                }
            }
            out.push(CorrelationRow {
                var_a: panel.names[a].clone(),
                var_b: panel.names[b].clone(),
                sample,
                n: xs.len(),
                r: pearson(&xs, &ys),
            });
        }
    }
    Ok(out)
}

/// Presence counts and employment sizes per ownership set, per period base
/// year. `n` is the number of present industry-region cells.
pub fn ownership_summary(
    panel: &EmploymentPanel,
    cube: &PresenceCube,
    periods: &[PeriodSpec],
) -> Vec<DescriptorRow> {
    let mut columns = Vec::new();
    for period in periods {
        let mut dom: [Vec<f64>; 3] = Default::default();
        let mut mne: [Vec<f64>; 3] = Default::default();
        for rec in panel
            .records()
            .iter()
            .filter(|r| r.year == period.base_year)
        {
            let (Some(i), Some(r)) = (
                cube.industry_index(&rec.industry),
                cube.region_index(&rec.region),
            ) else {
                continue;
            };
            let presence = cube.get(i, r, rec.year);
            for (k, part) in Partition::OWNERSHIP.iter().enumerate() {
                if presence.in_partition(*part) {
                    dom[k].push(rec.emp_dom as f64);
                    mne[k].push(rec.emp_mne as f64);
                }
            }
        }
        for (k, part) in Partition::OWNERSHIP.iter().enumerate() {
            let sample = format!("{}:{}", period.name, part.suffix());
            columns.push(NamedColumn::new(
                "emp_dom",
                sample.clone(),
                std::mem::take(&mut dom[k]),
            ));
            columns.push(NamedColumn::new(
                "emp_mne",
                sample,
                std::mem::take(&mut mne[k]),
            ));
        }
    }
    describe(&columns)
}

pub fn write_descriptors<W: Write>(rows: &[DescriptorRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e| Error::csv("descriptors.csv", e);
    wtr.write_record(["variable", "sample", "n", "mean", "sd", "min", "max"])
        .map_err(err)?;
    for r in rows {
        wtr.write_record([
            r.variable.clone(),
            r.sample.clone(),
            r.n.to_string(),
            g12(r.mean),
            g12(r.sd),
            g12(r.min),
            g12(r.max),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("descriptors.csv", e))
}

pub fn write_correlations<W: Write>(rows: &[CorrelationRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e| Error::csv("correlations.csv", e);
    wtr.write_record(["var_a", "var_b", "sample", "n", "r"])
        .map_err(err)?;
    for r in rows {
        wtr.write_record([
            r.var_a.clone(),
            r.var_b.clone(),
            r.sample.clone(),
            r.n.to_string(),
            opt_g12(r.r),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("correlations.csv", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_and_binary_columns() {
        let rows = describe(&[
            NamedColumn::new("c", "all", vec![0.5; 4]),
            NamedColumn::new("b", "all", vec![0.0, 0.0, 1.0, 1.0]),
            NamedColumn::new("e", "all", vec![]),
        ]);
        assert_eq!(rows.len(), 2);
        assert_eq!(
            (rows[0].mean, rows[0].sd, rows[0].min, rows[0].max),
            (0.5, 0.0, 0.5, 0.5)
        );
        // squared deviations sum to 1, over n - 1 = 3
        assert!((rows[1].sd - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((rows[1].sd - 0.5774).abs() < 1e-4);
    }

    #[test]
    fn correlation_edge_cases() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[3.0; 4]), None);
    }

    fn textbook(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn masks_follow_the_three_sample_rule() {
        let n = 6;
        let panel = AnalysisPanel {
            names: vec!["entry".into(), "exit".into(), "z".into()],
            samples: vec!["entry".into(), "exit".into(), "all".into()],
            values: vec![
                vec![0.0, 1.0, 1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0, 0.0, 1.0],
                vec![0.1, 0.9, 0.7, 0.3, 0.4, 0.8],
            ],
            masks: vec![
                vec![true, true, true, false, false, false],
                vec![false, false, false, true, true, true],
                vec![true; n],
            ],
        };
        let rows = pairwise_correlations(&panel).unwrap();
        let get = |a: &str, b: &str| rows.iter().find(|r| r.var_a == a && r.var_b == b).unwrap();
        let ez = get("entry", "z");
        assert_eq!((ez.sample.as_str(), ez.n), ("entry", 3));
        assert!((ez.r.unwrap() - textbook(&[0.0, 1.0, 1.0], &[0.1, 0.9, 0.7])).abs() < 1e-12);
        let xz = get("exit", "z");
        assert_eq!((xz.sample.as_str(), xz.n), ("exit", 3));
        assert_eq!(get("entry", "exit").n, 0);
        assert_eq!(get("entry", "exit").r, None);
        assert_eq!(get("z", "z").r, Some(1.0));
    }

    proptest! {
        #[test]
        fn pearson_matches_textbook_formula(cols in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 12), 8)) {
            for a in &cols {
                for b in &cols {
                    if let Some(r) = pearson(a, b) {
                        prop_assert!((r - textbook(a, b)).abs() < 1e-9);
                        prop_assert!((r - pearson(b, a).unwrap()).abs() < 1e-15);
                    }
                }
            }
        }

        #[test]
        fn describe_is_permutation_invariant(mut v in proptest::collection::vec(-100.0f64..100.0, 1..40), seed in any::<u64>()) {
            let before = describe(&[NamedColumn::new("v", "all", v.clone())]).remove(0);
            let k = (seed as usize) % v.len();
            v.rotate_left(k);
            v.reverse();
            let after = describe(&[NamedColumn::new("v", "all", v)]).remove(0);
            prop_assert_eq!(before.n, after.n);
            prop_assert!((before.mean - after.mean).abs() < 1e-10);
            prop_assert!((before.sd - after.sd).abs() < 1e-10);
            prop_assert_eq!((before.min, before.max), (after.min, after.max));
            prop_assert!(before.min <= before.mean && before.mean <= before.max);
        }
    }
}
