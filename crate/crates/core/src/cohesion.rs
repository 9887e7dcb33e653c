//! Weighted closeness and strategic closeness of industries to a region's
//! portfolio, in total and per ownership set.
//!
//! Weighted closeness sums relatedness to present industries:
//! `WC(i) = Σ_{j≠i} A(i, j) X(j)`.
//!
//! Strategic closeness is the distribution of a random walker after `steps`
//! moves (two by default), started uniformly on the present industries and
//! moving along edges in proportion to their weight:
//! `SC = p0 (D⁻¹ A)^steps` with `p0(i) = X(i) / Σ_j X(j)` and `D = diag(d)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::g12;
use crate::ingest::IndustryCode;
use crate::panel::{Partition, PeriodSpec, PresenceCube};
use crate::relatedness::RelatednessNetwork;

pub const DEFAULT_STEPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    /// Weighted closeness.
    WC,
    /// Strategic closeness.
    SC,
}

impl Measure {
    pub fn prefix(self) -> &'static str {
        match self {
            Measure::WC => "wc",
            Measure::SC => "sc",
        }
    }
}

/// One of the six ownership-partitioned cohesion measures (or the two
/// unpartitioned diagnostics).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CohesionTerm {
    pub measure: Measure,
    pub partition: Partition,
}

impl CohesionTerm {
    pub const fn new(measure: Measure, partition: Partition) -> Self {
        CohesionTerm { measure, partition }
    }

    pub const WC_EXCL_D: Self = Self::new(Measure::WC, Partition::ExclD);
    pub const WC_EXCL_M: Self = Self::new(Measure::WC, Partition::ExclM);
    pub const WC_OVERLAP: Self = Self::new(Measure::WC, Partition::Overlap);
    pub const SC_EXCL_D: Self = Self::new(Measure::SC, Partition::ExclD);
    pub const SC_EXCL_M: Self = Self::new(Measure::SC, Partition::ExclM);
    pub const SC_OVERLAP: Self = Self::new(Measure::SC, Partition::Overlap);

    /// The six partitioned measures, WC first.
    pub const PARTITIONED: [Self; 6] = [
        Self::WC_EXCL_D,
        Self::WC_EXCL_M,
        Self::WC_OVERLAP,
        Self::SC_EXCL_D,
        Self::SC_EXCL_M,
        Self::SC_OVERLAP,
    ];

    /// Column name such as `wc_excl_d`.
    pub fn name(self) -> String {
        format!("{}_{}", self.measure.prefix(), self.partition.suffix())
    }

    pub fn parse(name: &str) -> Option<Self> {
        [Measure::WC, Measure::SC]
            .into_iter()
            .flat_map(|m| {
                [
                    Partition::All,
                    Partition::ExclD,
                    Partition::ExclM,
                    Partition::Overlap,
                ]
                .into_iter()
                .map(move |p| Self::new(m, p))
            })
            .find(|t| t.name() == name)
    }
}

/// Cohesion of every network industry to one region's portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct CohesionVector {
    pub measure: Measure,
    pub partition: Partition,
    pub region: String,
    pub base_year: i32,
    /// Aligned with [`RelatednessNetwork::codes`].
    pub values: Vec<f64>,
}

impl CohesionVector {
    pub fn get(&self, net: &RelatednessNetwork, code: &IndustryCode) -> Option<f64> {
        net.index_of(code).map(|i| self.values[i])
    }
}

/// Presence indicator over the network's industries. Codes unknown to the
/// network are skipped and returned separately.
pub fn presence_mask<'a>(
    net: &RelatednessNetwork,
    present: impl IntoIterator<Item = &'a IndustryCode>,
) -> (Vec<bool>, Vec<&'a IndustryCode>) {
    let mut mask = vec![false; net.len()];
    let mut unknown = Vec::new();
    for code in present {
        match net.index_of(code) {
            Some(i) => mask[i] = true,
            None => unknown.push(code),
        }
    }
    (mask, unknown)
}

/// `WC(i) = Σ_{j≠i} A(i, j) X(j)` for every industry `i`.
pub fn weighted_closeness(net: &RelatednessNetwork, present: &[bool]) -> Vec<f64> {
    assert_eq!(
        present.len(),
        net.len(),
        "presence mask must cover the network"
    );
    let a = net.weights();
    (0..net.len())
        .map(|i| {
            (0..net.len())
                .filter(|&j| j != i && present[j])
                .map(|j| a[(i, j)])
                .sum()
        })
        .collect()
}

/// Strategic closeness together with what had to be adjusted to compute it.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategicCloseness {
    /// Walker distribution after `steps` moves, aligned with the network codes.
    pub values: Vec<f64>,
    /// Present industries with zero degree; their start mass went to the
    /// other present industries.
    pub isolated_present: Vec<usize>,
}

impl StrategicCloseness {
    /// True when no walk could be started (no present industry with an edge).
    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Start distribution: uniform over present industries with positive degree.
pub fn start_distribution(net: &RelatednessNetwork, present: &[bool]) -> (Vec<f64>, Vec<usize>) {
    assert_eq!(
        present.len(),
        net.len(),
        "presence mask must cover the network"
    );
    let d = net.degrees();
    let isolated: Vec<usize> = (0..net.len())
        .filter(|&i| present[i] && d[i] == 0.0)
        .collect();
    let starts = (0..net.len()).filter(|&i| present[i] && d[i] > 0.0).count();
    let p0 = (0..net.len())
        .map(|i| {
            if present[i] && d[i] > 0.0 {
                1.0 / starts as f64
            } else {
                0.0
            }
        })
        .collect();
    (p0, isolated)
}

/// One walker step: `p ← p D⁻¹ A`.
pub fn walk_step(net: &RelatednessNetwork, p: &[f64]) -> Vec<f64> {
    let a = net.weights();
    let d = net.degrees();
    let n = net.len();
    let mut next = vec![0.0; n];
    for i in 0..n {
        if p[i] == 0.0 || d[i] == 0.0 {
            continue;
        }
        let mass = p[i] / d[i];
        for (j, slot) in next.iter_mut().enumerate() {
            *slot += mass * a[(i, j)];
        }
    }
    next
}

/// `SC = p0 (D⁻¹ A)^steps`. An empty present set yields all zeros.
pub fn strategic_closeness(
    net: &RelatednessNetwork,
    present: &[bool],
    steps: usize,
) -> StrategicCloseness {
    let (mut p, isolated_present) = start_distribution(net, present);
    if !isolated_present.is_empty() {
        log::warn!(
            "{} present industries have no relatedness edges; their start mass is redistributed",
            isolated_present.len()
        );
    }
    if p.iter().all(|&x| x == 0.0) {
        if isolated_present.is_empty() {
            log::debug!("empty presence set; strategic closeness is zero everywhere");
        } else {
            log::warn!("no present industry has edges; strategic closeness is zero everywhere");
        }
        return StrategicCloseness {
            values: p,
            isolated_present,
        };
    }
    for _ in 0..steps {
        p = walk_step(net, &p);
    }
    StrategicCloseness {
        values: p,
        isolated_present,
    }
}

/// All eight cohesion measures of one (industry, region, period) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CohesionRow {
    pub industry: IndustryCode,
    pub region: String,
    pub period: usize,
    pub wc_all: f64,
    pub sc_all: f64,
    /// Indexed like [`Partition::OWNERSHIP`].
    pub wc: [f64; 3],
    pub sc: [f64; 3],
}

impl CohesionRow {
    pub fn get(&self, term: CohesionTerm) -> f64 {
        let k = match term.partition {
            Partition::All => {
                return match term.measure {
                    Measure::WC => self.wc_all,
                    Measure::SC => self.sc_all,
                }
            }
            Partition::ExclD => 0,
            Partition::ExclM => 1,
            Partition::Overlap => 2,
        };
        match term.measure {
            Measure::WC => self.wc[k],
            Measure::SC => self.sc[k],
        }
    }
}

/// Cohesion rows in the same (industry, region, period) order as
/// [`crate::panel::label_transitions`] produces for the same cube.
#[derive(Debug, Clone, PartialEq)]
pub struct CohesionTable {
    pub periods: Vec<PeriodSpec>,
    pub steps: usize,
    pub rows: Vec<CohesionRow>,
}

/// Computes every measure at each period's base year for every industry on
/// the cube's axis. Industries missing from the network have no edges and
/// therefore zero cohesion.
pub fn cohesion_panel(
    net: &RelatednessNetwork,
    cube: &PresenceCube,
    periods: &[PeriodSpec],
    steps: usize,
) -> Result<CohesionTable> {
    for p in periods {
        if !cube.has_year(p.base_year) {
            return Err(Error::Validation(format!(
                "period {p} base year {} is not in the panel",
                p.base_year
            )));
        }
    }
    let unknown = cube
        .industries()
        .iter()
        .filter(|c| net.index_of(c).is_none())
        .count();
    if unknown > 0 {
        log::warn!("{unknown} panel industries are not in the relatedness network and are treated as isolated");
    }
    let net_index: Vec<Option<usize>> = cube.industries().iter().map(|c| net.index_of(c)).collect();
    let partitions = [
        Partition::All,
        Partition::ExclD,
        Partition::ExclM,
        Partition::Overlap,
    ];

    let nr = cube.regions().len();
    let np = periods.len();
    // values[region][period][partition] = (wc, sc) over network indices
    let mut values = Vec::with_capacity(nr * np);
    for r in 0..nr {
        for p in periods {
            let per_partition: Vec<(Vec<f64>, Vec<f64>)> = partitions
                .iter()
                .map(|&part| {
                    let mut mask = vec![false; net.len()];
                    for (i, idx) in net_index.iter().enumerate() {
                        if let Some(k) = idx {
                            mask[*k] = cube.get(i, r, p.base_year).in_partition(part);
                        }
                    }
                    let wc = weighted_closeness(net, &mask);
                    let sc = strategic_closeness(net, &mask, steps).values;
                    (wc, sc)
                })
                .collect();
            values.push(per_partition);
        }
    }

    let mut rows = Vec::with_capacity(cube.industries().len() * nr * np);
    for (i, industry) in cube.industries().iter().enumerate() {
        for (r, region) in cube.regions().iter().enumerate() {
            for k in 0..np {
                let cell = &values[r * np + k];
                let pick = |part: usize, sc: bool| match net_index[i] {
                    Some(n) => {
                        if sc {
                            cell[part].1[n]
                        } else {
                            cell[part].0[n]
                        }
                    }
                    None => 0.0,
                };
                rows.push(CohesionRow {
                    industry: industry.clone(),
                    region: region.clone(),
                    period: k,
                    wc_all: pick(0, false),
                    sc_all: pick(0, true),
                    wc: [pick(1, false), pick(2, false), pick(3, false)],
                    sc: [pick(1, true), pick(2, true), pick(3, true)],
                });
            }
        }
    }
    Ok(CohesionTable {
        periods: periods.to_vec(),
        steps,
        rows,
    })
}

impl CohesionTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let err = |e| Error::csv("cohesion.csv", e);
        wtr.write_record([
            "industry",
            "region",
            "period",
            "wc_all",
            "sc_all",
            "wc_excl_d",
            "wc_excl_m",
            "wc_overlap",
            "sc_excl_d",
            "sc_excl_m",
            "sc_overlap",
        ])
        .map_err(err)?;
        for row in &self.rows {
            let mut rec = vec![
                row.industry.to_string(),
                row.region.clone(),
                self.periods[row.period].name.clone(),
                g12(row.wc_all),
                g12(row.sc_all),
            ];
            rec.extend(row.wc.iter().map(|v| g12(*v)));
            rec.extend(row.sc.iter().map(|v| g12(*v)));
            wtr.write_record(&rec).map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io("cohesion.csv", e))
    }
}
