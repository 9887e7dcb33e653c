//! Skill-relatedness network built from excess labour mobility.
//!
//! For a flow matrix `F` (diagonal ignored) the mobility ratio against the
//! configuration null model is
//!
//! ```text
//! ratio(i, j) = (F_ij / Σ_k F_ik) / (Σ_k F_kj / Σ_kl F_kl)
//! ```
//!
//! The pairwise ratios are averaged, `S = (ratio(i,j) + ratio(j,i)) / 2`, and
//! mapped onto (-1, 1) by `(S - 1) / (S + 1)`. Only positive values (more
//! switches than expected at random) become edges.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::format::g12;
use crate::ingest::{Crosswalk, EmploymentPanel, FlowMatrix, IndustryCode, Scheme};

/// Symmetric weighted industry graph with zero diagonal and weights in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RelatednessNetwork {
    codes: Vec<IndustryCode>,
    index: HashMap<IndustryCode, usize>,
    weights: DMatrix<f64>,
    degrees: Vec<f64>,
}

impl RelatednessNetwork {
    /// Builds a network directly from a weight matrix. The matrix must be
    /// symmetric with a zero diagonal and nonnegative entries.
    pub fn from_weights(codes: Vec<IndustryCode>, weights: DMatrix<f64>) -> Result<Self> {
        let n = codes.len();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::Validation(format!(
                "weight matrix is {}x{} for {} codes",
                weights.nrows(),
                weights.ncols(),
                n
            )));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Validation(format!(
                    "nonzero self-weight for {}",
                    codes[i]
                )));
            }
            for j in 0..i {
                let w = weights[(i, j)];
                if w != weights[(j, i)] {
                    return Err(Error::Validation(format!(
                        "asymmetric weight between {} and {}",
                        codes[i], codes[j]
                    )));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::Validation(format!(
                        "invalid weight {w} between {} and {}",
                        codes[i], codes[j]
                    )));
                }
            }
        }
        let mut index = HashMap::with_capacity(n);
        for (i, c) in codes.iter().enumerate() {
            if index.insert(c.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate industry code {c}")));
            }
        }
        let degrees = (0..n).map(|i| weights.row(i).iter().sum()).collect();
        Ok(RelatednessNetwork {
            codes,
            index,
            weights,
            degrees,
        })
    }

    /// Unweighted graph from an edge list; handy for toy networks.
    pub fn from_edges<'a>(
        codes: &[&str],
        edges: impl IntoIterator<Item = (&'a str, &'a str, f64)>,
    ) -> Result<Self> {
        let codes: Vec<IndustryCode> = codes
            .iter()
            .map(|c| IndustryCode::new(*c))
            .collect::<Result<_>>()?;
        let n = codes.len();
        let pos = |s: &str| {
            codes
                .iter()
                .position(|c| c.as_str() == s)
                .ok_or_else(|| Error::Validation(format!("edge endpoint {s} is not a node")))
        };
        let mut weights = DMatrix::zeros(n, n);
        for (a, b, w) in edges {
            let (i, j) = (pos(a)?, pos(b)?);
            if i == j {
                return Err(Error::Validation(format!("self-loop on {a}")));
            }
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
        Self::from_weights(codes, weights)
    }

    pub fn codes(&self) -> &[IndustryCode] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn index_of(&self, code: &IndustryCode) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// `d(i) = Σ_j A(i, j)`.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Undirected edges `(i, j, w)` with `i < j` by index.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            ((i + 1)..n).filter_map(move |j| {
                let w = self.weights[(i, j)];
                (w > 0.0).then_some((i, j, w))
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }
}

/// Excess-mobility ratio matrix (before symmetrisation). Rows with zero
/// out-flow are all zeros; so are columns with zero in-flow.
pub fn mobility_ratio(flows: &FlowMatrix) -> Result<DMatrix<f64>> {
    let n = flows.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 industries to build relatedness, got {n}"
        )));
    }
    let mut f = flows.counts().clone();
    f.fill_diagonal(0.0);
    let total: f64 = f.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "flow matrix has no off-diagonal flows".into(),
        ));
    }
    let out: Vec<f64> = (0..n).map(|i| f.row(i).iter().sum()).collect();
    let inflow: Vec<f64> = (0..n).map(|j| f.column(j).iter().sum()).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j || out[i] == 0.0 || inflow[j] == 0.0 {
            0.0
        } else {
            (f[(i, j)] / out[i]) / (inflow[j] / total)
        }
    }))
}

/// Builds the skill-relatedness network from labour flows.
pub fn build_relatedness(flows: &FlowMatrix) -> Result<RelatednessNetwork> {
    let ratio = mobility_ratio(flows)?;
    let n = flows.len();
    let mut weights = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (ratio[(i, j)] + ratio[(j, i)]);
            let w = (s - 1.0) / (s + 1.0);
            if w > 0.0 {
                weights[(i, j)] = w;
                weights[(j, i)] = w;
            }
        }
    }
    RelatednessNetwork::from_weights(flows.codes().to_vec(), weights)
}

/// Re-expresses a flow matrix in the crosswalk's target classification.
///
/// Every source pair `(i, j)` with flow `x` assigns `x` to each target pair
/// `(a, c)` with `a ∈ targets(i)` and `c ∈ targets(j)`. Collisions keep the
/// maximum. Source self-flows map only onto target self-flows `(a, a)`.
pub fn convert_scheme(flows: &FlowMatrix, xwalk: &Crosswalk) -> Result<FlowMatrix> {
    xwalk.check_coverage(flows)?;
    let targets = xwalk.target_map();

    let mut codes: Vec<IndustryCode> = Vec::new();
    let mut index: HashMap<&IndustryCode, usize> = HashMap::new();
    let mut mapped: Vec<Vec<usize>> = Vec::with_capacity(flows.len());
    for code in flows.codes() {
        let ts = &targets[code];
        let mut idx = Vec::with_capacity(ts.len());
        for t in ts {
            let k = *index.entry(t).or_insert_with(|| {
                codes.push((*t).clone());
                codes.len() - 1
            });
            idx.push(k);
        }
        mapped.push(idx);
    }

    let m = codes.len();
    let mut out = DMatrix::<f64>::zeros(m, m);
    let counts = flows.counts();
    for i in 0..flows.len() {
        for j in 0..flows.len() {
            let x = counts[(i, j)];
            if x == 0.0 {
                continue;
            }
            if i == j {
                for &a in &mapped[i] {
                    out[(a, a)] = out[(a, a)].max(x);
                }
                continue;
            }
            for &a in &mapped[i] {
                for &c in &mapped[j] {
                    out[(a, c)] = out[(a, c)].max(x);
                }
            }
        }
    }
    FlowMatrix::new(Scheme::Target, codes, out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRow {
    pub from: IndustryCode,
    pub to: IndustryCode,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRow {
    pub industry: IndustryCode,
    pub mne_share: f64,
    pub no_employment: bool,
}

/// Node and edge tables for visualising the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkExport {
    pub nodes: Vec<NodeRow>,
    pub edges: Vec<EdgeRow>,
}

/// Edge list (each undirected edge once, `from < to`) and per-industry MNE
/// employment share in `year`, summed across regions.
pub fn export_network(
    net: &RelatednessNetwork,
    panel: &EmploymentPanel,
    year: i32,
) -> Result<NetworkExport> {
    match panel.years() {
        Some(range) if range.contains(&year) => {}
        _ => {
            return Err(Error::Validation(format!(
                "year {year} is not covered by the employment panel"
            )))
        }
    }
    let mut totals: BTreeMap<&IndustryCode, (u64, u64)> = BTreeMap::new();
    for r in panel.records().iter().filter(|r| r.year == year) {
        let e = totals.entry(&r.industry).or_default();
        e.0 += r.emp_dom;
        e.1 += r.emp_mne;
    }
    let nodes = net
        .codes()
        .iter()
        .map(|code| {
            let (dom, mne) = totals.get(code).copied().unwrap_or_default();
            let total = dom + mne;
            NodeRow {
                industry: code.clone(),
                mne_share: if total == 0 {
                    0.0
                } else {
                    mne as f64 / total as f64
                },
                no_employment: total == 0,
            }
        })
        .collect();

    let mut edges: Vec<EdgeRow> = net
        .edges()
        .map(|(i, j, w)| {
            let (a, b) = (&net.codes()[i], &net.codes()[j]);
            let (from, to) = if a < b { (a, b) } else { (b, a) };
            EdgeRow {
                from: from.clone(),
                to: to.clone(),
                weight: w,
            }
        })
        .collect();
    edges.sort_by(|x, y| (&x.from, &x.to).cmp(&(&y.from, &y.to)));
    Ok(NetworkExport { nodes, edges })
}

impl NetworkExport {
    pub fn write_edges<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let err = |e| Error::csv("edges.csv", e);
        wtr.write_record(["from", "to", "weight"]).map_err(err)?;
        for e in &self.edges {
            wtr.write_record([e.from.as_str(), e.to.as_str(), &g12(e.weight)])
                .map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io("edges.csv", e))
    }

    pub fn write_nodes<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let err = |e| Error::csv("nodes.csv", e);
        wtr.write_record(["industry", "mne_share", "no_employment"])
            .map_err(err)?;
        for n in &self.nodes {
            wtr.write_record([
                n.industry.as_str(),
                &g12(n.mne_share),
                if n.no_employment { "1" } else { "0" },
            ])
            .map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io("nodes.csv", e))
    }
}
