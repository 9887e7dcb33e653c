//! Loading and validating the three input files: inter-industry labour
//! flows, the ownership-split employment panel and the classification
//! crosswalk.
//!
//! All files are UTF-8 CSV with a header row:
//!
//! | file            | header                                    |
//! |-----------------|-------------------------------------------|
//! | flows.csv       | `from,to,count`                           |
//! | panel.csv       | `industry,region,year,emp_dom,emp_mne`    |
//! | crosswalk.csv   | `source,target`                           |

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which classification a code list belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Classification the labour flows were recorded in.
    Source,
    /// Classification of the employment panel.
    Target,
}

/// Opaque industry identifier. Never parsed as a number so that leading
/// zeros ("0121") survive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndustryCode(String);

impl IndustryCode {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        let trimmed = code.trim();
        if trimmed.is_empty() {
            return Err(Error::Validation("empty industry code".into()));
        }
        Ok(IndustryCode(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Leading `n` characters, used to group industries into sectors.
    pub fn prefix(&self, n: usize) -> &str {
        match self.0.char_indices().nth(n) {
            Some((idx, _)) => &self.0[..idx],
            None => &self.0,
        }
    }
}

impl fmt::Display for IndustryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for IndustryCode {
    /// Panics on an empty code; use [`IndustryCode::new`] for untrusted input.
    fn from(s: &str) -> Self {
        IndustryCode::new(s).expect("non-empty industry code")
    }
}

/// Square matrix of inter-industry worker transitions. Entry `(i, j)` is the
/// (average annual) number of workers moving from industry `i` to `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    scheme: Scheme,
    codes: Vec<IndustryCode>,
    counts: DMatrix<f64>,
}

impl FlowMatrix {
    pub fn new(scheme: Scheme, codes: Vec<IndustryCode>, counts: DMatrix<f64>) -> Result<Self> {
        if counts.nrows() != codes.len() || counts.ncols() != codes.len() {
            return Err(Error::Validation(format!(
                "flow matrix is {}x{} but {} codes were given",
                counts.nrows(),
                counts.ncols(),
                codes.len()
            )));
        }
        let mut seen = HashSet::new();
        for code in &codes {
            if !seen.insert(code) {
                return Err(Error::Validation(format!("duplicate industry code {code}")));
            }
        }
        if let Some(bad) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::Validation(format!(
                "flow counts must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(FlowMatrix {
            scheme,
            codes,
            counts,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn codes(&self) -> &[IndustryCode] {
        &self.codes
    }

    pub fn counts(&self) -> &DMatrix<f64> {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn index_of(&self, code: &IndustryCode) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }

    /// Flow from `from` to `to`, zero when either code is unknown.
    pub fn get(&self, from: &str, to: &str) -> f64 {
        let find = |s: &str| self.codes.iter().position(|c| c.as_str() == s);
        match (find(from), find(to)) {
            (Some(i), Some(j)) => self.counts[(i, j)],
            _ => 0.0,
        }
    }

    /// Every code whose self-flow is nonzero.
    pub fn self_flow_codes(&self) -> Vec<&IndustryCode> {
        (0..self.len())
            .filter(|&i| self.counts[(i, i)] > 0.0)
            .map(|i| &self.codes[i])
            .collect()
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        FlowMatrix::new(self.scheme, self.codes.clone(), &self.counts * factor)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct FlowRow {
    from: String,
    to: String,
    count: f64,
}

/// Reads `flows.csv`. Codes are ordered by first appearance; absent cells are zero.
pub fn load_flows(path: impl AsRef<Path>) -> Result<FlowMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_flows(file, path)
}

pub fn read_flows<R: Read>(reader: R, origin: &Path) -> Result<FlowMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(&mut rdr, origin, &["from", "to", "count"])?;

    let mut codes: Vec<IndustryCode> = Vec::new();
    let mut index: HashMap<IndustryCode, usize> = HashMap::new();
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();

    for record in rdr.deserialize::<FlowRow>() {
        let row = record.map_err(|e| Error::csv(origin, e))?;
        let line = line_of(cells.len());
        let from = IndustryCode::new(row.from).map_err(|e| at_line(origin, line, e))?;
        let to = IndustryCode::new(row.to).map_err(|e| at_line(origin, line, e))?;
        if !row.count.is_finite() || row.count < 0.0 {
            return Err(Error::Validation(format!(
                "{}: line {line}: flow {from}->{to} has invalid count {}",
                origin.display(),
                row.count
            )));
        }
        let mut intern = |code: IndustryCode| {
            *index.entry(code.clone()).or_insert_with(|| {
                codes.push(code);
                codes.len() - 1
            })
        };
        let i = intern(from.clone());
        let j = intern(to.clone());
        if cells.insert((i, j), row.count).is_some() {
            return Err(Error::Validation(format!(
                "{}: line {line}: duplicate flow {from}->{to}",
                origin.display()
            )));
        }
        if i == j && row.count > 0.0 {
            log::warn!(
                "self-flow for industry {from} ({}) is stored but ignored by relatedness",
                row.count
            );
        }
    }

    let n = codes.len();
    let mut counts = DMatrix::zeros(n, n);
    for ((i, j), c) in cells {
        counts[(i, j)] = c;
    }
    FlowMatrix::new(Scheme::Source, codes, counts)
}

/// Writes every cell of the matrix in row-major order, which reproduces the
/// code order on reload.
pub fn write_flows<W: Write>(flows: &FlowMatrix, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::csv("<flows output>", e);
    wtr.write_record(["from", "to", "count"]).map_err(io)?;
    for (i, from) in flows.codes.iter().enumerate() {
        for (j, to) in flows.codes.iter().enumerate() {
            let count = flows.counts[(i, j)].to_string();
            wtr.write_record([from.as_str(), to.as_str(), count.as_str()])
                .map_err(io)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<flows output>", e))
}

/// One industry-region-year observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelRecord {
    pub industry: IndustryCode,
    pub region: String,
    pub year: i32,
    pub emp_dom: u64,
    pub emp_mne: u64,
}

/// Employment by industry, region and year, split into domestic and
/// foreign-owned (MNE) firms. Cells without a record have zero employment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmploymentPanel {
    records: Vec<PanelRecord>,
}

impl EmploymentPanel {
    /// Sorts by (region, industry, year) and rejects duplicate keys.
    pub fn new(mut records: Vec<PanelRecord>) -> Result<Self> {
        records.sort_by(|a, b| {
            (&a.region, &a.industry, a.year).cmp(&(&b.region, &b.industry, b.year))
        });
        for pair in records.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.region == b.region && a.industry == b.industry && a.year == b.year {
                return Err(Error::Validation(format!(
                    "duplicate panel record for industry {} region {} year {}",
                    a.industry, a.region, a.year
                )));
            }
        }
        Ok(EmploymentPanel { records })
    }

    pub fn records(&self) -> &[PanelRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Contiguous year range spanned by the records.
    pub fn years(&self) -> Option<std::ops::RangeInclusive<i32>> {
        let min = self.records.iter().map(|r| r.year).min()?;
        let max = self.records.iter().map(|r| r.year).max()?;
        Some(min..=max)
    }

    pub fn industries(&self) -> BTreeSet<IndustryCode> {
        self.records.iter().map(|r| r.industry.clone()).collect()
    }

    pub fn regions(&self) -> BTreeSet<String> {
        self.records.iter().map(|r| r.region.clone()).collect()
    }
}

#[derive(Debug, Deserialize)]
struct PanelRow {
    industry: String,
    region: String,
    year: i32,
    emp_dom: u64,
    emp_mne: u64,
}

pub fn load_panel(path: impl AsRef<Path>) -> Result<EmploymentPanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(file, path)
}

pub fn read_panel<R: Read>(reader: R, origin: &Path) -> Result<EmploymentPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(
        &mut rdr,
        origin,
        &["industry", "region", "year", "emp_dom", "emp_mne"],
    )?;
    let mut records = Vec::new();
    for row in rdr.deserialize::<PanelRow>() {
        let row = row.map_err(|e| Error::csv(origin, e))?;
        let line = line_of(records.len());
        let region = row.region.trim().to_string();
        if region.is_empty() {
            return Err(at_line(
                origin,
                line,
                Error::Validation("empty region label".into()),
            ));
        }
        records.push(PanelRecord {
            industry: IndustryCode::new(row.industry).map_err(|e| at_line(origin, line, e))?,
            region,
            year: row.year,
            emp_dom: row.emp_dom,
            emp_mne: row.emp_mne,
        });
    }
    EmploymentPanel::new(records)
}

pub fn write_panel<W: Write>(panel: &EmploymentPanel, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::csv("<panel output>", e);
    wtr.write_record(["industry", "region", "year", "emp_dom", "emp_mne"])
        .map_err(io)?;
    for r in &panel.records {
        wtr.write_record([
            r.industry.as_str(),
            r.region.as_str(),
            &r.year.to_string(),
            &r.emp_dom.to_string(),
            &r.emp_mne.to_string(),
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io("<panel output>", e))
}

/// Many-to-many correspondence from source-scheme to target-scheme codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crosswalk {
    pairs: Vec<(IndustryCode, IndustryCode)>,
}

impl Crosswalk {
    /// Deduplicates while keeping first-occurrence order.
    pub fn new(pairs: impl IntoIterator<Item = (IndustryCode, IndustryCode)>) -> Self {
        let mut seen = HashSet::new();
        let pairs = pairs
            .into_iter()
            .filter(|p| seen.insert(p.clone()))
            .collect();
        Crosswalk { pairs }
    }

    /// Maps every code of `codes` to itself.
    pub fn identity<'a>(codes: impl IntoIterator<Item = &'a IndustryCode>) -> Self {
        Crosswalk::new(codes.into_iter().map(|c| (c.clone(), c.clone())))
    }

    pub fn pairs(&self) -> &[(IndustryCode, IndustryCode)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Target codes for `source`, in file order.
    pub fn targets(&self, source: &IndustryCode) -> Vec<&IndustryCode> {
        self.pairs
            .iter()
            .filter(|(s, _)| s == source)
            .map(|(_, t)| t)
            .collect()
    }

    pub(crate) fn target_map(&self) -> HashMap<&IndustryCode, Vec<&IndustryCode>> {
        let mut map: HashMap<&IndustryCode, Vec<&IndustryCode>> = HashMap::new();
        for (s, t) in &self.pairs {
            map.entry(s).or_default().push(t);
        }
        map
    }

    /// Fails with [`Error::Coverage`] naming every flow code the crosswalk
    /// does not map.
    pub fn check_coverage(&self, flows: &FlowMatrix) -> Result<()> {
        let sources: HashSet<&IndustryCode> = self.pairs.iter().map(|(s, _)| s).collect();
        let orphans: Vec<String> = flows
            .codes()
            .iter()
            .filter(|c| !sources.contains(c))
            .map(|c| c.to_string())
            .collect();
        if orphans.is_empty() {
            Ok(())
        } else {
            Err(Error::Coverage { codes: orphans })
        }
    }
}

#[derive(Debug, Deserialize)]
struct CrosswalkRow {
    source: String,
    target: String,
}

pub fn load_crosswalk(path: impl AsRef<Path>) -> Result<Crosswalk> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_crosswalk(file, path)
}

pub fn read_crosswalk<R: Read>(reader: R, origin: &Path) -> Result<Crosswalk> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(&mut rdr, origin, &["source", "target"])?;
    let mut pairs = Vec::new();
    for row in rdr.deserialize::<CrosswalkRow>() {
        let row = row.map_err(|e| Error::csv(origin, e))?;
        let line = line_of(pairs.len());
        pairs.push((
            IndustryCode::new(row.source).map_err(|e| at_line(origin, line, e))?,
            IndustryCode::new(row.target).map_err(|e| at_line(origin, line, e))?,
        ));
    }
    Ok(Crosswalk::new(pairs))
}

pub fn write_crosswalk<W: Write>(xwalk: &Crosswalk, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::csv("<crosswalk output>", e);
    wtr.write_record(["source", "target"]).map_err(io)?;
    for (s, t) in &xwalk.pairs {
        wtr.write_record([s.as_str(), t.as_str()]).map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io("<crosswalk output>", e))
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, origin: &Path, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(|e| Error::csv(origin, e))?;
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.join(",")
            ),
        });
    }
    Ok(())
}

// Data rows start on line 2; assumes one physical line per record.
fn line_of(records_read: usize) -> u64 {
    records_read as u64 + 2
}

fn at_line(origin: &Path, line: u64, err: Error) -> Error {
    Error::Parse {
        path: origin.to_path_buf(),
        line,
        message: err.to_string(),
    }
}
