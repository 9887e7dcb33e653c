//! Presence indicators, ownership partitions and entry/exit labels.
//!
//! An industry is present for an ownership type when its employment is
//! strictly above the threshold (default 5). Exclusive sets require the other
//! ownership type to have no employment at all; overlap requires both types
//! above the threshold. A cell with domestic employment above the threshold
//! and 1..=threshold MNE employees is domestically present but belongs to no
//! exclusive or overlapping set.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::opt_g12;
use crate::ingest::{EmploymentPanel, IndustryCode};

pub const DEFAULT_THRESHOLD: u64 = 5;

/// Presence indicators of one (industry, region, year) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Presence {
    pub dom: bool,
    pub mne: bool,
    pub excl_dom: bool,
    pub excl_mne: bool,
    pub overlap: bool,
}

impl Presence {
    pub fn classify(emp_dom: u64, emp_mne: u64, threshold: u64) -> Self {
        let dom = emp_dom > threshold;
        let mne = emp_mne > threshold;
        Presence {
            dom,
            mne,
            excl_dom: dom && emp_mne == 0,
            excl_mne: mne && emp_dom == 0,
            overlap: dom && mne,
        }
    }

    /// Indicator for `partition`; `All` is presence of either ownership type.
    pub fn in_partition(&self, partition: Partition) -> bool {
        match partition {
            Partition::All => self.dom || self.mne,
            Partition::ExclD => self.excl_dom,
            Partition::ExclM => self.excl_mne,
            Partition::Overlap => self.overlap,
        }
    }
}

/// Ownership set a cohesion measure is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Partition {
    All,
    ExclD,
    ExclM,
    Overlap,
}

impl Partition {
    pub const OWNERSHIP: [Partition; 3] = [Partition::ExclD, Partition::ExclM, Partition::Overlap];

    pub fn suffix(self) -> &'static str {
        match self {
            Partition::All => "all",
            Partition::ExclD => "excl_d",
            Partition::ExclM => "excl_m",
            Partition::Overlap => "overlap",
        }
    }
}

/// A base/end year pair over which transitions are measured.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub name: String,
    pub base_year: i32,
    pub end_year: i32,
}

impl PeriodSpec {
    pub fn new(name: impl Into<String>, base_year: i32, end_year: i32) -> Result<Self> {
        if base_year >= end_year {
            return Err(Error::Validation(format!(
                "period base year {base_year} must precede end year {end_year}"
            )));
        }
        Ok(PeriodSpec {
            name: name.into(),
            base_year,
            end_year,
        })
    }

    pub fn span(base_year: i32, end_year: i32) -> Result<Self> {
        Self::new(format!("{base_year}-{end_year}"), base_year, end_year)
    }

    /// One period per consecutive pair of years in `first..=last`.
    pub fn yearly(first: i32, last: i32) -> Result<Vec<Self>> {
        (first..last).map(|y| Self::span(y, y + 1)).collect()
    }

    /// 2006-2009, 2010-2014 and 2015-2019.
    pub fn defaults() -> Vec<Self> {
        [(2006, 2009), (2010, 2014), (2015, 2019)]
            .into_iter()
            .map(|(b, e)| Self::span(b, e).expect("valid default period"))
            .collect()
    }
}

impl FromStr for PeriodSpec {
    type Err = Error;

    /// Parses `BASE-END`, e.g. `2006-2009`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("period `{s}` is not of the form BASE-END"));
        let (b, e) = s.trim().split_once('-').ok_or_else(bad)?;
        let base = b.trim().parse().map_err(|_| bad())?;
        let end = e.trim().parse().map_err(|_| bad())?;
        Self::span(base, end)
    }
}

impl fmt::Display for PeriodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Checks that periods are ordered and do not overlap.
pub fn validate_periods(periods: &[PeriodSpec]) -> Result<()> {
    if periods.is_empty() {
        return Err(Error::Validation("at least one period is required".into()));
    }
    for pair in periods.windows(2) {
        if pair[1].base_year < pair[0].end_year {
            return Err(Error::Validation(format!(
                "periods {} and {} overlap or are out of order",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

/// Presence indicators over (industry, region, year).
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceCube {
    industries: Vec<IndustryCode>,
    regions: Vec<String>,
    first_year: i32,
    n_years: usize,
    threshold: u64,
    cells: Vec<Presence>,
}

/// Builds the presence cube over the panel's industries, regions and year range.
pub fn build_presence(panel: &EmploymentPanel, threshold: u64) -> Result<PresenceCube> {
    build_presence_over(panel, threshold, std::iter::empty())
}

/// Like [`build_presence`], with additional industries (zero employment)
/// added to the industry axis.
pub fn build_presence_over<'a>(
    panel: &EmploymentPanel,
    threshold: u64,
    extra_industries: impl IntoIterator<Item = &'a IndustryCode>,
) -> Result<PresenceCube> {
    let years = panel
        .years()
        .ok_or_else(|| Error::Validation("employment panel is empty".into()))?;
    let mut industries: BTreeSet<IndustryCode> = panel.industries();
    industries.extend(extra_industries.into_iter().cloned());
    let industries: Vec<IndustryCode> = industries.into_iter().collect();
    let regions: Vec<String> = panel.regions().into_iter().collect();

    let first_year = *years.start();
    let n_years = (years.end() - years.start() + 1) as usize;
    let mut cube = PresenceCube {
        cells: vec![Presence::default(); industries.len() * regions.len() * n_years],
        industries,
        regions,
        first_year,
        n_years,
        threshold,
    };
    let ind_idx: HashMap<&IndustryCode, usize> = cube
        .industries
        .iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let reg_idx: HashMap<&str, usize> = cube
        .regions
        .iter()
        .enumerate()
        .map(|(i, r)| (r.as_str(), i))
        .collect();
    let mut cells = std::mem::take(&mut cube.cells);
    for rec in panel.records() {
        let i = ind_idx[&rec.industry];
        let r = reg_idx[rec.region.as_str()];
        let t = (rec.year - first_year) as usize;
        cells[cube.offset(i, r, t)] = Presence::classify(rec.emp_dom, rec.emp_mne, threshold);
    }
    cube.cells = cells;
    Ok(cube)
}

impl PresenceCube {
    fn offset(&self, industry: usize, region: usize, year_idx: usize) -> usize {
        (industry * self.regions.len() + region) * self.n_years + year_idx
    }

    pub fn industries(&self) -> &[IndustryCode] {
        &self.industries
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.first_year..=self.last_year()
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.n_years as i32 - 1
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn has_year(&self, year: i32) -> bool {
        self.years().contains(&year)
    }

    fn year_index(&self, year: i32) -> Result<usize> {
        if self.has_year(year) {
            Ok((year - self.first_year) as usize)
        } else {
            Err(Error::Validation(format!(
                "year {year} is outside the panel years {}..={}",
                self.first_year,
                self.last_year()
            )))
        }
    }

    pub fn industry_index(&self, code: &IndustryCode) -> Option<usize> {
        self.industries.binary_search(code).ok()
    }

    pub fn region_index(&self, region: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == region)
    }

    /// Presence at (industry index, region index, year). Years outside the
    /// cube read as absent.
    pub fn get(&self, industry: usize, region: usize, year: i32) -> Presence {
        match self.year_index(year) {
            Ok(t) => self.cells[self.offset(industry, region, t)],
            Err(_) => Presence::default(),
        }
    }

    /// Industry codes in `partition` for one region-year.
    pub fn present_codes(
        &self,
        region: usize,
        year: i32,
        partition: Partition,
    ) -> Vec<&IndustryCode> {
        (0..self.industries.len())
            .filter(|&i| self.get(i, region, year).in_partition(partition))
            .map(|i| &self.industries[i])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionRow {
    pub industry: IndustryCode,
    pub region: String,
    /// Index into [`TransitionTable::periods`].
    pub period: usize,
    pub entry: bool,
    pub exit: bool,
    pub in_entry_sample: bool,
    pub in_exit_sample: bool,
}

/// Domestic entry/exit labels per (industry, region, period), ordered by
/// industry, region, period.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pub periods: Vec<PeriodSpec>,
    pub rows: Vec<TransitionRow>,
}

/// Labels domestic entries and exits by comparing each period's base and end year.
pub fn label_transitions(cube: &PresenceCube, periods: &[PeriodSpec]) -> Result<TransitionTable> {
    for p in periods {
        cube.year_index(p.base_year)?;
        cube.year_index(p.end_year)?;
    }
    let mut rows = Vec::with_capacity(cube.industries.len() * cube.regions.len() * periods.len());
    for (i, industry) in cube.industries.iter().enumerate() {
        for (r, region) in cube.regions.iter().enumerate() {
            for (k, p) in periods.iter().enumerate() {
                let base = cube.get(i, r, p.base_year).dom;
                let end = cube.get(i, r, p.end_year).dom;
                rows.push(TransitionRow {
                    industry: industry.clone(),
                    region: region.clone(),
                    period: k,
                    entry: !base && end,
                    exit: base && !end,
                    in_entry_sample: !base,
                    in_exit_sample: base,
                });
            }
        }
    }
    Ok(TransitionTable {
        periods: periods.to_vec(),
        rows,
    })
}

impl TransitionTable {
    pub fn period(&self, row: &TransitionRow) -> &PeriodSpec {
        &self.periods[row.period]
    }

    pub fn entries(&self) -> usize {
        self.rows.iter().filter(|r| r.entry).count()
    }

    pub fn exits(&self) -> usize {
        self.rows.iter().filter(|r| r.exit).count()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let err = |e| Error::csv("transitions.csv", e);
        wtr.write_record([
            "industry",
            "region",
            "period",
            "entry",
            "exit",
            "in_entry_sample",
            "in_exit_sample",
        ])
        .map_err(err)?;
        let b = |x: bool| if x { "1" } else { "0" };
        for row in &self.rows {
            wtr.write_record([
                row.industry.as_str(),
                row.region.as_str(),
                self.periods[row.period].name.as_str(),
                b(row.entry),
                b(row.exit),
                b(row.in_entry_sample),
                b(row.in_exit_sample),
            ])
            .map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io("transitions.csv", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Share of each later year's presences that were already present at the anchor.
    Forward,
    /// Share of each earlier year's presences that survive to the anchor.
    Backward,
}

/// Domestic structural-change curve. `None` marks years without any domestic
/// presence. Forward series cover `anchor..=last`; backward series cover
/// `first..=anchor`.
pub fn structural_change_curve(
    cube: &PresenceCube,
    anchor_year: i32,
    direction: Direction,
) -> Result<Vec<(i32, Option<f64>)>> {
    cube.year_index(anchor_year)?;
    let years: Vec<i32> = match direction {
        Direction::Forward => (anchor_year..=cube.last_year()).collect(),
        Direction::Backward => (cube.first_year..=anchor_year).collect(),
    };
    let nr = cube.regions.len();
    Ok(years
        .into_iter()
        .map(|t| {
            let mut present = 0usize;
            let mut shared = 0usize;
            for i in 0..cube.industries.len() {
                for r in 0..nr {
                    if cube.get(i, r, t).dom {
                        present += 1;
                        if cube.get(i, r, anchor_year).dom {
                            shared += 1;
                        }
                    }
                }
            }
            let share = (present > 0).then(|| shared as f64 / present as f64);
            (t, share)
        })
        .collect())
}

pub fn write_curve<W: Write>(curve: &[(i32, Option<f64>)], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e| Error::csv("structural_change.csv", e);
    wtr.write_record(["year", "share"]).map_err(err)?;
    for (year, share) in curve {
        wtr.write_record([year.to_string(), opt_g12(*share)])
            .map_err(err)?;
    }
    wtr.flush()
        .map_err(|e| Error::io("structural_change.csv", e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryFilter {
    /// Entries into cells where only MNEs were present at the base year.
    IntoExclusiveMne,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    /// End year of the period.
    Year,
    Region,
    /// Leading two characters of the industry code.
    SectorPrefix,
}

/// Entry counts per group. Every group key of the table appears, including
/// those with zero entries.
pub fn entry_counts(
    table: &TransitionTable,
    cube: &PresenceCube,
    filter: EntryFilter,
    group_by: GroupBy,
) -> Result<BTreeMap<String, usize>> {
    let key = |row: &TransitionRow| match group_by {
        GroupBy::Year => table.periods[row.period].end_year.to_string(),
        GroupBy::Region => row.region.clone(),
        GroupBy::SectorPrefix => row.industry.prefix(2).to_string(),
    };
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for row in &table.rows {
        let slot = counts.entry(key(row)).or_insert(0);
        if !row.entry {
            continue;
        }
        let counted = match filter {
            EntryFilter::All => true,
            EntryFilter::IntoExclusiveMne => {
                let i = cube.industry_index(&row.industry).ok_or_else(|| {
                    Error::Validation(format!(
                        "industry {} is not in the presence cube",
                        row.industry
                    ))
                })?;
                let r = cube.region_index(&row.region).ok_or_else(|| {
                    Error::Validation(format!("region {} is not in the presence cube", row.region))
                })?;
                cube.get(i, r, table.periods[row.period].base_year).excl_mne
            }
        };
        if counted {
            *slot += 1;
        }
    }
    Ok(counts)
}

pub fn write_counts<W: Write>(
    counts: &BTreeMap<String, usize>,
    header: &str,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e| Error::csv("entry_counts.csv", e);
    wtr.write_record([header, "entries"]).map_err(err)?;
    for (k, v) in counts {
        wtr.write_record([k.as_str(), &v.to_string()])
            .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("entry_counts.csv", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::PanelRecord;
    use proptest::prelude::*;

    fn rec(i: &str, r: &str, y: i32, d: u64, m: u64) -> PanelRecord {
        PanelRecord {
            industry: i.into(),
            region: r.into(),
            year: y,
            emp_dom: d,
            emp_mne: m,
        }
    }

    #[test]
    fn classification_branches() {
        let p = Presence::classify(6, 0, 5);
        assert!(p.dom && p.excl_dom && !p.overlap && !p.mne && !p.excl_mne);
        assert_eq!(Presence::classify(5, 5, 5), Presence::default());
        let gap = Presence::classify(6, 3, 5);
        assert_eq!(
            gap,
            Presence {
                dom: true,
                ..Presence::default()
            }
        );
        let both = Presence::classify(6, 6, 5);
        assert!(both.overlap && both.dom && both.mne && !both.excl_dom && !both.excl_mne);
        let mne_only = Presence::classify(0, 10, 5);
        assert!(mne_only.excl_mne && mne_only.mne && !mne_only.dom);
        assert!(!Presence::classify(2, 10, 5).excl_mne);
    }

    #[test]
    fn cube_fills_absent_cells_with_zero() {
        let panel = EmploymentPanel::new(vec![
            rec("a", "R1", 2000, 10, 0),
            rec("b", "R2", 2002, 0, 9),
        ])
        .unwrap();
        let cube = build_presence(&panel, 5).unwrap();
        assert_eq!(cube.years(), 2000..=2002);
        assert!(cube.get(0, 0, 2000).dom);
        assert_eq!(cube.get(0, 0, 2001), Presence::default());
        assert!(cube.get(1, 1, 2002).excl_mne);
        assert!(build_presence(&EmploymentPanel::default(), 5).is_err());
    }

    #[test]
    fn entry_and_persistence_labels() {
        let panel = EmploymentPanel::new(vec![
            rec("a", "R", 2000, 0, 0),
            rec("a", "R", 2001, 8, 0),
            rec("b", "R", 2000, 8, 0),
            rec("b", "R", 2001, 8, 0),
            rec("c", "R", 2000, 8, 0),
            rec("c", "R", 2001, 5, 0),
        ])
        .unwrap();
        let cube = build_presence(&panel, 5).unwrap();
        let t = label_transitions(&cube, &PeriodSpec::yearly(2000, 2001).unwrap()).unwrap();
        let row = |c: &str| t.rows.iter().find(|r| r.industry.as_str() == c).unwrap();
        assert!(row("a").entry && row("a").in_entry_sample && !row("a").in_exit_sample);
        assert!(!row("b").entry && !row("b").exit && row("b").in_exit_sample);
        assert!(row("c").exit);
        let err = label_transitions(&cube, &[PeriodSpec::span(2000, 2005).unwrap()]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    /// 10 industries x 2 regions x 2 years with scripted employment; entry and
    /// exit counts checked against a plain double loop over raw employment.
    #[test]
    fn transition_counts_match_enumeration() {
        let dom0 = [
            0u64, 6, 7, 2, 9, 0, 5, 12, 3, 6, 8, 0, 1, 6, 6, 40, 0, 0, 7, 2,
        ];
        let dom1 = [
            6u64, 0, 7, 3, 9, 8, 6, 0, 3, 6, 0, 0, 9, 6, 5, 41, 6, 1, 7, 9,
        ];
        let mut recs = Vec::new();
        for i in 0..10 {
            for r in 0..2 {
                let k = i * 2 + r;
                recs.push(rec(&format!("{i:02}"), &format!("R{r}"), 2010, dom0[k], 0));
                recs.push(rec(&format!("{i:02}"), &format!("R{r}"), 2011, dom1[k], 0));
            }
        }
        let cube = build_presence(&EmploymentPanel::new(recs).unwrap(), 5).unwrap();
        let t = label_transitions(&cube, &PeriodSpec::yearly(2010, 2011).unwrap()).unwrap();
        let (mut entries, mut exits) = (0, 0);
        for k in 0..20 {
            if dom0[k] <= 5 && dom1[k] > 5 {
                entries += 1;
            }
            if dom0[k] > 5 && dom1[k] <= 5 {
                exits += 1;
            }
        }
        assert_eq!((t.entries(), t.exits()), (entries, exits));
        assert_eq!((entries, exits), (6, 4));
    }

    #[test]
    fn curve_is_one_at_anchor_and_for_static_economy() {
        let panel = EmploymentPanel::new(vec![
            rec("a", "R", 2000, 10, 0),
            rec("a", "R", 2001, 10, 0),
            rec("a", "R", 2002, 10, 0),
        ])
        .unwrap();
        let cube = build_presence(&panel, 5).unwrap();
        let fwd = structural_change_curve(&cube, 2000, Direction::Forward).unwrap();
        assert_eq!(
            fwd,
            vec![(2000, Some(1.0)), (2001, Some(1.0)), (2002, Some(1.0))]
        );
        let back = structural_change_curve(&cube, 2002, Direction::Backward).unwrap();
        assert!(back.iter().all(|(_, s)| *s == Some(1.0)));
    }

    /// 5 industries, 3 years, one exit (e in 2002) and one entry (d in 2001).
    #[test]
    fn curve_matches_hand_count() {
        let mut recs = Vec::new();
        for y in 2000..=2002 {
            for c in ["a", "b", "c"] {
                recs.push(rec(c, "R", y, 10, 0));
            }
            if y >= 2001 {
                recs.push(rec("d", "R", y, 10, 0));
            }
            if y <= 2001 {
                recs.push(rec("e", "R", y, 10, 0));
            }
        }
        let cube = build_presence(&EmploymentPanel::new(recs).unwrap(), 5).unwrap();
        let fwd = structural_change_curve(&cube, 2000, Direction::Forward).unwrap();
        // 2000: {a,b,c,e} all original; 2001: {a,b,c,d,e} 4 of 5; 2002: {a,b,c,d} 3 of 4
        assert_eq!(
            fwd,
            vec![(2000, Some(1.0)), (2001, Some(0.8)), (2002, Some(0.75))]
        );
        let back = structural_change_curve(&cube, 2002, Direction::Backward).unwrap();
        // 2000: {a,b,c,e} -> 3 of 4 survive; 2001: 4 of 5; 2002: 1
        assert_eq!(
            back,
            vec![(2000, Some(0.75)), (2001, Some(0.8)), (2002, Some(1.0))]
        );
    }

    #[test]
    fn curve_marks_empty_years_missing() {
        let panel =
            EmploymentPanel::new(vec![rec("a", "R", 2000, 10, 0), rec("a", "R", 2001, 0, 0)])
                .unwrap();
        let cube = build_presence(&panel, 5).unwrap();
        let fwd = structural_change_curve(&cube, 2000, Direction::Forward).unwrap();
        assert_eq!(fwd[1], (2001, None));
        let mut buf = Vec::new();
        write_curve(&fwd, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "year,share\n2000,1\n2001,NA\n"
        );
    }

    #[test]
    fn entry_counts_by_year_into_exclusive_mne() {
        let panel = EmploymentPanel::new(vec![
            rec("1071", "R", 2016, 0, 20),
            rec("1071", "R", 2017, 9, 20),
            rec("2001", "R", 2016, 0, 0),
            rec("2001", "R", 2017, 9, 0),
        ])
        .unwrap();
        let cube = build_presence(&panel, 5).unwrap();
        let t = label_transitions(&cube, &PeriodSpec::yearly(2016, 2017).unwrap()).unwrap();
        let c = entry_counts(&t, &cube, EntryFilter::IntoExclusiveMne, GroupBy::Year).unwrap();
        assert_eq!(c, BTreeMap::from([("2017".to_string(), 1)]));
        let all = entry_counts(&t, &cube, EntryFilter::All, GroupBy::SectorPrefix).unwrap();
        assert_eq!(
            all,
            BTreeMap::from([("10".to_string(), 1), ("20".to_string(), 1)])
        );
    }

    #[test]
    fn no_entries_gives_zero_groups() {
        let panel =
            EmploymentPanel::new(vec![rec("a", "R1", 2000, 9, 0), rec("a", "R2", 2001, 0, 0)])
                .unwrap();
        let cube = build_presence(&panel, 5).unwrap();
        let t = label_transitions(&cube, &PeriodSpec::yearly(2000, 2001).unwrap()).unwrap();
        let c = entry_counts(&t, &cube, EntryFilter::All, GroupBy::Region).unwrap();
        assert_eq!(
            c,
            BTreeMap::from([("R1".to_string(), 0), ("R2".to_string(), 0)])
        );
    }

    #[test]
    fn period_parsing_and_validation() {
        let p: PeriodSpec = "2006-2009".parse().unwrap();
        assert_eq!(
            (p.base_year, p.end_year, p.name.as_str()),
            (2006, 2009, "2006-2009")
        );
        assert!("2009-2006".parse::<PeriodSpec>().is_err());
        assert!("2009".parse::<PeriodSpec>().is_err());
        validate_periods(&PeriodSpec::defaults()).unwrap();
        let overlapping = vec![
            PeriodSpec::span(2000, 2004).unwrap(),
            PeriodSpec::span(2003, 2006).unwrap(),
        ];
        assert!(validate_periods(&overlapping).is_err());
    }

    fn arb_panel() -> impl Strategy<Value = EmploymentPanel> {
        proptest::collection::btree_map((0u8..6, 0u8..3, 0i32..4), (0u64..12, 0u64..12), 1..60)
            .prop_map(|m| {
                EmploymentPanel::new(
                    m.into_iter()
                        .map(|((i, r, y), (d, f))| {
                            rec(&format!("{i:02}"), &format!("R{r}"), 2000 + y, d, f)
                        })
                        .collect(),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn partition_and_label_invariants(panel in arb_panel(), threshold in 0u64..8) {
            let cube = build_presence(&panel, threshold).unwrap();
            for i in 0..cube.industries().len() {
                for r in 0..cube.regions().len() {
                    for y in cube.years() {
                        let p = cube.get(i, r, y);
                        prop_assert!(p.excl_dom as u8 + p.excl_mne as u8 + p.overlap as u8 <= 1);
                        prop_assert!(!p.overlap || (p.dom && p.mne));
                        prop_assert!(!p.excl_dom || (p.dom && !p.mne));
                        let higher = build_presence(&panel, threshold + 1).unwrap().get(i, r, y);
                        prop_assert!(!higher.dom || p.dom);
                        prop_assert!(!higher.mne || p.mne);
                        prop_assert!(!higher.overlap || p.overlap);
                        prop_assert!(!higher.excl_dom || p.excl_dom);
                        prop_assert!(!higher.excl_mne || p.excl_mne);
                    }
                }
            }
            let years = cube.years();
            if years.end() > years.start() {
                let periods = PeriodSpec::yearly(*years.start(), *years.end()).unwrap();
                let t = label_transitions(&cube, &periods).unwrap();
                for row in &t.rows {
                    prop_assert!(!(row.entry && row.exit));
                    prop_assert!(!row.entry || row.in_entry_sample);
                    prop_assert!(!row.exit || row.in_exit_sample);
                    prop_assert!(row.in_entry_sample != row.in_exit_sample);
                }
                let totals: Vec<usize> = [GroupBy::Year, GroupBy::Region, GroupBy::SectorPrefix]
                    .into_iter()
                    .map(|g| entry_counts(&t, &cube, EntryFilter::All, g).unwrap().values().sum())
                    .collect();
                prop_assert!(totals.iter().all(|&s| s == t.entries()));
                let fwd = structural_change_curve(&cube, *years.start(), Direction::Forward).unwrap();
                prop_assert!(fwd[0].1.is_none() || fwd[0].1 == Some(1.0));
            }
        }
    }
}
