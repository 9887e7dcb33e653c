//! End-to-end runs: configuration, the stage functions behind each CLI
//! subcommand, and the run manifest.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{
    analysis_panel, describe, ownership_summary, pairwise_correlations, write_correlations,
    write_descriptors, CorrelationRow, DescriptorRow,
};
use crate::cohesion::{cohesion_panel, CohesionTable, DEFAULT_STEPS};
use crate::econometrics::grid::{grid_specs, run_specs, write_results};
use crate::econometrics::{Family, GridCell, GridOptions};
use crate::error::{Error, Result};
use crate::ingest::{
    load_crosswalk, load_flows, load_panel, Crosswalk, EmploymentPanel, FlowMatrix,
};
use crate::panel::{
    build_presence_over, entry_counts, label_transitions, structural_change_curve,
    validate_periods, write_counts, write_curve, Direction, EntryFilter, GroupBy, PeriodSpec,
    PresenceCube, TransitionTable, DEFAULT_THRESHOLD,
};
use crate::relatedness::{
    build_relatedness, convert_scheme, export_network, NetworkExport, RelatednessNetwork,
};

pub const EDGES_FILE: &str = "edges.csv";
pub const NODES_FILE: &str = "nodes.csv";
pub const TRANSITIONS_FILE: &str = "transitions.csv";
pub const COHESION_FILE: &str = "cohesion.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const DESCRIPTORS_FILE: &str = "descriptors.csv";
pub const CORRELATIONS_FILE: &str = "correlations.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// The seven tables a full run writes, in order.
pub const OUTPUT_FILES: [&str; 7] = [
    EDGES_FILE,
    NODES_FILE,
    TRANSITIONS_FILE,
    COHESION_FILE,
    RESULTS_FILE,
    DESCRIPTORS_FILE,
    CORRELATIONS_FILE,
];

/// Settings that shape the analysis (everything but file locations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Period labels such as `2006-2009`.
    pub periods: Vec<String>,
    pub threshold: u64,
    pub steps: usize,
    pub cluster_by_region: bool,
    pub industry_fe: bool,
    pub region_fe: bool,
    pub families: Vec<Family>,
    /// Year of the MNE shares in nodes.csv; the panel's last year when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network_year: Option<i32>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            periods: PeriodSpec::defaults()
                .iter()
                .map(|p| p.name.clone())
                .collect(),
            threshold: DEFAULT_THRESHOLD,
            steps: DEFAULT_STEPS,
            cluster_by_region: false,
            industry_fe: true,
            region_fe: true,
            families: Family::ALL.to_vec(),
            network_year: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub flows: PathBuf,
    pub panel: PathBuf,
    pub crosswalk: PathBuf,
    pub output_dir: PathBuf,
    pub settings: Settings,
}

/// On-disk form of [`RunConfig`]: a TOML file whose relative paths resolve
/// against the file's directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    flows: Option<PathBuf>,
    panel: Option<PathBuf>,
    crosswalk: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    periods: Option<Vec<String>>,
    threshold: Option<u64>,
    steps: Option<usize>,
    cluster_by_region: Option<bool>,
    industry_fe: Option<bool>,
    region_fe: Option<bool>,
    families: Option<Vec<Family>>,
    network_year: Option<i32>,
}

impl RunConfig {
    pub fn new(
        flows: impl Into<PathBuf>,
        panel: impl Into<PathBuf>,
        crosswalk: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            flows: flows.into(),
            panel: panel.into(),
            crosswalk: crosswalk.into(),
            output_dir: PathBuf::from("out"),
            settings: Settings::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses TOML text; `origin` names the file and anchors relative paths.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let raw: ConfigFile = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start].lines().count().max(1) as u64);
            Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })?;
        let base = origin.parent().unwrap_or(Path::new(""));
        let resolve = |p: Option<PathBuf>, key: &str| -> Result<PathBuf> {
            let p = p.ok_or_else(|| {
                Error::Validation(format!("{}: missing `{key}`", origin.display()))
            })?;
            Ok(if p.is_absolute() { p } else { base.join(p) })
        };
        let d = Settings::default();
        let cfg = RunConfig {
            flows: resolve(raw.flows, "flows")?,
            panel: resolve(raw.panel, "panel")?,
            crosswalk: resolve(raw.crosswalk, "crosswalk")?,
            output_dir: resolve(raw.output_dir.or(Some(PathBuf::from("out"))), "output_dir")?,
            settings: Settings {
                periods: raw.periods.unwrap_or(d.periods),
                threshold: raw.threshold.unwrap_or(d.threshold),
                steps: raw.steps.unwrap_or(d.steps),
                cluster_by_region: raw.cluster_by_region.unwrap_or(d.cluster_by_region),
                industry_fe: raw.industry_fe.unwrap_or(d.industry_fe),
                region_fe: raw.region_fe.unwrap_or(d.region_fe),
                families: raw.families.unwrap_or(d.families),
                network_year: raw.network_year,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn periods(&self) -> Result<Vec<PeriodSpec>> {
        let periods = self
            .settings
            .periods
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<PeriodSpec>>>()?;
        validate_periods(&periods)?;
        Ok(periods)
    }

    pub fn validate(&self) -> Result<()> {
        self.periods()?;
        if self.settings.families.is_empty() {
            return Err(Error::Validation(
                "at least one measure family is required".into(),
            ));
        }
        Ok(())
    }

    pub fn grid_options(&self) -> GridOptions {
        GridOptions {
            industry_fe: self.settings.industry_fe,
            region_fe: self.settings.region_fe,
            cluster_by_region: self.settings.cluster_by_region,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Relatedness,
    Panel,
    Cohesion,
    Econometrics,
    Analytics,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Relatedness => "relatedness",
            Stage::Panel => "panel",
            Stage::Cohesion => "cohesion",
            Stage::Econometrics => "econometrics",
            Stage::Analytics => "analytics",
            Stage::Output => "output",
        })
    }
}

/// An error tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

/// Attaches a stage tag to errors.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

pub struct Inputs {
    pub flows: FlowMatrix,
    pub panel: EmploymentPanel,
    pub crosswalk: Crosswalk,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let flows = load_flows(&cfg.flows)?;
    let crosswalk = load_crosswalk(&cfg.crosswalk)?;
    crosswalk.check_coverage(&flows)?;
    Ok(Inputs {
        flows,
        panel: load_panel(&cfg.panel)?,
        crosswalk,
    })
}

/// Converts the flows to the target scheme, builds the network and its export.
pub fn network_stage(
    cfg: &RunConfig,
    inputs: &Inputs,
) -> Result<(RelatednessNetwork, NetworkExport)> {
    let converted = convert_scheme(&inputs.flows, &inputs.crosswalk)?;
    let net = build_relatedness(&converted)?;
    let year = match cfg.settings.network_year {
        Some(y) => y,
        None => *inputs
            .panel
            .years()
            .ok_or_else(|| Error::Validation("the employment panel is empty".into()))?
            .end(),
    };
    let export = export_network(&net, &inputs.panel, year)?;
    Ok((net, export))
}

pub fn presence_stage(
    cfg: &RunConfig,
    panel: &EmploymentPanel,
    net: &RelatednessNetwork,
) -> Result<(PresenceCube, TransitionTable)> {
    let cube = build_presence_over(panel, cfg.settings.threshold, net.codes())?;
    let table = label_transitions(&cube, &cfg.periods()?)?;
    Ok((cube, table))
}

pub fn cohesion_stage(
    cfg: &RunConfig,
    net: &RelatednessNetwork,
    cube: &PresenceCube,
) -> Result<CohesionTable> {
    cohesion_panel(net, cube, &cfg.periods()?, cfg.settings.steps)
}

/// Fits the configured families of the specification grid.
pub fn regression_stage(
    cfg: &RunConfig,
    table: &TransitionTable,
    cohesion: &CohesionTable,
    cube: &PresenceCube,
) -> Result<Vec<GridCell>> {
    let specs = grid_specs(&cfg.periods()?, cfg.grid_options())
        .into_iter()
        .filter(|(family, _, _)| cfg.settings.families.contains(family))
        .collect();
    Ok(run_specs(table, cohesion, cube, specs))
}

pub fn analytics_stage(
    cfg: &RunConfig,
    panel: &EmploymentPanel,
    table: &TransitionTable,
    cohesion: &CohesionTable,
    cube: &PresenceCube,
) -> Result<(Vec<DescriptorRow>, Vec<CorrelationRow>)> {
    let analysis = analysis_panel(table, cohesion, cube)?;
    let mut descriptors = describe(&analysis.columns());
    descriptors.extend(ownership_summary(panel, cube, &cfg.periods()?));
    let correlations = pairwise_correlations(&analysis)?;
    Ok((descriptors, correlations))
}

/// Writes `name` under `dir` through `body`.
pub fn write_output<F>(dir: &Path, name: &str, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
{
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

/// Run record: settings, input and output digests and tool version. It holds
/// no timestamps or absolute paths so identical runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub settings: Settings,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn digest(role: &str, path: &Path) -> Result<FileDigest> {
    let name = path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    Ok(FileDigest {
        file: format!("{role}:{name}"),
        sha256: sha256_file(path)?,
    })
}

/// Writes the presence plotting tables: structural change forward from the
/// first year and backward from the last, and entries into MNE-only cells by
/// year, region and sector.
pub fn write_presence_extras(
    dir: &Path,
    cube: &PresenceCube,
    table: &TransitionTable,
) -> Result<()> {
    let years = cube.years();
    let forward = structural_change_curve(cube, *years.start(), Direction::Forward)?;
    let backward = structural_change_curve(cube, *years.end(), Direction::Backward)?;
    write_output(dir, "structural_change_forward.csv", |w| {
        write_curve(&forward, w)
    })?;
    write_output(dir, "structural_change_backward.csv", |w| {
        write_curve(&backward, w)
    })?;
    for (group, name, header) in [
        (GroupBy::Year, "entries_by_year.csv", "year"),
        (GroupBy::Region, "entries_by_region.csv", "region"),
        (GroupBy::SectorPrefix, "entries_by_sector.csv", "sector"),
    ] {
        let counts = entry_counts(table, cube, EntryFilter::IntoExclusiveMne, group)?;
        write_output(dir, name, |w| write_counts(&counts, header, w))?;
    }
    Ok(())
}

/// Runs every stage and writes the seven tables plus `manifest.json` under
/// the output directory. Fails if no specification in the grid could be
/// estimated.
pub fn run_pipeline(cfg: &RunConfig) -> std::result::Result<Manifest, StageError> {
    cfg.validate().at(Stage::Config)?;
    let dir = cfg.output_dir.as_path();
    let inputs = load_inputs(cfg).at(Stage::Ingest)?;

    let (net, export) = network_stage(cfg, &inputs).at(Stage::Relatedness)?;
    write_output(dir, EDGES_FILE, |w| export.write_edges(w)).at(Stage::Output)?;
    write_output(dir, NODES_FILE, |w| export.write_nodes(w)).at(Stage::Output)?;

    let (cube, table) = presence_stage(cfg, &inputs.panel, &net).at(Stage::Panel)?;
    write_output(dir, TRANSITIONS_FILE, |w| table.write_csv(w)).at(Stage::Output)?;

    let cohesion = cohesion_stage(cfg, &net, &cube).at(Stage::Cohesion)?;
    write_output(dir, COHESION_FILE, |w| cohesion.write_csv(w)).at(Stage::Output)?;

    let cells = regression_stage(cfg, &table, &cohesion, &cube).at(Stage::Econometrics)?;
    write_output(dir, RESULTS_FILE, |w| write_results(&cells, w)).at(Stage::Output)?;
    if !cells.iter().any(|c| c.result.is_ok()) {
        return Err(Error::Estimation(
            "no specification in the grid could be estimated".into(),
        ))
        .at(Stage::Econometrics);
    }

    let (descriptors, correlations) =
        analytics_stage(cfg, &inputs.panel, &table, &cohesion, &cube).at(Stage::Analytics)?;
    write_output(dir, DESCRIPTORS_FILE, |w| {
        write_descriptors(&descriptors, w)
    })
    .at(Stage::Output)?;
    write_output(dir, CORRELATIONS_FILE, |w| {
        write_correlations(&correlations, w)
    })
    .at(Stage::Output)?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        settings: cfg.settings.clone(),
        inputs: vec![
            digest("flows", &cfg.flows).at(Stage::Output)?,
            digest("panel", &cfg.panel).at(Stage::Output)?,
            digest("crosswalk", &cfg.crosswalk).at(Stage::Output)?,
        ],
        outputs: OUTPUT_FILES
            .iter()
            .map(|name| {
                Ok(FileDigest {
                    file: name.to_string(),
                    sha256: sha256_file(&dir.join(name))?,
                })
            })
            .collect::<Result<_>>()
            .at(Stage::Output)?,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    write_output(dir, MANIFEST_FILE, |w| {
        w.write_all(json.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| Error::io(dir.join(MANIFEST_FILE), e))
    })
    .at(Stage::Output)?;
    Ok(manifest)
}

type StageResult<T> = std::result::Result<T, StageError>;

struct Built {
    inputs: Inputs,
    net: RelatednessNetwork,
    export: NetworkExport,
}

fn build_through_network(cfg: &RunConfig) -> StageResult<Built> {
    cfg.validate().at(Stage::Config)?;
    let inputs = load_inputs(cfg).at(Stage::Ingest)?;
    let (net, export) = network_stage(cfg, &inputs).at(Stage::Relatedness)?;
    Ok(Built {
        inputs,
        net,
        export,
    })
}

/// `build-network`: edges.csv and nodes.csv.
pub fn cmd_build_network(cfg: &RunConfig) -> StageResult<()> {
    let b = build_through_network(cfg)?;
    let dir = cfg.output_dir.as_path();
    write_output(dir, EDGES_FILE, |w| b.export.write_edges(w)).at(Stage::Output)?;
    write_output(dir, NODES_FILE, |w| b.export.write_nodes(w)).at(Stage::Output)
}

/// `presence`: transitions.csv plus the structural-change and entry-count tables.
pub fn cmd_presence(cfg: &RunConfig) -> StageResult<()> {
    let b = build_through_network(cfg)?;
    let (cube, table) = presence_stage(cfg, &b.inputs.panel, &b.net).at(Stage::Panel)?;
    let dir = cfg.output_dir.as_path();
    write_output(dir, TRANSITIONS_FILE, |w| table.write_csv(w)).at(Stage::Output)?;
    write_presence_extras(dir, &cube, &table).at(Stage::Output)
}

/// `cohesion`: cohesion.csv.
pub fn cmd_cohesion(cfg: &RunConfig) -> StageResult<()> {
    let b = build_through_network(cfg)?;
    let (cube, _) = presence_stage(cfg, &b.inputs.panel, &b.net).at(Stage::Panel)?;
    let cohesion = cohesion_stage(cfg, &b.net, &cube).at(Stage::Cohesion)?;
    write_output(&cfg.output_dir, COHESION_FILE, |w| cohesion.write_csv(w)).at(Stage::Output)
}

/// `regress`: results.csv. Fails when no specification could be estimated.
pub fn cmd_regress(cfg: &RunConfig) -> StageResult<()> {
    let b = build_through_network(cfg)?;
    let (cube, table) = presence_stage(cfg, &b.inputs.panel, &b.net).at(Stage::Panel)?;
    let cohesion = cohesion_stage(cfg, &b.net, &cube).at(Stage::Cohesion)?;
    let cells = regression_stage(cfg, &table, &cohesion, &cube).at(Stage::Econometrics)?;
    write_output(&cfg.output_dir, RESULTS_FILE, |w| write_results(&cells, w)).at(Stage::Output)?;
    if cells.iter().any(|c| c.result.is_ok()) {
        Ok(())
    } else {
        Err(Error::Estimation(
            "no specification in the grid could be estimated".into(),
        ))
        .at(Stage::Econometrics)
    }
}

/// `describe`: descriptors.csv and correlations.csv.
pub fn cmd_describe(cfg: &RunConfig) -> StageResult<()> {
    let b = build_through_network(cfg)?;
    let (cube, table) = presence_stage(cfg, &b.inputs.panel, &b.net).at(Stage::Panel)?;
    let cohesion = cohesion_stage(cfg, &b.net, &cube).at(Stage::Cohesion)?;
    let (descriptors, correlations) =
        analytics_stage(cfg, &b.inputs.panel, &table, &cohesion, &cube).at(Stage::Analytics)?;
    let dir = cfg.output_dir.as_path();
    write_output(dir, DESCRIPTORS_FILE, |w| {
        write_descriptors(&descriptors, w)
    })
    .at(Stage::Output)?;
    write_output(dir, CORRELATIONS_FILE, |w| {
        write_correlations(&correlations, w)
    })
    .at(Stage::Output)
}

/// Writes a run configuration for synthetic inputs in `dir`: yearly periods
/// over the generated years and the generator's threshold and steps.
pub fn synth_run_config(cfg: &crate::synth::SynthConfig) -> Result<String> {
    let last = cfg.first_year + cfg.years as i32 - 1;
    let periods: Vec<String> = PeriodSpec::yearly(cfg.first_year, last)?
        .into_iter()
        .map(|p| p.name)
        .collect();
    let quoted: Vec<String> = periods.iter().map(|p| format!("\"{p}\"")).collect();
    Ok(format!(
        "flows = \"{}\"\npanel = \"{}\"\ncrosswalk = \"{}\"\noutput_dir = \"out\"\nperiods = [{}]\nthreshold = {}\nsteps = {}\n",
        crate::synth::FLOWS_FILE,
        crate::synth::PANEL_FILE,
        crate::synth::CROSSWALK_FILE,
        quoted.join(", "),
        cfg.threshold,
        cfg.steps
    ))
}
