use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use industry_cohesion::pipeline::{self, RunConfig, Stage, StageError};
use industry_cohesion::synth::{self, SynthConfig};
use industry_cohesion::Error;

/// Industry-space cohesion and regional entry/exit models.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the relatedness network; writes edges.csv and nodes.csv.
    BuildNetwork(RunArgs),
    /// Label presence, entries and exits; writes transitions.csv and plot tables.
    Presence(RunArgs),
    /// Compute WC/SC cohesion per industry, region and period; writes cohesion.csv.
    Cohesion(RunArgs),
    /// Fit the entry/exit probit grid; writes results.csv.
    Regress(RunArgs),
    /// Descriptive statistics; writes descriptors.csv and correlations.csv.
    Describe(RunArgs),
    /// Run every stage and write all outputs plus manifest.json.
    Pipeline(RunArgs),
    /// Generate a synthetic dataset with a planted entry process.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    flows: Option<PathBuf>,
    #[arg(long)]
    panel: Option<PathBuf>,
    #[arg(long)]
    crosswalk: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated periods such as 2006-2009,2010-2014.
    #[arg(long, value_delimiter = ',')]
    periods: Option<Vec<String>>,
    /// Presence threshold: strictly more employees than this.
    #[arg(long)]
    threshold: Option<u64>,
    /// Random-walk length for strategic closeness.
    #[arg(long)]
    steps: Option<usize>,
    /// Cluster robust standard errors by region.
    #[arg(long)]
    cluster_by_region: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML generator configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "synth")]
    out: PathBuf,
}

fn run_config(args: RunArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let need = |p: Option<PathBuf>, flag: &str| {
                p.clone().ok_or_else(|| {
                    Error::Validation(format!("--{flag} is required without --config"))
                })
            };
            RunConfig::new(
                need(args.flows.clone(), "flows")?,
                need(args.panel.clone(), "panel")?,
                need(args.crosswalk.clone(), "crosswalk")?,
            )
        }
    };
    if let Some(p) = args.flows {
        cfg.flows = p;
    }
    if let Some(p) = args.panel {
        cfg.panel = p;
    }
    if let Some(p) = args.crosswalk {
        cfg.crosswalk = p;
    }
    if let Some(p) = args.out {
        cfg.output_dir = p;
    }
    if let Some(p) = args.periods {
        cfg.settings.periods = p;
    }
    if let Some(t) = args.threshold {
        cfg.settings.threshold = t;
    }
    if let Some(s) = args.steps {
        cfg.settings.steps = s;
    }
    if args.cluster_by_region {
        cfg.settings.cluster_by_region = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_synth(args: SynthArgs) -> Result<(), Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            toml::from_str::<SynthConfig>(&text).map_err(|e| Error::Parse {
                path: path.clone(),
                line: e
                    .span()
                    .map_or(0, |s| text[..s.start].lines().count().max(1) as u64),
                message: e.message().to_string(),
            })?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    if let Some(s) = args.steps {
        cfg.steps = s;
    }
    let out = synth::generate(&cfg)?;
    synth::write_synth(&out, &args.out)?;
    let run = pipeline::synth_run_config(&cfg)?;
    let path = args.out.join("run.toml");
    std::fs::write(&path, run).map_err(|e| Error::Io { path, source: e })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let with_config = |args: RunArgs, f: fn(&RunConfig) -> Result<(), StageError>| {
        run_config(args)
            .map_err(|source| StageError {
                stage: Stage::Config,
                source,
            })
            .and_then(|cfg| f(&cfg))
    };
    let result = match cli.command {
        Command::BuildNetwork(a) => with_config(a, pipeline::cmd_build_network),
        Command::Presence(a) => with_config(a, pipeline::cmd_presence),
        Command::Cohesion(a) => with_config(a, pipeline::cmd_cohesion),
        Command::Regress(a) => with_config(a, pipeline::cmd_regress),
        Command::Describe(a) => with_config(a, pipeline::cmd_describe),
        Command::Pipeline(a) => with_config(a, |cfg| pipeline::run_pipeline(cfg).map(|_| ())),
        Command::Synth(a) => run_synth(a).map_err(|source| StageError {
            stage: Stage::Output,
            source,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
