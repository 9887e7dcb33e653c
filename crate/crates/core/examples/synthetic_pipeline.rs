//! Generates a dataset with a planted entry effect, runs every stage and
//! prints the wc_overlap estimates from the grid.

use industry_cohesion::pipeline::{run_pipeline, synth_run_config, RunConfig};
use industry_cohesion::synth::{generate, write_synth, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("industry-cohesion-example");
    let config = SynthConfig {
        years: 3,
        ..SynthConfig::default()
    };
    let data = generate(&config)?;
    write_synth(&data, &dir)?;
    println!("realised entries per year: {:?}", data.truth.entries);

    let cfg = RunConfig::parse(&synth_run_config(&config)?, &dir.join("run.toml"))?;
    let manifest = run_pipeline(&cfg)?;
    for out in &manifest.outputs {
        println!("{:<18} {}", out.file, &out.sha256[..16]);
    }

    let mut reader = csv::Reader::from_path(cfg.output_dir.join("results.csv"))?;
    for record in reader.records() {
        let r = record?;
        if &r[0] == "entry" && &r[4] == "wc_overlap" {
            println!(
                "{} {} {}: {} (se {}) {}",
                &r[1], &r[2], &r[3], &r[5], &r[6], &r[8]
            );
        }
    }
    println!("outputs in {}", cfg.output_dir.display());
    Ok(())
}
