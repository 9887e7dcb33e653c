//! Descriptive statistics and pairwise correlations for the bundled fixture.

use industry_cohesion::analytics::{analysis_panel, describe, pairwise_correlations};
use industry_cohesion::pipeline::{
    cohesion_stage, load_inputs, network_stage, presence_stage, RunConfig,
};

fn main() -> industry_cohesion::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synth/run.toml");
    let cfg = RunConfig::load(path)?;
    let inputs = load_inputs(&cfg)?;
    let (net, _) = network_stage(&cfg, &inputs)?;
    let (cube, table) = presence_stage(&cfg, &inputs.panel, &net)?;
    let cohesion = cohesion_stage(&cfg, &net, &cube)?;
    let panel = analysis_panel(&table, &cohesion, &cube)?;

    println!(
        "{:<14} {:<7} {:>6} {:>9} {:>9}",
        "variable", "sample", "n", "mean", "sd"
    );
    for row in describe(&panel.columns()) {
        println!(
            "{:<14} {:<7} {:>6} {:>9.4} {:>9.4}",
            row.variable, row.sample, row.n, row.mean, row.sd
        );
    }

    println!();
    for c in pairwise_correlations(&panel)? {
        if c.var_a == "entry" && c.var_b.starts_with("wc_") {
            println!(
                "corr(entry, {:<11}) = {:>7.4} on {} rows",
                c.var_b,
                c.r.unwrap_or(f64::NAN),
                c.n
            );
        }
    }
    Ok(())
}
