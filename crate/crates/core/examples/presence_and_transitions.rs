//! Presence classification, entry/exit labelling and the structural-change
//! curves on a generated panel.

use industry_cohesion::panel::{
    build_presence, entry_counts, label_transitions, structural_change_curve, Direction,
    EntryFilter, GroupBy, PeriodSpec,
};
use industry_cohesion::synth::{generate, SynthConfig};

fn main() -> industry_cohesion::Result<()> {
    let data = generate(&SynthConfig {
        years: 5,
        ..SynthConfig::default()
    })?;
    let cube = build_presence(&data.panel, 5)?;
    let periods = vec![PeriodSpec::span(2010, 2012)?, PeriodSpec::span(2012, 2014)?];
    let table = label_transitions(&cube, &periods)?;
    println!(
        "{} cells, {} entries, {} exits",
        table.rows.len(),
        table.entries(),
        table.exits()
    );

    let by_year = entry_counts(&table, &cube, EntryFilter::All, GroupBy::Year)?;
    let into_mne = entry_counts(&table, &cube, EntryFilter::IntoExclusiveMne, GroupBy::Year)?;
    for (year, n) in &by_year {
        println!(
            "  {year}: {n} entries, {} where only MNEs were present",
            into_mne[year]
        );
    }

    for (direction, anchor) in [(Direction::Forward, 2010), (Direction::Backward, 2014)] {
        println!("{direction:?} from {anchor}:");
        for (year, share) in structural_change_curve(&cube, anchor, direction)? {
            match share {
                Some(s) => println!("  {year}  {s:.3}"),
                None => println!("  {year}  n/a"),
            }
        }
    }
    Ok(())
}
