//! Builds a skill-relatedness network from a small labour-flow matrix and
//! shows how a concordance maps it onto another classification.

use industry_cohesion::ingest::{Crosswalk, FlowMatrix, IndustryCode, Scheme};
use industry_cohesion::relatedness::{build_relatedness, convert_scheme, mobility_ratio};
use nalgebra::DMatrix;

fn main() -> industry_cohesion::Result<()> {
    let codes: Vec<IndustryCode> = ["1011", "1012", "2410", "2420", "6201"]
        .iter()
        .map(|&c| c.into())
        .collect();
    #[rustfmt::skip]
    let counts = DMatrix::from_row_slice(5, 5, &[
        0., 40., 3., 2., 1.,
        35., 0., 2., 4., 0.,
        2., 3., 0., 50., 6.,
        1., 2., 45., 0., 5.,
        3., 1., 4., 6., 0.,
    ]);
    let flows = FlowMatrix::new(Scheme::Source, codes, counts)?;

    let ratio = mobility_ratio(&flows)?;
    println!("observed / expected flows:\n{ratio:.3}");

    let net = build_relatedness(&flows)?;
    println!("{} edges:", net.edge_count());
    for (i, j, w) in net.edges() {
        println!("  {} - {}  {w:.4}", net.codes()[i], net.codes()[j]);
    }

    // Two food codes collapse into one target; the steel codes are split.
    let xwalk = Crosswalk::new([
        ("1011".into(), "C10".into()),
        ("1012".into(), "C10".into()),
        ("2410".into(), "C24a".into()),
        ("2420".into(), "C24a".into()),
        ("2420".into(), "C24b".into()),
        ("6201".into(), "J62".into()),
    ]);
    let target = convert_scheme(&flows, &xwalk)?;
    let target_net = build_relatedness(&target)?;
    println!(
        "after conversion: {} industries, {} edges",
        target_net.len(),
        target_net.edge_count()
    );
    Ok(())
}
