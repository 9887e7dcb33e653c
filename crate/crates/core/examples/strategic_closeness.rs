//! Weighted and strategic closeness on a toy network where two candidates
//! have the same weighted closeness but very different reachability.

use industry_cohesion::cohesion::{strategic_closeness, weighted_closeness};
use industry_cohesion::relatedness::RelatednessNetwork;

fn main() -> industry_cohesion::Result<()> {
    let nodes = ["A", "a1", "a2", "a3", "B", "b1", "b2", "b3", "x"];
    let edges = [
        ("A", "a1", 0.4),
        ("A", "a2", 0.4),
        ("A", "a3", 0.4),
        ("A", "x", 0.2),
        ("x", "B", 0.2),
        ("B", "b1", 0.4),
        ("B", "b2", 0.4),
        ("B", "b3", 0.4),
        ("b1", "b2", 0.3),
        ("b2", "b3", 0.3),
    ];
    let net = RelatednessNetwork::from_edges(&nodes, edges)?;
    let present: Vec<bool> = nodes.iter().map(|n| n.len() == 2 && n != &"x").collect();

    let wc = weighted_closeness(&net, &present);
    println!("{:>4} {:>8} {:>8} {:>8}", "", "WC", "SC(2)", "SC(3)");
    let sc2 = strategic_closeness(&net, &present, 2);
    let sc3 = strategic_closeness(&net, &present, 3);
    for (k, name) in nodes.iter().enumerate() {
        println!(
            "{name:>4} {:>8.3} {:>8.4} {:>8.4}",
            wc[k], sc2.values[k], sc3.values[k]
        );
    }
    println!(
        "isolated present industries: {}",
        sc2.isolated_present.len()
    );
    Ok(())
}
