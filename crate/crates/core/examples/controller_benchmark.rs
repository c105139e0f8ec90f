//! Column voting against column enumeration and element voting on 100 links.

use std::path::PathBuf;

use medmatch::experiment::median;
use medmatch::harness::bench_strategies;
use medmatch::scenario::Scenario;

fn main() -> medmatch::error::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/controller_bench.toml");
    let (scenario, _) = Scenario::load(&path)?;
    let bench = bench_strategies(&scenario, 100)?;
    for (name, links) in [
        ("column voting", &bench.column_voting),
        ("column enumeration", &bench.column_enumeration),
        ("element voting", &bench.element_voting),
    ] {
        let gains: Vec<f64> = links.iter().map(|l| l.gain_db).collect();
        let probes = links.iter().map(|l| l.probes).max().unwrap_or(0);
        println!("{name:<20} median gain {:>5.2} dB, {probes} probes", median(&gains));
    }
    Ok(())
}
