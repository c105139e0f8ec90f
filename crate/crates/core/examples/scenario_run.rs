//! Loads a scenario file and runs one harness command, as the CLI does.
//!
//! `cargo run --example scenario_run -- scenarios/water_default.toml links`

use std::path::PathBuf;

use medmatch::harness::{cmd_backscatter, cmd_bench_controller, cmd_links, cmd_match, cmd_sweep, exit_code};
use medmatch::scenario::Scenario;

fn main() {
    let mut args = std::env::args().skip(1);
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| root.join("scenarios/water_default.toml"));
    let command = args.next().unwrap_or_else(|| "match".into());
    let out = std::env::temp_dir().join("medmatch-example");
    let result = Scenario::load(&path).and_then(|(s, hash)| match command.as_str() {
        "match" => cmd_match(&s, &hash, &out),
        "sweep" => cmd_sweep(&s, &hash, &out),
        "links" => cmd_links(&s, &hash, &out, None),
        "backscatter" => cmd_backscatter(&s, &hash, &out, None),
        _ => cmd_bench_controller(&s, &hash, &out, None),
    });
    match result {
        Ok(report) => print!("{}", report.render()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
