use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use medmatch::error::Error;
use medmatch::harness::{cmd_backscatter, cmd_bench_controller, cmd_links, cmd_match, cmd_sweep, exit_code};
use medmatch::scenario::Scenario;

#[derive(Parser)]
#[command(version, about = "Cascade impedance matching and surface controller simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Number of links (links, backscatter, bench-controller).
    #[arg(long, global = true)]
    links: Option<usize>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Best admittance and voltage, reflection spectra.
    Match,
    /// Through-power heatmaps.
    Sweep,
    /// Controller runs over seeded one-way links.
    Links,
    /// Controller runs over reciprocal backscatter links.
    Backscatter,
    /// Column voting vs enumeration vs element voting.
    BenchController,
}

fn run(cli: &Cli) -> Result<String, Error> {
    if let Some(threads) = cli.parallel {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("--parallel: {e}")))?;
    }
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| Error::Config("--scenario is required".into()))?;
    let (mut scenario, hash) = Scenario::load(path)?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;
    let report = match cli.command {
        Command::Match => cmd_match(&scenario, &hash, &cli.out)?,
        Command::Sweep => cmd_sweep(&scenario, &hash, &cli.out)?,
        Command::Links => cmd_links(&scenario, &hash, &cli.out, cli.links)?,
        Command::Backscatter => cmd_backscatter(&scenario, &hash, &cli.out, cli.links)?,
        Command::BenchController => cmd_bench_controller(&scenario, &hash, &cli.out, cli.links)?,
    };
    let text = report.render();
    std::fs::write(cli.out.join("summary.txt"), &text)?;
    Ok(text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
