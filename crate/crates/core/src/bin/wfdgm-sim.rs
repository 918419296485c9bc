use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wfdgm::batch::{run_batch, RunOutcome};
use wfdgm::config::{load_config, Overrides, ScenarioConfig};
use wfdgm::protocol::ProtocolKind;

/// Run group-formation simulations and write per-run CSV/JSON outputs.
#[derive(Debug, Parser)]
#[command(name = "wfdgm-sim", version)]
struct Args {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario: concert, comicon, helsinki, or their -small variants.
    #[arg(long)]
    preset: Option<String>,
    /// Protocol(s) to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    protocol: Option<Vec<ProtocolKind>>,
    /// Decision period(s) in seconds, comma separated.
    #[arg(long, value_delimiter = ',')]
    td: Option<Vec<f64>>,
    /// Seed(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write an event trace per run and check it.
    #[arg(long)]
    trace: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        preset: args.preset,
        protocols: args.protocol,
        t_d: args.td,
        seeds: args.seed,
        out_dir: args.out,
        trace: args.trace,
    };
    let cfg = match &args.config {
        Some(path) => load_config(path, &overrides),
        None if overrides.preset.is_some() => ScenarioConfig::resolve(None, &overrides),
        None => {
            eprintln!("error: give --config or --preset");
            return ExitCode::from(2);
        }
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    let report = run_batch(&cfg, args.jobs);
    for (spec, outcome) in &report.runs {
        match outcome {
            RunOutcome::Done { dir, violations: 0 } => {
                println!("ok    {spec} -> {}", dir.display())
            }
            RunOutcome::Done { dir, violations } => {
                println!(
                    "ok    {spec} -> {} ({violations} invariant violations)",
                    dir.display()
                )
            }
            RunOutcome::Failed(msg) => eprintln!("FAIL  {spec}: {msg}"),
        }
    }
    if report.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
