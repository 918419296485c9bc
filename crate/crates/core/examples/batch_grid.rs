//! Runs a small protocol x decision period x seed grid and writes every
//! output file, as the command-line tool does.
//!
//! Run with `cargo run --release --example batch_grid [out_dir]`.

use wfdgm::batch::RunOutcome;
use wfdgm::{run_batch, Overrides, ScenarioConfig};

const CONFIG: &str = r#"
preset = "comicon-small"
node_count = 60
duration_s = 1800
protocols = ["wfdgm", "baseline"]
t_d = [5, 30]
seeds = [1, 2]
"#;

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "grid-out".to_string());
    let mut cfg =
        ScenarioConfig::from_toml_str(CONFIG, &Overrides::default()).expect("valid config");
    cfg.out_dir = out.into();
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = run_batch(&cfg, jobs);
    for (spec, outcome) in &report.runs {
        match outcome {
            RunOutcome::Done { dir, .. } => println!("{spec:<24} -> {}", dir.display()),
            RunOutcome::Failed(e) => println!("{spec:<24} failed: {e}"),
        }
    }
    println!("{} runs, all ok: {}", report.runs.len(), report.all_ok());
}
