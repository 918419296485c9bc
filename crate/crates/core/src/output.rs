//! Files written for each run.
//!
//! | file             | columns                                  |
//! |------------------|------------------------------------------|
//! | `diffusion.csv`  | `time_s,mean_fraction`                   |
//! | `components.csv` | `component_id,size`                      |
//! | `ccdf.csv`       | `threshold,fraction`                     |
//! | `battery.csv`    | `node,final_level_or_discharge_time`     |
//! | `summary.json`   | run identity and headline numbers        |
//! | `trace.tsv`      | tab-separated `time_s node event payload` (with `--trace`) |

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::kernel::RunResult;
use crate::metrics::BatteryStats;
use crate::protocol::ProtocolKind;

pub const DIFFUSION_HEADER: &str = "time_s,mean_fraction";
pub const COMPONENTS_HEADER: &str = "component_id,size";
pub const CCDF_HEADER: &str = "threshold,fraction";
pub const BATTERY_HEADER: &str = "node,final_level_or_discharge_time";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub protocol: ProtocolKind,
    pub t_d: f64,
    pub seed: u64,
    pub node_count: usize,
    pub alive_count: usize,
    pub duration_s: f64,
    pub component_count: usize,
    pub largest_fraction: f64,
    pub largest_holds_all_alive: bool,
    pub final_diffusion: Option<f64>,
    /// `final_level`, or `discharge_time` when every node died.
    pub battery_metric: &'static str,
    pub battery: Option<BatteryStats>,
    pub violations: usize,
}

impl Summary {
    pub fn of(r: &RunResult) -> Self {
        Self {
            scenario: r.scenario.clone(),
            protocol: r.protocol,
            t_d: r.t_d,
            seed: r.seed,
            node_count: r.node_count(),
            alive_count: r.alive_count(),
            duration_s: r.duration_s,
            component_count: r.components.count(),
            largest_fraction: r.components.largest_fraction(),
            largest_holds_all_alive: r.largest_holds_all_alive(),
            final_diffusion: r.final_diffusion(),
            battery_metric: if r.all_dead() {
                "discharge_time"
            } else {
                "final_level"
            },
            battery: r.battery_stats(),
            violations: r.violations.len(),
        }
    }
}

fn csv<I, A, B>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = (A, B)>,
    A: std::fmt::Display,
    B: std::fmt::Display,
{
    let mut s = String::new();
    s.push_str(header);
    s.push('\n');
    for (a, b) in rows {
        let _ = writeln!(s, "{a},{b}");
    }
    s
}

pub fn diffusion_csv(r: &RunResult) -> String {
    csv(DIFFUSION_HEADER, r.diffusion.iter().copied())
}

pub fn components_csv(r: &RunResult) -> String {
    csv(
        COMPONENTS_HEADER,
        r.components
            .sets
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.len())),
    )
}

pub fn ccdf_csv(r: &RunResult) -> String {
    csv(CCDF_HEADER, r.ccdf())
}

pub fn battery_csv(r: &RunResult) -> String {
    csv(BATTERY_HEADER, r.battery_values().into_iter().enumerate())
}

pub fn summary_json(r: &RunResult) -> String {
    serde_json::to_string_pretty(&Summary::of(r)).expect("summary serializes") + "\n"
}

/// Writes every output file of one run into `dir`, creating it.
pub fn write_run(dir: &Path, r: &RunResult, config_echo: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("diffusion.csv"), diffusion_csv(r))?;
    fs::write(dir.join("components.csv"), components_csv(r))?;
    fs::write(dir.join("ccdf.csv"), ccdf_csv(r))?;
    fs::write(dir.join("battery.csv"), battery_csv(r))?;
    fs::write(dir.join("summary.json"), summary_json(r))?;
    fs::write(dir.join("config.toml"), config_echo)?;
    if r.trace.is_enabled() {
        let mut w = BufWriter::new(fs::File::create(dir.join("trace.tsv"))?);
        r.trace.write_to(&mut w)?;
        w.flush()?;
    }
    Ok(())
}
