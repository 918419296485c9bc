//! Runs every (protocol, decision period, seed) combination of a config.

use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::config::{ConfigError, ScenarioConfig};
use crate::kernel::{self, RunResult};
use crate::output;
use crate::protocol::ProtocolKind;
use crate::trace::check_trace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub protocol: ProtocolKind,
    pub t_d: f64,
    pub seed: u64,
}

impl RunSpec {
    /// Output subdirectory name, e.g. `wfdgm_td30_seed1`.
    pub fn dir_name(&self) -> String {
        format!("{}_td{}_seed{}", self.protocol, self.t_d, self.seed)
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dir_name())
    }
}

/// All combinations, protocol-major.
pub fn expand(cfg: &ScenarioConfig) -> Vec<RunSpec> {
    let mut out = Vec::new();
    for &protocol in &cfg.protocols {
        for &t_d in &cfg.t_d {
            for &seed in &cfg.seeds {
                out.push(RunSpec {
                    protocol,
                    t_d,
                    seed,
                });
            }
        }
    }
    out
}

/// Simulates one combination without writing anything. When tracing is
/// on, protocol-level trace violations are appended to the result's.
pub fn run_one(cfg: &ScenarioConfig, spec: RunSpec) -> Result<RunResult, ConfigError> {
    let params = cfg.protocol_params(spec.t_d)?;
    let sim = cfg.sim_config(spec.t_d, spec.seed);
    let scenario = cfg.build_scenario(spec.seed)?;
    let mut result = kernel::run(&sim, spec.protocol, &params, scenario)?;
    if result.trace.is_enabled() {
        let extra = check_trace(result.trace.events(), spec.protocol, params.res_th);
        result.violations.extend(extra);
    }
    Ok(result)
}

#[derive(Debug)]
pub enum RunOutcome {
    Done { dir: PathBuf, violations: usize },
    Failed(String),
}

#[derive(Debug)]
pub struct BatchReport {
    pub runs: Vec<(RunSpec, RunOutcome)>,
}

impl BatchReport {
    pub fn all_ok(&self) -> bool {
        self.runs
            .iter()
            .all(|(_, o)| matches!(o, RunOutcome::Done { .. }))
    }

    pub fn failures(&self) -> impl Iterator<Item = (&RunSpec, &str)> {
        self.runs.iter().filter_map(|(s, o)| match o {
            RunOutcome::Failed(msg) => Some((s, msg.as_str())),
            RunOutcome::Done { .. } => None,
        })
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

fn execute(cfg: &ScenarioConfig, spec: RunSpec, echo: &str) -> RunOutcome {
    let attempt = panic::catch_unwind(AssertUnwindSafe(|| run_one(cfg, spec)));
    let result = match attempt {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => return RunOutcome::Failed(e.to_string()),
        Err(p) => return RunOutcome::Failed(format!("panicked: {}", panic_message(p))),
    };
    let dir = cfg.out_dir.join(spec.dir_name());
    match output::write_run(&dir, &result, echo) {
        Ok(()) => RunOutcome::Done {
            dir,
            violations: result.violations.len(),
        },
        Err(e) => RunOutcome::Failed(format!("writing {}: {e}", dir.display())),
    }
}

/// Executes every combination on up to `jobs` threads. Failed runs are
/// recorded and the rest carry on.
pub fn run_batch(cfg: &ScenarioConfig, jobs: usize) -> BatchReport {
    let specs = expand(cfg);
    let echo = cfg.to_toml_string();
    let _ = std::fs::create_dir_all(&cfg.out_dir);
    let _ = std::fs::write(cfg.out_dir.join("config.toml"), &echo);

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<RunOutcome>>> = specs.iter().map(|_| Mutex::new(None)).collect();
    let workers = jobs.clamp(1, specs.len().max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&spec) = specs.get(k) else { break };
                let outcome = execute(cfg, spec, &echo);
                *slots[k].lock().unwrap_or_else(|e| e.into_inner()) = Some(outcome);
            });
        }
    });
    let runs = specs
        .into_iter()
        .zip(slots)
        .map(|(spec, slot)| {
            let outcome = slot
                .into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .unwrap_or_else(|| RunOutcome::Failed("not executed".into()));
            (spec, outcome)
        })
        .collect();
    BatchReport { runs }
}
