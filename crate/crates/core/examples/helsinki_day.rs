//! City day: one commuter's schedule, then both protocols on the
//! working-day preset.
//!
//! Run with `cargo run --release --example helsinki_day [seed]`.

use wfdgm::kernel::scenario_rng;
use wfdgm::mobility::{Position, WorkingDaySchedule};
use wfdgm::{run_one, Overrides, ProtocolKind, RunSpec, ScenarioConfig};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);

    let schedule = WorkingDaySchedule::default();
    let plan = schedule.plan(
        Position::new(500.0, 400.0),
        Position::new(3500.0, 2000.0),
        Position::new(1200.0, 2900.0),
        &mut scenario_rng(seed),
    );
    println!(
        "one commuter, arrives at the office at {:.0} s",
        plan.office_arrival()
    );
    let mut t = 0.0;
    while t <= schedule.day_length_s {
        let p = plan.position_at(t);
        println!(
            "  {:>5.2} h  {:<8} ({:>6.0}, {:>6.0})",
            t / 3600.0,
            format!("{:?}", plan.phase_at(t)),
            p.x,
            p.y
        );
        t += 1800.0;
    }

    let cfg = ScenarioConfig::resolve(
        None,
        &Overrides {
            preset: Some("helsinki-small".into()),
            ..Default::default()
        },
    )
    .expect("preset");
    for protocol in [ProtocolKind::Wfdgm, ProtocolKind::Baseline] {
        let r = run_one(
            &cfg,
            RunSpec {
                protocol,
                t_d: 30.0,
                seed,
            },
        )
        .expect("run");
        let curve: Vec<String> = r
            .diffusion
            .iter()
            .step_by(2)
            .map(|(_, f)| format!("{f:.2}"))
            .collect();
        println!(
            "{protocol:<8} components {}  diffusion hourly {}",
            r.components.count(),
            curve.join(" ")
        );
    }
}
