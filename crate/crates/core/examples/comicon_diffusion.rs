//! Convention floor: diffusion curves of both protocols for several
//! decision periods.
//!
//! Run with `cargo run --release --example comicon_diffusion [seed]`.

use wfdgm::{run_one, Overrides, ProtocolKind, RunSpec, ScenarioConfig};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let cfg = ScenarioConfig::resolve(
        None,
        &Overrides {
            preset: Some("comicon-small".into()),
            ..Default::default()
        },
    )
    .expect("preset");
    for t_d in [5.0, 30.0, 60.0] {
        for protocol in [ProtocolKind::Wfdgm, ProtocolKind::Baseline] {
            let r = run_one(
                &cfg,
                RunSpec {
                    protocol,
                    t_d,
                    seed,
                },
            )
            .expect("run");
            let curve: Vec<String> = r
                .diffusion
                .iter()
                .map(|(t, f)| format!("{:.0}m:{f:.3}", t / 60.0))
                .collect();
            let reach = r
                .time_to_reach(0.95)
                .map_or("never".to_string(), |t| format!("{:.0} min", t / 60.0));
            println!(
                "T_D={t_d:<3} {protocol:<8} {}  95% at {reach}",
                curve.join(" ")
            );
        }
    }
}
