//! Connectivity graph, components and the pairwise connection-probability
//! CCDF of one run.
//!
//! Run with `cargo run --release --example connectivity_analysis`.

use wfdgm::{run_one, Overrides, ProtocolKind, RunSpec, ScenarioConfig};

fn main() {
    let mut cfg = ScenarioConfig::resolve(
        None,
        &Overrides {
            preset: Some("comicon-small".into()),
            ..Default::default()
        },
    )
    .expect("preset");
    cfg.duration_s = 3600.0;
    for protocol in [ProtocolKind::Wfdgm, ProtocolKind::Baseline] {
        let r = run_one(
            &cfg,
            RunSpec {
                protocol,
                t_d: 30.0,
                seed: 1,
            },
        )
        .expect("run");
        let g = &r.graph;
        let heaviest = g.edges().map(|(_, _, w)| w).fold(0.0, f64::max);
        println!(
            "{protocol}: {} edges, heaviest {heaviest:.0} s, {} components",
            g.edge_count(),
            r.components.count()
        );
        let probabilities = r.reachability.probabilities();
        let ever = probabilities.iter().filter(|&&p| p > 0.0).count();
        println!(
            "  {} of {} pairs ever shared a group",
            ever,
            probabilities.len()
        );
        for (x, f) in r.ccdf().into_iter().step_by(10) {
            println!("  P(connection probability >= {x:.1}) = {f:.4}");
        }
    }
}
