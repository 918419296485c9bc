//! Seated crowd: how each protocol partitions 200 static devices.
//!
//! Run with `cargo run --release --example concert_contrast [seed]`.

use wfdgm::{run_one, Overrides, ProtocolKind, RunSpec, ScenarioConfig};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let cfg = ScenarioConfig::resolve(
        None,
        &Overrides {
            preset: Some("concert-small".into()),
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
        let sizes = r.components.sizes();
        println!(
            "{protocol:<8} components {:>3}  largest {:>5.1}%  diffusion at 30 min {:.3}  at end {:.3}  battery {:.4}",
            sizes.len(),
            100.0 * r.components.largest_fraction(),
            r.diffusion_at(1800.0).unwrap_or(f64::NAN),
            r.final_diffusion().unwrap_or(f64::NAN),
            r.battery_stats().map_or(f64::NAN, |b| b.mean),
        );
        println!(
            "         component sizes {:?}",
            &sizes[..sizes.len().min(12)]
        );
    }
}
