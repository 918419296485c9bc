//! Two groups drift into range of each other and one merges into the other.
//!
//! Run with `cargo run --example merge_walkthrough`.

use wfdgm::domain::MessageKind;
use wfdgm::kernel::Scenario;
use wfdgm::mobility::{Mobility, Position};
use wfdgm::protocol::{NodeProtocolState, ProtocolParams};
use wfdgm::trace::TraceKind;
use wfdgm::{NodeId, SimConfig, Simulator};

fn main() {
    // two clusters of five, 300 m apart
    let mut positions = Vec::new();
    for k in 0..10 {
        let x = if k < 5 {
            k as f64
        } else {
            300.0 + (k - 5) as f64
        };
        positions.push(Position::new(x, 0.0));
    }
    let cfg = SimConfig {
        duration_s: 900.0,
        node_count: 10,
        trace: true,
        ..SimConfig::default()
    };
    let params = ProtocolParams::default();
    let scenario = Scenario {
        name: "two clusters".into(),
        positions,
        mobility: Mobility::Static,
    };
    let mut sim = Simulator::new(cfg, scenario, |id, cap, tokens| {
        NodeProtocolState::boot(id, params, cap, tokens)
    })
    .unwrap();

    for _ in 0..300 {
        sim.step();
    }
    println!("t={:>4}: groups {:?}", sim.now(), ids(&sim.groups()));

    // the second cluster walks over
    for k in 5..10u32 {
        sim.set_position(NodeId(k), Position::new(40.0 + k as f64, 0.0));
    }
    let mark = sim.trace().events().len();
    while sim.step() {}
    // the first merge in full; later ones only as a count
    let events = &sim.trace().events()[mark..];
    let first = events
        .iter()
        .find(|e| matches!(e.kind, TraceKind::Disbanded { .. }))
        .map_or(f64::NAN, |e| e.time);
    for e in events.iter().filter(|e| e.time == first) {
        let interesting = match &e.kind {
            TraceKind::Sent { kind, .. } => !matches!(kind, MessageKind::GroupInfo(_)),
            TraceKind::Disbanded { .. }
            | TraceKind::Connected { .. }
            | TraceKind::Blacklisted { .. } => true,
            _ => false,
        };
        if interesting {
            println!("  {e}");
        }
    }
    let merges = events
        .iter()
        .filter(|e| matches!(e.kind, TraceKind::Disbanded { .. }))
        .count();
    println!("{merges} merges in total");
    println!("t={:>4}: groups {:?}", sim.now(), ids(&sim.groups()));
}

fn ids(groups: &[Vec<NodeId>]) -> Vec<Vec<u32>> {
    groups
        .iter()
        .map(|g| g.iter().map(|n| n.0).collect())
        .collect()
}
