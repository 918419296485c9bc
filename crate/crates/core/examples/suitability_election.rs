//! Scores a handful of devices and shows which one becomes group owner.
//!
//! Run with `cargo run --example suitability_election`.

use wfdgm::context::{
    best_candidate, suitability, ContextSnapshot, NormalizationParams, SuitabilityWeights,
};
use wfdgm::domain::{Blacklist, GroupRecord, ServiceRecord, TokenSource};
use wfdgm::NodeId;

fn main() {
    let weights = SuitabilityWeights::default();
    let norm = NormalizationParams::default();
    let mut tokens = TokenSource::new();

    // (battery, peers in range, free slots, stability)
    let devices = [
        (0.95, 12, 15, 0.90),
        (0.40, 20, 15, 0.95),
        (0.80, 6, 4, 0.30),
        (0.99, 3, 10, 1.00),
    ];
    let mut records = Vec::new();
    for (i, &(resources, peers, free_slots, stability)) in devices.iter().enumerate() {
        let cs = ContextSnapshot {
            resources,
            peers,
            free_slots,
            stability,
        };
        let s = suitability(&cs, &weights, &norm);
        println!("node {i}: battery {resources:.2} peers {peers:2} slots {free_slots:2} stability {stability:.2} -> s = {s:.4}");
        let group = GroupRecord::new(NodeId(i as u32), free_slots.max(4), &mut tokens).unwrap();
        records.push(ServiceRecord::owner(&group, s));
    }

    let mut bl = Blacklist::new();
    for me in &records {
        let winner = best_candidate(&records, me, &bl, 0.0);
        println!("node {} elects {}", me.node.0, winner.0);
    }

    // a node that just left the winner will not pick it again for a while
    let winner = best_candidate(&records, &records[2], &bl, 0.0);
    bl.add(winner, 0.0, 60.0);
    let fallback = best_candidate(&records, &records[2], &bl, 10.0);
    println!("node 2 with {} blacklisted elects {}", winner.0, fallback.0);
    println!(
        "after the hold expires: {}",
        best_candidate(&records, &records[2], &bl, 61.0).0
    );
}
