//! Feeds a changing neighbourhood into the stability index window by window.
//!
//! Run with `cargo run --example stability_index`.

use wfdgm::context::{jaccard, NeighborSet, StabilityState, StabilityWeights};
use wfdgm::NodeId;

fn set(ids: &[u32]) -> NeighborSet {
    ids.iter().map(|&i| NodeId(i)).collect()
}

fn main() {
    let mut st = StabilityState::new(StabilityWeights::default());
    st.seed(&set(&[1, 2, 3, 4]));

    // each window lists the neighbourhoods seen during one period
    let windows: [&[&[u32]]; 6] = [
        &[],
        &[&[1, 2, 3, 4, 5]],
        &[&[2, 3, 4, 5], &[2, 3, 5, 6], &[5, 6, 7]],
        &[&[8, 9], &[10]],
        &[],
        &[],
    ];
    for (k, window) in windows.iter().enumerate() {
        for ids in window.iter() {
            let next = set(ids);
            let j = jaccard(st.prev_neighbors(), &next);
            println!(
                "  change {:?} -> {ids:?}: J = {j:.3}",
                st.prev_neighbors().iter().map(|n| n.0).collect::<Vec<_>>()
            );
            st.on_neighbors_changed(&next);
        }
        let mean = st.window_mean();
        let changes = st.pending_changes();
        println!(
            "window {k}: {changes} changes, mean J {mean:.3}, index {:.4}",
            st.update()
        );
    }
}
