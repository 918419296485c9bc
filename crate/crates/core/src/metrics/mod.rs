//! Run-level measurements.

pub mod diffusion;
pub mod graph;
pub mod reach;

use serde::Serialize;

pub use diffusion::DiffusionState;
pub use graph::{Components, ConnectivityGraph, ContactIntegrator, UnionFind};
pub use reach::{ccdf, Ccdf, ReachabilitySamples};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatteryStats {
    pub mean: f64,
    pub median: f64,
    /// Population variance.
    pub variance: f64,
}

/// Mean, median and variance of `values`; `None` when empty.
pub fn battery_stats(values: &[f64]) -> Option<BatteryStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    // shifting by the minimum keeps identical inputs exact
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = lo + values.iter().map(|v| v - lo).sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    };
    Some(BatteryStats {
        mean,
        median,
        variance,
    })
}
