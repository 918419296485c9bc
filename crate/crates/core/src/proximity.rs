//! Who can hear whom: closed-ball radio range over live nodes.

use std::collections::HashMap;

use crate::context::NeighborSet;
use crate::domain::NodeId;
use crate::mobility::Position;

/// All nodes within `range` of `node`, excluding itself and dead nodes.
/// Quadratic reference implementation.
pub fn neighbors_of(
    node: NodeId,
    positions: &[Position],
    alive: &[bool],
    range: f64,
) -> NeighborSet {
    let me = positions[node.index()];
    let r2 = range * range;
    (0..positions.len())
        .filter(|&j| j != node.index() && alive[j] && positions[j].distance_sq(&me) <= r2)
        .map(|j| NodeId(j as u32))
        .collect()
}

/// Bucketed neighbour search. Reuses its buffers between calls.
#[derive(Debug, Clone)]
pub struct ProximityIndex {
    range: f64,
    cells: HashMap<(i64, i64), Vec<u32>>,
}

impl ProximityIndex {
    pub fn new(range: f64) -> Self {
        Self {
            range,
            cells: HashMap::new(),
        }
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    fn cell_of(&self, p: &Position) -> (i64, i64) {
        (
            (p.x / self.range).floor() as i64,
            (p.y / self.range).floor() as i64,
        )
    }

    /// Fills `out[i]` with the sorted neighbours of node `i`. Dead nodes get
    /// an empty set and never appear in anyone else's.
    pub fn rebuild(&mut self, positions: &[Position], alive: &[bool], out: &mut [NeighborSet]) {
        assert_eq!(positions.len(), out.len());
        for v in self.cells.values_mut() {
            v.clear();
        }
        if self.range.is_nan() || self.range <= 0.0 {
            out.iter_mut().for_each(NeighborSet::clear);
            return;
        }
        for (i, p) in positions.iter().enumerate() {
            if alive[i] {
                self.cells
                    .entry(self.cell_of(p))
                    .or_default()
                    .push(i as u32);
            }
        }
        let r2 = self.range * self.range;
        for (i, p) in positions.iter().enumerate() {
            let ids = out[i].ids_mut();
            ids.clear();
            if !alive[i] {
                continue;
            }
            let (cx, cy) = self.cell_of(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(bucket) = self.cells.get(&(cx + dx, cy + dy)) else {
                        continue;
                    };
                    for &j in bucket {
                        if j as usize != i && positions[j as usize].distance_sq(p) <= r2 {
                            ids.push(NodeId(j));
                        }
                    }
                }
            }
            ids.sort_unstable();
        }
    }
}
