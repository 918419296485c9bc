//! Epidemic message spreading: every node starts with its own message and
//! group joins exchange whole caches.

use fixedbitset::FixedBitSet;

use crate::domain::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionState {
    caches: Vec<FixedBitSet>,
    samples: Vec<(f64, f64)>,
}

impl DiffusionState {
    pub fn new(node_count: usize) -> Self {
        let caches = (0..node_count)
            .map(|i| {
                let mut c = FixedBitSet::with_capacity(node_count);
                c.insert(i);
                c
            })
            .collect();
        Self {
            caches,
            samples: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.caches.len()
    }

    pub fn holds(&self, node: NodeId, message_of: NodeId) -> bool {
        self.caches[node.index()].contains(message_of.index())
    }

    pub fn cache_len(&self, node: NodeId) -> usize {
        self.caches[node.index()].count_ones(..)
    }

    /// `joiner` enters a group whose current members (owner included) are
    /// `members`. Everyone ends up holding the union of all their caches.
    pub fn on_join(&mut self, joiner: NodeId, members: &[NodeId]) {
        let j = joiner.index();
        let mut merged = self.caches[j].clone();
        for m in members {
            merged.union_with(&self.caches[m.index()]);
        }
        for m in members {
            self.caches[m.index()].clone_from(&merged);
        }
        self.caches[j] = merged;
    }

    pub fn mean_fraction(&self) -> f64 {
        let n = self.caches.len();
        if n == 0 {
            return 0.0;
        }
        let held: usize = self.caches.iter().map(|c| c.count_ones(..)).sum();
        held as f64 / (n as f64 * n as f64)
    }

    pub fn sample(&mut self, now: f64) {
        let f = self.mean_fraction();
        self.samples.push((now, f));
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<(f64, f64)> {
        self.samples
    }
}
