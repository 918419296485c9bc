//! Connectivity graph over co-group time and its connected components.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::NodeId;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    /// Partition into sets, largest first, ties broken by smallest member.
    pub fn groups(&mut self) -> Vec<Vec<NodeId>> {
        let mut by_root: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        for i in 0..self.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(NodeId(i as u32));
        }
        let mut out: Vec<Vec<NodeId>> = by_root.into_values().collect();
        out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
        out
    }
}

/// Connected components, largest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub node_count: usize,
    pub sets: Vec<Vec<NodeId>>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sets.len()
    }

    pub fn largest(&self) -> &[NodeId] {
        self.sets.first().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn largest_fraction(&self) -> f64 {
        if self.node_count == 0 {
            0.0
        } else {
            self.largest().len() as f64 / self.node_count as f64
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }
}

/// Undirected graph weighted by total seconds two nodes spent in the same group.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConnectivityGraph {
    node_count: usize,
    edges: BTreeMap<(NodeId, NodeId), f64>,
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl ConnectivityGraph {
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count,
            edges: BTreeMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn accumulate_contact(&mut self, a: NodeId, b: NodeId, dt: f64) {
        assert_ne!(a, b, "self contact");
        debug_assert!(dt >= 0.0);
        *self.edges.entry(key(a, b)).or_insert(0.0) += dt;
    }

    /// Credits every pair in `members` with `dt`.
    pub fn accumulate_group(&mut self, members: &[NodeId], dt: f64) {
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                self.accumulate_contact(a, b, dt);
            }
        }
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> f64 {
        self.edges.get(&key(a, b)).copied().unwrap_or(0.0)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn connected_components(&self) -> Components {
        let mut uf = UnionFind::new(self.node_count);
        for (&(a, b), &w) in &self.edges {
            if w > 0.0 {
                uf.union(a.index(), b.index());
            }
        }
        Components {
            node_count: self.node_count,
            sets: uf.groups(),
        }
    }
}

#[derive(Debug, Clone)]
struct OpenGroup {
    version: u64,
    nodes: Vec<NodeId>,
    since: f64,
}

/// Integrates co-membership time without touching every pair every step:
/// a group's pairs are credited only when its composition changes.
#[derive(Debug, Clone, Default)]
pub struct ContactIntegrator {
    open: Vec<Option<OpenGroup>>,
}

impl ContactIntegrator {
    pub fn new(node_count: usize) -> Self {
        Self {
            open: vec![None; node_count],
        }
    }

    /// Reports the composition `owner`'s group had during the step starting
    /// at `step_start`. `version` must change whenever the membership does.
    pub fn observe(
        &mut self,
        owner: NodeId,
        version: u64,
        members: &BTreeSet<NodeId>,
        step_start: f64,
        cg: &mut ConnectivityGraph,
    ) {
        let slot = &mut self.open[owner.index()];
        if members.is_empty() {
            if let Some(g) = slot.take() {
                cg.accumulate_group(&g.nodes, step_start - g.since);
            }
            return;
        }
        if slot.as_ref().is_some_and(|g| g.version == version) {
            return;
        }
        if let Some(g) = slot.take() {
            cg.accumulate_group(&g.nodes, step_start - g.since);
        }
        let mut nodes: Vec<NodeId> = members.iter().copied().collect();
        nodes.push(owner);
        *slot = Some(OpenGroup {
            version,
            nodes,
            since: step_start,
        });
    }

    /// Credits every open group up to `end`.
    pub fn close_all(&mut self, end: f64, cg: &mut ConnectivityGraph) {
        for slot in &mut self.open {
            if let Some(g) = slot.take() {
                cg.accumulate_group(&g.nodes, end - g.since);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn pair_for_100_s() {
        let mut cg = ConnectivityGraph::new(2);
        for _ in 0..100 {
            cg.accumulate_contact(NodeId(0), NodeId(1), 1.0);
        }
        assert_eq!(cg.weight(NodeId(0), NodeId(1)), 100.0);
        assert_eq!(cg.weight(NodeId(1), NodeId(0)), 100.0);
    }

    #[test]
    fn group_of_three_credits_three_pairs() {
        let mut cg = ConnectivityGraph::new(5);
        cg.accumulate_group(&ids(&[1, 3, 4]), 10.0);
        assert_eq!(cg.edge_count(), 3);
        assert!(cg.edges().all(|(_, _, w)| w == 10.0));
        assert_eq!(cg.weight(NodeId(0), NodeId(1)), 0.0);
    }

    #[test]
    fn isolated_nodes_are_singletons() {
        let c = ConnectivityGraph::new(7).connected_components();
        assert_eq!(c.count(), 7);
        assert!((c.largest_fraction() - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn components_partition_nodes() {
        let mut cg = ConnectivityGraph::new(6);
        cg.accumulate_group(&ids(&[0, 1, 2]), 1.0);
        cg.accumulate_contact(NodeId(4), NodeId(5), 3.0);
        let c = cg.connected_components();
        assert_eq!(c.sizes(), vec![3, 2, 1]);
        assert_eq!(c.sizes().iter().sum::<usize>(), 6);
        assert_eq!(c.largest(), &ids(&[0, 1, 2])[..]);
    }

    #[test]
    fn integrator_matches_per_step_credit() {
        let members: BTreeSet<NodeId> = ids(&[1, 2]).into_iter().collect();
        let bigger: BTreeSet<NodeId> = ids(&[1, 2, 3]).into_iter().collect();
        let mut cg = ConnectivityGraph::new(4);
        let mut it = ContactIntegrator::new(4);
        for step in 0..10 {
            let t = step as f64;
            if step < 6 {
                it.observe(NodeId(0), 1, &members, t, &mut cg);
            } else {
                it.observe(NodeId(0), 2, &bigger, t, &mut cg);
            }
        }
        it.close_all(10.0, &mut cg);
        assert_eq!(cg.weight(NodeId(0), NodeId(1)), 10.0);
        assert_eq!(cg.weight(NodeId(1), NodeId(2)), 10.0);
        assert_eq!(cg.weight(NodeId(0), NodeId(3)), 4.0);
        assert_eq!(cg.weight(NodeId(2), NodeId(3)), 4.0);
    }

    #[test]
    fn integrator_closes_emptied_groups() {
        let members: BTreeSet<NodeId> = ids(&[1]).into_iter().collect();
        let mut cg = ConnectivityGraph::new(2);
        let mut it = ContactIntegrator::new(2);
        it.observe(NodeId(0), 1, &members, 0.0, &mut cg);
        it.observe(NodeId(0), 1, &members, 1.0, &mut cg);
        it.observe(NodeId(0), 2, &BTreeSet::new(), 2.0, &mut cg);
        it.close_all(50.0, &mut cg);
        assert_eq!(cg.weight(NodeId(0), NodeId(1)), 2.0);
    }
}
