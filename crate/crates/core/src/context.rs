//! Context features: the suitability index a node advertises and the
//! stability index that feeds into it.

use serde::{Deserialize, Serialize};

use crate::domain::{Blacklist, NodeId, ServiceRecord};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WeightError {
    #[error("weights must be non-negative and finite, got {0:?}")]
    Invalid(Vec<f64>),
    #[error("weights must sum to 1, got {sum} from {weights:?}")]
    Sum { sum: f64, weights: Vec<f64> },
}

fn check_weights(weights: &[f64]) -> Result<(), WeightError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(WeightError::Invalid(weights.to_vec()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(WeightError::Sum {
            sum,
            weights: weights.to_vec(),
        });
    }
    Ok(())
}

/// Sorted, deduplicated set of neighbour ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NeighborSet(Vec<NodeId>);

impl NeighborSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from ids already in ascending order without duplicates.
    pub fn from_sorted(ids: Vec<NodeId>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Self(ids)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }

    pub fn clear(&mut self) {
        self.0.clear();
    }

    pub(crate) fn ids_mut(&mut self) -> &mut Vec<NodeId> {
        &mut self.0
    }

    fn intersection_len(&self, other: &Self) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

impl FromIterator<NodeId> for NeighborSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut ids: Vec<NodeId> = iter.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        Self(ids)
    }
}

/// |a ∩ b| / |a ∪ b|, with two empty sets counting as identical.
pub fn jaccard(a: &NeighborSet, b: &NeighborSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityWeights {
    pub previous: f64,
    pub jaccard: f64,
}

impl StabilityWeights {
    pub fn new(previous: f64, jaccard: f64) -> Result<Self, WeightError> {
        check_weights(&[previous, jaccard])?;
        Ok(Self { previous, jaccard })
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        check_weights(&[self.previous, self.jaccard])
    }
}

impl Default for StabilityWeights {
    fn default() -> Self {
        Self {
            previous: 0.4,
            jaccard: 0.6,
        }
    }
}

/// Running state behind the stability index: the previous window's index
/// and the Jaccard similarities observed since then.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityState {
    st_prev: f64,
    jaccard_sum: f64,
    jaccard_count: u32,
    prev_neighbors: NeighborSet,
    weights: StabilityWeights,
}

impl StabilityState {
    /// A freshly booted node has seen no churn and starts fully stable.
    pub fn new(weights: StabilityWeights) -> Self {
        Self::with_initial(1.0, weights)
    }

    pub fn with_initial(st: f64, weights: StabilityWeights) -> Self {
        Self {
            st_prev: st.clamp(0.0, 1.0),
            jaccard_sum: 0.0,
            jaccard_count: 0,
            prev_neighbors: NeighborSet::new(),
            weights,
        }
    }

    pub fn index(&self) -> f64 {
        self.st_prev
    }

    pub fn prev_neighbors(&self) -> &NeighborSet {
        &self.prev_neighbors
    }

    pub fn pending_changes(&self) -> u32 {
        self.jaccard_count
    }

    /// Mean Jaccard similarity of the current window; an unchanged
    /// neighbourhood counts as 1.
    pub fn window_mean(&self) -> f64 {
        if self.jaccard_count == 0 {
            1.0
        } else {
            self.jaccard_sum / self.jaccard_count as f64
        }
    }

    /// Sets the reference neighbourhood without counting it as a change.
    pub fn seed(&mut self, initial: &NeighborSet) {
        self.prev_neighbors.clone_from(initial);
    }

    /// Folds one neighbourhood change into the window. Identical sets are
    /// ignored so callers may pass every observation.
    pub fn on_neighbors_changed(&mut self, current: &NeighborSet) {
        if *current == self.prev_neighbors {
            return;
        }
        self.jaccard_sum += jaccard(&self.prev_neighbors, current);
        self.jaccard_count += 1;
        self.prev_neighbors.clone_from(current);
    }

    /// Closes the window: blends the previous index with the window mean and
    /// resets the running average.
    pub fn update(&mut self) -> f64 {
        let st = self.st_prev * self.weights.previous + self.window_mean() * self.weights.jaccard;
        self.st_prev = st.clamp(0.0, 1.0);
        self.jaccard_sum = 0.0;
        self.jaccard_count = 0;
        self.st_prev
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityWeights {
    pub resources: f64,
    pub peers: f64,
    pub capacity: f64,
    pub stability: f64,
}

impl SuitabilityWeights {
    pub fn new(
        resources: f64,
        peers: f64,
        capacity: f64,
        stability: f64,
    ) -> Result<Self, WeightError> {
        let w = Self {
            resources,
            peers,
            capacity,
            stability,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn from_array(w: [f64; 4]) -> Result<Self, WeightError> {
        Self::new(w[0], w[1], w[2], w[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.resources, self.peers, self.capacity, self.stability]
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        check_weights(&self.as_array())
    }
}

impl Default for SuitabilityWeights {
    fn default() -> Self {
        Self {
            resources: 0.25,
            peers: 0.25,
            capacity: 0.25,
            stability: 0.25,
        }
    }
}

/// Scales for the two count-valued features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationParams {
    pub pp_max: f64,
    pub c_max: f64,
}

impl Default for NormalizationParams {
    fn default() -> Self {
        Self {
            pp_max: 15.0,
            c_max: 15.0,
        }
    }
}

/// Raw context of one node at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextSnapshot {
    /// Available resources, here the battery fraction.
    pub resources: f64,
    /// Peers currently in proximity.
    pub peers: u32,
    /// Incoming connections the node can still accept.
    pub free_slots: u32,
    pub stability: f64,
}

pub fn suitability(
    cs: &ContextSnapshot,
    w: &SuitabilityWeights,
    norm: &NormalizationParams,
) -> f64 {
    debug_assert!(norm.pp_max > 0.0 && norm.c_max > 0.0);
    let pp = (cs.peers as f64 / norm.pp_max).min(1.0);
    let c = (cs.free_slots as f64 / norm.c_max).min(1.0);
    w.resources * cs.resources + w.peers * pp + w.capacity * c + w.stability * cs.stability
}

/// Picks the most suitable non-blacklisted owner among `records` and
/// `own`. Ties go to the higher ordinal so the answer does not depend on
/// list order.
pub fn best_candidate<'a, I>(records: I, own: &ServiceRecord, bl: &Blacklist, now: f64) -> NodeId
where
    I: IntoIterator<Item = &'a ServiceRecord>,
{
    let mut best = (own.suitability, own.node);
    for r in records {
        if r.node == own.node || !r.has_credentials() || bl.is_blocked(r.node, now) {
            continue;
        }
        let cand = (r.suitability, r.node);
        if cand.0.total_cmp(&best.0).then(cand.1.cmp(&best.1)).is_gt() {
            best = cand;
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Role, Token};

    fn set(ids: &[u32]) -> NeighborSet {
        ids.iter().map(|&i| NodeId(i)).collect()
    }

    fn rec(node: u32, s: f64) -> ServiceRecord {
        ServiceRecord {
            node: NodeId(node),
            role: Role::Free,
            suitability: s,
            group_id: Some(Token(1)),
            credentials: Some(Token(2)),
            group_size: 0,
        }
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&set(&[1, 2, 3]), &set(&[2, 3, 4])), 0.5);
        assert_eq!(jaccard(&set(&[4, 9]), &set(&[4, 9])), 1.0);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 1.0);
        assert_eq!(jaccard(&set(&[]), &set(&[1])), 0.0);
    }

    #[test]
    fn empty_window_is_consistent_with_empty_jaccard() {
        // An empty neighbourhood that stays empty must look as stable as
        // any other unchanged neighbourhood.
        let mut ss = StabilityState::with_initial(0.3, StabilityWeights::default());
        ss.on_neighbors_changed(&set(&[]));
        assert_eq!(ss.pending_changes(), 0);
        assert_eq!(ss.window_mean(), jaccard(&set(&[]), &set(&[])));
    }

    #[test]
    fn neighbor_change_accumulates_jaccard() {
        let mut ss = StabilityState::new(StabilityWeights::default());
        ss.on_neighbors_changed(&set(&[1, 2]));
        // first change is from the empty boot set
        assert_eq!(ss.window_mean(), 0.0);
        let mut ss = StabilityState::new(StabilityWeights::default());
        ss.prev_neighbors = set(&[1, 2]);
        ss.on_neighbors_changed(&set(&[1, 2, 3]));
        assert!((ss.window_mean() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ss.prev_neighbors(), &set(&[1, 2, 3]));
    }

    #[test]
    fn equal_folds_average_to_themselves() {
        let mut ss = StabilityState::new(StabilityWeights::default());
        ss.prev_neighbors = set(&[1, 2, 3]);
        ss.on_neighbors_changed(&set(&[2, 3, 4])); // 0.5
        ss.on_neighbors_changed(&set(&[3, 4, 5])); // 0.5
        assert_eq!(ss.window_mean(), 0.5);
    }

    #[test]
    fn stability_update_examples() {
        let w = StabilityWeights::default();

        let mut ss = StabilityState::with_initial(0.5, w);
        ss.jaccard_sum = 1.0;
        ss.jaccard_count = 2;
        assert!((ss.update() - 0.5).abs() < 1e-12);

        let mut ss = StabilityState::with_initial(1.0, w);
        ss.jaccard_sum = 0.0;
        ss.jaccard_count = 3;
        assert!((ss.update() - 0.4).abs() < 1e-12);

        let mut ss = StabilityState::with_initial(0.0, w);
        assert!((ss.update() - 0.6).abs() < 1e-12);
        assert_eq!(ss.pending_changes(), 0);
    }

    #[test]
    fn suitability_examples() {
        let w = SuitabilityWeights::default();
        let norm = NormalizationParams {
            pp_max: 10.0,
            c_max: 10.0,
        };
        let zero = ContextSnapshot {
            resources: 0.0,
            peers: 0,
            free_slots: 0,
            stability: 0.0,
        };
        assert_eq!(suitability(&zero, &w, &norm), 0.0);
        let full = ContextSnapshot {
            resources: 1.0,
            peers: 10,
            free_slots: 10,
            stability: 1.0,
        };
        assert!((suitability(&full, &w, &norm) - 1.0).abs() < 1e-12);
        let mid = ContextSnapshot {
            resources: 0.8,
            peers: 5,
            free_slots: 4,
            stability: 0.6,
        };
        // 0.25 * (0.8 + 0.5 + 0.4 + 0.6)
        assert!((suitability(&mid, &w, &norm) - 0.575).abs() < 1e-12);
    }

    #[test]
    fn counts_are_clamped_by_normalization() {
        let w = SuitabilityWeights::default();
        let norm = NormalizationParams::default();
        let crowded = ContextSnapshot {
            resources: 1.0,
            peers: 500,
            free_slots: 15,
            stability: 1.0,
        };
        assert!((suitability(&crowded, &w, &norm) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(SuitabilityWeights::new(0.3, 0.3, 0.3, 0.3).is_err());
        assert!(SuitabilityWeights::new(0.25, 0.25, 0.25, 0.25).is_ok());
        assert!(SuitabilityWeights::new(-0.5, 0.5, 0.5, 0.5).is_err());
        assert!(StabilityWeights::new(0.4, 0.6).is_ok());
        assert!(StabilityWeights::new(0.5, 0.6).is_err());
    }

    #[test]
    fn best_candidate_examples() {
        let bl = Blacklist::new();
        let me = rec(1, 0.7);
        assert_eq!(best_candidate(&[rec(2, 0.9)], &me, &bl, 0.0), NodeId(2));

        let me = rec(3, 0.5);
        assert_eq!(best_candidate(&[rec(7, 0.5)], &me, &bl, 0.0), NodeId(7));
        let me = rec(7, 0.5);
        assert_eq!(best_candidate(&[rec(3, 0.5)], &me, &bl, 0.0), NodeId(7));

        let mut bl = Blacklist::new();
        bl.add(NodeId(2), 0.0, 60.0);
        let me = rec(1, 0.1);
        assert_eq!(best_candidate(&[rec(2, 0.9)], &me, &bl, 10.0), NodeId(1));
        assert_eq!(best_candidate(&[rec(2, 0.9)], &me, &bl, 60.0), NodeId(2));
    }

    #[test]
    fn clients_are_never_candidates() {
        let me = rec(1, 0.1);
        let client = ServiceRecord::client(NodeId(9), 1.0);
        assert_eq!(
            best_candidate(&[client], &me, &Blacklist::new(), 0.0),
            NodeId(1)
        );
    }

    #[test]
    fn tie_break_is_order_independent() {
        let recs = [rec(3, 0.5), rec(7, 0.5), rec(5, 0.5), rec(4, 0.2)];
        let me = rec(1, 0.5);
        let bl = Blacklist::new();
        let mut perm = recs.to_vec();
        for _ in 0..recs.len() {
            perm.rotate_left(1);
            assert_eq!(best_candidate(&perm, &me, &bl, 0.0), NodeId(7));
            let rev: Vec<_> = perm.iter().rev().copied().collect();
            assert_eq!(best_candidate(&rev, &me, &bl, 0.0), NodeId(7));
        }
    }
}
