//! Highest-MAC comparator: a free node joins the highest-ordinal credential
//! holder in range whose ordinal beats its own, and group owners keep their
//! role until their battery dies or every client drifts out of range.
//! There is no merging, travelling or re-election.

use std::collections::BTreeSet;

use crate::context::NeighborSet;
use crate::domain::{
    ControlMessage, GroupError, GroupRecord, NodeId, Role, ServiceRecord, TokenSource,
};
use crate::link::{DetachCause, LinkLayerHandle, MemberEvent, RejectReason};
use crate::protocol::{GroupAgent, NodeState, RecordContext};
use crate::trace::TraceKind;

#[derive(Debug, Clone)]
pub struct BaselineState {
    me: NodeId,
    group: GroupRecord,
    current_go: Option<NodeId>,
    /// Owners that turned this node away for lack of capacity since the
    /// candidate list was last exhausted.
    full: BTreeSet<NodeId>,
}

impl BaselineState {
    pub fn boot(me: NodeId, capacity: u32, tokens: &mut TokenSource) -> Result<Self, GroupError> {
        Ok(Self {
            me,
            group: GroupRecord::new(me, capacity, tokens)?,
            current_go: None,
            full: BTreeSet::new(),
        })
    }

    /// The owner a free node would try next, if any.
    pub fn pick_target<'a, I>(&self, records: I) -> Option<NodeId>
    where
        I: IntoIterator<Item = &'a ServiceRecord>,
    {
        records
            .into_iter()
            .filter(|r| r.has_credentials() && r.node > self.me && !self.full.contains(&r.node))
            .map(|r| r.node)
            .max()
    }
}

impl GroupAgent for BaselineState {
    fn id(&self) -> NodeId {
        self.me
    }

    fn group(&self) -> &GroupRecord {
        &self.group
    }

    fn current_go(&self) -> Option<NodeId> {
        self.current_go
    }

    fn service_record(&self, _ctx: RecordContext<'_>) -> ServiceRecord {
        match self.current_go {
            Some(_) => ServiceRecord::client(self.me, 0.0),
            None => ServiceRecord::owner(&self.group, 0.0),
        }
    }

    fn observe_neighbors(&mut self, _current: &NeighborSet, _now: f64) {}

    fn tick(&mut self, link: &mut LinkLayerHandle<'_>) {
        let state = match self.role() {
            Role::Free => Some(NodeState::Go1),
            Role::Client => Some(NodeState::C1),
            Role::GroupOwner => None,
        };
        link.trace(TraceKind::Decision {
            state,
            battery: link.battery(),
            members: self.group.len() as u32,
        });
        if state != Some(NodeState::Go1) {
            return;
        }
        match self.pick_target(link.neighbor_records()) {
            Some(target) => link.connect(target),
            // every higher candidate was full: start over next period
            None => self.full.clear(),
        }
    }

    fn on_message(&mut self, _msg: &ControlMessage, _link: &mut LinkLayerHandle<'_>) {}

    fn on_member_event(&mut self, event: MemberEvent, _link: &mut LinkLayerHandle<'_>) {
        match event {
            MemberEvent::Joined(n) => {
                let added = self.group.add(n);
                debug_assert!(
                    added.is_ok(),
                    "kernel admitted {n} beyond capacity: {added:?}"
                );
            }
            MemberEvent::Left(n) => {
                self.group.remove(n);
            }
        }
    }

    fn on_connect_result(
        &mut self,
        go: NodeId,
        result: Result<(), RejectReason>,
        _link: &mut LinkLayerHandle<'_>,
    ) {
        match result {
            Ok(()) => {
                self.current_go = Some(go);
                self.full.clear();
            }
            Err(RejectReason::CapacityFull) => {
                self.full.insert(go);
            }
            Err(_) => {}
        }
    }

    fn on_detached(&mut self, _go: NodeId, fresh: GroupRecord, _cause: DetachCause, _now: f64) {
        self.current_go = None;
        self.group = fresh;
    }

    fn on_disbanded(&mut self, fresh: GroupRecord, _now: f64) {
        self.group = fresh;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(node: u32, tokens: &mut TokenSource) -> ServiceRecord {
        ServiceRecord::owner(&GroupRecord::new(NodeId(node), 4, tokens).unwrap(), 0.0)
    }

    #[test]
    fn picks_highest_ordinal_above_own() {
        let mut tokens = TokenSource::new();
        let recs = [
            free(10, &mut tokens),
            free(22, &mut tokens),
            free(7, &mut tokens),
        ];
        let n7 = BaselineState::boot(NodeId(7), 4, &mut tokens).unwrap();
        let n10 = BaselineState::boot(NodeId(10), 4, &mut tokens).unwrap();
        let n22 = BaselineState::boot(NodeId(22), 4, &mut tokens).unwrap();
        assert_eq!(n7.pick_target(&recs), Some(NodeId(22)));
        assert_eq!(n10.pick_target(&recs), Some(NodeId(22)));
        assert_eq!(n22.pick_target(&recs), None);
    }

    #[test]
    fn full_owner_is_skipped_until_candidates_run_out() {
        let mut tokens = TokenSource::new();
        let recs = [free(10, &mut tokens), free(22, &mut tokens)];
        let mut n = BaselineState::boot(NodeId(3), 4, &mut tokens).unwrap();
        let mut dummy_trace = crate::trace::Trace::disabled();
        let mut q = crate::link::EffectQueue::new();
        let nbrs = NeighborSet::new();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut link = LinkLayerHandle::new(
            NodeId(3),
            0.0,
            1.0,
            &nbrs,
            &recs,
            &mut rng,
            &mut q,
            &mut dummy_trace,
        );
        n.on_connect_result(NodeId(22), Err(RejectReason::CapacityFull), &mut link);
        assert_eq!(n.pick_target(&recs), Some(NodeId(10)));
        n.on_connect_result(NodeId(10), Err(RejectReason::CapacityFull), &mut link);
        assert_eq!(n.pick_target(&recs), None);
    }

    #[test]
    fn clients_are_not_candidates() {
        let mut tokens = TokenSource::new();
        let recs = [ServiceRecord::client(NodeId(30), 0.0)];
        let n = BaselineState::boot(NodeId(3), 4, &mut tokens).unwrap();
        assert_eq!(n.pick_target(&recs), None);
    }
}
