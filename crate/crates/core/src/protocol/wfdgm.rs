//! WFD-GM: context-aware group owner election with group merging and
//! travelling clients.
//!
//! Every node boots as the owner of an empty group and advertises its
//! credentials and suitability. Each decision period the node classifies
//! itself and runs exactly one procedure:
//!
//! | state | condition                                   | action          |
//! |-------|---------------------------------------------|-----------------|
//! | GO1   | owner, no clients                           | [`go_election`] |
//! | GO2   | owner with clients, battery below threshold | [`disband_group`] |
//! | GO3   | owner with clients, other owners in range   | [`eval_merge`]  |
//! | C1    | client                                      | [`eval_traveling`] |
//!
//! [`go_election`]: NodeProtocolState::go_election
//! [`disband_group`]: NodeProtocolState::disband_group
//! [`eval_merge`]: NodeProtocolState::eval_merge
//! [`eval_traveling`]: NodeProtocolState::eval_traveling

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::context::{
    best_candidate, suitability, ContextSnapshot, NormalizationParams, StabilityState,
    StabilityWeights, SuitabilityWeights, WeightError,
};
use crate::domain::{
    Blacklist, ControlMessage, GroupError, GroupRecord, MessageKind, NodeId, Role, ServiceRecord,
    TokenSource,
};
use crate::link::{DetachCause, DisbandCause, LinkLayerHandle, MemberEvent, RejectReason};
use crate::protocol::{GroupAgent, NodeState, RecordContext};
use crate::trace::TraceKind;

/// Slack for comparing simulation timestamps built from sums of steps.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Decision period in seconds.
    pub t_d: f64,
    /// Battery fraction below which an owner with clients disbands.
    pub res_th: f64,
    /// Blacklist hold after GROUP_BYE or MERGE_WARNING.
    pub t_b: f64,
    /// Blacklist hold on the owner a travelling client leaves.
    pub t_b_travel: f64,
    /// Travel probability scale: `p_T = min(1, p0 / |G_M|)`.
    pub p0: f64,
    pub weights: SuitabilityWeights,
    pub stability_weights: StabilityWeights,
    pub norm: NormalizationParams,
    /// Stability refresh period.
    pub t_st: f64,
}

impl ProtocolParams {
    /// Default parameter set for a given decision period; the stability
    /// refresh follows the decision period.
    pub fn with_decision_period(t_d: f64) -> Self {
        Self {
            t_d,
            res_th: 0.1,
            t_b: 60.0,
            t_b_travel: 60.0,
            p0: 0.5,
            weights: SuitabilityWeights::default(),
            stability_weights: StabilityWeights::default(),
            norm: NormalizationParams::default(),
            t_st: t_d,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ParamError::NotPositive(name, v))
            }
        };
        positive("t_d", self.t_d)?;
        positive("t_b", self.t_b)?;
        positive("t_b_travel", self.t_b_travel)?;
        positive("t_st", self.t_st)?;
        positive("pp_max", self.norm.pp_max)?;
        positive("c_max", self.norm.c_max)?;
        if !(self.res_th > 0.0 && self.res_th < 1.0) {
            return Err(ParamError::OutOfRange("res_th", self.res_th));
        }
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return Err(ParamError::OutOfRange("p0", self.p0));
        }
        self.weights.validate()?;
        self.stability_weights.validate()?;
        Ok(())
    }
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self::with_decision_period(30.0)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParamError {
    #[error("{0} must be positive, got {1}")]
    NotPositive(&'static str, f64),
    #[error("{0} out of range: {1}")]
    OutOfRange(&'static str, f64),
    #[error(transparent)]
    Weights(#[from] WeightError),
}

/// Probability that a client of a group with `group_size` members leaves
/// it during one decision period.
pub fn travel_probability(p0: f64, group_size: usize) -> f64 {
    (p0 / group_size.max(1) as f64).min(1.0)
}

/// Positive visibility answers needed before a group of `clients` merges:
/// a strict majority of the clients plus the owner.
pub fn merge_quorum(clients: usize) -> usize {
    (clients + 2) / 2
}

#[derive(Debug, Clone, PartialEq)]
struct PendingMerge {
    target: NodeId,
    requested: BTreeSet<NodeId>,
    responses: BTreeMap<NodeId, bool>,
    deadline: f64,
}

#[derive(Debug, Clone)]
pub struct NodeProtocolState {
    me: NodeId,
    params: ProtocolParams,
    group: GroupRecord,
    current_go: Option<NodeId>,
    members_view: BTreeSet<NodeId>,
    bl: Blacklist,
    stability: StabilityState,
    last_st_update: f64,
    pending_merge: Option<PendingMerge>,
}

impl NodeProtocolState {
    /// A freshly started node: owner of a new empty group, empty blacklist.
    pub fn boot(
        me: NodeId,
        params: ProtocolParams,
        capacity: u32,
        tokens: &mut TokenSource,
    ) -> Result<Self, GroupError> {
        Ok(Self {
            me,
            params,
            group: GroupRecord::new(me, capacity, tokens)?,
            current_go: None,
            members_view: BTreeSet::new(),
            bl: Blacklist::new(),
            stability: StabilityState::new(params.stability_weights),
            last_st_update: 0.0,
            pending_merge: None,
        })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn blacklist(&self) -> &Blacklist {
        &self.bl
    }

    pub fn blacklist_mut(&mut self) -> &mut Blacklist {
        &mut self.bl
    }

    pub fn stability(&self) -> &StabilityState {
        &self.stability
    }

    pub fn members_view(&self) -> &BTreeSet<NodeId> {
        &self.members_view
    }

    pub fn merge_pending(&self) -> Option<NodeId> {
        self.pending_merge.as_ref().map(|p| p.target)
    }

    pub fn snapshot(&self, battery: f64, peers: usize) -> ContextSnapshot {
        let free_slots = if self.current_go.is_some() {
            self.group.capacity()
        } else {
            self.group.remaining()
        };
        ContextSnapshot {
            resources: battery.clamp(0.0, 1.0),
            peers: peers as u32,
            free_slots,
            stability: self.stability.index(),
        }
    }

    pub fn suitability(&self, battery: f64, peers: usize) -> f64 {
        suitability(
            &self.snapshot(battery, peers),
            &self.params.weights,
            &self.params.norm,
        )
    }

    fn own_record(&self, link: &LinkLayerHandle<'_>) -> ServiceRecord {
        self.service_record(RecordContext {
            battery: link.battery(),
            neighbors: link.neighbors(),
        })
    }

    /// Main-loop classification. `None` means an owner with clients, enough
    /// battery and no other owner in range: nothing to do this period.
    pub fn classify_state(&self, battery: f64, go_neighbors: usize) -> Option<NodeState> {
        if self.current_go.is_some() {
            return Some(NodeState::C1);
        }
        if self.group.is_empty() {
            Some(NodeState::Go1)
        } else if battery < self.params.res_th {
            Some(NodeState::Go2)
        } else if go_neighbors > 0 {
            Some(NodeState::Go3)
        } else {
            None
        }
    }

    fn blacklist_for(&mut self, who: NodeId, hold: f64, link: &mut LinkLayerHandle<'_>) {
        self.bl.add(who, link.now(), hold);
        let until = self.bl.expiry(who).unwrap_or(link.now() + hold);
        link.trace(TraceKind::Blacklisted { who, until });
    }

    fn broadcast(&self, kind: MessageKind, link: &mut LinkLayerHandle<'_>) {
        for &m in self.group.members() {
            link.send(m, kind.clone());
        }
    }

    /// GO1: stay owner if this node is the most suitable credential holder
    /// in range, otherwise join the best one.
    pub fn go_election(&mut self, link: &mut LinkLayerHandle<'_>) {
        let own = self.own_record(link);
        let winner = best_candidate(link.neighbor_records(), &own, &self.bl, link.now());
        link.trace(TraceKind::Elected { winner });
        if winner != self.me {
            link.connect(winner);
        }
    }

    /// GO2: release every client with a GROUP_BYE.
    pub fn disband_group(&mut self, link: &mut LinkLayerHandle<'_>) {
        self.pending_merge = None;
        link.disband(DisbandCause::LowBattery);
    }

    /// GO3: pick the best owner in range; if it is not this node, ask the
    /// clients whether they can see it.
    pub fn eval_merge(&mut self, link: &mut LinkLayerHandle<'_>) {
        let own = self.own_record(link);
        let owners = link
            .neighbor_records()
            .filter(|r| r.role == Role::GroupOwner);
        let g_best = best_candidate(owners, &own, &self.bl, link.now());
        link.trace(TraceKind::Elected { winner: g_best });
        if g_best == self.me {
            return;
        }
        let requested = self.group.members().clone();
        self.broadcast(MessageKind::VisibilityReq(g_best), link);
        self.pending_merge = Some(PendingMerge {
            target: g_best,
            requested,
            responses: BTreeMap::new(),
            deadline: link.now() + self.params.t_d,
        });
    }

    fn resolve_merge(&mut self, link: &mut LinkLayerHandle<'_>) {
        let Some(p) = self.pending_merge.take() else {
            return;
        };
        if self.current_go.is_some() {
            return;
        }
        let visible = p.responses.values().filter(|v| **v).count();
        if visible >= merge_quorum(p.requested.len()) {
            link.disband(DisbandCause::Merge(p.target));
            link.connect(p.target);
        }
    }

    /// C1: leave the group with probability `p_T`, blacklisting its owner.
    pub fn eval_traveling(&mut self, link: &mut LinkLayerHandle<'_>) {
        let r: f64 = link.rng().random();
        self.eval_traveling_with_draw(r, link);
    }

    /// [`eval_traveling`](Self::eval_traveling) with the uniform draw supplied.
    pub fn eval_traveling_with_draw(&mut self, r: f64, link: &mut LinkLayerHandle<'_>) {
        let Some(go) = self.current_go else { return };
        let p_t = travel_probability(self.params.p0, self.members_view.len());
        if r <= p_t {
            self.blacklist_for(go, self.params.t_b_travel, link);
            link.disconnect();
        }
    }
}

impl GroupAgent for NodeProtocolState {
    fn id(&self) -> NodeId {
        self.me
    }

    fn group(&self) -> &GroupRecord {
        &self.group
    }

    fn current_go(&self) -> Option<NodeId> {
        self.current_go
    }

    fn service_record(&self, ctx: RecordContext<'_>) -> ServiceRecord {
        let s = self.suitability(ctx.battery, ctx.neighbors.len());
        if self.current_go.is_some() {
            ServiceRecord::client(self.me, s)
        } else {
            ServiceRecord::owner(&self.group, s)
        }
    }

    fn seed_neighbors(&mut self, initial: &crate::context::NeighborSet) {
        self.stability.seed(initial);
    }

    fn observe_neighbors(&mut self, current: &crate::context::NeighborSet, _now: f64) {
        self.stability.on_neighbors_changed(current);
    }

    fn tick(&mut self, link: &mut LinkLayerHandle<'_>) {
        let now = link.now();
        if now - self.last_st_update + TIME_EPS >= self.params.t_st {
            self.stability.update();
            self.last_st_update = now;
        }
        self.bl.purge(now);

        let go_neighbors = link
            .neighbor_records()
            .filter(|r| r.role == Role::GroupOwner)
            .count();
        let state = self.classify_state(link.battery(), go_neighbors);
        link.trace(TraceKind::Decision {
            state,
            battery: link.battery(),
            members: self.group.len() as u32,
        });

        if state == Some(NodeState::Go2) {
            self.disband_group(link);
            return;
        }
        if let Some(p) = &self.pending_merge {
            if now + TIME_EPS >= p.deadline {
                self.resolve_merge(link);
            }
            return;
        }
        match state {
            Some(NodeState::Go1) => self.go_election(link),
            Some(NodeState::Go3) => self.eval_merge(link),
            Some(NodeState::C1) => self.eval_traveling(link),
            Some(NodeState::Go2) | None => {}
        }
    }

    fn on_message(&mut self, msg: &ControlMessage, link: &mut LinkLayerHandle<'_>) {
        match self.current_go {
            None => {
                let MessageKind::VisibilityResp(visible) = msg.kind else {
                    return;
                };
                let Some(p) = self.pending_merge.as_mut() else {
                    return;
                };
                if !p.requested.contains(&msg.sender) {
                    return;
                }
                p.responses.insert(msg.sender, visible);
                if p.responses.len() == p.requested.len() {
                    self.resolve_merge(link);
                }
            }
            Some(go) if go == msg.sender => match &msg.kind {
                MessageKind::GroupInfo(members) => self.members_view.clone_from(members),
                MessageKind::GroupBye => {
                    self.blacklist_for(go, self.params.t_b, link);
                    link.disconnect();
                }
                MessageKind::VisibilityReq(g) => {
                    let visible = link.in_range(*g);
                    link.send(go, MessageKind::VisibilityResp(visible));
                }
                MessageKind::MergeWarning(g) => {
                    let g = *g;
                    self.blacklist_for(go, self.params.t_b, link);
                    link.disconnect();
                    if g != self.me && link.in_range(g) && !self.bl.is_blocked(g, link.now()) {
                        link.connect(g);
                    }
                }
                MessageKind::VisibilityResp(_) => {}
            },
            // stale: not from our owner
            Some(_) => {}
        }
    }

    fn on_member_event(&mut self, event: MemberEvent, link: &mut LinkLayerHandle<'_>) {
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
        let members = self.group.members().clone();
        self.broadcast(MessageKind::GroupInfo(members), link);
    }

    fn on_connect_result(
        &mut self,
        go: NodeId,
        result: Result<(), RejectReason>,
        _link: &mut LinkLayerHandle<'_>,
    ) {
        if result.is_ok() {
            self.current_go = Some(go);
            self.members_view.clear();
            self.pending_merge = None;
        }
    }

    fn on_detached(&mut self, _go: NodeId, fresh: GroupRecord, _cause: DetachCause, _now: f64) {
        self.current_go = None;
        self.members_view.clear();
        self.group = fresh;
        self.pending_merge = None;
    }

    fn on_disbanded(&mut self, fresh: GroupRecord, _now: f64) {
        self.group = fresh;
        self.pending_merge = None;
    }
}
