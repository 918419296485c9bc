//! The capability a protocol uses to act on the network.
//!
//! Protocol code never mutates another node directly. It queues effects on
//! a [`LinkLayerHandle`]; the simulation kernel applies them after the
//! current batch of decisions, in issue order.

use std::collections::VecDeque;
use std::fmt;

use rand::RngCore;

use crate::context::NeighborSet;
use crate::domain::{MessageKind, NodeId, ServiceRecord};
use crate::trace::{Trace, TraceKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    /// Join `target`'s group as a legacy client using its advertised credentials.
    Connect(NodeId),
    /// Leave the current group.
    Disconnect,
    Send {
        to: NodeId,
        kind: MessageKind,
    },
    /// Tell every client why, release them all and re-create an empty group.
    /// The notice goes to whoever is a member when the effect is applied.
    Disband(DisbandCause),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisbandCause {
    LowBattery,
    /// Merging into the group of the given owner.
    Merge(NodeId),
}

impl DisbandCause {
    pub fn name(self) -> &'static str {
        match self {
            DisbandCause::LowBattery => "low_battery",
            DisbandCause::Merge(_) => "merge",
        }
    }

    /// Message each client receives before being released.
    pub fn notice(self) -> MessageKind {
        match self {
            DisbandCause::LowBattery => MessageKind::GroupBye,
            DisbandCause::Merge(target) => MessageKind::MergeWarning(target),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    CapacityFull,
    OutOfRange,
    TargetNotGo,
    /// The requester owns a non-empty group or is already a client.
    RequesterBusy,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::CapacityFull => "capacity_full",
            RejectReason::OutOfRange => "out_of_range",
            RejectReason::TargetNotGo => "target_not_go",
            RejectReason::RequesterBusy => "requester_busy",
        })
    }
}

/// Why a client stopped being a member of its group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetachCause {
    /// The client asked to leave.
    Left,
    /// The owner moved out of radio range.
    LinkLost,
    /// The owner's battery ran out.
    OwnerDied,
    /// The owner disbanded the group.
    Disbanded,
}

impl DetachCause {
    pub fn name(self) -> &'static str {
        match self {
            DetachCause::Left => "left",
            DetachCause::LinkLost => "link_lost",
            DetachCause::OwnerDied => "owner_died",
            DetachCause::Disbanded => "disbanded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberEvent {
    Joined(NodeId),
    Left(NodeId),
}

pub type EffectQueue = VecDeque<(NodeId, Effect)>;

pub struct LinkLayerHandle<'a> {
    me: NodeId,
    now: f64,
    battery: f64,
    neighbors: &'a NeighborSet,
    records: &'a [ServiceRecord],
    rng: &'a mut dyn RngCore,
    queue: &'a mut EffectQueue,
    trace: &'a mut Trace,
}

impl<'a> LinkLayerHandle<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        me: NodeId,
        now: f64,
        battery: f64,
        neighbors: &'a NeighborSet,
        records: &'a [ServiceRecord],
        rng: &'a mut dyn RngCore,
        queue: &'a mut EffectQueue,
        trace: &'a mut Trace,
    ) -> Self {
        Self {
            me,
            now,
            battery,
            neighbors,
            records,
            rng,
            queue,
            trace,
        }
    }

    pub fn me(&self) -> NodeId {
        self.me
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn battery(&self) -> f64 {
        self.battery
    }

    /// Current list of devices in proximity.
    pub fn neighbors(&self) -> &NeighborSet {
        self.neighbors
    }

    pub fn in_range(&self, node: NodeId) -> bool {
        self.neighbors.contains(node)
    }

    /// Last advertised record of `node`, as of the previous step.
    pub fn record(&self, node: NodeId) -> &ServiceRecord {
        &self.records[node.index()]
    }

    pub fn neighbor_records(&self) -> impl Iterator<Item = &ServiceRecord> + '_ {
        self.neighbors.iter().map(|n| &self.records[n.index()])
    }

    pub fn rng(&mut self) -> &mut dyn RngCore {
        self.rng
    }

    pub fn connect(&mut self, target: NodeId) {
        self.queue.push_back((self.me, Effect::Connect(target)));
    }

    pub fn disconnect(&mut self) {
        self.queue.push_back((self.me, Effect::Disconnect));
    }

    pub fn send(&mut self, to: NodeId, kind: MessageKind) {
        self.queue.push_back((self.me, Effect::Send { to, kind }));
    }

    pub fn disband(&mut self, cause: DisbandCause) {
        self.queue.push_back((self.me, Effect::Disband(cause)));
    }

    pub fn trace(&mut self, kind: TraceKind) {
        self.trace.push(self.now, self.me, kind);
    }
}
