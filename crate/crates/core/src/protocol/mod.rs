//! Per-node group management state machines.

pub mod baseline;
pub mod wfdgm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::NeighborSet;
use crate::domain::{ControlMessage, GroupRecord, NodeId, Role, ServiceRecord};
use crate::link::{DetachCause, LinkLayerHandle, MemberEvent, RejectReason};

pub use baseline::BaselineState;
pub use wfdgm::{NodeProtocolState, ProtocolParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Wfdgm,
    Baseline,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Wfdgm => "wfdgm",
            ProtocolKind::Baseline => "baseline",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wfdgm" | "wfd-gm" => Ok(ProtocolKind::Wfdgm),
            "baseline" => Ok(ProtocolKind::Baseline),
            other => Err(format!(
                "unknown protocol `{other}` (expected wfdgm or baseline)"
            )),
        }
    }
}

/// Main-loop state of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeState {
    /// Owner without clients: run the election.
    Go1,
    /// Owner with clients whose battery fell below the threshold.
    Go2,
    /// Owner with clients that sees other owners.
    Go3,
    /// Client.
    C1,
}

impl NodeState {
    pub fn name(self) -> &'static str {
        match self {
            NodeState::Go1 => "GO1",
            NodeState::Go2 => "GO2",
            NodeState::Go3 => "GO3",
            NodeState::C1 => "C1",
        }
    }
}

/// Inputs a node needs to build its own discovery record.
#[derive(Debug, Clone, Copy)]
pub struct RecordContext<'a> {
    pub battery: f64,
    pub neighbors: &'a NeighborSet,
}

/// Behaviour shared by every group management protocol the kernel can drive.
///
/// The kernel owns the truth about who is connected to whom and reports it
/// through the `on_*` callbacks; agents mirror it in their own state and
/// act only through the handle.
pub trait GroupAgent {
    fn id(&self) -> NodeId;

    /// The group this node owns. Meaningless while it is a client.
    fn group(&self) -> &GroupRecord;

    fn current_go(&self) -> Option<NodeId>;

    fn role(&self) -> Role {
        if self.current_go().is_some() {
            Role::Client
        } else if self.group().is_empty() {
            Role::Free
        } else {
            Role::GroupOwner
        }
    }

    fn service_record(&self, ctx: RecordContext<'_>) -> ServiceRecord;

    /// Called once at start-up with the initial neighbour set.
    fn seed_neighbors(&mut self, _initial: &NeighborSet) {}

    /// Called every step with the current neighbour set.
    fn observe_neighbors(&mut self, _current: &NeighborSet, _now: f64) {}

    /// Called every decision period.
    fn tick(&mut self, link: &mut LinkLayerHandle<'_>);

    fn on_message(&mut self, msg: &ControlMessage, link: &mut LinkLayerHandle<'_>);

    /// Membership change of the owned group. The kernel has already
    /// checked capacity.
    fn on_member_event(&mut self, event: MemberEvent, link: &mut LinkLayerHandle<'_>);

    fn on_connect_result(
        &mut self,
        go: NodeId,
        result: Result<(), RejectReason>,
        link: &mut LinkLayerHandle<'_>,
    );

    /// The node stopped being a client; `fresh` is its newly created empty group.
    fn on_detached(&mut self, go: NodeId, fresh: GroupRecord, cause: DetachCause, now: f64);

    /// The node released all clients; `fresh` replaces the old group.
    fn on_disbanded(&mut self, fresh: GroupRecord, now: f64);
}
