//! Structured event trace and the invariant checks run over it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::{self, Write};

use crate::domain::{MessageKind, NodeId, Role};
use crate::link::{DetachCause, DisbandCause, RejectReason};
use crate::protocol::{NodeState, ProtocolKind};

#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind {
    /// Outcome of one main-loop classification; `None` means no action.
    Decision {
        state: Option<NodeState>,
        battery: f64,
        members: u32,
    },
    Elected {
        winner: NodeId,
    },
    Connected {
        go: NodeId,
        group_size: u32,
        capacity: u32,
    },
    Rejected {
        go: NodeId,
        reason: RejectReason,
    },
    Blacklisted {
        who: NodeId,
        until: f64,
    },
    Sent {
        to: NodeId,
        kind: MessageKind,
    },
    Disbanded {
        members: Vec<NodeId>,
        cause: DisbandCause,
    },
    Detached {
        go: NodeId,
        cause: DetachCause,
    },
    Transition {
        from: Role,
        to: Role,
        cause: &'static str,
    },
    Died,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub node: NodeId,
    pub kind: TraceKind,
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::GroupOwner => "GO",
        Role::Client => "CLIENT",
        Role::Free => "FREE",
    }
}

fn join_ids(ids: impl IntoIterator<Item = NodeId>) -> String {
    let mut s = String::new();
    for (i, id) in ids.into_iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        let _ = write!(s, "{}", id.0);
    }
    s
}

impl TraceEvent {
    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            TraceKind::Decision { .. } => "decision",
            TraceKind::Elected { .. } => "elected",
            TraceKind::Connected { .. } => "connected",
            TraceKind::Rejected { .. } => "rejected",
            TraceKind::Blacklisted { .. } => "blacklisted",
            TraceKind::Sent { .. } => "sent",
            TraceKind::Disbanded { .. } => "disbanded",
            TraceKind::Detached { .. } => "detached",
            TraceKind::Transition { .. } => "transition",
            TraceKind::Died => "died",
        }
    }

    fn payload(&self) -> String {
        match &self.kind {
            TraceKind::Decision {
                state,
                battery,
                members,
            } => format!(
                "state={} battery={battery:.6} members={members}",
                state.map_or("NONE", NodeState::name)
            ),
            TraceKind::Elected { winner } => format!("winner={}", winner.0),
            TraceKind::Connected {
                go,
                group_size,
                capacity,
            } => {
                format!("go={} size={group_size} capacity={capacity}", go.0)
            }
            TraceKind::Rejected { go, reason } => format!("go={} reason={reason}", go.0),
            TraceKind::Blacklisted { who, until } => format!("who={} until={until}", who.0),
            TraceKind::Sent { to, kind } => {
                let arg = match kind {
                    MessageKind::GroupInfo(m) => join_ids(m.iter().copied()),
                    MessageKind::VisibilityReq(g) | MessageKind::MergeWarning(g) => g.0.to_string(),
                    MessageKind::VisibilityResp(v) => v.to_string(),
                    MessageKind::GroupBye => String::new(),
                };
                format!("to={} msg={} arg={arg}", to.0, kind.name())
            }
            TraceKind::Disbanded { members, cause } => {
                format!(
                    "cause={} members={}",
                    cause.name(),
                    join_ids(members.iter().copied())
                )
            }
            TraceKind::Detached { go, cause } => format!("go={} cause={}", go.0, cause.name()),
            TraceKind::Transition { from, to, cause } => {
                format!(
                    "from={} to={} cause={cause}",
                    role_name(*from),
                    role_name(*to)
                )
            }
            TraceKind::Died => String::new(),
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.time,
            self.node.0,
            self.kind_name(),
            self.payload()
        )
    }
}

pub const TRACE_HEADER: &str = "time_s\tnode\tevent\tpayload";

/// Event log. Disabled traces drop everything pushed to them.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn enabled() -> Self {
        Self {
            enabled: true,
            events: Vec::new(),
        }
    }

    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    #[inline]
    pub fn push(&mut self, time: f64, node: NodeId, kind: TraceKind) {
        if self.enabled {
            self.events.push(TraceEvent { time, node, kind });
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for e in &self.events {
            writeln!(w, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    SingleGroup,
    Capacity,
    Conservation,
    DeadNode,
    BlacklistRespect,
    Go2Timing,
    DisbandNotification,
    BaselineMessages,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::SingleGroup => "single_group",
            Rule::Capacity => "capacity",
            Rule::Conservation => "conservation",
            Rule::DeadNode => "dead_node",
            Rule::BlacklistRespect => "blacklist_respect",
            Rule::Go2Timing => "go2_timing",
            Rule::DisbandNotification => "disband_notification",
            Rule::BaselineMessages => "baseline_messages",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub time: f64,
    pub node: Option<NodeId>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(
                f,
                "t={} {} [{}] {}",
                self.time,
                n,
                self.rule.name(),
                self.detail
            ),
            None => write!(f, "t={} [{}] {}", self.time, self.rule.name(), self.detail),
        }
    }
}

/// Replays a trace and reports every protocol-level rule it breaks.
///
/// Structural rules (single membership, conservation) need the full node
/// state and are checked by the kernel instead.
pub fn check_trace(events: &[TraceEvent], protocol: ProtocolKind, res_th: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut blocked: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    // (owner, member) pairs notified at `time`
    let mut notified: BTreeMap<NodeId, (f64, BTreeSet<NodeId>)> = BTreeMap::new();

    let mut violation = |e: &TraceEvent, rule: Rule, detail: String| {
        out.push(Violation {
            time: e.time,
            node: Some(e.node),
            rule,
            detail,
        });
    };

    for e in events {
        let is_blocked = |who: NodeId| {
            blocked
                .get(&(e.node, who))
                .is_some_and(|&until| e.time < until)
        };
        match &e.kind {
            TraceKind::Blacklisted { who, until } => {
                let entry = blocked.entry((e.node, *who)).or_insert(*until);
                *entry = entry.max(*until);
            }
            TraceKind::Elected { winner } if *winner != e.node && is_blocked(*winner) => {
                violation(
                    e,
                    Rule::BlacklistRespect,
                    format!("elected blacklisted {winner}"),
                );
            }
            TraceKind::Connected {
                go,
                group_size,
                capacity,
            } => {
                if is_blocked(*go) {
                    violation(
                        e,
                        Rule::BlacklistRespect,
                        format!("joined blacklisted {go}"),
                    );
                }
                if group_size > capacity {
                    violation(
                        e,
                        Rule::Capacity,
                        format!("group of {go} has {group_size}/{capacity}"),
                    );
                }
            }
            TraceKind::Rejected { go, .. } if is_blocked(*go) => {
                violation(e, Rule::BlacklistRespect, format!("tried blacklisted {go}"));
            }
            TraceKind::Decision {
                state,
                battery,
                members,
            } if protocol == ProtocolKind::Wfdgm => {
                let owner = !matches!(state, Some(NodeState::C1));
                let should_disband = owner && *members > 0 && *battery < res_th;
                let disbands = matches!(state, Some(NodeState::Go2));
                if should_disband != disbands {
                    violation(
                        e,
                        Rule::Go2Timing,
                        format!(
                            "state {:?} with battery {battery} and {members} members",
                            state
                        ),
                    );
                }
            }
            TraceKind::Sent { to, kind } => {
                if protocol == ProtocolKind::Baseline
                    && matches!(
                        kind,
                        MessageKind::VisibilityReq(_)
                            | MessageKind::VisibilityResp(_)
                            | MessageKind::MergeWarning(_)
                    )
                {
                    violation(
                        e,
                        Rule::BaselineMessages,
                        format!("baseline sent {}", kind.name()),
                    );
                }
                if matches!(kind, MessageKind::GroupBye | MessageKind::MergeWarning(_)) {
                    let slot = notified
                        .entry(e.node)
                        .or_insert_with(|| (e.time, BTreeSet::new()));
                    if slot.0 != e.time {
                        *slot = (e.time, BTreeSet::new());
                    }
                    slot.1.insert(*to);
                }
            }
            TraceKind::Disbanded { members, .. } => {
                let told = notified
                    .remove(&e.node)
                    .filter(|(t, _)| *t == e.time)
                    .map(|(_, s)| s)
                    .unwrap_or_default();
                let missing: Vec<_> = members.iter().filter(|m| !told.contains(m)).collect();
                if !missing.is_empty() {
                    violation(
                        e,
                        Rule::DisbandNotification,
                        format!("disbanded without notifying {missing:?}"),
                    );
                }
            }
            _ => {}
        }
    }
    out
}
