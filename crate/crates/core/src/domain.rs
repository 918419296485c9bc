//! Identities, roles, control messages and the per-node blacklist.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Node identity. The ordinal doubles as the MAC address stand-in, so the
/// derived total order is the one the baseline election uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Opaque token standing in for an SSID or a passphrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token(pub u64);

/// Deterministic source of fresh tokens. Never hands out zero, so a zero
/// token can never pass for valid credentials.
#[derive(Debug, Clone)]
pub struct TokenSource {
    next: u64,
}

impl Default for TokenSource {
    fn default() -> Self {
        Self { next: 1 }
    }
}

impl TokenSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> Token {
        let t = Token(self.next);
        self.next += 1;
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    GroupOwner,
    Client,
    /// Owner of an empty group, advertising credentials while it waits for
    /// the election to settle.
    Free,
}

impl Role {
    pub fn holds_credentials(self) -> bool {
        matches!(self, Role::GroupOwner | Role::Free)
    }
}

/// Smallest and largest client capacity a device may report.
pub const MIN_CAPACITY: u32 = 4;
pub const MAX_CAPACITY: u32 = 15;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("group owned by {owner} is full ({capacity} clients)")]
    Full { owner: NodeId, capacity: u32 },
    #[error("{0} cannot be a client of its own group")]
    SelfMembership(NodeId),
    #[error("capacity {0} outside [{MIN_CAPACITY}, {MAX_CAPACITY}]")]
    BadCapacity(u32),
}

/// A group as seen by its owner: the member set excludes the owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRecord {
    pub group_id: Token,
    pub owner: NodeId,
    members: BTreeSet<NodeId>,
    pub credentials: Token,
    capacity: u32,
}

impl GroupRecord {
    pub fn new(owner: NodeId, capacity: u32, tokens: &mut TokenSource) -> Result<Self, GroupError> {
        if !(MIN_CAPACITY..=MAX_CAPACITY).contains(&capacity) {
            return Err(GroupError::BadCapacity(capacity));
        }
        Ok(Self {
            group_id: tokens.fresh(),
            owner,
            members: BTreeSet::new(),
            credentials: tokens.fresh(),
            capacity,
        })
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() >= self.capacity as usize
    }

    pub fn remaining(&self) -> u32 {
        self.capacity.saturating_sub(self.members.len() as u32)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.members.contains(&node)
    }

    /// Adds a client. Re-adding an existing member is a no-op.
    pub fn add(&mut self, node: NodeId) -> Result<(), GroupError> {
        if node == self.owner {
            return Err(GroupError::SelfMembership(node));
        }
        if self.members.contains(&node) {
            return Ok(());
        }
        if self.is_full() {
            return Err(GroupError::Full {
                owner: self.owner,
                capacity: self.capacity,
            });
        }
        self.members.insert(node);
        Ok(())
    }

    pub fn remove(&mut self, node: NodeId) -> bool {
        self.members.remove(&node)
    }

    /// Drops every member and returns them in ordinal order.
    pub fn clear(&mut self) -> Vec<NodeId> {
        std::mem::take(&mut self.members).into_iter().collect()
    }

    /// Same owner and capacity, fresh identity and credentials, no members.
    pub fn recreate(&self, tokens: &mut TokenSource) -> Self {
        Self {
            group_id: tokens.fresh(),
            owner: self.owner,
            members: BTreeSet::new(),
            credentials: tokens.fresh(),
            capacity: self.capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageKind {
    GroupInfo(BTreeSet<NodeId>),
    GroupBye,
    VisibilityReq(NodeId),
    VisibilityResp(bool),
    MergeWarning(NodeId),
}

impl MessageKind {
    pub fn name(&self) -> &'static str {
        match self {
            MessageKind::GroupInfo(_) => "GROUP_INFO",
            MessageKind::GroupBye => "GROUP_BYE",
            MessageKind::VisibilityReq(_) => "VISIBILITY_REQ",
            MessageKind::VisibilityResp(_) => "VISIBILITY_RESP",
            MessageKind::MergeWarning(_) => "MERGE_WARNING",
        }
    }

    /// Whether this variant may only be sent by a group owner.
    pub fn owner_only(&self) -> bool {
        !matches!(self, MessageKind::VisibilityResp(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlMessage {
    pub sender: NodeId,
    pub kind: MessageKind,
}

impl ControlMessage {
    pub fn new(sender: NodeId, kind: MessageKind) -> Self {
        Self { sender, kind }
    }
}

/// Timed exclusion list. Expiry is exclusive: an entry added at `now` with
/// `hold` blocks on `[now, now + hold)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Blacklist {
    entries: BTreeMap<NodeId, f64>,
}

impl Blacklist {
    pub fn new() -> Self {
        Self::default()
    }

    /// Re-adding keeps whichever expiry is later.
    pub fn add(&mut self, who: NodeId, now: f64, hold: f64) {
        debug_assert!(hold > 0.0, "blacklist hold must be positive");
        let expiry = now + hold;
        self.entries
            .entry(who)
            .and_modify(|e| *e = e.max(expiry))
            .or_insert(expiry);
    }

    pub fn is_blocked(&self, who: NodeId, now: f64) -> bool {
        self.entries.get(&who).is_some_and(|&expiry| now < expiry)
    }

    pub fn expiry(&self, who: NodeId) -> Option<f64> {
        self.entries.get(&who).copied()
    }

    /// Drops entries that can no longer block anything.
    pub fn purge(&mut self, now: f64) {
        self.entries.retain(|_, expiry| now < *expiry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// What a node advertises during discovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceRecord {
    pub node: NodeId,
    pub role: Role,
    pub suitability: f64,
    pub group_id: Option<Token>,
    pub credentials: Option<Token>,
    pub group_size: u32,
}

impl ServiceRecord {
    /// Record for a node that owns `group` (possibly empty).
    pub fn owner(group: &GroupRecord, suitability: f64) -> Self {
        let role = if group.is_empty() {
            Role::Free
        } else {
            Role::GroupOwner
        };
        Self {
            node: group.owner,
            role,
            suitability: suitability.clamp(0.0, 1.0),
            group_id: Some(group.group_id),
            credentials: Some(group.credentials),
            group_size: group.len() as u32,
        }
    }

    pub fn client(node: NodeId, suitability: f64) -> Self {
        Self {
            node,
            role: Role::Client,
            suitability: suitability.clamp(0.0, 1.0),
            group_id: None,
            credentials: None,
            group_size: 0,
        }
    }

    pub fn has_credentials(&self) -> bool {
        self.credentials.is_some()
    }
}
