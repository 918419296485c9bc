//! Discrete-time engine: advances the clock one step at a time and owns the
//! ground truth about positions, links, batteries and group membership.
//!
//! Each step runs, in order: mobility, proximity, link-loss detection,
//! neighbour observation, due protocol decisions, effect application,
//! battery integration, metric sampling and discovery-record refresh.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::battery::{BatteryLoad, BatteryModelParams, BatteryParamError, BatteryState};
use crate::context::NeighborSet;
use crate::domain::{
    ControlMessage, GroupError, NodeId, Role, ServiceRecord, TokenSource, MAX_CAPACITY,
    MIN_CAPACITY,
};
use crate::link::{DetachCause, Effect, EffectQueue, LinkLayerHandle, MemberEvent, RejectReason};
use crate::metrics::{
    battery_stats, BatteryStats, Ccdf, Components, ConnectivityGraph, ContactIntegrator,
    DiffusionState, ReachabilitySamples,
};
use crate::mobility::{Mobility, Position};
use crate::protocol::{
    BaselineState, GroupAgent, NodeProtocolState, ProtocolKind, ProtocolParams, RecordContext,
};
use crate::proximity::ProximityIndex;
use crate::trace::{Rule, Trace, TraceKind, Violation};

const STREAM_SETUP: u64 = 0;
const STREAM_SCENARIO: u64 = 1;
const NODE_STREAM_BASE: u64 = 16;

/// Generator for one independent random stream of a run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream used to lay out a scenario.
pub fn scenario_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, STREAM_SCENARIO)
}

fn protocol_rng(seed: u64, node: usize) -> ChaCha8Rng {
    stream_rng(seed, NODE_STREAM_BASE + 2 * node as u64)
}

fn mobility_rng(seed: u64, node: usize) -> ChaCha8Rng {
    stream_rng(seed, NODE_STREAM_BASE + 2 * node as u64 + 1)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("{0} must be finite and positive, got {1}")]
    NotPositive(&'static str, f64),
    #[error("duration must be finite and non-negative, got {0}")]
    Duration(f64),
    #[error("{name} ({value} s) is not a multiple of the step ({tick} s)")]
    NotMultiple {
        name: &'static str,
        value: f64,
        tick: f64,
    },
    #[error("decision period {t_d} s is shorter than the step {tick} s")]
    PeriodBelowTick { t_d: f64, tick: f64 },
    #[error("capacity range [{0}, {1}] must lie within [4, 15]")]
    CapacityRange(u32, u32),
    #[error("scenario places {positions} nodes but the configuration asks for {nodes}")]
    NodeCount { positions: usize, nodes: usize },
    #[error(transparent)]
    Battery(#[from] BatteryParamError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("protocol parameters: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub duration_s: f64,
    pub tick_s: f64,
    pub t_d: f64,
    pub radio_range_m: f64,
    pub seed: u64,
    pub node_count: usize,
    pub capacity_min: u32,
    pub capacity_max: u32,
    /// Reachability sampling period.
    pub sample_period_s: f64,
    pub diffusion_period_s: f64,
    pub battery: BatteryModelParams,
    pub trace: bool,
    /// Run the structural membership scan after every step.
    pub check_invariants: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration_s: 3600.0,
            tick_s: 1.0,
            t_d: 30.0,
            radio_range_m: 100.0,
            seed: 1,
            node_count: 0,
            capacity_min: MIN_CAPACITY,
            capacity_max: MAX_CAPACITY,
            sample_period_s: 30.0,
            diffusion_period_s: 1800.0,
            battery: BatteryModelParams::default(),
            trace: false,
            check_invariants: cfg!(debug_assertions),
        }
    }
}

fn steps_of(name: &'static str, value: f64, tick: f64) -> Result<u64, SimError> {
    let k = (value / tick).round();
    if (k * tick - value).abs() > 1e-9 * value.abs().max(1.0) {
        return Err(SimError::NotMultiple { name, value, tick });
    }
    Ok(k as u64)
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SimError::NotPositive(name, v))
            }
        };
        positive("tick", self.tick_s)?;
        positive("t_d", self.t_d)?;
        positive("radio range", self.radio_range_m)?;
        positive("sample period", self.sample_period_s)?;
        positive("diffusion period", self.diffusion_period_s)?;
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(SimError::Duration(self.duration_s));
        }
        if self.t_d < self.tick_s {
            return Err(SimError::PeriodBelowTick {
                t_d: self.t_d,
                tick: self.tick_s,
            });
        }
        steps_of("duration", self.duration_s, self.tick_s)?;
        steps_of("t_d", self.t_d, self.tick_s)?;
        steps_of("sample period", self.sample_period_s, self.tick_s)?;
        steps_of("diffusion period", self.diffusion_period_s, self.tick_s)?;
        if self.capacity_min < MIN_CAPACITY
            || self.capacity_max > MAX_CAPACITY
            || self.capacity_min > self.capacity_max
        {
            return Err(SimError::CapacityRange(
                self.capacity_min,
                self.capacity_max,
            ));
        }
        self.battery.validate(self.capacity_max)?;
        Ok(())
    }
}

/// Initial layout plus movement model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub positions: Vec<Position>,
    pub mobility: Mobility,
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub protocol: ProtocolKind,
    pub scenario: String,
    pub seed: u64,
    pub t_d: f64,
    pub duration_s: f64,
    pub capacities: Vec<u32>,
    /// (time, mean fraction of messages held).
    pub diffusion: Vec<(f64, f64)>,
    pub graph: ConnectivityGraph,
    pub components: Components,
    pub reachability: ReachabilitySamples,
    pub final_battery: Vec<f64>,
    pub death_time: Vec<Option<f64>>,
    pub trace: Trace,
    /// Structural rule breaks found by the per-step scan.
    pub violations: Vec<Violation>,
}

impl RunResult {
    pub fn node_count(&self) -> usize {
        self.final_battery.len()
    }

    pub fn alive(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.death_time
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_none())
            .map(|(i, _)| NodeId(i as u32))
    }

    pub fn alive_count(&self) -> usize {
        self.alive().count()
    }

    pub fn all_dead(&self) -> bool {
        self.node_count() > 0 && self.death_time.iter().all(Option::is_some)
    }

    /// Final levels, or discharge times over the run length when every
    /// node has died.
    pub fn battery_values(&self) -> Vec<f64> {
        if self.all_dead() && self.duration_s > 0.0 {
            self.death_time
                .iter()
                .map(|d| d.unwrap_or(self.duration_s) / self.duration_s)
                .collect()
        } else {
            self.final_battery.clone()
        }
    }

    pub fn battery_stats(&self) -> Option<BatteryStats> {
        battery_stats(&self.battery_values())
    }

    pub fn final_diffusion(&self) -> Option<f64> {
        self.diffusion.last().map(|&(_, f)| f)
    }

    pub fn diffusion_at(&self, t: f64) -> Option<f64> {
        self.diffusion
            .iter()
            .find(|&&(s, _)| (s - t).abs() < 1e-9)
            .map(|&(_, f)| f)
    }

    /// First sample time at which diffusion reached `level`.
    pub fn time_to_reach(&self, level: f64) -> Option<f64> {
        self.diffusion
            .iter()
            .find(|&&(_, f)| f >= level)
            .map(|&(t, _)| t)
    }

    /// Whether the largest component holds every node still alive.
    pub fn largest_holds_all_alive(&self) -> bool {
        let largest: BTreeSet<NodeId> = self.components.largest().iter().copied().collect();
        self.alive().all(|n| largest.contains(&n))
    }

    pub fn ccdf(&self) -> Vec<(f64, f64)> {
        Ccdf::new(self.reachability.probabilities()).on_unit_grid(101)
    }
}

/// Ground-truth membership, kept by the kernel independently of what the
/// agents believe.
#[derive(Debug, Clone)]
struct Membership {
    go_of: Vec<Option<NodeId>>,
    clients: Vec<BTreeSet<NodeId>>,
    capacity: Vec<u32>,
    version: Vec<u64>,
    next_version: u64,
}

impl Membership {
    fn bump(&mut self, owner: NodeId) {
        self.next_version += 1;
        self.version[owner.index()] = self.next_version;
    }
}

/// Per-step state every link handle borrows from.
struct World {
    now: f64,
    neighbors: Vec<NeighborSet>,
    records: Vec<ServiceRecord>,
    battery: Vec<BatteryState>,
    rngs: Vec<ChaCha8Rng>,
    queue: EffectQueue,
    trace: Trace,
}

impl World {
    fn handle(&mut self, node: NodeId) -> LinkLayerHandle<'_> {
        let i = node.index();
        LinkLayerHandle::new(
            node,
            self.now,
            self.battery[i].level(),
            &self.neighbors[i],
            &self.records,
            &mut self.rngs[i],
            &mut self.queue,
            &mut self.trace,
        )
    }
}

pub struct Simulator<A: GroupAgent + AgentKind> {
    cfg: SimConfig,
    scenario: String,
    agents: Vec<A>,
    world: World,
    m: Membership,
    alive: Vec<bool>,
    death_time: Vec<Option<f64>>,
    positions: Vec<Position>,
    mobility: Mobility,
    mob_rngs: Vec<ChaCha8Rng>,
    proximity: ProximityIndex,
    proximity_dirty: bool,
    tokens: TokenSource,
    graph: ConnectivityGraph,
    integrator: ContactIntegrator,
    reach: ReachabilitySamples,
    diffusion: DiffusionState,
    violations: Vec<Violation>,
    step: u64,
    total_steps: u64,
    td_steps: u64,
    sample_steps: u64,
    diffusion_steps: u64,
}

impl<A: GroupAgent + AgentKind> Simulator<A> {
    /// Builds the run. `make_agent` boots one node given its id and capacity.
    pub fn new<F>(cfg: SimConfig, scenario: Scenario, mut make_agent: F) -> Result<Self, SimError>
    where
        F: FnMut(NodeId, u32, &mut TokenSource) -> Result<A, GroupError>,
    {
        cfg.validate()?;
        let n = cfg.node_count;
        if scenario.positions.len() != n {
            return Err(SimError::NodeCount {
                positions: scenario.positions.len(),
                nodes: n,
            });
        }
        let mut setup = stream_rng(cfg.seed, STREAM_SETUP);
        let capacity: Vec<u32> = (0..n)
            .map(|_| rand::Rng::random_range(&mut setup, cfg.capacity_min..=cfg.capacity_max))
            .collect();
        let mut tokens = TokenSource::new();
        let agents = (0..n)
            .map(|i| make_agent(NodeId(i as u32), capacity[i], &mut tokens))
            .collect::<Result<Vec<_>, _>>()?;

        let tick = cfg.tick_s;
        let world = World {
            now: 0.0,
            neighbors: vec![NeighborSet::new(); n],
            records: agents
                .iter()
                .map(|a| {
                    a.service_record(RecordContext {
                        battery: 1.0,
                        neighbors: &NeighborSet::new(),
                    })
                })
                .collect(),
            battery: vec![BatteryState::full(); n],
            rngs: (0..n).map(|i| protocol_rng(cfg.seed, i)).collect(),
            queue: EffectQueue::new(),
            trace: if cfg.trace {
                Trace::enabled()
            } else {
                Trace::disabled()
            },
        };
        let mut sim = Self {
            scenario: scenario.name,
            agents,
            world,
            m: Membership {
                go_of: vec![None; n],
                clients: vec![BTreeSet::new(); n],
                capacity,
                version: vec![0; n],
                next_version: 0,
            },
            alive: vec![true; n],
            death_time: vec![None; n],
            positions: scenario.positions,
            mobility: scenario.mobility,
            mob_rngs: (0..n).map(|i| mobility_rng(cfg.seed, i)).collect(),
            proximity: ProximityIndex::new(cfg.radio_range_m),
            proximity_dirty: true,
            tokens,
            graph: ConnectivityGraph::new(n),
            integrator: ContactIntegrator::new(n),
            reach: ReachabilitySamples::new(n, cfg.sample_period_s),
            diffusion: DiffusionState::new(n),
            violations: Vec::new(),
            step: 0,
            total_steps: steps_of("duration", cfg.duration_s, tick)?,
            td_steps: steps_of("t_d", cfg.t_d, tick)?.max(1),
            sample_steps: steps_of("sample period", cfg.sample_period_s, tick)?.max(1),
            diffusion_steps: steps_of("diffusion period", cfg.diffusion_period_s, tick)?.max(1),
            cfg,
        };
        sim.refresh_proximity();
        for (a, nb) in sim.agents.iter_mut().zip(&sim.world.neighbors) {
            a.seed_neighbors(nb);
        }
        sim.refresh_records();
        if sim.total_steps > 0 {
            sim.diffusion.sample(0.0);
        }
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn now(&self) -> f64 {
        self.world.now
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.total_steps
    }

    pub fn node_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, node: NodeId) -> &A {
        &self.agents[node.index()]
    }

    pub fn position(&self, node: NodeId) -> Position {
        self.positions[node.index()]
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn neighbors(&self, node: NodeId) -> &NeighborSet {
        &self.world.neighbors[node.index()]
    }

    pub fn record(&self, node: NodeId) -> &ServiceRecord {
        &self.world.records[node.index()]
    }

    pub fn go_of(&self, node: NodeId) -> Option<NodeId> {
        self.m.go_of[node.index()]
    }

    pub fn clients(&self, owner: NodeId) -> &BTreeSet<NodeId> {
        &self.m.clients[owner.index()]
    }

    pub fn capacity(&self, node: NodeId) -> u32 {
        self.m.capacity[node.index()]
    }

    pub fn role(&self, node: NodeId) -> Role {
        if self.go_of(node).is_some() {
            Role::Client
        } else if self.clients(node).is_empty() {
            Role::Free
        } else {
            Role::GroupOwner
        }
    }

    pub fn is_alive(&self, node: NodeId) -> bool {
        self.alive[node.index()]
    }

    pub fn battery(&self, node: NodeId) -> f64 {
        self.world.battery[node.index()].level()
    }

    pub fn diffusion(&self) -> &DiffusionState {
        &self.diffusion
    }

    pub fn trace(&self) -> &Trace {
        &self.world.trace
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// Groups with at least one client: owner first, then its clients.
    pub fn groups(&self) -> Vec<Vec<NodeId>> {
        (0..self.node_count())
            .filter(|&i| !self.m.clients[i].is_empty())
            .map(|i| {
                std::iter::once(NodeId(i as u32))
                    .chain(self.m.clients[i].iter().copied())
                    .collect()
            })
            .collect()
    }

    /// Forces `node`'s battery level, for scripted scenarios.
    pub fn set_battery(&mut self, node: NodeId, level: f64) {
        self.world.battery[node.index()] = BatteryState::with_level(level);
    }

    /// Moves `node`, for scripted scenarios. Takes effect at the next step.
    pub fn set_position(&mut self, node: NodeId, p: Position) {
        self.positions[node.index()] = p;
        self.proximity_dirty = true;
    }

    fn refresh_proximity(&mut self) {
        self.proximity
            .rebuild(&self.positions, &self.alive, &mut self.world.neighbors);
        self.proximity_dirty = false;
    }

    fn refresh_records(&mut self) {
        for (i, a) in self.agents.iter().enumerate() {
            if self.alive[i] {
                let ctx = RecordContext {
                    battery: self.world.battery[i].level(),
                    neighbors: &self.world.neighbors[i],
                };
                self.world.records[i] = a.service_record(ctx);
            }
        }
    }

    /// Advances one step. Returns false once the run is over.
    pub fn step(&mut self) -> bool {
        if self.is_finished() {
            return false;
        }
        let dt = self.cfg.tick_s;
        let start = self.step as f64 * dt;
        self.step += 1;
        let now = self.step as f64 * dt;
        self.world.now = now;

        // mobility and proximity
        let moving = !matches!(self.mobility, Mobility::Static);
        if moving {
            self.mobility.advance(
                start,
                dt,
                &self.alive,
                &mut self.positions,
                &mut self.mob_rngs,
            );
        }
        let neighbors_changed = moving || self.proximity_dirty;
        if neighbors_changed {
            self.refresh_proximity();
            self.detach_lost_links();
            for (i, a) in self.agents.iter_mut().enumerate() {
                if self.alive[i] {
                    a.observe_neighbors(&self.world.neighbors[i], now);
                }
            }
        }

        // protocol decisions, staggered by ordinal
        let phase = self.step % self.td_steps;
        for i in 0..self.node_count() {
            if self.alive[i] && (i as u64) % self.td_steps == phase {
                let mut link = self.world.handle(NodeId(i as u32));
                self.agents[i].tick(&mut link);
            }
        }
        self.apply_effects();

        self.integrate_battery(dt);
        self.apply_effects();

        self.sample_metrics(start);
        if self.cfg.check_invariants {
            self.scan_invariants();
        }
        self.refresh_records();
        if self.is_finished() {
            self.integrator.close_all(now, &mut self.graph);
        }
        true
    }

    pub fn run_to_end(mut self) -> RunResult {
        while self.step() {}
        self.finish()
    }

    /// Stops the run at the current time and collects its results.
    pub fn finish(mut self) -> RunResult {
        let now = self.world.now;
        if !self.is_finished() {
            self.integrator.close_all(now, &mut self.graph);
        }
        RunResult {
            protocol: A::KIND,
            scenario: self.scenario,
            seed: self.cfg.seed,
            t_d: self.cfg.t_d,
            duration_s: now,
            capacities: self.m.capacity,
            diffusion: self.diffusion.into_samples(),
            components: self.graph.connected_components(),
            graph: self.graph,
            reachability: self.reach,
            final_battery: self.world.battery.iter().map(BatteryState::level).collect(),
            death_time: self.death_time,
            trace: self.world.trace,
            violations: self.violations,
        }
    }

    fn detach_lost_links(&mut self) {
        for i in 0..self.node_count() {
            let Some(go) = self.m.go_of[i] else { continue };
            if !self.world.neighbors[i].contains(go) {
                let c = NodeId(i as u32);
                self.detach(c, go, DetachCause::LinkLost);
                if self.alive[go.index()] {
                    let mut link = self.world.handle(go);
                    self.agents[go.index()].on_member_event(MemberEvent::Left(c), &mut link);
                }
            }
        }
        self.apply_effects();
    }

    /// Removes `client` from `go`'s group and hands it a fresh empty group.
    /// The owner is not notified here.
    fn detach(&mut self, client: NodeId, go: NodeId, cause: DetachCause) {
        self.m.clients[go.index()].remove(&client);
        self.m.bump(go);
        self.m.go_of[client.index()] = None;
        let fresh = self.agents[client.index()]
            .group()
            .recreate(&mut self.tokens);
        self.agents[client.index()].on_detached(go, fresh, cause, self.world.now);
        self.world
            .trace
            .push(self.world.now, client, TraceKind::Detached { go, cause });
        if self.m.clients[go.index()].is_empty() {
            self.world.trace.push(
                self.world.now,
                go,
                TraceKind::Transition {
                    from: Role::GroupOwner,
                    to: Role::Free,
                    cause: cause.name(),
                },
            );
        }
    }

    fn apply_effects(&mut self) {
        while let Some((sender, effect)) = self.world.queue.pop_front() {
            if !self.alive[sender.index()] {
                continue;
            }
            match effect {
                Effect::Connect(target) => self.apply_connect(sender, target),
                Effect::Disconnect => {
                    if let Some(go) = self.m.go_of[sender.index()] {
                        self.detach(sender, go, DetachCause::Left);
                        let mut link = self.world.handle(go);
                        self.agents[go.index()]
                            .on_member_event(MemberEvent::Left(sender), &mut link);
                    }
                }
                Effect::Send { to, kind } => {
                    let linked = self.m.go_of[to.index()] == Some(sender)
                        || self.m.go_of[sender.index()] == Some(to);
                    if !self.alive[to.index()] || !linked {
                        continue;
                    }
                    self.world.trace.push(
                        self.world.now,
                        sender,
                        TraceKind::Sent {
                            to,
                            kind: kind.clone(),
                        },
                    );
                    let msg = ControlMessage::new(sender, kind);
                    let mut link = self.world.handle(to);
                    self.agents[to.index()].on_message(&msg, &mut link);
                }
                Effect::Disband(cause) => {
                    let members: Vec<NodeId> =
                        self.m.clients[sender.index()].iter().copied().collect();
                    let notice = cause.notice();
                    for &c in &members {
                        self.world.trace.push(
                            self.world.now,
                            sender,
                            TraceKind::Sent {
                                to: c,
                                kind: notice.clone(),
                            },
                        );
                        let msg = ControlMessage::new(sender, notice.clone());
                        let mut link = self.world.handle(c);
                        self.agents[c.index()].on_message(&msg, &mut link);
                    }
                    for &c in &members {
                        self.detach(c, sender, DetachCause::Disbanded);
                    }
                    let fresh = self.agents[sender.index()]
                        .group()
                        .recreate(&mut self.tokens);
                    self.agents[sender.index()].on_disbanded(fresh, self.world.now);
                    self.m.bump(sender);
                    self.world.trace.push(
                        self.world.now,
                        sender,
                        TraceKind::Disbanded { members, cause },
                    );
                }
            }
        }
    }

    fn check_connect(&self, requester: NodeId, target: NodeId) -> Result<(), RejectReason> {
        let (r, t) = (requester.index(), target.index());
        if self.m.go_of[r].is_some() || !self.m.clients[r].is_empty() {
            return Err(RejectReason::RequesterBusy);
        }
        if target == requester || !self.alive[t] || !self.world.neighbors[r].contains(target) {
            return Err(RejectReason::OutOfRange);
        }
        if self.m.go_of[t].is_some() {
            return Err(RejectReason::TargetNotGo);
        }
        if self.m.clients[t].len() as u32 >= self.m.capacity[t] {
            return Err(RejectReason::CapacityFull);
        }
        Ok(())
    }

    fn apply_connect(&mut self, requester: NodeId, target: NodeId) {
        let result = self.check_connect(requester, target);
        let now = self.world.now;
        match result {
            Ok(()) => {
                let t = target.index();
                let mut members = Vec::with_capacity(self.m.clients[t].len() + 1);
                members.push(target);
                members.extend(self.m.clients[t].iter().copied());
                self.diffusion.on_join(requester, &members);

                let was_empty = self.m.clients[t].is_empty();
                self.m.clients[t].insert(requester);
                self.m.go_of[requester.index()] = Some(target);
                self.m.bump(target);
                let group_size = self.m.clients[t].len() as u32;
                let capacity = self.m.capacity[t];
                self.world.trace.push(
                    now,
                    requester,
                    TraceKind::Connected {
                        go: target,
                        group_size,
                        capacity,
                    },
                );
                if was_empty {
                    self.world.trace.push(
                        now,
                        target,
                        TraceKind::Transition {
                            from: Role::Free,
                            to: Role::GroupOwner,
                            cause: "first_client",
                        },
                    );
                }
            }
            Err(reason) => {
                self.world
                    .trace
                    .push(now, requester, TraceKind::Rejected { go: target, reason });
            }
        }
        let mut link = self.world.handle(requester);
        self.agents[requester.index()].on_connect_result(target, result, &mut link);
        if result.is_ok() {
            let mut link = self.world.handle(target);
            self.agents[target.index()].on_member_event(MemberEvent::Joined(requester), &mut link);
        }
    }

    fn load_of(&self, i: usize) -> BatteryLoad {
        if self.m.go_of[i].is_some() {
            BatteryLoad::Client
        } else {
            BatteryLoad::Owner {
                clients: self.m.clients[i].len() as u32,
            }
        }
    }

    fn integrate_battery(&mut self, dt: f64) {
        let mut dying = Vec::new();
        for i in 0..self.node_count() {
            if !self.alive[i] {
                continue;
            }
            let load = self.load_of(i);
            self.world.battery[i].update(load, dt, &self.cfg.battery);
            if self.world.battery[i].is_depleted() {
                dying.push(NodeId(i as u32));
            }
        }
        for node in dying {
            self.kill(node);
        }
    }

    fn kill(&mut self, node: NodeId) {
        let i = node.index();
        let now = self.world.now;
        self.alive[i] = false;
        self.death_time[i] = Some(now);
        self.proximity_dirty = true;
        self.world.trace.push(now, node, TraceKind::Died);
        if let Some(go) = self.m.go_of[i] {
            self.m.clients[go.index()].remove(&node);
            self.m.bump(go);
            self.m.go_of[i] = None;
            let mut link = self.world.handle(go);
            self.agents[go.index()].on_member_event(MemberEvent::Left(node), &mut link);
        }
        let clients: Vec<NodeId> = self.m.clients[i].iter().copied().collect();
        for c in clients {
            self.detach(c, node, DetachCause::OwnerDied);
        }
        // the radio goes silent now, not at the next proximity rebuild
        let heard_by = std::mem::take(&mut self.world.neighbors[i]);
        for n in heard_by.iter() {
            self.world.neighbors[n.index()]
                .ids_mut()
                .retain(|&x| x != node);
        }
    }

    fn sample_metrics(&mut self, step_start: f64) {
        for i in 0..self.node_count() {
            let owner = NodeId(i as u32);
            self.integrator.observe(
                owner,
                self.m.version[i],
                &self.m.clients[i],
                step_start,
                &mut self.graph,
            );
        }
        if self.step.is_multiple_of(self.sample_steps) {
            let groups = self.groups();
            self.reach.sample(groups.iter().map(Vec::as_slice));
        }
        if self.step.is_multiple_of(self.diffusion_steps) || self.is_finished() {
            self.diffusion.sample(self.world.now);
        }
    }

    fn scan_invariants(&mut self) {
        let now = self.world.now;
        let mut found = Vec::new();
        let mut flag = |node: Option<NodeId>, rule: Rule, detail: String| {
            found.push(Violation {
                time: now,
                node,
                rule,
                detail,
            });
        };
        let mut client_count = 0usize;
        let mut member_count = 0usize;
        for i in 0..self.node_count() {
            let node = NodeId(i as u32);
            let agent = &self.agents[i];
            if !self.alive[i] {
                if self.m.go_of[i].is_some()
                    || !self.m.clients[i].is_empty()
                    || !self.world.neighbors[i].is_empty()
                {
                    flag(Some(node), Rule::DeadNode, "dead node still linked".into());
                }
                continue;
            }
            if self.world.neighbors[i]
                .iter()
                .any(|n| !self.alive[n.index()])
            {
                flag(
                    Some(node),
                    Rule::DeadNode,
                    "dead node in neighbour list".into(),
                );
            }
            if agent.current_go() != self.m.go_of[i] {
                flag(
                    Some(node),
                    Rule::SingleGroup,
                    format!(
                        "agent thinks owner is {:?}, kernel says {:?}",
                        agent.current_go(),
                        self.m.go_of[i]
                    ),
                );
            }
            member_count += self.m.clients[i].len();
            if let Some(go) = self.m.go_of[i] {
                client_count += 1;
                if !self.m.clients[i].is_empty() {
                    flag(
                        Some(node),
                        Rule::SingleGroup,
                        "client also owns members".into(),
                    );
                }
                if !self.m.clients[go.index()].contains(&node) {
                    flag(
                        Some(node),
                        Rule::SingleGroup,
                        format!("missing from {go}'s members"),
                    );
                }
            } else {
                if agent.group().members() != &self.m.clients[i] {
                    flag(
                        Some(node),
                        Rule::SingleGroup,
                        "agent member list differs from kernel".into(),
                    );
                }
                if self.m.clients[i].len() as u32 > self.m.capacity[i] {
                    flag(
                        Some(node),
                        Rule::Capacity,
                        format!("{} members", self.m.clients[i].len()),
                    );
                }
                for c in &self.m.clients[i] {
                    if self.m.go_of[c.index()] != Some(node) || !self.alive[c.index()] {
                        flag(
                            Some(node),
                            Rule::SingleGroup,
                            format!("member {c} does not point back"),
                        );
                    }
                }
            }
        }
        if client_count != member_count {
            flag(
                None,
                Rule::Conservation,
                format!("{member_count} memberships for {client_count} clients"),
            );
        }
        self.violations.extend(found);
    }
}

/// Which protocol an agent type implements.
pub trait AgentKind {
    const KIND: ProtocolKind;
}

impl AgentKind for NodeProtocolState {
    const KIND: ProtocolKind = ProtocolKind::Wfdgm;
}

impl AgentKind for BaselineState {
    const KIND: ProtocolKind = ProtocolKind::Baseline;
}

/// Runs one whole simulation.
pub fn run(
    cfg: &SimConfig,
    protocol: ProtocolKind,
    params: &ProtocolParams,
    scenario: Scenario,
) -> Result<RunResult, SimError> {
    match protocol {
        ProtocolKind::Wfdgm => {
            let params = ProtocolParams {
                t_d: cfg.t_d,
                ..*params
            };
            params
                .validate()
                .map_err(|e| SimError::Protocol(e.to_string()))?;
            let sim = Simulator::new(cfg.clone(), scenario, |id, cap, tokens| {
                NodeProtocolState::boot(id, params, cap, tokens)
            })?;
            Ok(sim.run_to_end())
        }
        ProtocolKind::Baseline => {
            let sim = Simulator::new(cfg.clone(), scenario, BaselineState::boot)?;
            Ok(sim.run_to_end())
        }
    }
}
