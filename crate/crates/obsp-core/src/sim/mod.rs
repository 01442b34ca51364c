//! Discrete-event simulation of the dispatching window.
//!
//! The simulator owns the order book, the resource pool and an event queue.
//! Dispatching commits resources immediately and schedules the pick- and
//! consolidation-completion events for the unit; advancing processes events
//! one state change at a time, which makes the environment on top of it a
//! clean semi-Markov process: time only moves while the caller waits.
//!
//! Resources committed to a unit are held until its pick completes; the
//! workstation queue slot is held until consolidation completes. Workstation
//! capacity is a queue-slot budget (totes in the physical plus virtual
//! queue), not a service rate: a unit's consolidation finish time is fixed
//! when it is dispatched.

mod routes;
mod timing;

pub use routes::{route_for, PickKind, RoutePlan, Workstation};
pub use timing::{
    area_split, consolidation_duration, gtp_leg_duration, pick_duration, pipeline_duration,
    ptg_leg_duration, TimingConfig, WorkProfile,
};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::BTreeMap;
use std::fmt;

use crate::instance::{Composition, Location, Order, OrderId, OrderStatus, ProblemInstance};

/// Queue slots per direct-to-order station.
pub const DTO_SLOTS_PER_STATION: u32 = 50;
/// Queue slots per sort-to-order station.
pub const STO_SLOTS_PER_STATION: u32 = 75;
/// Queue slots per pack station.
pub const PACK_SLOTS_PER_STATION: u32 = 25;
/// Items a picker cart can carry on one tour.
pub const CART_CAPACITY_ITEMS: u32 = 50;

pub type TaskId = u32;

/// The five depletable resource kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResourceKind {
    Picker,
    Shuttle,
    DtoSlot,
    StoSlot,
    PackSlot,
}

impl ResourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResourceKind::Picker => "picker",
            ResourceKind::Shuttle => "shuttle",
            ResourceKind::DtoSlot => "dto_slot",
            ResourceKind::StoSlot => "sto_slot",
            ResourceKind::PackSlot => "pack_slot",
        }
    }

    fn for_station(w: Workstation) -> ResourceKind {
        match w {
            Workstation::Dto => ResourceKind::DtoSlot,
            Workstation::Sto => ResourceKind::StoSlot,
            Workstation::Pack => ResourceKind::PackSlot,
        }
    }
}

/// Free and total counts per resource kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResourcePool {
    pub pickers_free: u32,
    pub pickers_total: u32,
    pub shuttles_free: u32,
    pub shuttles_total: u32,
    pub dto_slots_free: u32,
    pub dto_slots_total: u32,
    pub sto_slots_free: u32,
    pub sto_slots_total: u32,
    pub pack_slots_free: u32,
    pub pack_slots_total: u32,
}

impl ResourcePool {
    pub fn free(&self, kind: ResourceKind) -> u32 {
        match kind {
            ResourceKind::Picker => self.pickers_free,
            ResourceKind::Shuttle => self.shuttles_free,
            ResourceKind::DtoSlot => self.dto_slots_free,
            ResourceKind::StoSlot => self.sto_slots_free,
            ResourceKind::PackSlot => self.pack_slots_free,
        }
    }

    pub fn total(&self, kind: ResourceKind) -> u32 {
        match kind {
            ResourceKind::Picker => self.pickers_total,
            ResourceKind::Shuttle => self.shuttles_total,
            ResourceKind::DtoSlot => self.dto_slots_total,
            ResourceKind::StoSlot => self.sto_slots_total,
            ResourceKind::PackSlot => self.pack_slots_total,
        }
    }

    fn free_mut(&mut self, kind: ResourceKind) -> &mut u32 {
        match kind {
            ResourceKind::Picker => &mut self.pickers_free,
            ResourceKind::Shuttle => &mut self.shuttles_free,
            ResourceKind::DtoSlot => &mut self.dto_slots_free,
            ResourceKind::StoSlot => &mut self.sto_slots_free,
            ResourceKind::PackSlot => &mut self.pack_slots_free,
        }
    }

    fn take(&mut self, kind: ResourceKind, count: u32) {
        let free = self.free_mut(kind);
        assert!(*free >= count, "over-commit of {}", kind.as_str());
        *free -= count;
    }

    fn put(&mut self, kind: ResourceKind, count: u32) {
        let total = self.total(kind);
        let free = self.free_mut(kind);
        *free += count;
        assert!(*free <= total, "over-release of {}", kind.as_str());
    }

    /// True when one unit following `plan` can start right now.
    pub fn can_host(&self, plan: &RoutePlan) -> bool {
        self.missing_for(plan).is_none()
    }

    /// First resource kind that is exhausted for `plan`, if any.
    pub fn missing_for(&self, plan: &RoutePlan) -> Option<ResourceKind> {
        if plan.needs_picker && self.pickers_free == 0 {
            return Some(ResourceKind::Picker);
        }
        if plan.needs_shuttle && self.shuttles_free == 0 {
            return Some(ResourceKind::Shuttle);
        }
        if let Some(w) = plan.workstation {
            let kind = ResourceKind::for_station(w);
            if self.free(kind) == 0 {
                return Some(kind);
            }
        }
        None
    }

    pub fn all_returned(&self) -> bool {
        self.pickers_free == self.pickers_total
            && self.shuttles_free == self.shuttles_total
            && self.dto_slots_free == self.dto_slots_total
            && self.sto_slots_free == self.sto_slots_total
            && self.pack_slots_free == self.pack_slots_total
    }
}

/// Simulator knobs beyond the instance itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub timing: TimingConfig,
    pub dto_slots_per_station: u32,
    pub sto_slots_per_station: u32,
    pub pack_slots_per_station: u32,
    pub cart_capacity_items: u32,
    /// Ends the episode early once this fraction of all orders is already
    /// tardy. Disabled by default.
    pub abort_tardy_fraction: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            timing: TimingConfig::default(),
            dto_slots_per_station: DTO_SLOTS_PER_STATION,
            sto_slots_per_station: STO_SLOTS_PER_STATION,
            pack_slots_per_station: PACK_SLOTS_PER_STATION,
            cart_capacity_items: CART_CAPACITY_ITEMS,
            abort_tardy_fraction: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.timing.validate()?;
        if self.dto_slots_per_station == 0
            || self.sto_slots_per_station == 0
            || self.pack_slots_per_station == 0
        {
            return Err("workstation queue slots per station must be at least 1".to_string());
        }
        if self.cart_capacity_items == 0 {
            return Err("cart capacity must be at least 1 item".to_string());
        }
        if let Some(f) = self.abort_tardy_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(format!("abort_tardy_fraction must lie in [0, 1], got {f}"));
            }
        }
        Ok(())
    }
}

/// What happened at an event instant.
#[derive(Clone, Debug, PartialEq)]
pub enum EventPayload {
    OrderArrival(Vec<OrderId>),
    PickComplete(TaskId),
    ConsolidationComplete(TaskId),
    ResourceFreed(ResourceKind, u32),
}

impl EventPayload {
    /// Deterministic processing order among events at the same instant.
    fn rank(&self) -> u8 {
        match self {
            EventPayload::OrderArrival(_) => 0,
            EventPayload::PickComplete(_) => 1,
            EventPayload::ConsolidationComplete(_) => 2,
            EventPayload::ResourceFreed(_, _) => 3,
        }
    }
}

#[derive(Clone, Debug)]
struct QueuedEvent {
    time_s: f64,
    rank: u8,
    seq: u64,
    payload: EventPayload,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueuedEvent {}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time_s
            .total_cmp(&other.time_s)
            .then(self.rank.cmp(&other.rank))
            .then(self.seq.cmp(&other.seq))
    }
}

/// One dispatched unit: a single order or a batch.
#[derive(Clone, Debug)]
pub struct PickTask {
    pub id: TaskId,
    pub kind: PickKind,
    pub composition: Composition,
    pub location: Location,
    pub plan: RoutePlan,
    pub members: Vec<OrderId>,
    pub profile: WorkProfile,
    pub dispatched_s: f64,
    pub pick_done_s: f64,
    /// Instant the members ship: consolidation completion, or pick
    /// completion for the direct route.
    pub done_s: f64,
    pick_completed: bool,
    consolidated: bool,
}

/// A request to start picking the given orders together.
#[derive(Clone, Debug)]
pub struct DispatchRequest {
    pub order_ids: Vec<OrderId>,
    pub kind: PickKind,
}

/// Snapshot handed to decision layers.
#[derive(Clone, Debug)]
pub struct SimObservation {
    pub clock_s: f64,
    /// Released, still undispatched orders.
    pub pending: Vec<Order>,
    pub resources: ResourcePool,
    /// Orders consolidated so far (on time or late).
    pub processed: u32,
    /// Orders consolidated after their cut-off so far.
    pub tardy: u32,
}

/// Result of advancing the clock.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Advance {
    pub elapsed_s: f64,
    /// Orders that were consolidated after their cut-off during the
    /// interval.
    pub tardy_events: u32,
}

/// Trace record kinds, for the event-trace export.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    Dispatch,
    OrderArrival,
    PickComplete,
    ConsolidationComplete,
    ResourceFreed,
    HorizonReached,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Dispatch => "dispatch",
            TraceKind::OrderArrival => "order_arrival",
            TraceKind::PickComplete => "pick_complete",
            TraceKind::ConsolidationComplete => "consolidation_complete",
            TraceKind::ResourceFreed => "resource_freed",
            TraceKind::HorizonReached => "horizon_reached",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub time_s: f64,
    pub kind: TraceKind,
    pub task_id: Option<TaskId>,
    pub order_ids: Vec<OrderId>,
}

/// Renders trace rows as CSV (`time_s,event_kind,task_id,order_ids`);
/// order ids are `;`-separated within the field.
pub fn render_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("time_s,event_kind,task_id,order_ids\n");
    for r in rows {
        let task = r.task_id.map(|t| t.to_string()).unwrap_or_default();
        let ids: Vec<String> = r.order_ids.iter().map(|i| i.to_string()).collect();
        out.push_str(&format!("{},{},{},{}\n", r.time_s, r.kind.as_str(), task, ids.join(";")));
    }
    out
}

#[derive(Debug)]
pub enum SimError {
    InvalidSetup(String),
    UnknownOrder(OrderId),
    OrderNotPending(OrderId),
    MixedBatch,
    BadBatchSize { kind: PickKind, got: usize },
    OverCartCapacity { items: u32, capacity: u32 },
    InsufficientCapacity(ResourceKind),
    EmptyEventQueue,
    EpisodeOver,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidSetup(m) => write!(f, "invalid simulator setup: {m}"),
            SimError::UnknownOrder(id) => write!(f, "unknown order id {id}"),
            SimError::OrderNotPending(id) => {
                write!(f, "order {id} is not pending at the current clock")
            }
            SimError::MixedBatch => {
                write!(f, "batch members must share composition and storage area")
            }
            SimError::BadBatchSize { kind, got } => match kind {
                PickKind::ByOrder => write!(f, "pick-by-order takes exactly 1 order, got {got}"),
                PickKind::ByBatch => write!(f, "pick-by-batch takes at least 2 orders, got {got}"),
            },
            SimError::OverCartCapacity { items, capacity } => {
                write!(f, "batch holds {items} items, cart capacity is {capacity}")
            }
            SimError::InsufficientCapacity(kind) => {
                write!(f, "no free {} for this dispatch", kind.as_str())
            }
            SimError::EmptyEventQueue => {
                write!(f, "no scheduled events; dispatch pending work or end the episode")
            }
            SimError::EpisodeOver => write!(f, "the episode is over"),
        }
    }
}

impl std::error::Error for SimError {}

/// The discrete-event simulator.
pub struct Simulator {
    cfg: SimConfig,
    instance: ProblemInstance,
    horizon_s: f64,
    clock: f64,
    orders: Vec<Order>,
    pending: Vec<OrderId>,
    resources: ResourcePool,
    events: BinaryHeap<std::cmp::Reverse<QueuedEvent>>,
    event_seq: u64,
    tasks: Vec<PickTask>,
    processed: u32,
    tardy: u32,
    terminal_orders: u32,
    unprocessed: u32,
    terminal: bool,
    state_dirty: bool,
    trace_enabled: bool,
    trace: Vec<TraceRow>,
}

impl Simulator {
    pub fn new(instance: &ProblemInstance, cfg: SimConfig) -> Result<Simulator, SimError> {
        instance
            .validate()
            .map_err(|e| SimError::InvalidSetup(e.to_string()))?;
        cfg.validate().map_err(SimError::InvalidSetup)?;
        let r = &instance.resources;
        let pool = ResourcePool {
            pickers_free: r.pickers,
            pickers_total: r.pickers,
            shuttles_free: r.shuttles,
            shuttles_total: r.shuttles,
            dto_slots_free: r.dto_stations * cfg.dto_slots_per_station,
            dto_slots_total: r.dto_stations * cfg.dto_slots_per_station,
            sto_slots_free: r.sto_stations * cfg.sto_slots_per_station,
            sto_slots_total: r.sto_stations * cfg.sto_slots_per_station,
            pack_slots_free: r.pack_stations * cfg.pack_slots_per_station,
            pack_slots_total: r.pack_stations * cfg.pack_slots_per_station,
        };
        let mut sim = Simulator {
            cfg,
            instance: instance.clone(),
            horizon_s: f64::from(instance.horizon_s),
            clock: 0.0,
            orders: Vec::new(),
            pending: Vec::new(),
            resources: pool,
            events: BinaryHeap::new(),
            event_seq: 0,
            tasks: Vec::new(),
            processed: 0,
            tardy: 0,
            terminal_orders: 0,
            unprocessed: 0,
            terminal: false,
            state_dirty: false,
            trace_enabled: false,
            trace: Vec::new(),
        };
        sim.reset();
        Ok(sim)
    }

    /// Rewinds to the start of the window: full resource pool, empty task
    /// list, arrival events on every release boundary, and the orders known
    /// at time zero already pending.
    pub fn reset(&mut self) -> SimObservation {
        self.clock = 0.0;
        self.orders = self.instance.orders.clone();
        for o in &mut self.orders {
            o.status = OrderStatus::Pending;
        }
        self.pending.clear();
        self.resources.pickers_free = self.resources.pickers_total;
        self.resources.shuttles_free = self.resources.shuttles_total;
        self.resources.dto_slots_free = self.resources.dto_slots_total;
        self.resources.sto_slots_free = self.resources.sto_slots_total;
        self.resources.pack_slots_free = self.resources.pack_slots_total;
        self.events.clear();
        self.event_seq = 0;
        self.tasks.clear();
        self.processed = 0;
        self.tardy = 0;
        self.terminal_orders = 0;
        self.unprocessed = 0;
        self.terminal = false;
        self.state_dirty = false;
        self.trace.clear();

        let mut by_release: BTreeMap<u32, Vec<OrderId>> = BTreeMap::new();
        for o in &self.orders {
            by_release.entry(o.release_s).or_default().push(o.id);
        }
        for (t, ids) in by_release {
            self.schedule(f64::from(t), EventPayload::OrderArrival(ids));
        }
        // Deliver the window-start arrivals so the first observation already
        // sees them.
        while self.peek_time() == Some(0.0) {
            self.process_next_event();
        }
        self.observe()
    }

    pub fn observe(&self) -> SimObservation {
        SimObservation {
            clock_s: self.clock,
            pending: self.pending.iter().map(|id| self.orders[*id as usize].clone()).collect(),
            resources: self.resources,
            processed: self.processed,
            tardy: self.tardy,
        }
    }

    pub fn clock_s(&self) -> f64 {
        self.clock
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_s
    }

    pub fn timing(&self) -> &TimingConfig {
        &self.cfg.timing
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn resources(&self) -> &ResourcePool {
        &self.resources
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn tasks(&self) -> &[PickTask] {
        &self.tasks
    }

    pub fn n_total(&self) -> u32 {
        self.orders.len() as u32
    }

    /// Orders consolidated so far.
    pub fn n_processed(&self) -> u32 {
        self.processed
    }

    /// Orders consolidated after their cut-off so far.
    pub fn n_tardy(&self) -> u32 {
        self.tardy
    }

    /// Orders written off at episode end.
    pub fn n_unprocessed(&self) -> u32 {
        self.unprocessed
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn set_trace(&mut self, enabled: bool) {
        self.trace_enabled = enabled;
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    /// Starts picking the requested orders as one unit. Resources are
    /// committed immediately; completion events are scheduled from the
    /// processing-time table. The caller is expected to have checked
    /// feasibility; an insufficient pool is reported as an error and leaves
    /// the simulator untouched.
    pub fn dispatch(&mut self, req: &DispatchRequest) -> Result<TaskId, SimError> {
        if self.terminal {
            return Err(SimError::EpisodeOver);
        }
        match req.kind {
            PickKind::ByOrder if req.order_ids.len() != 1 => {
                return Err(SimError::BadBatchSize { kind: req.kind, got: req.order_ids.len() })
            }
            PickKind::ByBatch if req.order_ids.len() < 2 => {
                return Err(SimError::BadBatchSize { kind: req.kind, got: req.order_ids.len() })
            }
            _ => {}
        }
        for id in &req.order_ids {
            if *id as usize >= self.orders.len() {
                return Err(SimError::UnknownOrder(*id));
            }
            if !self.pending.contains(id) {
                return Err(SimError::OrderNotPending(*id));
            }
        }
        let mut uniq = req.order_ids.clone();
        uniq.sort_unstable();
        uniq.dedup();
        if uniq.len() != req.order_ids.len() {
            return Err(SimError::MixedBatch);
        }
        let first = &self.orders[req.order_ids[0] as usize];
        let composition = first.composition;
        let location = first.location;
        for id in &req.order_ids[1..] {
            let o = &self.orders[*id as usize];
            if o.composition != composition || o.location != location {
                return Err(SimError::MixedBatch);
            }
        }
        let members: Vec<&Order> = req.order_ids.iter().map(|id| &self.orders[*id as usize]).collect();
        let profile = WorkProfile::of(members.into_iter());
        if req.kind == PickKind::ByBatch
            && location.uses_cart()
            && profile.items > self.cfg.cart_capacity_items
        {
            return Err(SimError::OverCartCapacity {
                items: profile.items,
                capacity: self.cfg.cart_capacity_items,
            });
        }
        let plan = route_for(composition, location, req.kind);
        if let Some(kind) = self.resources.missing_for(&plan) {
            return Err(SimError::InsufficientCapacity(kind));
        }

        // Commit.
        if plan.needs_picker {
            self.resources.take(ResourceKind::Picker, 1);
        }
        if plan.needs_shuttle {
            self.resources.take(ResourceKind::Shuttle, 1);
        }
        if let Some(w) = plan.workstation {
            self.resources.take(ResourceKind::for_station(w), 1);
        }
        for id in &req.order_ids {
            self.orders[*id as usize].status = OrderStatus::Picking;
        }
        self.pending.retain(|id| !req.order_ids.contains(id));

        let t = &self.cfg.timing;
        let pick_done_s = self.clock + pick_duration(t, &profile);
        let done_s = match plan.workstation {
            None => pick_done_s,
            Some(w) => {
                pick_done_s + t.conveyor_transfer_s + consolidation_duration(t, Some(w), &profile)
            }
        };
        let task_id = self.tasks.len() as TaskId;
        self.tasks.push(PickTask {
            id: task_id,
            kind: req.kind,
            composition,
            location,
            plan,
            members: req.order_ids.clone(),
            profile,
            dispatched_s: self.clock,
            pick_done_s,
            done_s,
            pick_completed: false,
            consolidated: plan.workstation.is_none(),
        });
        self.schedule(pick_done_s, EventPayload::PickComplete(task_id));
        if plan.workstation.is_some() {
            self.schedule(done_s, EventPayload::ConsolidationComplete(task_id));
        }
        self.push_trace(TraceKind::Dispatch, Some(task_id), req.order_ids.clone());
        self.state_dirty = true;
        Ok(task_id)
    }

    /// Moves time forward until the observable state changes, and reports
    /// the elapsed time plus any tardy consolidations in the interval.
    ///
    /// A dispatch is itself a state change, so the first call after one
    /// returns immediately with zero elapsed time. Otherwise one event is
    /// processed per call; events scheduled exactly at the horizon are
    /// drained together before the episode ends.
    pub fn advance_until_state_change(&mut self) -> Result<Advance, SimError> {
        if self.terminal {
            return Err(SimError::EpisodeOver);
        }
        if self.state_dirty {
            self.state_dirty = false;
            return Ok(Advance { elapsed_s: 0.0, tardy_events: 0 });
        }
        let start = self.clock;
        let mut tardy_events = 0u32;
        let Some(next_time) = self.peek_time() else {
            return Err(SimError::EmptyEventQueue);
        };
        if next_time > self.horizon_s {
            self.clock = self.horizon_s;
            self.finalize(true);
        } else if next_time == self.horizon_s {
            while self.peek_time() == Some(self.horizon_s) && !self.terminal {
                tardy_events += self.process_next_event();
            }
            if !self.terminal {
                self.finalize(true);
            }
        } else {
            tardy_events += self.process_next_event();
        }
        self.state_dirty = false;
        Ok(Advance { elapsed_s: self.clock - start, tardy_events })
    }

    fn peek_time(&self) -> Option<f64> {
        self.events.peek().map(|e| e.0.time_s)
    }

    fn schedule(&mut self, time_s: f64, payload: EventPayload) {
        let ev = QueuedEvent { time_s, rank: payload.rank(), seq: self.event_seq, payload };
        self.event_seq += 1;
        self.events.push(std::cmp::Reverse(ev));
    }

    /// Pops and executes one event; returns the tardy consolidations it
    /// caused.
    fn process_next_event(&mut self) -> u32 {
        let Some(std::cmp::Reverse(ev)) = self.events.pop() else {
            return 0;
        };
        self.clock = ev.time_s;
        let mut tardy_events = 0u32;
        match ev.payload {
            EventPayload::OrderArrival(ids) => {
                self.push_trace(TraceKind::OrderArrival, None, ids.clone());
                for id in ids {
                    debug_assert_eq!(self.orders[id as usize].status, OrderStatus::Pending);
                    self.pending.push(id);
                }
            }
            EventPayload::PickComplete(task_id) => {
                let task = &mut self.tasks[task_id as usize];
                task.pick_completed = true;
                let members = task.members.clone();
                let plan = task.plan;
                if plan.needs_picker {
                    self.resources.put(ResourceKind::Picker, 1);
                }
                if plan.needs_shuttle {
                    self.resources.put(ResourceKind::Shuttle, 1);
                }
                self.push_trace(TraceKind::PickComplete, Some(task_id), members.clone());
                if plan.workstation.is_none() {
                    tardy_events += self.ship(&members);
                } else {
                    for id in &members {
                        self.orders[*id as usize].status = OrderStatus::Consolidating;
                    }
                }
            }
            EventPayload::ConsolidationComplete(task_id) => {
                let task = &mut self.tasks[task_id as usize];
                task.consolidated = true;
                let members = task.members.clone();
                let station = task.plan.workstation.expect("route with a consolidation stage");
                self.resources.put(ResourceKind::for_station(station), 1);
                self.push_trace(TraceKind::ConsolidationComplete, Some(task_id), members.clone());
                tardy_events += self.ship(&members);
            }
            EventPayload::ResourceFreed(kind, count) => {
                self.resources.put(kind, count);
                self.push_trace(TraceKind::ResourceFreed, None, Vec::new());
            }
        }
        if !self.terminal {
            if self.terminal_orders == self.orders.len() as u32 {
                self.finalize(false);
            } else if let Some(limit) = self.cfg.abort_tardy_fraction {
                if f64::from(self.tardy) / self.orders.len() as f64 > limit {
                    self.finalize(false);
                }
            }
        }
        tardy_events
    }

    /// Marks the given orders consolidated now, on time or tardy.
    fn ship(&mut self, members: &[OrderId]) -> u32 {
        let mut tardy_events = 0;
        for id in members {
            let order = &mut self.orders[*id as usize];
            self.processed += 1;
            self.terminal_orders += 1;
            if self.clock <= f64::from(order.cutoff_s) {
                order.status = OrderStatus::Shipped;
            } else {
                order.status = OrderStatus::TardyShipped;
                self.tardy += 1;
                tardy_events += 1;
            }
        }
        tardy_events
    }

    /// Ends the episode: writes off every non-terminal order, returns all
    /// resources still committed to in-flight tasks, and freezes the clock.
    fn finalize(&mut self, at_horizon: bool) {
        for task in &mut self.tasks {
            if !task.pick_completed {
                task.pick_completed = true;
                if task.plan.needs_picker {
                    self.resources.put(ResourceKind::Picker, 1);
                }
                if task.plan.needs_shuttle {
                    self.resources.put(ResourceKind::Shuttle, 1);
                }
            }
            if !task.consolidated {
                task.consolidated = true;
                let station = task.plan.workstation.expect("route with a consolidation stage");
                self.resources.put(ResourceKind::for_station(station), 1);
            }
        }
        let mut written_off = Vec::new();
        for order in &mut self.orders {
            if !order.status.is_terminal() {
                order.status = OrderStatus::Unprocessed;
                self.terminal_orders += 1;
                self.unprocessed += 1;
                written_off.push(order.id);
            }
        }
        self.pending.clear();
        self.terminal = true;
        if at_horizon {
            self.push_trace(TraceKind::HorizonReached, None, written_off);
        }
    }

    fn push_trace(&mut self, kind: TraceKind, task_id: Option<TaskId>, order_ids: Vec<OrderId>) {
        if self.trace_enabled {
            self.trace.push(TraceRow { time_s: self.clock, kind, task_id, order_ids });
        }
    }
}
