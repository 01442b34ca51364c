//! Decision environment on top of the simulator.
//!
//! Orders are abstracted into fifteen types: five composition/area groups
//! crossed with three urgency buckets measured against the cut-off. An agent
//! never picks concrete orders; it picks a *type*, and the environment
//! resolves that to the most urgent pending orders of the type. This keeps
//! the action space at a fixed 31 entries (15 pick-by-order, 15
//! pick-by-batch, wait) regardless of instance size.
//!
//! Time advances only through the wait action, one simulator event at a
//! time, so every decision epoch sits on a state change and the step reward
//! can attribute tardy consolidations to the interval they occurred in.

use std::fmt;

use crate::instance::{Composition, Location, Order, OrderId, ProblemInstance};
use crate::sim::{
    route_for, DispatchRequest, PickKind, RoutePlan, SimConfig, SimError, SimObservation,
    Simulator,
};

/// Resolution of the state encoding: counts and ratios are expressed on a
/// 0..=25 integer scale.
pub const SCALE_M: u32 = 25;
pub const STATE_DIM: usize = 23;
pub const ACTION_COUNT: usize = 31;
/// Composition/area groups, in slot order.
pub const ORDER_GROUPS: [(Composition, Location); 5] = [
    (Composition::Sio, Location::Ptg),
    (Composition::Sio, Location::Gtp),
    (Composition::Mio, Location::Ptg),
    (Composition::Mio, Location::Gtp),
    (Composition::Mio, Location::Both),
];
pub const EARLINESS_BUCKETS: usize = 3;
pub const ORDER_TYPE_COUNT: usize = ORDER_GROUPS.len() * EARLINESS_BUCKETS;
/// At or below this time-to-cutoff an order counts as urgent.
pub const URGENT_TTC_S: f64 = 900.0;
/// Above this time-to-cutoff an order counts as relaxed.
pub const RELAXED_TTC_S: f64 = 2400.0;
/// Most orders a single batch may hold.
pub const MAX_BATCH_ORDERS: usize = 10;

/// Reward for selecting an action that cannot be executed (time does not
/// move).
pub const INFEASIBLE_REWARD: f64 = -0.005;
/// Reward per order consolidated after its cut-off.
pub const TARDY_CONSOLIDATION_REWARD: f64 = -0.0075;

pub type StateVector = [f64; STATE_DIM];

/// Slot index of a composition/area group.
pub fn group_index(composition: Composition, location: Location) -> usize {
    match (composition, location) {
        (Composition::Sio, Location::Ptg) => 0,
        (Composition::Sio, Location::Gtp) => 1,
        (Composition::Mio, Location::Ptg) => 2,
        (Composition::Mio, Location::Gtp) => 3,
        (Composition::Mio, Location::Both) => 4,
        (Composition::Sio, Location::Both) => {
            unreachable!("single-item orders live in exactly one area")
        }
    }
}

/// Urgency bucket for a time-to-cutoff: 0 relaxed, 1 moderate, 2 urgent.
/// A cut-off already in the past is urgent.
pub fn earliness_bucket(ttc_s: f64) -> usize {
    if ttc_s <= URGENT_TTC_S {
        2
    } else if ttc_s <= RELAXED_TTC_S {
        1
    } else {
        0
    }
}

/// Order-type slot (0..15) of an order at the given clock.
pub fn order_type(order: &Order, clock_s: f64) -> usize {
    let ttc = f64::from(order.cutoff_s) - clock_s;
    group_index(order.composition, order.location) * EARLINESS_BUCKETS + earliness_bucket(ttc)
}

/// The agent-facing action space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    /// Dispatch the most urgent pending order of the given type alone.
    PickOrder(usize),
    /// Dispatch the most urgent pending orders of the given type as one
    /// batch.
    PickBatch(usize),
    /// Let the simulation run to the next state change.
    Wait,
}

impl Action {
    pub fn from_index(index: usize) -> Option<Action> {
        match index {
            i if i < ORDER_TYPE_COUNT => Some(Action::PickOrder(i)),
            i if i < 2 * ORDER_TYPE_COUNT => Some(Action::PickBatch(i - ORDER_TYPE_COUNT)),
            i if i == 2 * ORDER_TYPE_COUNT => Some(Action::Wait),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Action::PickOrder(t) => t,
            Action::PickBatch(t) => ORDER_TYPE_COUNT + t,
            Action::Wait => 2 * ORDER_TYPE_COUNT,
        }
    }
}

/// Encodes an observation on the fixed integer scale.
///
/// Layout: slots 0..15 hold pending-order counts per type (group-major,
/// relaxed/moderate/urgent within each group), capped at the scale; 15 and
/// 16 hold the free picker and shuttle fractions; 17..20 hold free
/// direct-to-order, sort-to-order and pack queue slots, capped at the
/// scale; 20..23 hold the tardy fraction, elapsed-window fraction and
/// processed fraction.
pub fn encode_state(obs: &SimObservation, n_total: u32, horizon_s: f64) -> StateVector {
    let m = f64::from(SCALE_M);
    let mut s = [0.0f64; STATE_DIM];
    for o in &obs.pending {
        s[order_type(o, obs.clock_s)] += 1.0;
    }
    for slot in s.iter_mut().take(ORDER_TYPE_COUNT) {
        *slot = slot.min(m);
    }
    let r = &obs.resources;
    let frac = |free: u32, total: u32| (m * f64::from(free) / f64::from(total)).round();
    s[15] = frac(r.pickers_free, r.pickers_total);
    s[16] = frac(r.shuttles_free, r.shuttles_total);
    s[17] = f64::from(r.dto_slots_free).min(m);
    s[18] = f64::from(r.sto_slots_free).min(m);
    s[19] = f64::from(r.pack_slots_free).min(m);
    s[20] = (m * f64::from(obs.tardy) / f64::from(n_total)).round();
    s[21] = (m * obs.clock_s / horizon_s).round();
    s[22] = (m * f64::from(obs.processed) / f64::from(n_total)).round();
    s
}

/// Episode score: squared fraction of orders that were neither tardy nor
/// written off.
pub fn terminal_value(tardy_or_unprocessed: u32, n_total: u32) -> f64 {
    let on_time = 1.0 - f64::from(tardy_or_unprocessed) / f64::from(n_total);
    on_time * on_time
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: StateVector,
    pub reward: f64,
    /// Simulated seconds the step consumed.
    pub tau_s: f64,
    pub done: bool,
    /// True when the action could not be executed and was penalized
    /// instead.
    pub infeasible: bool,
}

#[derive(Debug)]
pub enum EnvError {
    BadAction(usize),
    EpisodeOver,
    Sim(SimError),
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::BadAction(i) => {
                write!(f, "action index {i} is outside 0..{ACTION_COUNT}")
            }
            EnvError::EpisodeOver => write!(f, "the episode is over"),
            EnvError::Sim(e) => write!(f, "simulation error: {e}"),
        }
    }
}

impl std::error::Error for EnvError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            EnvError::Sim(e) => Some(e),
            _ => None,
        }
    }
}

impl From<SimError> for EnvError {
    fn from(e: SimError) -> Self {
        EnvError::Sim(e)
    }
}

/// What a pick action would dispatch right now.
#[derive(Clone, Debug)]
struct ResolvedPick {
    order_ids: Vec<OrderId>,
    kind: PickKind,
    plan: RoutePlan,
}

/// The semi-Markov decision environment.
pub struct Env {
    sim: Simulator,
    n_total: u32,
    horizon_s: f64,
}

impl Env {
    pub fn new(instance: &ProblemInstance, cfg: SimConfig) -> Result<Env, SimError> {
        let sim = Simulator::new(instance, cfg)?;
        Ok(Env { n_total: sim.n_total(), horizon_s: sim.horizon_s(), sim })
    }

    pub fn reset(&mut self) -> StateVector {
        let obs = self.sim.reset();
        encode_state(&obs, self.n_total, self.horizon_s)
    }

    pub fn state(&self) -> StateVector {
        encode_state(&self.sim.observe(), self.n_total, self.horizon_s)
    }

    pub fn observe(&self) -> SimObservation {
        self.sim.observe()
    }

    pub fn sim(&self) -> &Simulator {
        &self.sim
    }

    pub fn n_total(&self) -> u32 {
        self.n_total
    }

    pub fn is_terminal(&self) -> bool {
        self.sim.is_terminal()
    }

    /// Orders that were tardy or written off, i.e. everything that counts
    /// against the episode score.
    pub fn failed_orders(&self) -> u32 {
        self.sim.n_tardy() + self.sim.n_unprocessed()
    }

    /// Resolves what each pick action would dispatch against the current
    /// pending set. `None` where the type has no pending orders.
    fn resolve_picks(&self, obs: &SimObservation) -> Vec<Option<ResolvedPick>> {
        let mut by_type: Vec<Vec<&Order>> = vec![Vec::new(); ORDER_TYPE_COUNT];
        for o in &obs.pending {
            by_type[order_type(o, obs.clock_s)].push(o);
        }
        let cart_cap = self.sim.config().cart_capacity_items;
        let mut picks: Vec<Option<ResolvedPick>> = Vec::with_capacity(2 * ORDER_TYPE_COUNT);
        for candidates in by_type.iter_mut() {
            candidates.sort_by_key(|o| (o.cutoff_s, o.id));
        }
        // Pick-by-order: the most urgent candidate of the type.
        for candidates in &by_type {
            picks.push(candidates.first().map(|o| ResolvedPick {
                order_ids: vec![o.id],
                kind: PickKind::ByOrder,
                plan: route_for(o.composition, o.location, PickKind::ByOrder),
            }));
        }
        // Pick-by-batch: the most urgent candidates that fit one unit. A
        // batch that resolves to a single order degenerates to a
        // pick-by-order, requirements included.
        for candidates in &by_type {
            let Some(first) = candidates.first() else {
                picks.push(None);
                continue;
            };
            let cart_bound = first.location.uses_cart();
            let mut order_ids = Vec::new();
            let mut items = 0u32;
            for o in candidates {
                if order_ids.len() == MAX_BATCH_ORDERS {
                    break;
                }
                if cart_bound && items + o.items > cart_cap {
                    continue;
                }
                order_ids.push(o.id);
                items += o.items;
            }
            let kind = if order_ids.len() == 1 { PickKind::ByOrder } else { PickKind::ByBatch };
            picks.push(Some(ResolvedPick {
                order_ids,
                kind,
                plan: route_for(first.composition, first.location, kind),
            }));
        }
        picks
    }

    /// Which of the 31 actions can execute right now. Wait is feasible
    /// exactly when no pick is, so some action is always available.
    pub fn feasible_mask(&self) -> [bool; ACTION_COUNT] {
        let obs = self.sim.observe();
        let picks = self.resolve_picks(&obs);
        let mut mask = [false; ACTION_COUNT];
        let mut any_pick = false;
        for (slot, pick) in mask.iter_mut().zip(&picks) {
            if let Some(p) = pick {
                *slot = obs.resources.can_host(&p.plan);
                any_pick |= *slot;
            }
        }
        mask[2 * ORDER_TYPE_COUNT] = !any_pick;
        mask
    }

    /// Executes one action. Infeasible selections are penalized and leave
    /// the simulation untouched; feasible picks dispatch and return
    /// immediately (the dispatch is itself a state change); wait advances
    /// to the next event.
    pub fn step(&mut self, action_index: usize) -> Result<StepOutcome, EnvError> {
        let action = Action::from_index(action_index).ok_or(EnvError::BadAction(action_index))?;
        if self.sim.is_terminal() {
            return Err(EnvError::EpisodeOver);
        }
        let obs = self.sim.observe();
        let picks = self.resolve_picks(&obs);
        let feasible = match action {
            Action::PickOrder(_) | Action::PickBatch(_) => match &picks[action.index()] {
                Some(p) => obs.resources.can_host(&p.plan),
                None => false,
            },
            Action::Wait => !picks.iter().flatten().any(|p| obs.resources.can_host(&p.plan)),
        };
        if !feasible {
            return Ok(StepOutcome {
                state: self.state(),
                reward: INFEASIBLE_REWARD,
                tau_s: 0.0,
                done: false,
                infeasible: true,
            });
        }
        let mut reward = 0.0;
        let tau_s;
        match action {
            Action::PickOrder(_) | Action::PickBatch(_) => {
                let p = picks[action.index()].as_ref().expect("feasible pick resolves");
                self.sim.dispatch(&DispatchRequest {
                    order_ids: p.order_ids.clone(),
                    kind: p.kind,
                })?;
                let adv = self.sim.advance_until_state_change()?;
                debug_assert_eq!(adv.elapsed_s, 0.0);
                tau_s = adv.elapsed_s;
            }
            Action::Wait => {
                let adv = self.sim.advance_until_state_change()?;
                reward += f64::from(adv.tardy_events) * TARDY_CONSOLIDATION_REWARD;
                tau_s = adv.elapsed_s;
            }
        }
        let done = self.sim.is_terminal();
        if done {
            reward += terminal_value(self.failed_orders(), self.n_total);
        }
        Ok(StepOutcome { state: self.state(), reward, tau_s, done, infeasible: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{OrderStatus, ResourceConfig, Scenario};
    use crate::sim::Workstation;

    fn order(id: u32, items: u32, location: Location, release_s: u32, cutoff_s: u32) -> Order {
        Order {
            id,
            composition: if items == 1 { Composition::Sio } else { Composition::Mio },
            items,
            location,
            release_s,
            cutoff_s,
            status: OrderStatus::Pending,
        }
    }

    fn instance_of(orders: Vec<Order>, resources: ResourceConfig) -> ProblemInstance {
        ProblemInstance { scenario: Scenario::A, seed: 0, horizon_s: 3600, resources, orders }
    }

    #[test]
    fn action_indices_round_trip() {
        for i in 0..ACTION_COUNT {
            let a = Action::from_index(i).unwrap();
            assert_eq!(a.index(), i);
        }
        assert_eq!(Action::from_index(ACTION_COUNT), None);
        assert_eq!(Action::from_index(0), Some(Action::PickOrder(0)));
        assert_eq!(Action::from_index(15), Some(Action::PickBatch(0)));
        assert_eq!(Action::from_index(30), Some(Action::Wait));
    }

    #[test]
    fn urgency_buckets_split_at_the_documented_edges() {
        assert_eq!(earliness_bucket(2400.1), 0);
        assert_eq!(earliness_bucket(2400.0), 1);
        assert_eq!(earliness_bucket(900.1), 1);
        assert_eq!(earliness_bucket(900.0), 2);
        assert_eq!(earliness_bucket(0.0), 2);
        assert_eq!(earliness_bucket(-500.0), 2);
    }

    #[test]
    fn state_encoding_matches_the_documented_layout() {
        // A hand-built observation exercising every slot: counts cap at the
        // scale, fractions round, queue slots clamp.
        let mut pending = Vec::new();
        let mut id = 0u32;
        let mut push = |items: u32, loc: Location, cutoff: u32, n: u32, id: &mut u32| {
            for _ in 0..n {
                pending.push(order(*id, items, loc, 0, cutoff));
                *id += 1;
            }
        };
        // (relaxed, moderate, urgent) per group; clock is 0.
        push(1, Location::Ptg, 3600, 180, &mut id);
        push(1, Location::Ptg, 2400, 12, &mut id);
        push(1, Location::Gtp, 3600, 55, &mut id);
        push(1, Location::Gtp, 2400, 10, &mut id);
        push(3, Location::Ptg, 3600, 38, &mut id);
        push(3, Location::Ptg, 2400, 5, &mut id);
        push(3, Location::Gtp, 3600, 25, &mut id);
        push(3, Location::Both, 3600, 5, &mut id);
        assert_eq!(pending.len(), 330);
        let obs = SimObservation {
            clock_s: 0.0,
            pending,
            resources: crate::sim::ResourcePool {
                pickers_free: 10,
                pickers_total: 10,
                shuttles_free: 12,
                shuttles_total: 12,
                dto_slots_free: 50,
                dto_slots_total: 50,
                sto_slots_free: 75,
                sto_slots_total: 75,
                pack_slots_free: 25,
                pack_slots_total: 25,
            },
            processed: 0,
            tardy: 0,
        };
        let s = encode_state(&obs, 330, 3600.0);
        let expected: StateVector = [
            25.0, 12.0, 0.0, // SIO-PTG
            25.0, 10.0, 0.0, // SIO-GTP
            25.0, 5.0, 0.0, // MIO-PTG
            25.0, 0.0, 0.0, // MIO-GTP
            5.0, 0.0, 0.0, // MIO-BOTH
            25.0, 25.0, // pickers, shuttles
            25.0, 25.0, 25.0, // dto, sto, pack slots
            0.0, 0.0, 0.0, // tardy, elapsed, processed
        ];
        assert_eq!(s, expected);
    }

    #[test]
    fn fractions_round_to_nearest_scale_step() {
        let obs = SimObservation {
            clock_s: 1234.0,
            pending: Vec::new(),
            resources: crate::sim::ResourcePool {
                pickers_free: 1,
                pickers_total: 3,
                shuttles_free: 2,
                shuttles_total: 3,
                dto_slots_free: 7,
                dto_slots_total: 50,
                sto_slots_free: 80,
                sto_slots_total: 150,
                pack_slots_free: 0,
                pack_slots_total: 25,
            },
            processed: 100,
            tardy: 7,
        };
        let s = encode_state(&obs, 330, 3600.0);
        assert_eq!(s[15], 8.0); // 25/3 = 8.33 -> 8
        assert_eq!(s[16], 17.0); // 50/3 = 16.67 -> 17
        assert_eq!(s[17], 7.0);
        assert_eq!(s[18], 25.0);
        assert_eq!(s[19], 0.0);
        assert_eq!(s[20], 1.0); // 25 * 7/330 = 0.53 -> 1
        assert_eq!(s[21], 9.0); // 25 * 1234/3600 = 8.57 -> 9
        assert_eq!(s[22], 8.0); // 25 * 100/330 = 7.58 -> 8
    }

    #[test]
    fn feasibility_reflects_pending_types_and_resources() {
        let inst = instance_of(
            vec![order(0, 1, Location::Ptg, 0, 3600)],
            ResourceConfig::new(1, 1, 1, 1, 1),
        );
        let env = Env::new(&inst, SimConfig::default()).unwrap();
        let mask = env.feasible_mask();
        let t = group_index(Composition::Sio, Location::Ptg) * EARLINESS_BUCKETS
            + earliness_bucket(3600.0);
        assert_eq!(t, 0);
        assert!(mask[t]); // pick the order
        assert!(mask[ORDER_TYPE_COUNT + t]); // batch of one degenerates
        assert!(!mask[2 * ORDER_TYPE_COUNT]); // something is dispatchable
        assert_eq!(mask.iter().filter(|&&f| f).count(), 2);
    }

    #[test]
    fn infeasible_steps_penalize_without_touching_the_clock() {
        let inst = instance_of(
            vec![order(0, 1, Location::Ptg, 0, 3600)],
            ResourceConfig::new(1, 1, 1, 1, 1),
        );
        let mut env = Env::new(&inst, SimConfig::default()).unwrap();
        let before = env.state();
        // Type 1 (urgent SIO-PTG) has no pending orders.
        let out = env.step(1).unwrap();
        assert_eq!(out.reward, INFEASIBLE_REWARD);
        assert_eq!(out.tau_s, 0.0);
        assert!(!out.done);
        assert!(out.infeasible);
        assert_eq!(out.state, before);
        // Wait is infeasible while a pick is possible.
        let out = env.step(30).unwrap();
        assert!(out.infeasible);
        assert_eq!(env.sim().clock_s(), 0.0);
    }

    #[test]
    fn pick_wait_cycle_ships_the_order_and_scores_the_episode() {
        let inst = instance_of(
            vec![order(0, 1, Location::Ptg, 0, 3600)],
            ResourceConfig::new(1, 1, 1, 1, 1),
        );
        let mut env = Env::new(&inst, SimConfig::default()).unwrap();
        let out = env.step(0).unwrap();
        assert_eq!(out.reward, 0.0);
        assert_eq!(out.tau_s, 0.0);
        assert!(!out.done);
        // Only waiting remains.
        assert!(env.feasible_mask()[30]);
        let out = env.step(30).unwrap();
        assert_eq!(out.tau_s, 120.0);
        assert!(out.done);
        // On-time ship: perfect score.
        assert_eq!(out.reward, 1.0);
        assert!(env.is_terminal());
        assert!(matches!(env.step(30), Err(EnvError::EpisodeOver)));
    }

    #[test]
    fn tardy_consolidations_charge_the_wait_step() {
        let inst = instance_of(
            vec![order(0, 1, Location::Gtp, 0, 60)],
            ResourceConfig::new(1, 1, 1, 1, 1),
        );
        let mut env = Env::new(&inst, SimConfig::default()).unwrap();
        env.step(Action::PickOrder(order_type(&inst.orders[0], 0.0)).index()).unwrap();
        let out = env.step(30).unwrap(); // pick completes at 60
        assert_eq!(out.reward, 0.0);
        let out = env.step(30).unwrap(); // consolidation at 110 > 60
        assert!(out.done);
        // One tardy consolidation plus a zero terminal score.
        assert_eq!(out.reward, TARDY_CONSOLIDATION_REWARD);
        assert_eq!(env.failed_orders(), 1);
    }

    #[test]
    fn batches_fill_by_cutoff_under_both_caps() {
        // Twelve orders; ids 10, 11 have the earliest cut-offs.
        let mut orders: Vec<Order> = (0..10).map(|i| order(i, 1, Location::Ptg, 0, 3000)).collect();
        orders.push(order(10, 1, Location::Ptg, 0, 2800));
        orders.push(order(11, 1, Location::Ptg, 0, 2900));
        let inst = instance_of(orders, ResourceConfig::new(1, 1, 1, 1, 1));
        let mut env = Env::new(&inst, SimConfig::default()).unwrap();
        env.step(ORDER_TYPE_COUNT).unwrap(); // batch of relaxed SIO-PTG
        let task = &env.sim().tasks()[0];
        assert_eq!(task.members.len(), MAX_BATCH_ORDERS);
        assert_eq!(task.members[0], 10);
        assert_eq!(task.members[1], 11);
        assert_eq!(task.members[2..], [0, 1, 2, 3, 4, 5, 6, 7][..]);
    }

    #[test]
    fn cart_bound_batches_skip_orders_that_no_longer_fit() {
        // 48 items in the first three candidates; the 5-item order does not
        // fit but the later 2-item one does.
        let orders = vec![
            order(0, 10, Location::Ptg, 0, 1000),
            order(1, 30, Location::Ptg, 0, 1100),
            order(2, 8, Location::Ptg, 0, 1200),
            order(3, 5, Location::Ptg, 0, 1300),
            order(4, 2, Location::Ptg, 0, 1400),
        ];
        let inst = instance_of(orders, ResourceConfig::new(1, 1, 1, 1, 1));
        let mut env = Env::new(&inst, SimConfig::default()).unwrap();
        let t = group_index(Composition::Mio, Location::Ptg) * EARLINESS_BUCKETS
            + earliness_bucket(1000.0);
        env.step(ORDER_TYPE_COUNT + t).unwrap();
        assert_eq!(env.sim().tasks()[0].members, vec![0, 1, 2, 4]);
    }

    #[test]
    fn degenerate_batch_follows_the_single_order_route() {
        let inst = instance_of(
            vec![order(0, 1, Location::Gtp, 0, 3600)],
            ResourceConfig::new(1, 1, 1, 1, 1),
        );
        let mut env = Env::new(&inst, SimConfig::default()).unwrap();
        let t = group_index(Composition::Sio, Location::Gtp) * EARLINESS_BUCKETS;
        env.step(ORDER_TYPE_COUNT + t).unwrap();
        let task = &env.sim().tasks()[0];
        assert_eq!(task.kind, PickKind::ByOrder);
        assert_eq!(task.plan.route, 4);
        assert_eq!(task.plan.workstation, Some(Workstation::Dto));
    }

    #[test]
    fn wait_becomes_feasible_once_nothing_can_be_dispatched() {
        let inst = instance_of(
            vec![order(0, 1, Location::Ptg, 0, 3600), order(1, 3, Location::Ptg, 0, 3600)],
            ResourceConfig::new(1, 1, 1, 1, 1),
        );
        let mut env = Env::new(&inst, SimConfig::default()).unwrap();
        env.step(0).unwrap(); // takes the only picker
        let mask = env.feasible_mask();
        assert!(mask[30]);
        assert_eq!(mask.iter().filter(|&&f| f).count(), 1);
    }
}
