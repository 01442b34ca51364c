//! Classical batching and sequencing baselines.
//!
//! Each wake-up replans from scratch: pending orders are grouped into
//! units by the batching rule, the units are ordered by the sequencing
//! rule, and the driver releases units head-of-line into two lanes — one
//! for units that need a picker (cart tours, including dual-area orders)
//! and one for pure shuttle retrievals. A lane stalls while its head unit
//! does not fit the free resources, which is exactly why the sequencing
//! rule matters.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::instance::{Composition, Location, Order, OrderId, ProblemInstance};
use crate::sim::{
    pick_duration, pipeline_duration, route_for, DispatchRequest, PickKind, RoutePlan, SimConfig,
    SimError, Simulator, TimingConfig, WorkProfile,
};

/// Largest single-item-order batch.
pub const SIO_BATCH_CAP: usize = 10;
/// Largest multi-item-order batch.
pub const MIO_BATCH_CAP: usize = 12;
/// Batches at or below this many orders are dismantled by the
/// small-batch rule.
pub const SMALL_BATCH_ORDERS: usize = 4;

/// How pending orders are grouped into pick units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchRule {
    /// Chunk cart orders into batches by ascending cut-off; shuttle orders
    /// go out alone.
    Greedy,
    /// Greedy, then dismantle batches whose slack has run out.
    LeastSlack,
    /// Greedy, then dismantle cart batches of four or fewer orders.
    SmallBatchByOrder,
    /// Both dismantling rules on top of greedy.
    LeastSlackSmallBatch,
}

impl BatchRule {
    pub const ALL: [BatchRule; 4] = [
        BatchRule::Greedy,
        BatchRule::LeastSlack,
        BatchRule::SmallBatchByOrder,
        BatchRule::LeastSlackSmallBatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BatchRule::Greedy => "gr",
            BatchRule::LeastSlack => "lst",
            BatchRule::SmallBatchByOrder => "posb",
            BatchRule::LeastSlackSmallBatch => "lst-posb",
        }
    }
}

impl fmt::Display for BatchRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BatchRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gr" => Ok(BatchRule::Greedy),
            "lst" => Ok(BatchRule::LeastSlack),
            "posb" => Ok(BatchRule::SmallBatchByOrder),
            "lst-posb" => Ok(BatchRule::LeastSlackSmallBatch),
            _ => Err(format!("unknown batch rule '{s}' (gr, lst, posb, lst-posb)")),
        }
    }
}

/// How planned units are ordered within their lanes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeqRule {
    /// Earliest cut-off first.
    EarliestDueDate,
    /// Longest pick time first.
    LongestPickTime,
    /// Shortest pick time first.
    ShortestPickTime,
    /// Longest pick-plus-consolidation time first.
    MaxPipelineTime,
    /// Least slack first.
    LeastSlack,
}

impl SeqRule {
    pub const ALL: [SeqRule; 5] = [
        SeqRule::EarliestDueDate,
        SeqRule::LongestPickTime,
        SeqRule::ShortestPickTime,
        SeqRule::MaxPipelineTime,
        SeqRule::LeastSlack,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeqRule::EarliestDueDate => "edd",
            SeqRule::LongestPickTime => "lpt",
            SeqRule::ShortestPickTime => "spt",
            SeqRule::MaxPipelineTime => "maxtp",
            SeqRule::LeastSlack => "lst",
        }
    }
}

impl fmt::Display for SeqRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeqRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edd" => Ok(SeqRule::EarliestDueDate),
            "lpt" => Ok(SeqRule::LongestPickTime),
            "spt" => Ok(SeqRule::ShortestPickTime),
            "maxtp" => Ok(SeqRule::MaxPipelineTime),
            "lst" => Ok(SeqRule::LeastSlack),
            _ => Err(format!("unknown sequencing rule '{s}' (edd, lpt, spt, maxtp, lst)")),
        }
    }
}

/// One planned pick unit awaiting release.
#[derive(Clone, Debug)]
pub struct PlannedUnit {
    pub order_ids: Vec<OrderId>,
    pub kind: PickKind,
    pub plan: RoutePlan,
    pub profile: WorkProfile,
    /// Earliest member cut-off, the unit's due date.
    pub cutoff_s: u32,
}

impl PlannedUnit {
    fn of(members: &[&Order]) -> PlannedUnit {
        let kind = if members.len() >= 2 { PickKind::ByBatch } else { PickKind::ByOrder };
        let first = members[0];
        PlannedUnit {
            order_ids: members.iter().map(|o| o.id).collect(),
            kind,
            plan: route_for(first.composition, first.location, kind),
            profile: WorkProfile::of(members.iter().copied()),
            cutoff_s: members.iter().map(|o| o.cutoff_s).min().expect("non-empty unit"),
        }
    }

    pub fn pick_duration_s(&self, timing: &TimingConfig) -> f64 {
        pick_duration(timing, &self.profile)
    }

    pub fn pipeline_duration_s(&self, timing: &TimingConfig) -> f64 {
        pipeline_duration(timing, self.plan.workstation, &self.profile)
    }

    /// Time to spare if the unit started right now.
    pub fn slack_s(&self, timing: &TimingConfig, clock_s: f64) -> f64 {
        f64::from(self.cutoff_s) - clock_s - self.pipeline_duration_s(timing)
    }
}

fn split_into_singles(unit: &PlannedUnit, pending: &[Order], out: &mut Vec<PlannedUnit>) {
    for id in &unit.order_ids {
        let order = pending.iter().find(|o| o.id == *id).expect("member is pending");
        out.push(PlannedUnit::of(&[order]));
    }
}

/// Groups the pending orders into pick units under the given rule.
pub fn plan_units(
    pending: &[Order],
    rule: BatchRule,
    timing: &TimingConfig,
    clock_s: f64,
    cart_capacity_items: u32,
) -> Vec<PlannedUnit> {
    // Greedy pass: fixed group order, ascending cut-off inside each group.
    // Units that tie on the sequencing key keep this planning order, so the
    // most resource-hungry groups (dual-area, then multi-item) are planned
    // first — with uniform cut-offs the heavy work must not sit at the tail
    // of a lane.
    let groups = [
        (Composition::Mio, Location::Both),
        (Composition::Mio, Location::Ptg),
        (Composition::Mio, Location::Gtp),
        (Composition::Sio, Location::Ptg),
        (Composition::Sio, Location::Gtp),
    ];
    let mut units = Vec::new();
    for (composition, location) in groups {
        let mut members: Vec<&Order> = pending
            .iter()
            .filter(|o| o.composition == composition && o.location == location)
            .collect();
        members.sort_by_key(|o| (o.cutoff_s, o.id));
        if location == Location::Gtp {
            // Shuttle retrievals go out alone.
            for o in members {
                units.push(PlannedUnit::of(&[o]));
            }
            continue;
        }
        let cap = match composition {
            Composition::Sio => SIO_BATCH_CAP,
            Composition::Mio => MIO_BATCH_CAP,
        };
        let mut batch: Vec<&Order> = Vec::new();
        let mut items = 0u32;
        for o in members {
            if batch.len() == cap || items + o.items > cart_capacity_items {
                units.push(PlannedUnit::of(&batch));
                batch.clear();
                items = 0;
            }
            batch.push(o);
            items += o.items;
        }
        if !batch.is_empty() {
            units.push(PlannedUnit::of(&batch));
        }
    }

    let dismantle_expired = matches!(rule, BatchRule::LeastSlack | BatchRule::LeastSlackSmallBatch);
    let dismantle_small =
        matches!(rule, BatchRule::SmallBatchByOrder | BatchRule::LeastSlackSmallBatch);
    if !dismantle_expired && !dismantle_small {
        return units;
    }
    let mut out = Vec::with_capacity(units.len());
    for unit in units {
        if unit.kind == PickKind::ByBatch {
            if dismantle_expired && unit.slack_s(timing, clock_s) < 0.0 {
                split_into_singles(&unit, pending, &mut out);
                continue;
            }
            if dismantle_small && unit.order_ids.len() <= SMALL_BATCH_ORDERS {
                split_into_singles(&unit, pending, &mut out);
                continue;
            }
        }
        out.push(unit);
    }
    out
}

/// Stable-sorts units under the given rule; ties keep the greedy order.
pub fn sequence_units(
    units: &mut [PlannedUnit],
    rule: SeqRule,
    timing: &TimingConfig,
    clock_s: f64,
) {
    match rule {
        SeqRule::EarliestDueDate => units.sort_by_key(|u| u.cutoff_s),
        SeqRule::LongestPickTime => units.sort_by(|a, b| {
            b.pick_duration_s(timing).total_cmp(&a.pick_duration_s(timing))
        }),
        SeqRule::ShortestPickTime => units.sort_by(|a, b| {
            a.pick_duration_s(timing).total_cmp(&b.pick_duration_s(timing))
        }),
        SeqRule::MaxPipelineTime => units.sort_by(|a, b| {
            b.pipeline_duration_s(timing).total_cmp(&a.pipeline_duration_s(timing))
        }),
        SeqRule::LeastSlack => units.sort_by(|a, b| {
            a.slack_s(timing, clock_s).total_cmp(&b.slack_s(timing, clock_s))
        }),
    }
}

/// End-of-episode tally for one heuristic run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeuristicOutcome {
    pub processed: u32,
    pub tardy: u32,
    pub unprocessed: u32,
    pub n_total: u32,
    /// Percentage of orders tardy or written off.
    pub tardy_pct: f64,
    pub makespan_s: f64,
}

/// Plays one episode under a batching/sequencing rule pair.
pub fn run_heuristic(
    instance: &ProblemInstance,
    sim_cfg: SimConfig,
    batch_rule: BatchRule,
    seq_rule: SeqRule,
) -> Result<HeuristicOutcome, SimError> {
    let mut sim = Simulator::new(instance, sim_cfg)?;
    drive_heuristic(&mut sim, batch_rule, seq_rule)
}

/// Drives an already-built simulator to the end of its episode. Exposed
/// separately so callers can keep the simulator afterwards (event traces,
/// resource audits).
pub fn drive_heuristic(
    sim: &mut Simulator,
    batch_rule: BatchRule,
    seq_rule: SeqRule,
) -> Result<HeuristicOutcome, SimError> {
    let cart_cap = sim.config().cart_capacity_items;
    while !sim.is_terminal() {
        let obs = sim.observe();
        let timing = *sim.timing();
        let mut units = plan_units(&obs.pending, batch_rule, &timing, obs.clock_s, cart_cap);
        sequence_units(&mut units, seq_rule, &timing, obs.clock_s);
        let mut picker_lane: VecDeque<PlannedUnit> = VecDeque::new();
        let mut shuttle_lane: VecDeque<PlannedUnit> = VecDeque::new();
        for u in units {
            if u.plan.needs_picker {
                picker_lane.push_back(u);
            } else {
                shuttle_lane.push_back(u);
            }
        }
        // Release heads while they fit; a blocked head stalls its lane
        // until the next wake-up.
        loop {
            let mut dispatched = false;
            for lane in [&mut picker_lane, &mut shuttle_lane] {
                if let Some(u) = lane.front() {
                    if sim.resources().can_host(&u.plan) {
                        sim.dispatch(&DispatchRequest {
                            order_ids: u.order_ids.clone(),
                            kind: u.kind,
                        })?;
                        lane.pop_front();
                        dispatched = true;
                    }
                }
            }
            if !dispatched {
                break;
            }
        }
        match sim.advance_until_state_change() {
            Ok(_) => {}
            Err(SimError::EpisodeOver) => break,
            Err(e) => return Err(e),
        }
    }
    let failed = sim.n_tardy() + sim.n_unprocessed();
    Ok(HeuristicOutcome {
        processed: sim.n_processed(),
        tardy: sim.n_tardy(),
        unprocessed: sim.n_unprocessed(),
        n_total: sim.n_total(),
        tardy_pct: 100.0 * f64::from(failed) / f64::from(sim.n_total()),
        makespan_s: sim.clock_s(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{
        generate_instance, GenerateParams, OrderStatus, ResourceConfig, Scenario,
    };
    use crate::sim::Workstation;

    fn order(id: u32, items: u32, location: Location, cutoff_s: u32) -> Order {
        Order {
            id,
            composition: if items == 1 { Composition::Sio } else { Composition::Mio },
            items,
            location,
            release_s: 0,
            cutoff_s,
            status: OrderStatus::Pending,
        }
    }

    fn timing() -> TimingConfig {
        TimingConfig::default()
    }

    #[test]
    fn greedy_chunks_cart_orders_and_isolates_shuttle_orders() {
        let mut pending: Vec<Order> = (0..12).map(|i| order(i, 1, Location::Ptg, 3600)).collect();
        pending.push(order(12, 1, Location::Gtp, 3600));
        pending.push(order(13, 4, Location::Gtp, 3600));
        let units = plan_units(&pending, BatchRule::Greedy, &timing(), 0.0, 50);
        assert_eq!(units.len(), 4);
        // Heavy groups plan first: the multi-item shuttle order leads.
        assert_eq!(units[0].order_ids, vec![13]);
        assert_eq!(units[0].kind, PickKind::ByOrder);
        assert_eq!(units[1].order_ids.len(), 10);
        assert_eq!(units[1].kind, PickKind::ByBatch);
        assert_eq!(units[1].plan.workstation, Some(Workstation::Pack));
        assert_eq!(units[2].order_ids.len(), 2);
        assert_eq!(units[3].order_ids, vec![12]);
    }

    #[test]
    fn greedy_respects_cutoff_order_and_both_caps() {
        // Eight 8-item orders: the cart closes at 6 orders (48 items), well
        // under the 12-order cap.
        let pending: Vec<Order> =
            (0..8).map(|i| order(i, 8, Location::Ptg, 3000 + 10 * i)).collect();
        let units = plan_units(&pending, BatchRule::Greedy, &timing(), 0.0, 50);
        assert_eq!(units.len(), 2);
        assert_eq!(units[0].order_ids, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(units[1].order_ids, vec![6, 7]);

        // Thirteen 2-item orders: the 12-order cap closes first (24 items).
        let pending: Vec<Order> =
            (0..13).map(|i| order(i, 2, Location::Ptg, 3000 + 10 * i)).collect();
        let units = plan_units(&pending, BatchRule::Greedy, &timing(), 0.0, 50);
        assert_eq!(units.len(), 2);
        assert_eq!(units[0].order_ids.len(), 12);
        assert_eq!(units[1].order_ids, vec![12]);
        assert_eq!(units[1].kind, PickKind::ByOrder);
    }

    #[test]
    fn small_batches_are_dismantled_by_posb() {
        let pending: Vec<Order> = (0..4).map(|i| order(i, 1, Location::Ptg, 3600)).collect();
        let units = plan_units(&pending, BatchRule::SmallBatchByOrder, &timing(), 0.0, 50);
        assert_eq!(units.len(), 4);
        assert!(units.iter().all(|u| u.kind == PickKind::ByOrder));

        let pending: Vec<Order> = (0..5).map(|i| order(i, 1, Location::Ptg, 3600)).collect();
        let units = plan_units(&pending, BatchRule::SmallBatchByOrder, &timing(), 0.0, 50);
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].kind, PickKind::ByBatch);
    }

    #[test]
    fn expired_slack_dismantles_batches() {
        // Ten single-item cart orders, cut-off in 200 s. The batch pipeline
        // (390 pick + 30 transfer + 150 pack) blows way past it, so least
        // slack splits the batch; each single ships in 120 s.
        let pending: Vec<Order> = (0..10).map(|i| order(i, 1, Location::Ptg, 200)).collect();
        let units = plan_units(&pending, BatchRule::LeastSlack, &timing(), 0.0, 50);
        assert_eq!(units.len(), 10);
        assert!(units.iter().all(|u| u.kind == PickKind::ByOrder));

        // With a relaxed cut-off the batch survives.
        let pending: Vec<Order> = (0..10).map(|i| order(i, 1, Location::Ptg, 3600)).collect();
        let units = plan_units(&pending, BatchRule::LeastSlack, &timing(), 0.0, 50);
        assert_eq!(units.len(), 1);
    }

    #[test]
    fn combined_rule_applies_both_dismantlings() {
        let mut pending: Vec<Order> = (0..3).map(|i| order(i, 1, Location::Ptg, 3600)).collect();
        pending.extend((3..13).map(|i| order(i, 3, Location::Ptg, 100)));
        let units =
            plan_units(&pending, BatchRule::LeastSlackSmallBatch, &timing(), 0.0, 50);
        // The 3-order SIO batch is small, the 10-order MIO batch has no
        // slack left: all thirteen go out alone.
        assert_eq!(units.len(), 13);
        assert!(units.iter().all(|u| u.kind == PickKind::ByOrder));
    }

    #[test]
    fn sequencing_rules_order_units_as_documented() {
        // A 10-order SIO batch (pick 390 s, pipeline 570 s, cut-off 3000)
        // and one 2-item GtP single (pick 120 s, pipeline 190 s, cut-off
        // 2800).
        let mut pending: Vec<Order> = (0..10).map(|i| order(i, 1, Location::Ptg, 3000)).collect();
        pending.push(order(10, 2, Location::Gtp, 2800));
        let units = plan_units(&pending, BatchRule::Greedy, &timing(), 0.0, 50);
        assert_eq!(units.len(), 2);

        let first_ids = |rule: SeqRule| {
            let mut u = units.clone();
            sequence_units(&mut u, rule, &timing(), 0.0);
            u[0].order_ids.clone()
        };
        assert_eq!(first_ids(SeqRule::EarliestDueDate), vec![10]); // 2800 < 3000
        assert_eq!(first_ids(SeqRule::LongestPickTime).len(), 10); // 390 > 120
        assert_eq!(first_ids(SeqRule::ShortestPickTime), vec![10]);
        assert_eq!(first_ids(SeqRule::MaxPipelineTime).len(), 10); // 570 > 190
        // Slack: batch 3000 - 570 = 2430; single 2800 - 190 = 2610.
        assert_eq!(first_ids(SeqRule::LeastSlack).len(), 10);
    }

    #[test]
    fn runs_complete_deterministically_and_account_for_every_order() {
        let instance = generate_instance(&GenerateParams::new(
            Scenario::B,
            60,
            ResourceConfig::new(2, 2, 1, 1, 1),
            123,
        ))
        .unwrap();
        for batch_rule in BatchRule::ALL {
            for seq_rule in SeqRule::ALL {
                let a =
                    run_heuristic(&instance, SimConfig::default(), batch_rule, seq_rule).unwrap();
                let b =
                    run_heuristic(&instance, SimConfig::default(), batch_rule, seq_rule).unwrap();
                assert_eq!(a, b, "{batch_rule}/{seq_rule} not deterministic");
                assert_eq!(a.processed + a.unprocessed, a.n_total);
                assert!(a.tardy <= a.processed);
                assert!(a.makespan_s <= 3600.0);
            }
        }
    }

    #[test]
    fn rule_names_round_trip() {
        for rule in BatchRule::ALL {
            assert_eq!(rule.as_str().parse::<BatchRule>().unwrap(), rule);
        }
        for rule in SeqRule::ALL {
            assert_eq!(rule.as_str().parse::<SeqRule>().unwrap(), rule);
        }
        assert!("xyz".parse::<BatchRule>().is_err());
        assert!("xyz".parse::<SeqRule>().is_err());
    }
}
