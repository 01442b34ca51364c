//! Deterministic processing times. All knobs are configurable; the defaults
//! are calibrated so the default one-hour settings are workable with low
//! tardiness under sensible dispatching.

use crate::instance::{Location, Order};

use super::routes::Workstation;

/// Processing-time table, seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingConfig {
    /// Fixed cost of starting a picker cart tour.
    pub ptg_tour_setup_s: f64,
    /// Per-item pick time during a cart tour.
    pub ptg_pick_per_item_s: f64,
    /// Shuttle retrieval time per tote. Multi-tote work occupies one shuttle
    /// for the retrievals in sequence, never several shuttles in parallel.
    pub gtp_retrieval_per_tote_s: f64,
    /// Direct-to-order workstation handling per item.
    pub dto_handling_per_item_s: f64,
    /// Sort-to-order workstation sorting per item.
    pub sto_sort_per_item_s: f64,
    /// Put-wall packing per order at the sort-to-order workstation.
    pub sto_pack_per_order_s: f64,
    /// Pack-station handling per order.
    pub pack_station_per_order_s: f64,
    /// Flat conveyor transfer between the pick stage and a workstation.
    pub conveyor_transfer_s: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            ptg_tour_setup_s: 90.0,
            ptg_pick_per_item_s: 30.0,
            gtp_retrieval_per_tote_s: 60.0,
            dto_handling_per_item_s: 20.0,
            sto_sort_per_item_s: 10.0,
            sto_pack_per_order_s: 25.0,
            pack_station_per_order_s: 15.0,
            conveyor_transfer_s: 30.0,
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("ptg_tour_setup_s", self.ptg_tour_setup_s),
            ("ptg_pick_per_item_s", self.ptg_pick_per_item_s),
            ("gtp_retrieval_per_tote_s", self.gtp_retrieval_per_tote_s),
            ("dto_handling_per_item_s", self.dto_handling_per_item_s),
            ("sto_sort_per_item_s", self.sto_sort_per_item_s),
            ("sto_pack_per_order_s", self.sto_pack_per_order_s),
            ("pack_station_per_order_s", self.pack_station_per_order_s),
            ("conveyor_transfer_s", self.conveyor_transfer_s),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(format!("timing field {name} must be a positive finite number, got {v}"));
            }
        }
        Ok(())
    }
}

/// Splits an order's items into cart items and shuttle totes.
///
/// Orders spanning both areas keep the majority of their lines on the
/// shelving side, mirroring the 70/30 storage split; the exact per-order
/// split is not recorded in the instance, so this deterministic rule stands
/// in for it. Every tote corresponds to one distinct shuttle retrieval.
pub fn area_split(order: &Order) -> (u32, u32) {
    match order.location {
        Location::Ptg => (order.items, 0),
        Location::Gtp => (0, order.items),
        Location::Both => {
            let gtp = (order.items * 3 / 10).max(1);
            (order.items - gtp, gtp)
        }
    }
}

/// Work content of one dispatched unit (a single order or a batch).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkProfile {
    pub orders: u32,
    pub items: u32,
    pub ptg_items: u32,
    pub gtp_totes: u32,
}

impl WorkProfile {
    pub fn of<'a>(members: impl IntoIterator<Item = &'a Order>) -> WorkProfile {
        let mut w = WorkProfile { orders: 0, items: 0, ptg_items: 0, gtp_totes: 0 };
        for order in members {
            let (ptg, gtp) = area_split(order);
            w.orders += 1;
            w.items += order.items;
            w.ptg_items += ptg;
            w.gtp_totes += gtp;
        }
        w
    }
}

/// Duration of the cart leg: one tour setup plus the per-item picks. Zero if
/// the unit has no cart items.
pub fn ptg_leg_duration(t: &TimingConfig, w: &WorkProfile) -> f64 {
    if w.ptg_items == 0 {
        0.0
    } else {
        t.ptg_tour_setup_s + t.ptg_pick_per_item_s * f64::from(w.ptg_items)
    }
}

/// Duration of the shuttle leg: sequential retrievals, one per tote.
pub fn gtp_leg_duration(t: &TimingConfig, w: &WorkProfile) -> f64 {
    t.gtp_retrieval_per_tote_s * f64::from(w.gtp_totes)
}

/// Total pick duration of a unit. Cart batches amortize the tour setup, so a
/// batch of k orders is always cheaper than k single-order tours.
pub fn pick_duration(t: &TimingConfig, w: &WorkProfile) -> f64 {
    ptg_leg_duration(t, w) + gtp_leg_duration(t, w)
}

/// Duration of the consolidation stage at the given workstation.
pub fn consolidation_duration(t: &TimingConfig, station: Option<Workstation>, w: &WorkProfile) -> f64 {
    match station {
        None => 0.0,
        Some(Workstation::Dto) => t.dto_handling_per_item_s * f64::from(w.items),
        Some(Workstation::Sto) => {
            t.sto_sort_per_item_s * f64::from(w.items) + t.sto_pack_per_order_s * f64::from(w.orders)
        }
        Some(Workstation::Pack) => t.pack_station_per_order_s * f64::from(w.orders),
    }
}

/// End-to-end latency of a unit: pick, conveyor transfer (when a
/// workstation is involved), and consolidation. Used for slack estimates.
pub fn pipeline_duration(t: &TimingConfig, station: Option<Workstation>, w: &WorkProfile) -> f64 {
    let mut d = pick_duration(t, w);
    if station.is_some() {
        d += t.conveyor_transfer_s + consolidation_duration(t, station, w);
    }
    d
}
