//! Routing: which resources and which consolidation workstation a dispatched
//! unit needs, given its composition, storage area and pick mode.

use crate::instance::{Composition, Location};

/// Consolidation workstation kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Workstation {
    /// Direct-to-order: totes are worked off straight into order cartons.
    Dto,
    /// Sort-to-order: items are sorted into a put wall and packed per order.
    Sto,
    /// Pack station: completed single-item batches are packed per order.
    Pack,
}

/// Pick mode of a dispatched unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PickKind {
    /// One order picked on its own.
    ByOrder,
    /// Several orders picked together.
    ByBatch,
}

/// The fulfilment path of a dispatched unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoutePlan {
    /// Route label (1..=5) for traces and reports.
    pub route: u8,
    /// Consolidation stage, if the route has one. Route 1 ships directly
    /// after the pick.
    pub workstation: Option<Workstation>,
    pub needs_picker: bool,
    pub needs_shuttle: bool,
}

/// Maps (composition, location, pick mode) to its route.
///
/// Single-item cart orders picked alone ship straight from the picker
/// (route 1); batched they are packed at the pack station (route 2).
/// Shuttle-side units go to direct-to-order (routes 4 and 5), except
/// multi-item batches, which need the put wall (route 5 to sort-to-order).
/// Everything that mixes areas or batches multi-item cart orders runs
/// through sort-to-order (route 3).
pub fn route_for(composition: Composition, location: Location, kind: PickKind) -> RoutePlan {
    use Composition::*;
    use Location::*;
    use PickKind::*;
    let (route, workstation) = match (composition, location, kind) {
        (Sio, Ptg, ByOrder) => (1, None),
        (Sio, Ptg, ByBatch) => (2, Some(Workstation::Pack)),
        (Sio, Gtp, ByOrder) => (4, Some(Workstation::Dto)),
        (Sio, Gtp, ByBatch) => (5, Some(Workstation::Dto)),
        (Mio, Ptg, ByOrder) => (1, None),
        (Mio, Ptg, ByBatch) => (3, Some(Workstation::Sto)),
        (Mio, Gtp, ByOrder) => (4, Some(Workstation::Dto)),
        (Mio, Gtp, ByBatch) => (5, Some(Workstation::Sto)),
        (Mio, Both, ByOrder) => (3, Some(Workstation::Sto)),
        (Mio, Both, ByBatch) => (3, Some(Workstation::Sto)),
        (Sio, Both, _) => unreachable!("single-item orders live in exactly one area"),
    };
    RoutePlan {
        route,
        workstation,
        needs_picker: location.uses_cart(),
        needs_shuttle: location.uses_shuttle(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_table_is_complete_and_consistent() {
        let cases = [
            (Composition::Sio, Location::Ptg, PickKind::ByOrder, 1, None),
            (Composition::Sio, Location::Ptg, PickKind::ByBatch, 2, Some(Workstation::Pack)),
            (Composition::Sio, Location::Gtp, PickKind::ByOrder, 4, Some(Workstation::Dto)),
            (Composition::Sio, Location::Gtp, PickKind::ByBatch, 5, Some(Workstation::Dto)),
            (Composition::Mio, Location::Ptg, PickKind::ByOrder, 1, None),
            (Composition::Mio, Location::Ptg, PickKind::ByBatch, 3, Some(Workstation::Sto)),
            (Composition::Mio, Location::Gtp, PickKind::ByOrder, 4, Some(Workstation::Dto)),
            (Composition::Mio, Location::Gtp, PickKind::ByBatch, 5, Some(Workstation::Sto)),
            (Composition::Mio, Location::Both, PickKind::ByOrder, 3, Some(Workstation::Sto)),
            (Composition::Mio, Location::Both, PickKind::ByBatch, 3, Some(Workstation::Sto)),
        ];
        for (comp, loc, kind, route, ws) in cases {
            let plan = route_for(comp, loc, kind);
            assert_eq!(plan.route, route, "{comp:?} {loc:?} {kind:?}");
            assert_eq!(plan.workstation, ws, "{comp:?} {loc:?} {kind:?}");
            assert_eq!(plan.needs_picker, loc.uses_cart());
            assert_eq!(plan.needs_shuttle, loc.uses_shuttle());
        }
    }
}
