//! Problem instances: customer orders, warehouse resource settings, the
//! seeded instance generator, and CSV persistence.
//!
//! An instance describes one dispatching window (default one hour). Orders
//! are released in bulk at fixed boundary instants and every order carries a
//! cut-off time on a later boundary by which it must be consolidated.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fsio;

/// Order composition: a single-item order or a multi-item order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Composition {
    Sio,
    Mio,
}

impl Composition {
    pub fn as_str(self) -> &'static str {
        match self {
            Composition::Sio => "SIO",
            Composition::Mio => "MIO",
        }
    }
}

/// Storage area(s) an order's lines live in. `Both` only occurs for
/// multi-item orders whose lines are split across the two areas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Ptg,
    Gtp,
    Both,
}

impl Location {
    pub fn as_str(self) -> &'static str {
        match self {
            Location::Ptg => "PTG",
            Location::Gtp => "GTP",
            Location::Both => "BOTH",
        }
    }

    /// True when fulfilling the order involves a picker cart tour.
    pub fn uses_cart(self) -> bool {
        matches!(self, Location::Ptg | Location::Both)
    }

    /// True when fulfilling the order involves shuttle retrievals.
    pub fn uses_shuttle(self) -> bool {
        matches!(self, Location::Gtp | Location::Both)
    }
}

/// Lifecycle of an order. Transitions only move forward in this list;
/// `Shipped`, `TardyShipped` and `Unprocessed` are terminal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrderStatus {
    Pending,
    Assigned,
    Picking,
    Consolidating,
    Shipped,
    TardyShipped,
    Unprocessed,
}

impl OrderStatus {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            OrderStatus::Shipped | OrderStatus::TardyShipped | OrderStatus::Unprocessed
        )
    }
}

pub type OrderId = u32;

/// One customer order.
#[derive(Clone, Debug, PartialEq)]
pub struct Order {
    pub id: OrderId,
    pub composition: Composition,
    pub items: u32,
    pub location: Location,
    /// Instant the order becomes known and pickable, seconds from window start.
    pub release_s: u32,
    /// Consolidation deadline, seconds from window start.
    pub cutoff_s: u32,
    pub status: OrderStatus,
}

impl Order {
    /// Checks the per-order invariants; returns a description of the first
    /// violation.
    pub fn validate(&self, horizon_s: u32) -> Result<(), String> {
        if self.items == 0 {
            return Err(format!("order {}: items must be at least 1", self.id));
        }
        match self.composition {
            Composition::Sio if self.items != 1 => {
                return Err(format!("order {}: SIO must have exactly 1 item", self.id));
            }
            Composition::Mio if self.items < 2 => {
                return Err(format!("order {}: MIO must have at least 2 items", self.id));
            }
            _ => {}
        }
        if self.location == Location::Both && self.composition != Composition::Mio {
            return Err(format!("order {}: only MIO orders can span both areas", self.id));
        }
        if self.release_s >= horizon_s {
            return Err(format!(
                "order {}: release {}s outside the window [0, {}s)",
                self.id, self.release_s, horizon_s
            ));
        }
        if self.cutoff_s <= self.release_s {
            return Err(format!(
                "order {}: cut-off {}s not after release {}s",
                self.id, self.cutoff_s, self.release_s
            ));
        }
        Ok(())
    }
}

/// Number of pickers, shuttles and consolidation workstations available.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResourceConfig {
    pub pickers: u32,
    pub shuttles: u32,
    pub dto_stations: u32,
    pub sto_stations: u32,
    pub pack_stations: u32,
}

impl ResourceConfig {
    pub fn new(pickers: u32, shuttles: u32, dto: u32, sto: u32, pack: u32) -> Self {
        ResourceConfig { pickers, shuttles, dto_stations: dto, sto_stations: sto, pack_stations: pack }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.pickers == 0
            || self.shuttles == 0
            || self.dto_stations == 0
            || self.sto_stations == 0
            || self.pack_stations == 0
        {
            return Err("every resource count must be at least 1".to_string());
        }
        Ok(())
    }
}

/// Order release pattern of the dispatching window.
///
/// `A` releases and cuts off on 60-minute boundaries, `B` on 15-minute
/// boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    A,
    B,
}

impl Scenario {
    pub fn boundary_interval_s(self) -> u32 {
        match self {
            Scenario::A => 3600,
            Scenario::B => 900,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::A => "A",
            Scenario::B => "B",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            other => Err(format!("unknown scenario {other:?} (expected A or B)")),
        }
    }
}

/// A fully specified problem: the order book plus the resources that have to
/// work it off within the window.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub scenario: Scenario,
    pub seed: u64,
    pub horizon_s: u32,
    pub resources: ResourceConfig,
    pub orders: Vec<Order>,
}

impl ProblemInstance {
    pub fn n_orders(&self) -> u32 {
        self.orders.len() as u32
    }

    /// Compact `orders-pickers-shuttles-dto-sto-pack` label, e.g. `330-5-8-1-1-1`.
    pub fn setting_label(&self) -> String {
        let r = &self.resources;
        format!(
            "{}-{}-{}-{}-{}-{}",
            self.orders.len(),
            r.pickers,
            r.shuttles,
            r.dto_stations,
            r.sto_stations,
            r.pack_stations
        )
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.orders.is_empty() {
            return Err(InstanceError::EmptyInstance);
        }
        self.resources
            .validate()
            .map_err(|message| InstanceError::Invalid { message })?;
        let interval = self.scenario.boundary_interval_s();
        if self.horizon_s == 0 || self.horizon_s % interval != 0 {
            return Err(InstanceError::HorizonNotDivisible {
                horizon_s: self.horizon_s,
                interval_s: interval,
            });
        }
        let mut seen = vec![false; self.orders.len()];
        for order in &self.orders {
            order
                .validate(self.horizon_s)
                .map_err(|message| InstanceError::Invalid { message })?;
            let idx = order.id as usize;
            if idx >= seen.len() || seen[idx] {
                return Err(InstanceError::Invalid {
                    message: format!("order ids must be unique and dense, got {}", order.id),
                });
            }
            seen[idx] = true;
        }
        Ok(())
    }
}

/// Percent weights for drawing the number of items in an order (1..=10
/// items). The published weights intentionally sum to 99.8; sampling
/// renormalizes them.
pub const ITEM_COUNT_WEIGHTS: [f64; 10] = [74.0, 16.0, 5.0, 2.0, 1.0, 1.0, 0.2, 0.2, 0.2, 0.2];

/// Share of order lines stored in the picker-to-goods area.
pub const PTG_LINE_PROB: f64 = 0.7;

/// Minimum gap between an order's release and its cut-off boundary.
pub const MIN_CUTOFF_SLACK_S: u32 = 900;

/// Maps a uniform quantile in `[0, 1)` to an item count, following
/// [`ITEM_COUNT_WEIGHTS`].
pub fn items_for_quantile(q: f64) -> u32 {
    let total: f64 = ITEM_COUNT_WEIGHTS.iter().sum();
    let mut acc = 0.0;
    for (i, w) in ITEM_COUNT_WEIGHTS.iter().enumerate() {
        acc += w / total;
        if q < acc {
            return i as u32 + 1;
        }
    }
    ITEM_COUNT_WEIGHTS.len() as u32
}

/// Mean of the item-count distribution, for sanity checks.
pub fn mean_items_per_order() -> f64 {
    let total: f64 = ITEM_COUNT_WEIGHTS.iter().sum();
    ITEM_COUNT_WEIGHTS
        .iter()
        .enumerate()
        .map(|(i, w)| (i as f64 + 1.0) * w / total)
        .sum()
}

/// Everything the generator needs. `min_cutoff_slack_s` defaults to 15
/// minutes; `ptg_line_prob` to the 70/30 storage split.
#[derive(Clone, Debug)]
pub struct GenerateParams {
    pub scenario: Scenario,
    pub n_orders: u32,
    pub horizon_s: u32,
    pub resources: ResourceConfig,
    pub seed: u64,
    pub min_cutoff_slack_s: u32,
    pub ptg_line_prob: f64,
}

impl GenerateParams {
    pub fn new(scenario: Scenario, n_orders: u32, resources: ResourceConfig, seed: u64) -> Self {
        GenerateParams {
            scenario,
            n_orders,
            horizon_s: 3600,
            resources,
            seed,
            min_cutoff_slack_s: MIN_CUTOFF_SLACK_S,
            ptg_line_prob: PTG_LINE_PROB,
        }
    }
}

/// Generates a seeded instance.
///
/// Releases happen in bulk on every scenario boundary inside the window;
/// each order's cut-off is drawn uniformly among the later boundaries that
/// leave at least `min_cutoff_slack_s` of slack. Item counts follow
/// [`ITEM_COUNT_WEIGHTS`]; each order line lands in the PtG area with
/// probability `ptg_line_prob`, independently per line.
pub fn generate_instance(params: &GenerateParams) -> Result<ProblemInstance, InstanceError> {
    if params.n_orders == 0 {
        return Err(InstanceError::EmptyInstance);
    }
    let interval = params.scenario.boundary_interval_s();
    if params.horizon_s == 0 || params.horizon_s % interval != 0 {
        return Err(InstanceError::HorizonNotDivisible {
            horizon_s: params.horizon_s,
            interval_s: interval,
        });
    }
    params
        .resources
        .validate()
        .map_err(|message| InstanceError::Invalid { message })?;

    let release_boundaries: Vec<u32> = (0..params.horizon_s).step_by(interval as usize).collect();
    let cutoff_boundaries: Vec<u32> = (interval..=params.horizon_s)
        .step_by(interval as usize)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut orders = Vec::with_capacity(params.n_orders as usize);
    for id in 0..params.n_orders {
        let items = items_for_quantile(rng.gen::<f64>());
        let composition = if items == 1 { Composition::Sio } else { Composition::Mio };
        let mut ptg_lines = 0u32;
        for _ in 0..items {
            if rng.gen::<f64>() < params.ptg_line_prob {
                ptg_lines += 1;
            }
        }
        let location = if ptg_lines == items {
            Location::Ptg
        } else if ptg_lines == 0 {
            Location::Gtp
        } else {
            Location::Both
        };
        let release_s = release_boundaries[rng.gen_range(0..release_boundaries.len())];
        let eligible: Vec<u32> = cutoff_boundaries
            .iter()
            .copied()
            .filter(|c| *c >= release_s + params.min_cutoff_slack_s)
            .collect();
        if eligible.is_empty() {
            return Err(InstanceError::NoEligibleCutoff { release_s });
        }
        let cutoff_s = eligible[rng.gen_range(0..eligible.len())];
        orders.push(Order {
            id,
            composition,
            items,
            location,
            release_s,
            cutoff_s,
            status: OrderStatus::Pending,
        });
    }

    let instance = ProblemInstance {
        scenario: params.scenario,
        seed: params.seed,
        horizon_s: params.horizon_s,
        resources: params.resources,
        orders,
    };
    instance.validate()?;
    Ok(instance)
}

const CSV_COLUMNS: &str = "id,composition,items,location,release_s,cutoff_s";

/// Renders an instance to its CSV form: one `#` header line carrying the
/// generation metadata, a column-header line, then one row per order.
pub fn render_instance(instance: &ProblemInstance) -> String {
    let r = &instance.resources;
    let mut out = String::new();
    out.push_str(&format!(
        "# scenario={} seed={} horizon_s={} pickers={} shuttles={} dto={} sto={} pack={}\n",
        instance.scenario.as_str(),
        instance.seed,
        instance.horizon_s,
        r.pickers,
        r.shuttles,
        r.dto_stations,
        r.sto_stations,
        r.pack_stations
    ));
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for o in &instance.orders {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            o.id,
            o.composition.as_str(),
            o.items,
            o.location.as_str(),
            o.release_s,
            o.cutoff_s
        ));
    }
    out
}

fn parse_field<T: std::str::FromStr>(
    raw: &str,
    line: usize,
    field: &'static str,
) -> Result<T, InstanceError> {
    raw.trim().parse::<T>().map_err(|_| InstanceError::Parse {
        line,
        field,
        message: format!("cannot parse {raw:?}"),
    })
}

/// Parses the CSV form produced by [`render_instance`]. All orders come back
/// `Pending`; malformed input is reported with its line number and field.
pub fn parse_instance(text: &str) -> Result<ProblemInstance, InstanceError> {
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or(InstanceError::Parse {
        line: 1,
        field: "header",
        message: "empty file".to_string(),
    })?;
    if !header.starts_with('#') {
        return Err(InstanceError::Parse {
            line: 1,
            field: "header",
            message: "expected a '#' metadata line".to_string(),
        });
    }
    let mut scenario = None;
    let mut seed = None;
    let mut horizon_s = None;
    let mut pickers = None;
    let mut shuttles = None;
    let mut dto = None;
    let mut sto = None;
    let mut pack = None;
    for kv in header.trim_start_matches('#').split_whitespace() {
        let (key, value) = kv.split_once('=').ok_or(InstanceError::Parse {
            line: 1,
            field: "header",
            message: format!("expected key=value, got {kv:?}"),
        })?;
        match key {
            "scenario" => {
                scenario = Some(value.parse::<Scenario>().map_err(|message| InstanceError::Parse {
                    line: 1,
                    field: "scenario",
                    message,
                })?)
            }
            "seed" => seed = Some(parse_field::<u64>(value, 1, "seed")?),
            "horizon_s" => horizon_s = Some(parse_field::<u32>(value, 1, "horizon_s")?),
            "pickers" => pickers = Some(parse_field::<u32>(value, 1, "pickers")?),
            "shuttles" => shuttles = Some(parse_field::<u32>(value, 1, "shuttles")?),
            "dto" => dto = Some(parse_field::<u32>(value, 1, "dto")?),
            "sto" => sto = Some(parse_field::<u32>(value, 1, "sto")?),
            "pack" => pack = Some(parse_field::<u32>(value, 1, "pack")?),
            // Experiment provenance stamped by the tooling; not part of the
            // instance itself, so it is accepted and ignored here.
            "config" => {}
            other => {
                return Err(InstanceError::Parse {
                    line: 1,
                    field: "header",
                    message: format!("unknown metadata key {other:?}"),
                })
            }
        }
    }
    let missing = |f: &'static str| InstanceError::Parse {
        line: 1,
        field: f,
        message: "missing from metadata line".to_string(),
    };
    let scenario = scenario.ok_or_else(|| missing("scenario"))?;
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let horizon_s = horizon_s.ok_or_else(|| missing("horizon_s"))?;
    let resources = ResourceConfig::new(
        pickers.ok_or_else(|| missing("pickers"))?,
        shuttles.ok_or_else(|| missing("shuttles"))?,
        dto.ok_or_else(|| missing("dto"))?,
        sto.ok_or_else(|| missing("sto"))?,
        pack.ok_or_else(|| missing("pack"))?,
    );

    let (_, columns) = lines.next().ok_or(InstanceError::Parse {
        line: 2,
        field: "columns",
        message: "missing column header".to_string(),
    })?;
    if columns.trim() != CSV_COLUMNS {
        return Err(InstanceError::Parse {
            line: 2,
            field: "columns",
            message: format!("expected {CSV_COLUMNS:?}"),
        });
    }

    let mut orders = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 6 {
            return Err(InstanceError::Parse {
                line,
                field: "row",
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let composition = match fields[1].trim() {
            "SIO" => Composition::Sio,
            "MIO" => Composition::Mio,
            other => {
                return Err(InstanceError::Parse {
                    line,
                    field: "composition",
                    message: format!("expected SIO or MIO, got {other:?}"),
                })
            }
        };
        let location = match fields[3].trim() {
            "PTG" => Location::Ptg,
            "GTP" => Location::Gtp,
            "BOTH" => Location::Both,
            other => {
                return Err(InstanceError::Parse {
                    line,
                    field: "location",
                    message: format!("expected PTG, GTP or BOTH, got {other:?}"),
                })
            }
        };
        orders.push(Order {
            id: parse_field(fields[0], line, "id")?,
            composition,
            items: parse_field(fields[2], line, "items")?,
            location,
            release_s: parse_field(fields[4], line, "release_s")?,
            cutoff_s: parse_field(fields[5], line, "cutoff_s")?,
            status: OrderStatus::Pending,
        });
    }

    let instance = ProblemInstance { scenario, seed, horizon_s, resources, orders };
    instance.validate()?;
    Ok(instance)
}

/// Writes an instance as CSV (atomically).
pub fn save_instance(instance: &ProblemInstance, path: &Path) -> Result<(), InstanceError> {
    fsio::write_atomic(path, render_instance(instance).as_bytes())?;
    Ok(())
}

/// Reads an instance back from CSV.
pub fn load_instance(path: &Path) -> Result<ProblemInstance, InstanceError> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

#[derive(Debug)]
pub enum InstanceError {
    EmptyInstance,
    HorizonNotDivisible { horizon_s: u32, interval_s: u32 },
    NoEligibleCutoff { release_s: u32 },
    Parse { line: usize, field: &'static str, message: String },
    Invalid { message: String },
    Io(std::io::Error),
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::EmptyInstance => write!(f, "instance must contain at least one order"),
            InstanceError::HorizonNotDivisible { horizon_s, interval_s } => write!(
                f,
                "horizon {horizon_s}s is not a positive multiple of the {interval_s}s boundary interval"
            ),
            InstanceError::NoEligibleCutoff { release_s } => write!(
                f,
                "no cut-off boundary leaves enough slack for an order released at {release_s}s"
            ),
            InstanceError::Parse { line, field, message } => {
                write!(f, "line {line}, field {field}: {message}")
            }
            InstanceError::Invalid { message } => write!(f, "invalid instance: {message}"),
            InstanceError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for InstanceError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            InstanceError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for InstanceError {
    fn from(e: std::io::Error) -> Self {
        InstanceError::Io(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_resources() -> ResourceConfig {
        ResourceConfig::new(5, 8, 1, 1, 1)
    }

    #[test]
    fn quantiles_of_the_item_count_distribution() {
        assert_eq!(items_for_quantile(0.0), 1);
        assert_eq!(items_for_quantile(0.50), 1);
        assert_eq!(items_for_quantile(0.75), 2);
        assert_eq!(items_for_quantile(0.999), 10);
        assert!((mean_items_per_order() - 1.47).abs() < 0.01);
    }

    #[test]
    fn sampled_item_counts_match_the_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mut sum = 0u64;
        let mut ones = 0u64;
        for _ in 0..n {
            let k = items_for_quantile(rng.gen::<f64>());
            sum += u64::from(k);
            if k == 1 {
                ones += 1;
            }
        }
        let mean = sum as f64 / n as f64;
        assert!((mean - mean_items_per_order()).abs() < 0.01, "mean {mean}");
        let p1 = ones as f64 / n as f64;
        assert!((p1 - 74.0 / 99.8).abs() < 0.005, "p1 {p1}");
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let params = GenerateParams::new(Scenario::B, 330, default_resources(), 42);
        let a = generate_instance(&params).unwrap();
        let b = generate_instance(&params).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(&GenerateParams { seed: 43, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scenario_a_releases_everything_at_zero() {
        let params = GenerateParams::new(Scenario::A, 300, default_resources(), 1);
        let inst = generate_instance(&params).unwrap();
        assert!(inst.orders.iter().all(|o| o.release_s == 0));
        assert!(inst.orders.iter().all(|o| o.cutoff_s == 3600));
    }

    #[test]
    fn scenario_b_uses_quarter_hour_boundaries() {
        let params = GenerateParams::new(Scenario::B, 330, default_resources(), 42);
        let inst = generate_instance(&params).unwrap();
        let mut releases: Vec<u32> = inst.orders.iter().map(|o| o.release_s).collect();
        releases.sort_unstable();
        releases.dedup();
        assert_eq!(releases, vec![0, 900, 1800, 2700]);
        for o in &inst.orders {
            assert_eq!(o.cutoff_s % 900, 0);
            assert!(o.cutoff_s >= o.release_s + MIN_CUTOFF_SLACK_S);
            assert!(o.cutoff_s <= 3600);
        }
        // Cut-off spread: all four quarter-hour deadlines occur.
        let mut cutoffs: Vec<u32> = inst.orders.iter().map(|o| o.cutoff_s).collect();
        cutoffs.sort_unstable();
        cutoffs.dedup();
        assert_eq!(cutoffs, vec![900, 1800, 2700, 3600]);
    }

    #[test]
    fn type_mix_is_consistent_with_the_storage_split() {
        let params = GenerateParams::new(Scenario::A, 300, default_resources(), 9);
        // Average over many instances so the check is not seed-sensitive.
        let mut sio_ptg = 0u32;
        let mut sio_gtp = 0u32;
        let mut n = 0u32;
        for seed in 0..30 {
            let inst = generate_instance(&GenerateParams { seed, ..params.clone() }).unwrap();
            for o in &inst.orders {
                n += 1;
                match (o.composition, o.location) {
                    (Composition::Sio, Location::Ptg) => sio_ptg += 1,
                    (Composition::Sio, Location::Gtp) => sio_gtp += 1,
                    (Composition::Sio, Location::Both) => unreachable!(),
                    _ => {}
                }
            }
        }
        let f_sio_ptg = f64::from(sio_ptg) / f64::from(n);
        let f_sio_gtp = f64::from(sio_gtp) / f64::from(n);
        // Expected 0.7415 * 0.7 and 0.7415 * 0.3.
        assert!((f_sio_ptg - 0.519).abs() < 0.02, "SIO-PtG share {f_sio_ptg}");
        assert!((f_sio_gtp - 0.222).abs() < 0.02, "SIO-GtP share {f_sio_gtp}");
    }

    #[test]
    fn rejects_empty_and_misaligned_instances() {
        let mut params = GenerateParams::new(Scenario::A, 0, default_resources(), 1);
        assert!(matches!(generate_instance(&params), Err(InstanceError::EmptyInstance)));
        params.n_orders = 10;
        params.horizon_s = 3700;
        assert!(matches!(
            generate_instance(&params),
            Err(InstanceError::HorizonNotDivisible { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let params = GenerateParams::new(Scenario::B, 57, default_resources(), 123);
        let inst = generate_instance(&params).unwrap();
        let text = render_instance(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn parse_reports_line_and_field() {
        let params = GenerateParams::new(Scenario::B, 3, default_resources(), 5);
        let inst = generate_instance(&params).unwrap();
        let mut text = render_instance(&inst);
        text = text.replace("2,", "x,"); // corrupt the id of the last row
        let err = parse_instance(&text).unwrap_err();
        match err {
            InstanceError::Parse { line, field, .. } => {
                assert_eq!(line, 5);
                assert_eq!(field, "id");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_negative_and_inconsistent_rows() {
        let good = "# scenario=A seed=1 horizon_s=3600 pickers=1 shuttles=1 dto=1 sto=1 pack=1\n\
                    id,composition,items,location,release_s,cutoff_s\n";
        // Negative cut-off fails on the field parse.
        let t = format!("{good}0,SIO,1,PTG,0,-5\n");
        assert!(matches!(
            parse_instance(&t),
            Err(InstanceError::Parse { field: "cutoff_s", .. })
        ));
        // A single-item order spanning both areas violates the invariants.
        let t = format!("{good}0,SIO,1,BOTH,0,3600\n");
        assert!(matches!(parse_instance(&t), Err(InstanceError::Invalid { .. })));
        // Cut-off before release violates the invariants.
        let t = format!("{good}0,SIO,1,PTG,1800,900\n");
        assert!(matches!(parse_instance(&t), Err(InstanceError::Invalid { .. })));
    }
}
