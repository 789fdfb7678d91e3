//! Case files, bundled instances, random cases and comparison reports.
//!
//! A case file is a single JSON document with schema tag `"v1"`:
//!
//! ```json
//! {
//!   "schema": "v1",
//!   "name": "simple",
//!   "network": { "buses": [1], "lines": [], "slack": 1, "copper_plate": true },
//!   "generators": [ { "bus": 1, "cost": 0.472, "emission": 0.9, "capacity": 800 } ],
//!   "loads": [ { "bus": 1, "utility": 0.78, "capacity": 350 } ],
//!   "market": { "kappa": 0.07, "display_scale": 1000 }
//! }
//! ```
//!
//! Line capacities may be `null` (unlimited). Unknown fields are rejected.
//! All computation happens in raw units; `display_scale` only multiplies
//! monetary figures in reports.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BusId, GridError, Line, Network};
use crate::outcome::MarketOutcome;

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub bus: BusId,
    /// Marginal cost `c_i`.
    pub cost: f64,
    /// Emission intensity `e_i`.
    pub emission: f64,
    /// Maximum output `P̄_i`.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub bus: BusId,
    /// Marginal utility `b_j`.
    pub utility: f64,
    /// Maximum demand `D̄_j`.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketSection {
    kappa: f64,
    #[serde(default = "one")]
    display_scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    schema: String,
    #[serde(default)]
    name: String,
    network: Network,
    generators: Vec<Generator>,
    loads: Vec<Load>,
    market: MarketSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketCase {
    pub name: String,
    pub network: Network,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    /// Carbon price `κ`.
    pub kappa: f64,
    pub display_scale: f64,
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema {0:?} (expected \"v1\")")]
    Schema(String),
    #[error("invalid {field}: {message}")]
    Invariant { field: String, message: String },
    #[error("invalid network: {0}")]
    Network(#[from] GridError),
    #[error("unknown bundled case {0:?}")]
    UnknownBundled(String),
}

fn invariant(field: impl Into<String>, message: impl Into<String>) -> CaseError {
    CaseError::Invariant { field: field.into(), message: message.into() }
}

impl MarketCase {
    pub fn validate(&self) -> Result<(), CaseError> {
        self.network.validate()?;
        if self.generators.is_empty() {
            return Err(invariant("generators", "at least one generator is required"));
        }
        if self.loads.is_empty() {
            return Err(invariant("loads", "at least one load is required"));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(invariant("market.kappa", format!("must be finite and >= 0, got {}", self.kappa)));
        }
        if !(self.display_scale.is_finite() && self.display_scale > 0.0) {
            return Err(invariant(
                "market.display_scale",
                format!("must be positive, got {}", self.display_scale),
            ));
        }
        let has_bus = |b: BusId| self.network.buses.contains(&b);
        for (i, g) in self.generators.iter().enumerate() {
            let field = |f: &str| format!("generators[{i}].{f}");
            if !has_bus(g.bus) {
                return Err(invariant(field("bus"), format!("bus {} does not exist", g.bus)));
            }
            if !g.cost.is_finite() {
                return Err(invariant(field("cost"), "must be finite"));
            }
            if !(g.emission.is_finite() && g.emission >= 0.0) {
                return Err(invariant(field("emission"), format!("must be >= 0, got {}", g.emission)));
            }
            if !(g.capacity.is_finite() && g.capacity >= 0.0) {
                return Err(invariant(field("capacity"), format!("must be finite and >= 0, got {}", g.capacity)));
            }
        }
        for (j, l) in self.loads.iter().enumerate() {
            let field = |f: &str| format!("loads[{j}].{f}");
            if !has_bus(l.bus) {
                return Err(invariant(field("bus"), format!("bus {} does not exist", l.bus)));
            }
            if !l.utility.is_finite() {
                return Err(invariant(field("utility"), "must be finite"));
            }
            if !(l.capacity.is_finite() && l.capacity >= 0.0) {
                return Err(invariant(field("capacity"), format!("must be finite and >= 0, got {}", l.capacity)));
            }
        }
        Ok(())
    }

    /// Same case with every line capacity multiplied by `factor`.
    pub fn with_scaled_capacities(&self, factor: f64) -> MarketCase {
        MarketCase { network: self.network.with_scaled_capacities(factor), ..self.clone() }
    }

    pub fn total_generation_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.capacity).sum()
    }

    pub fn total_demand_capacity(&self) -> f64 {
        self.loads.iter().map(|l| l.capacity).sum()
    }

    pub fn to_json(&self) -> String {
        let file = CaseFile {
            schema: SCHEMA_VERSION.to_string(),
            name: self.name.clone(),
            network: self.network.clone(),
            generators: self.generators.clone(),
            loads: self.loads.clone(),
            market: MarketSection { kappa: self.kappa, display_scale: self.display_scale },
        };
        let mut s = serde_json::to_string_pretty(&file).expect("case serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<MarketCase, CaseError> {
        let file: CaseFile = serde_json::from_str(text).map_err(|e| CaseError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if file.schema != SCHEMA_VERSION {
            return Err(CaseError::Schema(file.schema));
        }
        let case = MarketCase {
            name: file.name,
            network: file.network,
            generators: file.generators,
            loads: file.loads,
            kappa: file.market.kappa,
            display_scale: file.market.display_scale,
        };
        case.validate()?;
        Ok(case)
    }
}

pub fn load_case(path: impl AsRef<Path>) -> Result<MarketCase, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| CaseError::Io { path: path.to_path_buf(), source })?;
    MarketCase::from_json(&text)
}

pub fn save_case(case: &MarketCase, path: impl AsRef<Path>) -> Result<(), CaseError> {
    let path = path.as_ref();
    std::fs::write(path, case.to_json())
        .map_err(|source| CaseError::Io { path: path.to_path_buf(), source })
}

/// Serde adapter writing infinite values as `null`.
pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// The six-generator, eight-load single-node system used for the price
/// comparison. Monetary results display at 1000x raw units.
pub fn bundled_simple_system() -> MarketCase {
    let gens = [
        (0.472, 0.9, 800.0),
        (0.480, 0.8, 800.0),
        (0.502, 0.8, 500.0),
        (0.473, 0.2, 550.0),
        (0.492, 0.3, 300.0),
        (0.512, 0.3, 400.0),
    ];
    let loads = [
        (0.78, 350.0),
        (0.78, 340.0),
        (0.85, 420.0),
        (0.67, 500.0),
        (0.85, 200.0),
        (0.73, 330.0),
        (0.75, 280.0),
        (0.84, 250.0),
    ];
    let bus = BusId(1);
    MarketCase {
        name: "simple".into(),
        network: Network::copper_plate(bus),
        generators: gens
            .iter()
            .map(|&(cost, emission, capacity)| Generator { bus, cost, emission, capacity })
            .collect(),
        loads: loads
            .iter()
            .map(|&(utility, capacity)| Load { bus, utility, capacity })
            .collect(),
        kappa: 0.07,
        display_scale: 1000.0,
    }
}

/// Names accepted by [`bundled_case`].
pub const BUNDLED_CASES: &[&str] = &["simple", "mesh5", "syn39", "syn118"];

/// Bundled instances by name. `simple` is built in code; the congested
/// meshed cases ship as case files.
pub fn bundled_case(name: &str) -> Result<MarketCase, CaseError> {
    let text = match name {
        "simple" => return Ok(bundled_simple_system()),
        "mesh5" => include_str!("../cases/mesh5.case"),
        "syn39" => include_str!("../cases/syn39.case"),
        "syn118" => include_str!("../cases/syn118.case"),
        other => return Err(CaseError::UnknownBundled(other.to_string())),
    };
    MarketCase::from_json(text)
}

/// Seed and generator settings behind each bundled synthetic case, so the
/// shipped files can be regenerated with [`synthetic_case`].
pub fn synthetic_preset(name: &str) -> Option<(u64, RandomCaseConfig)> {
    let base = RandomCaseConfig::default();
    let preset = match name {
        "mesh5" => (
            27,
            RandomCaseConfig { generators: 4, loads: 4, buses: 5, extra_lines: 2, line_capacity: (100.0, 400.0), ..base },
        ),
        "syn39" => (
            0,
            RandomCaseConfig {
                generators: 10,
                loads: 21,
                buses: 39,
                extra_lines: 8,
                generator_capacity: (225.0, 900.0),
                line_capacity: (150.0, 600.0),
                ..base
            },
        ),
        "syn118" => (
            0,
            RandomCaseConfig {
                generators: 54,
                loads: 91,
                buses: 118,
                extra_lines: 69,
                generator_capacity: (175.0, 700.0),
                line_capacity: (150.0, 600.0),
                monitored: 0.25,
                ..base
            },
        ),
        _ => return None,
    };
    Some(preset)
}

/// Regenerates a bundled synthetic case from its preset.
pub fn synthetic_case(name: &str) -> Result<MarketCase, CaseError> {
    let (seed, cfg) = synthetic_preset(name).ok_or_else(|| CaseError::UnknownBundled(name.to_string()))?;
    let mut case = random_case(seed, &cfg);
    case.name = name.to_string();
    Ok(case)
}

/// Size and parameter ranges for [`random_case`]. All ranges are half-open
/// `[lo, hi)` with `lo < hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomCaseConfig {
    pub generators: usize,
    pub loads: usize,
    /// Bus count; 1 gives a copper-plate case.
    pub buses: usize,
    /// Lines added on top of a random spanning tree.
    pub extra_lines: usize,
    pub cost: (f64, f64),
    pub emission: (f64, f64),
    pub generator_capacity: (f64, f64),
    pub utility: (f64, f64),
    pub load_capacity: (f64, f64),
    pub susceptance: (f64, f64),
    pub line_capacity: (f64, f64),
    /// Fraction of lines that get a finite limit; the rest are unmonitored.
    pub monitored: f64,
    pub kappa: f64,
}

impl Default for RandomCaseConfig {
    fn default() -> Self {
        Self {
            generators: 3,
            loads: 3,
            buses: 1,
            extra_lines: 0,
            cost: (0.40, 0.55),
            emission: (0.0, 1.0),
            generator_capacity: (50.0, 400.0),
            utility: (0.45, 0.90),
            load_capacity: (50.0, 400.0),
            susceptance: (5.0, 20.0),
            line_capacity: (40.0, 250.0),
            monitored: 1.0,
            kappa: 0.07,
        }
    }
}

impl RandomCaseConfig {
    /// Small meshed network, usually congested.
    pub fn meshed(buses: usize) -> Self {
        Self {
            generators: buses.max(2),
            loads: buses.max(2),
            buses,
            extra_lines: buses / 2 + 1,
            ..Self::default()
        }
    }
}

/// Deterministic pseudo-random case for a seed. Zero trade is always
/// feasible, so every generated case can be cleared.
pub fn random_case(seed: u64, cfg: &RandomCaseConfig) -> MarketCase {
    assert!(cfg.generators > 0 && cfg.loads > 0 && cfg.buses > 0, "empty random case");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: (f64, f64)| rng.gen_range(r.0..r.1);
    // draw parameters first so the closure borrow ends before topology
    let generators: Vec<(f64, f64, f64)> = (0..cfg.generators)
        .map(|_| (draw(cfg.cost), draw(cfg.emission), draw(cfg.generator_capacity)))
        .collect();
    let loads: Vec<(f64, f64)> = (0..cfg.loads)
        .map(|_| (draw(cfg.utility), draw(cfg.load_capacity)))
        .collect();

    let buses: Vec<BusId> = (1..=cfg.buses as u32).map(BusId).collect();
    let network = if cfg.buses == 1 {
        Network::copper_plate(buses[0])
    } else {
        let mut lines = Vec::new();
        let mut pairs = std::collections::HashSet::new();
        let line = |rng: &mut ChaCha8Rng, a: usize, b: usize| Line {
            from: buses[a],
            to: buses[b],
            susceptance: rng.gen_range(cfg.susceptance.0..cfg.susceptance.1),
            capacity: rng.gen_range(cfg.line_capacity.0..cfg.line_capacity.1),
        };
        for k in 1..cfg.buses {
            let parent = rng.gen_range(0..k);
            pairs.insert((parent, k));
            lines.push(line(&mut rng, parent, k));
        }
        let max_pairs = cfg.buses * (cfg.buses - 1) / 2;
        let mut added = 0;
        while added < cfg.extra_lines && pairs.len() < max_pairs {
            let a = rng.gen_range(0..cfg.buses);
            let b = rng.gen_range(0..cfg.buses);
            let key = (a.min(b), a.max(b));
            if a == b || !pairs.insert(key) {
                continue;
            }
            lines.push(line(&mut rng, key.0, key.1));
            added += 1;
        }
        if cfg.monitored < 1.0 {
            for l in &mut lines {
                if rng.gen::<f64>() >= cfg.monitored {
                    l.capacity = f64::INFINITY;
                }
            }
        }
        Network { buses: buses.clone(), lines, slack: buses[0], copper_plate: false }
    };
    let site = |rng: &mut ChaCha8Rng| buses[rng.gen_range(0..buses.len())];
    MarketCase {
        name: format!("random-{seed}"),
        generators: generators
            .into_iter()
            .map(|(cost, emission, capacity)| Generator { bus: site(&mut rng), cost, emission, capacity })
            .collect(),
        loads: loads
            .into_iter()
            .map(|(utility, capacity)| Load { bus: site(&mut rng), utility, capacity })
            .collect(),
        network,
        kappa: cfg.kappa,
        display_scale: 1.0,
    }
}

/// Member `seed` of the mixed fuzzing batch: even seeds give a 3x3
/// copper-plate case, odd seeds a meshed 4-bus network.
pub fn random_batch_case(seed: u64) -> MarketCase {
    let cfg = if seed % 2 == 0 { RandomCaseConfig::default() } else { RandomCaseConfig::meshed(4) };
    random_case(seed, &cfg)
}

/// One row of a mechanism comparison, in display units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub mechanism: String,
    pub generator_net_profit: f64,
    pub load_net_profit: f64,
    pub generator_revenue: f64,
    pub load_payment: f64,
    pub carbon_tax: f64,
    pub subsidy: f64,
    pub social_welfare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub case: String,
    pub display_scale: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonRow {
    pub fn from_outcome(outcome: &MarketOutcome, scale: f64) -> Self {
        Self {
            mechanism: outcome.mechanism.to_string(),
            generator_net_profit: scale * outcome.generator_net_profit(),
            load_net_profit: scale * outcome.load_net_utility(),
            generator_revenue: scale * outcome.generator_revenue(),
            load_payment: scale * outcome.load_payment(),
            carbon_tax: scale * outcome.carbon_tax(),
            subsidy: scale * outcome.subsidy(),
            social_welfare: scale * outcome.welfare,
        }
    }
}

impl ComparisonReport {
    pub fn new(case: &MarketCase, outcomes: &[MarketOutcome]) -> Self {
        Self {
            case: case.name.clone(),
            display_scale: case.display_scale,
            rows: outcomes
                .iter()
                .map(|o| ComparisonRow::from_outcome(o, case.display_scale))
                .collect(),
        }
    }

    pub fn row(&self, mechanism: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.mechanism == mechanism)
    }

    /// One CSV row per mechanism, columns in [`ComparisonRow`] field order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
