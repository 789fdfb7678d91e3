//! DC network model and power transfer distribution factors.
//!
//! Flow on a line is positive in the `from -> to` direction. Shift factors are
//! referenced to the slack bus: an injection at bus `n` is withdrawn at the
//! slack, so the slack column of the PTDF matrix is identically zero.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// External bus number as written in case files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    /// Per-unit susceptance, strictly positive.
    pub susceptance: f64,
    /// Thermal limit `F_l`; `null` in case files means unlimited.
    #[serde(with = "crate::case::inf_as_null", default = "unlimited")]
    pub capacity: f64,
}

fn unlimited() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub buses: Vec<BusId>,
    #[serde(default)]
    pub lines: Vec<Line>,
    pub slack: BusId,
    /// Ignore the lines entirely: no flow limits, one pooled node.
    #[serde(default)]
    pub copper_plate: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("bus {0} is listed more than once")]
    DuplicateBus(BusId),
    #[error("line {line} references unknown bus {bus}")]
    UnknownBus { line: usize, bus: BusId },
    #[error("slack bus {0} is not in the bus list")]
    MissingSlack(BusId),
    #[error("line {0} connects a bus to itself")]
    SelfLoop(usize),
    #[error("line {line} has invalid susceptance {value} (must be finite and > 0)")]
    BadSusceptance { line: usize, value: f64 },
    #[error("line {line} has invalid capacity {value} (must be >= 0)")]
    BadCapacity { line: usize, value: f64 },
    #[error("network is disconnected: bus {0} is unreachable from the slack")]
    Disconnected(BusId),
    #[error("reduced susceptance matrix is singular")]
    SingularSusceptance,
    #[error("shift factors are undefined for a copper-plate network")]
    CopperPlate,
    #[error("injections do not balance: generation {generation} vs demand {demand}")]
    UnbalancedInjection { generation: f64, demand: f64 },
}

impl Network {
    /// Network with a single bus and no lines.
    pub fn copper_plate(bus: BusId) -> Self {
        Self {
            buses: vec![bus],
            lines: Vec::new(),
            slack: bus,
            copper_plate: true,
        }
    }

    pub fn bus_index(&self, bus: BusId) -> Option<usize> {
        self.buses.iter().position(|&b| b == bus)
    }

    fn index_map(&self) -> HashMap<BusId, usize> {
        self.buses.iter().enumerate().map(|(i, &b)| (b, i)).collect()
    }

    /// Checks ids, line data and (unless copper-plate) connectivity.
    pub fn validate(&self) -> Result<(), GridError> {
        let mut seen = HashMap::new();
        for &b in &self.buses {
            if seen.insert(b, ()).is_some() {
                return Err(GridError::DuplicateBus(b));
            }
        }
        if !seen.contains_key(&self.slack) {
            return Err(GridError::MissingSlack(self.slack));
        }
        for (l, line) in self.lines.iter().enumerate() {
            for bus in [line.from, line.to] {
                if !seen.contains_key(&bus) {
                    return Err(GridError::UnknownBus { line: l, bus });
                }
            }
            if line.from == line.to {
                return Err(GridError::SelfLoop(l));
            }
            if !(line.susceptance.is_finite() && line.susceptance > 0.0) {
                return Err(GridError::BadSusceptance { line: l, value: line.susceptance });
            }
            if line.capacity.is_nan() || line.capacity < 0.0 {
                return Err(GridError::BadCapacity { line: l, value: line.capacity });
            }
        }
        if !self.copper_plate {
            self.check_connected()?;
        }
        Ok(())
    }

    fn check_connected(&self) -> Result<(), GridError> {
        let idx = self.index_map();
        let mut adj = vec![Vec::new(); self.buses.len()];
        for line in &self.lines {
            let (a, b) = (idx[&line.from], idx[&line.to]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::from([idx[&self.slack]]);
        seen[idx[&self.slack]] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(GridError::Disconnected(self.buses[i])),
            None => Ok(()),
        }
    }

    /// Copy with every finite line capacity multiplied by `factor`.
    pub fn with_scaled_capacities(&self, factor: f64) -> Network {
        let mut net = self.clone();
        for line in &mut net.lines {
            line.capacity *= factor;
        }
        net
    }
}

/// Line-by-bus shift factors. Row `l`, column `n` is the flow on line `l`
/// caused by a unit injection at bus `n` withdrawn at the slack.
#[derive(Debug, Clone, PartialEq)]
pub struct PtdfMatrix {
    factors: DMatrix<f64>,
    slack: usize,
}

impl PtdfMatrix {
    pub fn num_lines(&self) -> usize {
        self.factors.nrows()
    }

    pub fn num_buses(&self) -> usize {
        self.factors.ncols()
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    /// Factor for line `line` and bus position `bus` (index into `Network::buses`).
    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.factors[(line, bus)]
    }

    /// Line flows for a vector of net injections indexed by bus position.
    pub fn flows_for_injections(&self, injections: &[f64]) -> Vec<f64> {
        (0..self.num_lines())
            .map(|l| (0..self.num_buses()).map(|n| self.factors[(l, n)] * injections[n]).sum())
            .collect()
    }
}

/// Shift factors via the reduced nodal susceptance matrix (slack row and
/// column removed), factored once with a dense LU.
pub fn compute_ptdf(network: &Network) -> Result<PtdfMatrix, GridError> {
    if network.copper_plate {
        return Err(GridError::CopperPlate);
    }
    network.validate()?;
    let n = network.buses.len();
    let idx = network.index_map();
    let slack = idx[&network.slack];
    // position in the reduced system, None for the slack
    let reduced: Vec<Option<usize>> = (0..n)
        .map(|i| match i.cmp(&slack) {
            std::cmp::Ordering::Less => Some(i),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(i - 1),
        })
        .collect();

    let mut b = DMatrix::<f64>::zeros(n - 1, n - 1);
    for line in &network.lines {
        let (f, t) = (reduced[idx[&line.from]], reduced[idx[&line.to]]);
        let y = line.susceptance;
        if let Some(f) = f {
            b[(f, f)] += y;
        }
        if let Some(t) = t {
            b[(t, t)] += y;
        }
        if let (Some(f), Some(t)) = (f, t) {
            b[(f, t)] -= y;
            b[(t, f)] -= y;
        }
    }
    let x = if n > 1 {
        b.lu()
            .try_inverse()
            .ok_or(GridError::SingularSusceptance)?
    } else {
        DMatrix::zeros(0, 0)
    };
    let angle = |bus: usize, inj: usize| -> f64 {
        match (reduced[bus], reduced[inj]) {
            (Some(r), Some(c)) => x[(r, c)],
            _ => 0.0,
        }
    };
    let mut factors = DMatrix::<f64>::zeros(network.lines.len(), n);
    for (l, line) in network.lines.iter().enumerate() {
        let (f, t) = (idx[&line.from], idx[&line.to]);
        for k in 0..n {
            if k != slack {
                let v = line.susceptance * (angle(f, k) - angle(t, k));
                // drop round-off left by the inverse
                factors[(l, k)] = if v.abs() < 1e-12 { 0.0 } else { v };
            }
        }
    }
    Ok(PtdfMatrix { factors, slack })
}

/// `sum_i pi_il p_i - sum_j pi_jl d_j` for every line.
///
/// `generator_bus` and `load_bus` give each agent's bus position.
pub fn line_flows(
    ptdf: &PtdfMatrix,
    p: &[f64],
    d: &[f64],
    generator_bus: &[usize],
    load_bus: &[usize],
) -> Result<Vec<f64>, GridError> {
    let (generation, demand): (f64, f64) = (p.iter().sum(), d.iter().sum());
    if (generation - demand).abs() > 1e-6 * generation.abs().max(demand.abs()).max(1.0) {
        return Err(GridError::UnbalancedInjection { generation, demand });
    }
    let mut injection = vec![0.0; ptdf.num_buses()];
    for (&bus, &v) in generator_bus.iter().zip(p) {
        injection[bus] += v;
    }
    for (&bus, &v) in load_bus.iter().zip(d) {
        injection[bus] -= v;
    }
    Ok(ptdf.flows_for_injections(&injection))
}
