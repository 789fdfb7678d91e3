//! A validated case with its shift factors and agent siting resolved.

use crate::case::MarketCase;
use crate::error::Result;
use crate::grid::{compute_ptdf, PtdfMatrix};

/// Case plus everything the LP builders need: bus positions of each agent,
/// the lines that get flow-limit rows and the agents' shift factors on them.
#[derive(Debug, Clone)]
pub struct Market {
    pub case: MarketCase,
    ptdf: Option<PtdfMatrix>,
    generator_bus: Vec<usize>,
    load_bus: Vec<usize>,
    /// Indices of lines with a finite limit (empty for copper plate).
    constrained: Vec<usize>,
    /// `generator_shift[i][k]` = π of generator i on constrained line k.
    generator_shift: Vec<Vec<f64>>,
    load_shift: Vec<Vec<f64>>,
}

impl Market {
    pub fn new(case: &MarketCase) -> Result<Self> {
        case.validate()?;
        let net = &case.network;
        let bus_pos = |b| net.bus_index(b).expect("validated siting");
        let generator_bus: Vec<usize> = case.generators.iter().map(|g| bus_pos(g.bus)).collect();
        let load_bus: Vec<usize> = case.loads.iter().map(|l| bus_pos(l.bus)).collect();
        let (ptdf, constrained) = if net.copper_plate {
            (None, Vec::new())
        } else {
            let ptdf = compute_ptdf(net)?;
            let constrained = (0..net.lines.len())
                .filter(|&l| net.lines[l].capacity.is_finite())
                .collect();
            (Some(ptdf), constrained)
        };
        let shifts = |buses: &[usize]| -> Vec<Vec<f64>> {
            buses
                .iter()
                .map(|&n| match &ptdf {
                    Some(m) => constrained.iter().map(|&l| m.get(l, n)).collect(),
                    None => Vec::new(),
                })
                .collect()
        };
        let generator_shift = shifts(&generator_bus);
        let load_shift = shifts(&load_bus);
        Ok(Self {
            case: case.clone(),
            ptdf,
            generator_bus,
            load_bus,
            constrained,
            generator_shift,
            load_shift,
        })
    }

    pub fn num_generators(&self) -> usize {
        self.case.generators.len()
    }

    pub fn num_loads(&self) -> usize {
        self.case.loads.len()
    }

    pub fn num_buses(&self) -> usize {
        self.case.network.buses.len()
    }

    pub fn num_lines(&self) -> usize {
        self.case.network.lines.len()
    }

    pub fn ptdf(&self) -> Option<&PtdfMatrix> {
        self.ptdf.as_ref()
    }

    pub fn generator_bus(&self) -> &[usize] {
        &self.generator_bus
    }

    pub fn load_bus(&self) -> &[usize] {
        &self.load_bus
    }

    /// Lines that carry flow-limit rows, as indices into the case's line list.
    pub fn constrained_lines(&self) -> &[usize] {
        &self.constrained
    }

    pub fn generator_shift(&self, i: usize) -> &[f64] {
        &self.generator_shift[i]
    }

    pub fn load_shift(&self, j: usize) -> &[f64] {
        &self.load_shift[j]
    }

    /// Shift factors of bus position `n` on the constrained lines.
    pub fn bus_shift(&self, n: usize) -> Vec<f64> {
        match &self.ptdf {
            Some(m) => self.constrained.iter().map(|&l| m.get(l, n)).collect(),
            None => Vec::new(),
        }
    }

    pub fn constrained_capacity(&self, k: usize) -> f64 {
        self.case.network.lines[self.constrained[k]].capacity
    }

    /// `c_i + weight·κ·e_i`.
    pub fn generator_cost(&self, i: usize, carbon_weight: f64) -> f64 {
        let g = &self.case.generators[i];
        g.cost + carbon_weight * self.case.kappa * g.emission
    }

    /// Flow on every line (empty for copper plate). Injections need not be
    /// balanced; any imbalance is absorbed at the slack.
    pub fn flows(&self, p: &[f64], d: &[f64]) -> Vec<f64> {
        let Some(ptdf) = &self.ptdf else { return Vec::new() };
        let mut injection = vec![0.0; self.num_buses()];
        for (&n, &v) in self.generator_bus.iter().zip(p) {
            injection[n] += v;
        }
        for (&n, &v) in self.load_bus.iter().zip(d) {
            injection[n] -= v;
        }
        ptdf.flows_for_injections(&injection)
    }

    /// Carbon-aware welfare `Σ b_j d_j − Σ (c_i + κ e_i) p_i`.
    pub fn welfare(&self, p: &[f64], d: &[f64]) -> f64 {
        self.utility(d) - (0..p.len()).map(|i| self.generator_cost(i, 1.0) * p[i]).sum::<f64>()
    }

    pub fn utility(&self, d: &[f64]) -> f64 {
        self.case.loads.iter().zip(d).map(|(l, v)| l.utility * v).sum()
    }

    pub fn production_cost(&self, p: &[f64]) -> f64 {
        self.case.generators.iter().zip(p).map(|(g, v)| g.cost * v).sum()
    }

    pub fn emissions(&self, p: &[f64]) -> f64 {
        self.case.generators.iter().zip(p).map(|(g, v)| g.emission * v).sum()
    }

    /// Worst violation of balance, boxes and line limits.
    pub fn primal_violation(&self, p: &[f64], d: &[f64]) -> f64 {
        let mut worst = (p.iter().sum::<f64>() - d.iter().sum::<f64>()).abs();
        for (g, &v) in self.case.generators.iter().zip(p) {
            worst = worst.max(-v).max(v - g.capacity);
        }
        for (l, &v) in self.case.loads.iter().zip(d) {
            worst = worst.max(-v).max(v - l.capacity);
        }
        for (line, f) in self.case.network.lines.iter().zip(self.flows(p, d)) {
            worst = worst.max(f.abs() - line.capacity);
        }
        worst.max(0.0)
    }
}
