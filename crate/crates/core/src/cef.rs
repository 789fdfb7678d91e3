//! Carbon emission flow tracing by proportional sharing.
//!
//! Every bus mixes what flows into it: the intensity `ρ_n` satisfies
//! `ρ_n · In(n) = Σ_{g at n} e_g p_g + Σ_{lines into n} ρ_src |f_l|`,
//! where `In(n)` is local generation plus inbound line flow. Lines carrying
//! less than [`ZERO_FLOW`] are ignored and buses with no inflow get `ρ = 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::Market;

/// Lines with `|f| <= ZERO_FLOW` are left out of the sharing graph.
pub const ZERO_FLOW: f64 = 1e-9;

/// Diagonal shift applied when the sharing system is singular.
const REGULARIZATION: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CefError {
    #[error("generation {generation} and demand {demand} do not balance")]
    Unbalanced { generation: f64, demand: f64 },
    #[error("expected {expected} line flows, got {got}")]
    FlowCount { expected: usize, got: usize },
    #[error("proportional sharing system is singular")]
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NciResult {
    /// Intensity per bus position.
    pub bus_intensity: Vec<f64>,
    pub load_sigma: Vec<f64>,
    pub generator_sigma: Vec<f64>,
    /// The line flows that were traced.
    pub flows: Vec<f64>,
    /// A small diagonal shift was needed to factor the system.
    pub regularized: bool,
}

/// Node carbon intensities for dispatch `(p, d)` with line `flows`.
///
/// Copper-plate markets pool all generation, so every bus gets the system
/// average `Σ e_i p_i / Σ p_i`.
pub fn compute_nci(market: &Market, p: &[f64], d: &[f64], flows: &[f64]) -> Result<NciResult, CefError> {
    let generation: f64 = p.iter().sum();
    let demand: f64 = d.iter().sum();
    if (generation - demand).abs() > 1e-6 * generation.abs().max(1.0) {
        return Err(CefError::Unbalanced { generation, demand });
    }
    let emission: Vec<f64> = market
        .case
        .generators
        .iter()
        .zip(p)
        .map(|(g, v)| g.emission * v)
        .collect();
    let n = market.num_buses();
    let finish = |rho: Vec<f64>, regularized| NciResult {
        load_sigma: market.load_bus().iter().map(|&b| rho[b]).collect(),
        generator_sigma: market.generator_bus().iter().map(|&b| rho[b]).collect(),
        bus_intensity: rho,
        flows: flows.to_vec(),
        regularized,
    };

    if market.case.network.copper_plate {
        let avg = if generation > 0.0 { emission.iter().sum::<f64>() / generation } else { 0.0 };
        return Ok(finish(vec![avg; n], false));
    }
    if flows.len() != market.num_lines() {
        return Err(CefError::FlowCount { expected: market.num_lines(), got: flows.len() });
    }

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (i, &bus) in market.generator_bus().iter().enumerate() {
        a[(bus, bus)] += p[i];
        rhs[bus] += emission[i];
    }
    let net = &market.case.network;
    for (line, &f) in net.lines.iter().zip(flows) {
        if f.abs() <= ZERO_FLOW {
            continue;
        }
        let (from, to) = (net.bus_index(line.from).unwrap(), net.bus_index(line.to).unwrap());
        let (src, dst) = if f > 0.0 { (from, to) } else { (to, from) };
        a[(dst, dst)] += f.abs();
        a[(dst, src)] -= f.abs();
    }
    for k in 0..n {
        if a[(k, k)] <= 0.0 {
            // no inflow: isolate the bus with rho = 0
            a.row_mut(k).fill(0.0);
            a[(k, k)] = 1.0;
            rhs[k] = 0.0;
        }
    }
    let (x, regularized) = match a.clone().lu().solve(&rhs) {
        Some(x) if x.iter().all(|v| v.is_finite()) => (x, false),
        _ => {
            let scale = a.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            let shifted = a + DMatrix::identity(n, n) * (REGULARIZATION * scale);
            let x = shifted.lu().solve(&rhs).ok_or(CefError::Singular)?;
            (x, true)
        }
    };
    Ok(finish(x.iter().map(|v| v.max(0.0)).collect(), regularized))
}
