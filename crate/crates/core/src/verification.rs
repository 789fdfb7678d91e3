//! Executable checks of the mechanism's economic properties, plus a
//! brute-force welfare oracle for tiny cases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::case::MarketCase;
use crate::error::{MarketError, Result};
use crate::market::Market;
use crate::mechanism::{balance_tol, Clearing};
use crate::outcome::MarketOutcome;
use crate::social::solve_social_optimum;

/// Floor for individual net profits and utilities.
pub const RATIONALITY_TOL: f64 = 1e-9;
/// Relative tolerance on best-response values and on welfare gaps.
pub const VALUE_TOL: f64 = 1e-7;
/// Absolute tolerance on the linear `η` profile.
pub const LINEARITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub agent: String,
    pub magnitude: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub passed: bool,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
}

impl PropertyReport {
    fn new(property: &str, tolerance: f64, witnesses: Vec<Witness>) -> Self {
        Self { property: property.into(), passed: witnesses.is_empty(), tolerance, witnesses }
    }

    /// Largest witness magnitude, zero on a pass.
    pub fn worst(&self) -> f64 {
        self.witnesses.iter().fold(0.0, |m, w| m.max(w.magnitude.abs()))
    }
}

fn witness(agent: impl Into<String>, magnitude: f64, detail: impl Into<String>) -> Witness {
    Witness { agent: agent.into(), magnitude, detail: detail.into() }
}

/// `|ΔS| ≤ tol` and, without binding lines, `|S| ≤ tol`, with
/// `tol = 1e-6 · max(1, |S2|)`. `S` is taken from the settlement and
/// `ΔS = S − S1`.
pub fn check_budget_balance(outcome: &MarketOutcome) -> PropertyReport {
    let s = outcome.subsidy();
    let delta_s = s - outcome.breakdown.s1;
    let tol = balance_tol(outcome.breakdown.s2);
    let mut w = Vec::new();
    if delta_s.abs() > tol {
        w.push(witness("market", delta_s, "non-congestion subsidy ΔS"));
    }
    if !outcome.congested && s.abs() > tol {
        w.push(witness("market", s, "total subsidy S without congestion"));
    }
    PropertyReport::new("budget balance", tol, w)
}

/// Every generator's net profit and every load's net utility is nonnegative.
pub fn check_individual_rationality(outcome: &MarketOutcome) -> PropertyReport {
    let mut w = Vec::new();
    for (i, g) in outcome.generators.iter().enumerate() {
        if g.net_profit < -RATIONALITY_TOL {
            w.push(witness(format!("generator {i}"), g.net_profit, "negative net profit"));
        }
    }
    for (j, l) in outcome.loads.iter().enumerate() {
        if l.net_utility < -RATIONALITY_TOL {
            w.push(witness(format!("load {j}"), l.net_utility, "negative net utility"));
        }
    }
    PropertyReport::new("individual rationality", RATIONALITY_TOL, w)
}

/// Best-response value test: at the posted prices each agent's realised
/// objective must equal the best it could do alone, `max(0, margin) · cap`.
pub fn check_dispatch_following(
    case: &MarketCase,
    generator_prices: &[f64],
    load_prices: &[f64],
    tax_rate: f64,
    p: &[f64],
    d: &[f64],
) -> PropertyReport {
    let mut w = Vec::new();
    let mut test = |agent: String, margin: f64, cap: f64, q: f64| {
        let best = margin.max(0.0) * cap;
        let gap = best - margin * q;
        if gap > VALUE_TOL * best.abs().max(1.0) {
            w.push(witness(agent, gap, format!("realised {} vs best response {best}", margin * q)));
        }
    };
    for (i, g) in case.generators.iter().enumerate() {
        test(format!("generator {i}"), generator_prices[i] - g.cost - tax_rate * g.emission, g.capacity, p[i]);
    }
    for (j, l) in case.loads.iter().enumerate() {
        test(format!("load {j}"), l.utility - load_prices[j], l.capacity, d[j]);
    }
    PropertyReport::new("dispatch following", VALUE_TOL, w)
}

/// Per-agent best responses plus attainment of the carbon-aware optimum `O*`:
/// self-dispatch must reproduce a socially optimal outcome.
pub fn check_outcome_dispatch_following(outcome: &MarketOutcome, case: &MarketCase, o_star: f64) -> PropertyReport {
    let mut report = check_dispatch_following(
        case,
        &outcome.generator_prices,
        &outcome.load_prices,
        outcome.carbon_tax_rate,
        &outcome.p,
        &outcome.d,
    );
    let gap = o_star - outcome.welfare;
    if gap > VALUE_TOL * o_star.abs().max(1.0) {
        report.witnesses.push(witness("market", gap, format!("welfare {} below optimum {o_star}", outcome.welfare)));
        report.passed = false;
    }
    report
}

/// Multiplicative bid perturbations `0.8, 0.85, …, 1.2`.
pub fn default_perturbation_grid() -> Vec<f64> {
    (0..=8).map(|k| 0.8 + 0.05 * k as f64).collect()
}

#[derive(Clone, Copy)]
enum Bid {
    Generator(usize, usize),
    Load(usize, usize),
}

/// Price-taking misreport test. One agent at a time scales one bid parameter
/// (cost, emission or capacity for generators; utility or capacity for
/// loads) by each grid factor, the welfare problem is re-solved with that
/// bid, and the agent's true objective at the original prices is compared
/// with its truthful one. Dispatch beyond the true capacity is clamped.
pub fn check_truthful_bidding(market: &Market, outcome: &MarketOutcome, grid: &[f64]) -> Result<PropertyReport> {
    let case = &market.case;
    let mut bids = Vec::new();
    for i in 0..case.generators.len() {
        bids.extend((0..3).map(|k| Bid::Generator(i, k)));
    }
    for j in 0..case.loads.len() {
        bids.extend((0..2).map(|k| Bid::Load(j, k)));
    }
    let jobs: Vec<(Bid, f64)> = bids.iter().flat_map(|&b| grid.iter().map(move |&f| (b, f))).collect();
    let tax = outcome.carbon_tax_rate;
    let results: Vec<Option<Witness>> = jobs
        .par_iter()
        .map(|&(bid, f)| -> Result<Option<Witness>> {
            let mut lie = case.clone();
            let (agent, param) = match bid {
                Bid::Generator(i, k) => {
                    let g = &mut lie.generators[i];
                    match k {
                        0 => g.cost *= f,
                        1 => g.emission *= f,
                        _ => g.capacity *= f,
                    }
                    (format!("generator {i}"), ["cost", "emission", "capacity"][k])
                }
                Bid::Load(j, k) => {
                    let l = &mut lie.loads[j];
                    match k {
                        0 => l.utility *= f,
                        _ => l.capacity *= f,
                    }
                    (format!("load {j}"), ["utility", "capacity"][k])
                }
            };
            let sol = solve_social_optimum(&Market::new(&lie)?)?;
            let (truthful, deviant) = match bid {
                Bid::Generator(i, _) => {
                    let g = &case.generators[i];
                    let margin = outcome.generator_prices[i] - g.cost - tax * g.emission;
                    (outcome.generators[i].net_profit, margin * sol.p[i].clamp(0.0, g.capacity))
                }
                Bid::Load(j, _) => {
                    let l = &case.loads[j];
                    let margin = l.utility - outcome.load_prices[j];
                    (outcome.loads[j].net_utility, margin * sol.d[j].clamp(0.0, l.capacity))
                }
            };
            let gain = deviant - truthful;
            Ok((gain > VALUE_TOL).then(|| witness(agent, gain, format!("{param} x{f:.2} gains {gain}"))))
        })
        .collect::<Result<_>>()?;
    Ok(PropertyReport::new("truthful bidding", VALUE_TOL, results.into_iter().flatten().collect()))
}

/// Samples `η*_δ` and compares with `η_0 (1 − δ/δ̃)` below `δ̃` and zero above.
pub fn check_lemma_linearity(clearing: &Clearing<'_>, delta_tilde: f64, samples: &[f64]) -> Result<PropertyReport> {
    let eta0 = clearing.solve(0.0)?.eta;
    let etas: Vec<f64> = samples
        .par_iter()
        .map(|&delta| clearing.solve(delta).map(|s| s.eta))
        .collect::<Result<_>>()?;
    let mut w = Vec::new();
    for (&delta, eta) in samples.iter().zip(etas) {
        let expected = if delta >= delta_tilde { 0.0 } else { eta0 * (1.0 - delta / delta_tilde) };
        let err = eta - expected;
        if err.abs() > LINEARITY_TOL {
            w.push(witness(format!("delta {delta}"), err, format!("eta {eta} vs line {expected}")));
        }
    }
    Ok(PropertyReport::new("eta linear in delta", LINEARITY_TOL, w))
}

/// The four propositions for one outcome.
pub fn property_suite(market: &Market, outcome: &MarketOutcome, o_star: f64) -> Result<Vec<PropertyReport>> {
    Ok(vec![
        check_budget_balance(outcome),
        check_individual_rationality(outcome),
        check_outcome_dispatch_following(outcome, &market.case, o_star),
        check_truthful_bidding(market, outcome, &default_perturbation_grid())?,
    ])
}

fn lattice(cap: f64, step: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..).map(|k| k as f64 * step).take_while(|&x| x < cap).collect();
    v.push(cap);
    v
}

/// Exhaustive search over a dispatch lattice of spacing `grid_step`. Every
/// agent in turn closes the balance while the others range over the
/// lattice, so the result is feasible and within a few Lipschitz steps of
/// the optimum. Limited to three generators, three loads and two lines.
pub fn brute_force_welfare(case: &MarketCase, grid_step: f64) -> Result<f64> {
    let market = Market::new(case)?;
    let (ni, nj) = (market.num_generators(), market.num_loads());
    let lines = if case.network.copper_plate { 0 } else { case.network.lines.len() };
    if ni > 3 || nj > 3 || lines > 2 || grid_step <= 0.0 {
        return Err(MarketError::Inconsistent(
            "brute force needs <= 3 generators, <= 3 loads, <= 2 lines and a positive step".into(),
        ));
    }
    let caps: Vec<f64> = case
        .generators
        .iter()
        .map(|g| g.capacity)
        .chain(case.loads.iter().map(|l| l.capacity))
        .collect();
    let n = ni + nj;
    let mut best = 0.0_f64;
    for closer in 0..n {
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|a| if a == closer { vec![0.0] } else { lattice(caps[a], grid_step) })
            .collect();
        let mut idx = vec![0usize; n];
        let mut q = vec![0.0; n];
        'outer: loop {
            for a in 0..n {
                q[a] = axes[a][idx[a]];
            }
            // signed balance: generation positive, demand negative
            let rest: f64 = (0..n).filter(|&a| a != closer).map(|a| if a < ni { q[a] } else { -q[a] }).sum();
            let close = if closer < ni { -rest } else { rest };
            if close >= -1e-12 && close <= caps[closer] + 1e-12 {
                q[closer] = close.clamp(0.0, caps[closer]);
                let (p, d) = q.split_at(ni);
                let feasible = market
                    .flows(p, d)
                    .iter()
                    .zip(&case.network.lines)
                    .all(|(f, l)| f.abs() <= l.capacity + 1e-9);
                if feasible {
                    best = best.max(market.welfare(p, d));
                }
            }
            for a in 0..n {
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    continue 'outer;
                }
                idx[a] = 0;
            }
            break;
        }
    }
    Ok(best)
}
