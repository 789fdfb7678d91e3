//! Reference mechanisms: carbon-blind LMP, marginal carbon pricing (T1) and
//! emission-flow-based load pricing solved as a fixed point (T2).

use ecmarket_lp::{LinearProgram, Relation, Sense, Status};
use serde::{Deserialize, Serialize};

use crate::cef::compute_nci;
use crate::error::{MarketError, Result};
use crate::market::Market;
use crate::outcome::{Mechanism, MarketOutcome, SubsidyBreakdown};
use crate::social::{build_dispatch_lp, nodal_prices, solve_optimal, solve_social, unpack, SocialOptimumSolution};

/// `Σ_l (χ̲_l − χ̄_l) f_l`, the merchandising surplus of nodal pricing.
fn congestion_rent(market: &Market, sol: &SocialOptimumSolution, flows: &[f64]) -> f64 {
    market
        .constrained_lines()
        .iter()
        .map(|&l| (sol.chi_lower[l] - sol.chi_upper[l]) * flows[l])
        .sum()
}

fn nodal_outcome(market: &Market, mechanism: Mechanism, carbon_weight: f64) -> Result<MarketOutcome> {
    let sol = solve_social(market, carbon_weight)?;
    let bus_price = nodal_prices(market, &sol);
    let gp = market.generator_bus().iter().map(|&b| bus_price[b]).collect();
    let lp = market.load_bus().iter().map(|&b| bus_price[b]).collect();
    let tax_rate = carbon_weight * market.case.kappa;
    let breakdown = SubsidyBreakdown {
        s1: congestion_rent(market, &sol, &market.flows(&sol.p, &sol.d)),
        s2: -tax_rate * market.emissions(&sol.p),
        s3: 0.0,
    };
    Ok(MarketOutcome::settle(market, mechanism, sol.p, sol.d, gp, lp, tax_rate, breakdown))
}

/// Carbon-blind welfare maximisation priced at its LMPs, no carbon tax.
pub fn run_traditional(market: &Market) -> Result<MarketOutcome> {
    nodal_outcome(market, Mechanism::Traditional, 0.0)
}

/// Carbon-aware dispatch priced at its nodal duals with tax rate κ.
pub fn run_t1(market: &Market) -> Result<MarketOutcome> {
    nodal_outcome(market, Mechanism::T1, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Options {
    pub max_iterations: usize,
    /// Weight of the new best response in the damped update.
    pub damping: f64,
    /// Fixed-point tolerance in power units; `None` means `1e-6 · max D̄`.
    pub tolerance: Option<f64>,
    /// Pay generators `LMP + κσ_i` instead of `LMP`.
    pub generator_carbon_price: bool,
    /// Charge generators a carbon tax at rate κ.
    pub generator_carbon_tax: bool,
}

impl Default for T2Options {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            damping: 0.5,
            tolerance: None,
            generator_carbon_price: false,
            generator_carbon_tax: false,
        }
    }
}

impl T2Options {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(MarketError::Inconsistent(format!("T2 damping must lie in (0, 1], got {}", self.damping)));
        }
        if self.max_iterations == 0 {
            return Err(MarketError::Inconsistent("T2 needs at least one iteration".into()));
        }
        Ok(())
    }
}

/// Largest `s ∈ [0, 1]` such that demand `s · d` can be served.
fn deliverable_scale(market: &Market, d: &[f64]) -> Result<f64> {
    let (ni, nj) = (market.num_generators(), market.num_loads());
    let mut lp = LinearProgram::new(Sense::Maximize);
    for (i, g) in market.case.generators.iter().enumerate() {
        lp.add_variable(format!("p{i}"), 0.0, 0.0, g.capacity);
    }
    let s = lp.add_variable("s", 1.0, 0.0, 1.0);
    let mut row: Vec<(usize, f64)> = (0..ni).map(|i| (i, 1.0)).collect();
    row.push((s, -d.iter().sum::<f64>()));
    lp.add_constraint("balance", &row, Relation::Equal, 0.0);
    for k in 0..market.constrained_lines().len() {
        let mut flow: Vec<(usize, f64)> = (0..ni).map(|i| (i, market.generator_shift(i)[k])).collect();
        flow.push((s, -(0..nj).map(|j| market.load_shift(j)[k] * d[j]).sum::<f64>()));
        let neg: Vec<(usize, f64)> = flow.iter().map(|&(c, a)| (c, -a)).collect();
        let cap = market.constrained_capacity(k);
        lp.add_constraint("max", &flow, Relation::LessEq, cap);
        lp.add_constraint("min", &neg, Relation::LessEq, cap);
    }
    Ok(solve_optimal(&lp, "T2 curtailment LP")?.primal[s])
}

/// Cost-only dispatch for fixed demand, curtailing pro rata if it cannot be
/// served. Returns the served demand, the curtailment factor and the solution.
fn upper_level(market: &Market, d: &[f64]) -> Result<(Vec<f64>, f64, SocialOptimumSolution)> {
    let lp = build_dispatch_lp(market, 0.0, Some(d));
    let sol = ecmarket_lp::solve(&lp)?;
    match sol.status {
        Status::Optimal => Ok((d.to_vec(), 1.0, unpack(market, &sol, 0.0))),
        Status::Infeasible => {
            let s = deliverable_scale(market, d)?;
            let served: Vec<f64> = d.iter().map(|v| v * s).collect();
            let lp = build_dispatch_lp(market, 0.0, Some(&served));
            let sol = solve_optimal(&lp, "T2 dispatch LP")?;
            Ok((served, s, unpack(market, &sol, 0.0)))
        }
        status => Err(MarketError::UnexpectedStatus { problem: "T2 dispatch LP", status }),
    }
}

/// Emission-flow-based pricing solved by damped best-response iteration.
///
/// Each round dispatches the requested demand at least cost (scaled down
/// pro rata if the network cannot serve it), traces node carbon
/// intensities, prices loads at `LMP_j + κσ_j` and lets every load
/// best-respond: full demand if its utility beats the price, none if below,
/// unchanged if equal. Requests then move a fraction `damping` toward the
/// best response. The loop stops once the best response is within
/// tolerance of the request; the request is snapped to the best response
/// and re-priced before settling.
pub fn run_t2(market: &Market, opts: &T2Options) -> Result<MarketOutcome> {
    opts.validate()?;
    let case = &market.case;
    let kappa = case.kappa;
    let tol = opts
        .tolerance
        .unwrap_or_else(|| 1e-6 * case.loads.iter().fold(0.0_f64, |m, l| m.max(l.capacity)));
    let price_tol = 1e-12;
    let mut request: Vec<f64> = case.loads.iter().map(|l| l.capacity).collect();
    let mut converged = false;
    let mut iterations = 0;
    let mut state;
    loop {
        iterations += 1;
        let (served, scale, sol) = upper_level(market, &request)?;
        let flows = market.flows(&sol.p, &served);
        let nci = compute_nci(market, &sol.p, &served, &flows)?;
        let bus_price = nodal_prices(market, &sol);
        let load_price: Vec<f64> = market
            .load_bus()
            .iter()
            .zip(&nci.load_sigma)
            .map(|(&b, s)| bus_price[b] + kappa * s)
            .collect();
        let response: Vec<f64> = case
            .loads
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let margin = l.utility - load_price[j];
                if margin > price_tol {
                    l.capacity
                } else if margin < -price_tol {
                    0.0
                } else {
                    request[j]
                }
            })
            .collect();
        let gap = response.iter().zip(&request).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        state = (sol, served, scale, flows, nci, bus_price, load_price);
        if gap == 0.0 {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        request = if gap <= tol {
            response
        } else {
            response.iter().zip(&request).map(|(r, v)| opts.damping * r + (1.0 - opts.damping) * v).collect()
        };
    }
    let (sol, d, scale, flows, nci, bus_price, load_price) = state;
    let mut notes = Vec::new();
    if scale < 1.0 {
        notes.push(format!("demand curtailed pro rata to {scale:.6} of requested"));
    }
    if !converged {
        notes.push(format!("T2 did not converge within {} iterations", opts.max_iterations));
    }
    let generator_price: Vec<f64> = market
        .generator_bus()
        .iter()
        .zip(&nci.generator_sigma)
        .map(|(&b, s)| bus_price[b] + if opts.generator_carbon_price { kappa * s } else { 0.0 })
        .collect();
    let tax_rate = if opts.generator_carbon_tax { kappa } else { 0.0 };
    let gen_carbon: f64 = if opts.generator_carbon_price {
        sol.p.iter().zip(&nci.generator_sigma).map(|(p, s)| kappa * s * p).sum()
    } else {
        0.0
    };
    let load_carbon: f64 = d.iter().zip(&nci.load_sigma).map(|(v, s)| kappa * s * v).sum();
    let breakdown = SubsidyBreakdown {
        s1: congestion_rent(market, &sol, &flows),
        s2: gen_carbon - load_carbon - tax_rate * market.emissions(&sol.p),
        s3: 0.0,
    };
    let mut out = MarketOutcome::settle(
        market,
        Mechanism::T2,
        sol.p,
        d,
        generator_price,
        load_price,
        tax_rate,
        breakdown,
    );
    out.iterations = Some(iterations);
    out.notes = notes;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{bundled_simple_system, Generator, Load, MarketCase};
    use crate::grid::{BusId, Network};

    #[test]
    fn traditional_on_simple_system() {
        let m = Market::new(&bundled_simple_system()).unwrap();
        let o = run_traditional(&m).unwrap();
        assert!((o.generator_revenue() - 1340.34).abs() < 1e-9);
        assert!((o.load_payment() - 1340.34).abs() < 1e-9);
        assert!((o.generator_net_profit() - 60.55).abs() < 1e-9);
        assert!(o.subsidy().abs() < 1e-9);
        assert!((o.welfare - 659.79).abs() < 1e-9);
    }

    #[test]
    fn t1_subsidy_is_minus_carbon_tax() {
        let m = Market::new(&bundled_simple_system()).unwrap();
        let o = run_t1(&m).unwrap();
        assert!((o.carbon_tax() - 107.52).abs() < 1e-9);
        assert!((o.subsidy() + 107.52).abs() < 1e-9);
        assert!((o.breakdown.total() - o.subsidy()).abs() < 1e-9);
    }

    #[test]
    fn t2_single_node_single_agent() {
        let case = MarketCase {
            name: "one".into(),
            network: Network::copper_plate(BusId(1)),
            generators: vec![Generator { bus: BusId(1), cost: 0.3, emission: 0.6, capacity: 100.0 }],
            loads: vec![Load { bus: BusId(1), utility: 1.0, capacity: 40.0 }],
            kappa: 0.1,
            display_scale: 1.0,
        };
        let m = Market::new(&case).unwrap();
        let o = run_t2(&m, &T2Options::default()).unwrap();
        assert!(o.iterations.unwrap() <= 2);
        assert!((o.d[0] - 40.0).abs() < 1e-12);
        // σ equals the lone generator's intensity
        assert!((o.load_prices[0] - (o.generator_prices[0] + 0.1 * 0.6)).abs() < 1e-12);
    }

    #[test]
    fn t2_options_are_validated() {
        let m = Market::new(&bundled_simple_system()).unwrap();
        let bad = T2Options { damping: 0.0, ..T2Options::default() };
        assert!(run_t2(&m, &bad).is_err());
    }
}
