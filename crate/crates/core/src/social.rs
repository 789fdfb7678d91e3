//! Carbon-aware social welfare maximisation and its duals.
//!
//! Variables are `p` (one per generator) then `d` (one per load), boxed by
//! their capacities. Rows, in order: the balance `Σd − Σp = 0` (dual `λ`),
//! then for every constrained line `flow ≤ F` (dual `χ̄`) followed by
//! `−flow ≤ F` (dual `χ̲`). Box multipliers come from reduced costs:
//! `μ̄ = max(r, 0)` and `μ̲ = max(−r, 0)` for generator reduced cost `r`,
//! likewise `φ` for loads.
//!
//! With these signs the stationarity conditions read
//! `−λ − μ̲_i + μ̄_i + Σ_l π_il (χ̄_l − χ̲_l) = −(c_i + κ e_i)` and
//! `λ − φ̲_j + φ̄_j − Σ_l π_jl (χ̄_l − χ̲_l) = b_j`.

use ecmarket_lp::{solve, LinearProgram, LpSolution, Relation, Sense, Status};
use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::Market;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialOptimumSolution {
    pub p: Vec<f64>,
    pub d: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu_lower: Vec<f64>,
    pub mu_upper: Vec<f64>,
    pub phi_lower: Vec<f64>,
    pub phi_upper: Vec<f64>,
    /// Per line of the network; zero for lines without limit rows.
    pub chi_lower: Vec<f64>,
    pub chi_upper: Vec<f64>,
    /// Optimal objective value `O*` under the carbon weight used.
    pub welfare: f64,
    pub carbon_weight: f64,
}

impl SocialOptimumSolution {
    /// The balance dual `λ*`.
    pub fn balance_price(&self) -> f64 {
        self.lambda[0]
    }
}

/// Builds the welfare LP with generator costs `c_i + carbon_weight·κ·e_i`.
pub fn build_social_lp(market: &Market, carbon_weight: f64) -> LinearProgram {
    build_dispatch_lp(market, carbon_weight, None)
}

/// Same LP, optionally with every load pinned to `fixed_demand`.
pub(crate) fn build_dispatch_lp(
    market: &Market,
    carbon_weight: f64,
    fixed_demand: Option<&[f64]>,
) -> LinearProgram {
    let case = &market.case;
    let (ni, nj) = (market.num_generators(), market.num_loads());
    let mut lp = LinearProgram::new(Sense::Maximize);
    for (i, g) in case.generators.iter().enumerate() {
        lp.add_variable(format!("p{i}"), -market.generator_cost(i, carbon_weight), 0.0, g.capacity);
    }
    for (j, l) in case.loads.iter().enumerate() {
        let (lo, hi) = match fixed_demand {
            Some(d) => (d[j], d[j]),
            None => (0.0, l.capacity),
        };
        lp.add_variable(format!("d{j}"), l.utility, lo, hi);
    }
    let mut balance = vec![-1.0; ni];
    balance.extend(std::iter::repeat(1.0).take(nj));
    lp.add_dense_constraint("balance", balance, Relation::Equal, 0.0);
    for (k, &line) in market.constrained_lines().iter().enumerate() {
        let mut row: Vec<f64> = (0..ni).map(|i| market.generator_shift(i)[k]).collect();
        row.extend((0..nj).map(|j| -market.load_shift(j)[k]));
        let cap = market.constrained_capacity(k);
        let neg = row.iter().map(|v| -v).collect();
        lp.add_dense_constraint(format!("flow{line}_max"), row, Relation::LessEq, cap);
        lp.add_dense_constraint(format!("flow{line}_min"), neg, Relation::LessEq, cap);
    }
    lp
}

pub(crate) fn solve_optimal(lp: &LinearProgram, problem: &'static str) -> Result<LpSolution> {
    let sol = solve(lp)?;
    match sol.status {
        Status::Optimal => Ok(sol),
        status => Err(MarketError::UnexpectedStatus { problem, status }),
    }
}

/// Maps an LP solution of [`build_dispatch_lp`] to named multipliers.
pub(crate) fn unpack(market: &Market, sol: &LpSolution, carbon_weight: f64) -> SocialOptimumSolution {
    let (ni, nj) = (market.num_generators(), market.num_loads());
    let split = |r: f64| (r.max(0.0), (-r).max(0.0));
    let (mu_upper, mu_lower): (Vec<f64>, Vec<f64>) = sol.reduced_costs[..ni].iter().map(|&r| split(r)).unzip();
    let (phi_upper, phi_lower): (Vec<f64>, Vec<f64>) =
        sol.reduced_costs[ni..ni + nj].iter().map(|&r| split(r)).unzip();
    let mut chi_upper = vec![0.0; market.num_lines()];
    let mut chi_lower = vec![0.0; market.num_lines()];
    for (k, &line) in market.constrained_lines().iter().enumerate() {
        chi_upper[line] = sol.duals[1 + 2 * k];
        chi_lower[line] = sol.duals[2 + 2 * k];
    }
    SocialOptimumSolution {
        p: sol.primal[..ni].to_vec(),
        d: sol.primal[ni..ni + nj].to_vec(),
        lambda: vec![sol.duals[0]],
        mu_lower,
        mu_upper,
        phi_lower,
        phi_upper,
        chi_lower,
        chi_upper,
        welfare: sol.objective,
        carbon_weight,
    }
}

/// Social optimum with the carbon cost weighted by `carbon_weight`.
pub fn solve_social(market: &Market, carbon_weight: f64) -> Result<SocialOptimumSolution> {
    let lp = build_social_lp(market, carbon_weight);
    let sol = solve_optimal(&lp, "social welfare LP")?;
    Ok(unpack(market, &sol, carbon_weight))
}

/// Carbon-aware social optimum (full κ).
pub fn solve_social_optimum(market: &Market) -> Result<SocialOptimumSolution> {
    solve_social(market, 1.0)
}

/// `λ + Σ_l (χ̲_l − χ̄_l) π_nl` for every bus position `n`.
pub fn nodal_prices(market: &Market, sol: &SocialOptimumSolution) -> Vec<f64> {
    (0..market.num_buses())
        .map(|n| {
            let shift = market.bus_shift(n);
            sol.balance_price()
                + market
                    .constrained_lines()
                    .iter()
                    .zip(&shift)
                    .map(|(&l, pi)| (sol.chi_lower[l] - sol.chi_upper[l]) * pi)
                    .sum::<f64>()
        })
        .collect()
}

/// Locational marginal prices of the carbon-blind (κ = 0) market, per bus.
pub fn traditional_lmp(market: &Market) -> Result<Vec<f64>> {
    let sol = solve_social(market, 0.0)?;
    Ok(nodal_prices(market, &sol))
}

/// Largest residual of the two stationarity conditions.
pub fn stationarity_residual(market: &Market, sol: &SocialOptimumSolution) -> f64 {
    let lam = sol.balance_price();
    let congestion = |shift: &[f64]| -> f64 {
        market
            .constrained_lines()
            .iter()
            .zip(shift)
            .map(|(&l, pi)| pi * (sol.chi_upper[l] - sol.chi_lower[l]))
            .sum()
    };
    let mut worst: f64 = 0.0;
    for i in 0..market.num_generators() {
        let lhs = -lam - sol.mu_lower[i] + sol.mu_upper[i] + congestion(market.generator_shift(i));
        worst = worst.max((lhs + market.generator_cost(i, sol.carbon_weight)).abs());
    }
    for (j, load) in market.case.loads.iter().enumerate() {
        let lhs = lam - sol.phi_lower[j] + sol.phi_upper[j] - congestion(market.load_shift(j));
        worst = worst.max((lhs - load.utility).abs());
    }
    worst
}
