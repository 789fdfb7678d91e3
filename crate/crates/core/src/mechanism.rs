//! Primal-dual embedded market clearing with carbon-tax scaling `δ`.
//!
//! The clearing problem maximises `Σ b_j d_j − Σ (c_i + δκ e_i) p_i` over
//! dispatches that are optimal for the carbon-aware welfare problem. It is
//! written out in full by [`build_market_clearing_lp`]: primal feasibility,
//! dual feasibility and the strong-duality inequality
//! `Σ μ̄ P̄ + Σ φ̄ D̄ + Σ F (χ̄ + χ̲) − Σ b d + Σ (c + κe) p ≤ 0` with multiplier `η`.
//!
//! Prices need the clearing problem's own multipliers `(τ, α̲, ᾱ, η)` with the
//! smallest `η`. Those are computed from the partial Lagrangian dual, which
//! dualises balance, line limits and strong duality but keeps the box
//! constraints. Its inner maximisation over the embedded dual block is the
//! welfare LP's dual and evaluates to `−η O*`, leaving
//!
//! ```text
//! min  Σ P̄ u + Σ D̄ v + Σ F (α̲ + ᾱ) − η O*
//! s.t. u_i − τ − Σ_l (α̲_l − ᾱ_l) π_il + η (c_i + κ e_i) ≥ −(c_i + δκ e_i)
//!      v_j + τ + Σ_l (α̲_l − ᾱ_l) π_jl − η b_j          ≥ b_j
//!      τ free, α̲, ᾱ, η, u, v ≥ 0
//! ```
//!
//! whose row duals are the clearing dispatch. The smallest `η` is picked
//! lexicographically over that program's optimal face.

use ecmarket_lp::{solve_lexicographic, LinearProgram, LpError, Relation, Sense, Status};
use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::Market;
use crate::outcome::{Mechanism, MarketOutcome, SubsidyBreakdown};
use crate::social::{solve_social_optimum, SocialOptimumSolution};

/// `η` at or below this counts as zero.
pub const ETA_ZERO_TOL: f64 = 1e-7;

/// Budget tolerance `1e-6 · max(1, |S2|)`.
pub fn balance_tol(s2: f64) -> f64 {
    1e-6 * s2.abs().max(1.0)
}

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(MarketError::InvalidDelta(delta))
    }
}

/// The full clearing LP. Variable blocks: `p, d, λ, μ̲, μ̄, φ̲, φ̄, χ̲, χ̄`
/// (the `χ` blocks have one entry per constrained line). Rows: balance,
/// line limits, generator stationarity, load stationarity, strong duality.
pub fn build_market_clearing_lp(market: &Market, delta: f64) -> Result<LinearProgram> {
    check_delta(delta)?;
    let case = &market.case;
    let (ni, nj, nl) = (market.num_generators(), market.num_loads(), market.constrained_lines().len());
    let inf = f64::INFINITY;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let p: Vec<usize> = case
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| lp.add_variable(format!("p{i}"), -market.generator_cost(i, delta), 0.0, g.capacity))
        .collect();
    let d: Vec<usize> = case
        .loads
        .iter()
        .enumerate()
        .map(|(j, l)| lp.add_variable(format!("d{j}"), l.utility, 0.0, l.capacity))
        .collect();
    let lambda = lp.add_variable("lambda", 0.0, -inf, inf);
    let mut block = |name: &str, n: usize| -> Vec<usize> {
        (0..n).map(|k| lp.add_variable(format!("{name}{k}"), 0.0, 0.0, inf)).collect()
    };
    let mu_lo = block("mu_lo", ni);
    let mu_hi = block("mu_hi", ni);
    let phi_lo = block("phi_lo", nj);
    let phi_hi = block("phi_hi", nj);
    let chi_lo = block("chi_lo", nl);
    let chi_hi = block("chi_hi", nl);

    let mut terms: Vec<(usize, f64)> = p.iter().map(|&c| (c, -1.0)).collect();
    terms.extend(d.iter().map(|&c| (c, 1.0)));
    lp.add_constraint("balance", &terms, Relation::Equal, 0.0);
    for k in 0..nl {
        let mut flow: Vec<(usize, f64)> = (0..ni).map(|i| (p[i], market.generator_shift(i)[k])).collect();
        flow.extend((0..nj).map(|j| (d[j], -market.load_shift(j)[k])));
        let neg: Vec<(usize, f64)> = flow.iter().map(|&(c, a)| (c, -a)).collect();
        let cap = market.constrained_capacity(k);
        lp.add_constraint(format!("flow{k}_max"), &flow, Relation::LessEq, cap);
        lp.add_constraint(format!("flow{k}_min"), &neg, Relation::LessEq, cap);
    }
    for i in 0..ni {
        let mut row = vec![(lambda, -1.0), (mu_lo[i], -1.0), (mu_hi[i], 1.0)];
        for (k, &pi) in market.generator_shift(i).iter().enumerate() {
            row.push((chi_hi[k], pi));
            row.push((chi_lo[k], -pi));
        }
        lp.add_constraint(format!("stat_g{i}"), &row, Relation::Equal, -market.generator_cost(i, 1.0));
    }
    for (j, l) in case.loads.iter().enumerate() {
        let mut row = vec![(lambda, 1.0), (phi_lo[j], -1.0), (phi_hi[j], 1.0)];
        for (k, &pi) in market.load_shift(j).iter().enumerate() {
            row.push((chi_hi[k], -pi));
            row.push((chi_lo[k], pi));
        }
        lp.add_constraint(format!("stat_d{j}"), &row, Relation::Equal, l.utility);
    }
    let mut sd: Vec<(usize, f64)> = Vec::new();
    for (i, g) in case.generators.iter().enumerate() {
        sd.push((mu_hi[i], g.capacity));
        sd.push((p[i], market.generator_cost(i, 1.0)));
    }
    for (j, l) in case.loads.iter().enumerate() {
        sd.push((phi_hi[j], l.capacity));
        sd.push((d[j], -l.utility));
    }
    for k in 0..nl {
        let cap = market.constrained_capacity(k);
        sd.push((chi_hi[k], cap));
        sd.push((chi_lo[k], cap));
    }
    lp.add_constraint("strong_duality", &sd, Relation::LessEq, 0.0);
    Ok(lp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketClearingSolution {
    pub delta: f64,
    pub p: Vec<f64>,
    pub d: Vec<f64>,
    /// Embedded dual block, taken from the welfare problem's optimum.
    pub embedded: SocialOptimumSolution,
    pub tau: f64,
    /// Per network line; zero on lines without limit rows.
    pub alpha_lower: Vec<f64>,
    pub alpha_upper: Vec<f64>,
    pub eta: f64,
    /// Optimal clearing objective.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSchedule {
    pub generator: Vec<f64>,
    pub load: Vec<f64>,
    pub carbon_tax_rate: f64,
}

/// A market with its welfare optimum solved, ready for repeated clearing.
#[derive(Debug, Clone)]
pub struct Clearing<'a> {
    pub market: &'a Market,
    pub social: SocialOptimumSolution,
}

impl<'a> Clearing<'a> {
    pub fn new(market: &'a Market) -> Result<Self> {
        Ok(Self { market, social: solve_social_optimum(market)? })
    }

    /// `O*`.
    pub fn optimal_welfare(&self) -> f64 {
        self.social.welfare
    }

    /// The partial Lagrangian dual described in the module docs.
    pub fn build_price_lp(&self, delta: f64) -> LinearProgram {
        self.price_lp(delta, 0.0)
    }

    /// `slack` lowers `O*` relative to its magnitude; a positive value restores
    /// boundedness in `η` if rounding left `O*` above the true optimum.
    fn price_lp(&self, delta: f64, slack: f64) -> LinearProgram {
        let m = self.market;
        let nl = m.constrained_lines().len();
        let inf = f64::INFINITY;
        let o_star = self.social.welfare - slack * self.social.welfare.abs().max(1.0);
        let mut lp = LinearProgram::new(Sense::Minimize);
        let tau = lp.add_variable("tau", 0.0, -inf, inf);
        let alpha: Vec<(usize, usize)> = (0..nl)
            .map(|k| {
                let cap = m.constrained_capacity(k);
                (
                    lp.add_variable(format!("alpha_lo{k}"), cap, 0.0, inf),
                    lp.add_variable(format!("alpha_hi{k}"), cap, 0.0, inf),
                )
            })
            .collect();
        let eta = lp.add_variable("eta", -o_star, 0.0, inf);
        for (i, g) in m.case.generators.iter().enumerate() {
            let u = lp.add_variable(format!("u{i}"), g.capacity, 0.0, inf);
            let mut row = vec![(u, 1.0), (tau, -1.0), (eta, m.generator_cost(i, 1.0))];
            for (k, &pi) in m.generator_shift(i).iter().enumerate() {
                row.push((alpha[k].0, -pi));
                row.push((alpha[k].1, pi));
            }
            lp.add_constraint(format!("g{i}"), &row, Relation::GreaterEq, -m.generator_cost(i, delta));
        }
        for (j, l) in m.case.loads.iter().enumerate() {
            let v = lp.add_variable(format!("v{j}"), l.capacity, 0.0, inf);
            let mut row = vec![(v, 1.0), (tau, 1.0), (eta, -l.utility)];
            for (k, &pi) in m.load_shift(j).iter().enumerate() {
                row.push((alpha[k].0, pi));
                row.push((alpha[k].1, -pi));
            }
            lp.add_constraint(format!("d{j}"), &row, Relation::GreaterEq, l.utility);
        }
        lp
    }

    /// Clears at `delta`, choosing the multipliers with the smallest `η`.
    pub fn solve(&self, delta: f64) -> Result<MarketClearingSolution> {
        check_delta(delta)?;
        let m = self.market;
        let (ni, nj, nl) = (m.num_generators(), m.num_loads(), m.constrained_lines().len());
        let eta_col = 1 + 2 * nl;
        let attempt = |slack: f64| {
            let lp = self.price_lp(delta, slack);
            let mut secondary = vec![0.0; lp.num_vars()];
            secondary[eta_col] = 1.0;
            solve_lexicographic(&lp, &secondary, Sense::Minimize)
        };
        let sol = match attempt(0.0) {
            Err(LpError::NoPrimaryOptimum(Status::Unbounded)) => attempt(1e-12),
            other => other,
        }
        .map_err(|e| match e {
            LpError::NoPrimaryOptimum(status) => MarketError::UnexpectedStatus { problem: "clearing price LP", status },
            e => MarketError::Lp(e),
        })?;
        let x = &sol.primal;
        let mut alpha_lower = vec![0.0; m.num_lines()];
        let mut alpha_upper = vec![0.0; m.num_lines()];
        for (k, &line) in m.constrained_lines().iter().enumerate() {
            alpha_lower[line] = x[1 + 2 * k];
            alpha_upper[line] = x[2 + 2 * k];
        }
        let clamp = |v: f64, cap: f64| v.clamp(0.0, cap);
        let p = (0..ni).map(|i| clamp(sol.duals[i], m.case.generators[i].capacity)).collect();
        let d = (0..nj).map(|j| clamp(sol.duals[ni + j], m.case.loads[j].capacity)).collect();
        Ok(MarketClearingSolution {
            delta,
            p,
            d,
            embedded: self.social.clone(),
            tau: x[0],
            alpha_lower,
            alpha_upper,
            eta: x[eta_col].max(0.0),
            objective: sol.objective,
        })
    }
}

/// One-shot clearing at `delta`.
pub fn solve_market_clearing(market: &Market, delta: f64) -> Result<MarketClearingSolution> {
    Clearing::new(market)?.solve(delta)
}

fn congestion_term(market: &Market, sol: &MarketClearingSolution, shift: &[f64]) -> f64 {
    market
        .constrained_lines()
        .iter()
        .zip(shift)
        .map(|(&l, pi)| (sol.alpha_lower[l] - sol.alpha_upper[l]) * pi)
        .sum()
}

/// `λ_i = τ + Σ(α̲ − ᾱ)π_il − η(c_i + κe_i)` and `λ_j = τ + Σ(α̲ − ᾱ)π_jl − η b_j`.
pub fn extract_prices(market: &Market, sol: &MarketClearingSolution) -> PriceSchedule {
    let generator = (0..market.num_generators())
        .map(|i| {
            sol.tau + congestion_term(market, sol, market.generator_shift(i)) - sol.eta * market.generator_cost(i, 1.0)
        })
        .collect();
    let load = market
        .case
        .loads
        .iter()
        .enumerate()
        .map(|(j, l)| sol.tau + congestion_term(market, sol, market.load_shift(j)) - sol.eta * l.utility)
        .collect();
    PriceSchedule { generator, load, carbon_tax_rate: sol.delta * market.case.kappa }
}

/// `S1 = Σ(α̲ − ᾱ)·flow`, `S2 = −δκ Σ e p`, `S3 = η (Σ b d − Σ (c + κe) p)`.
pub fn subsidy(market: &Market, sol: &MarketClearingSolution) -> SubsidyBreakdown {
    let flows = market.flows(&sol.p, &sol.d);
    let s1 = market
        .constrained_lines()
        .iter()
        .map(|&l| (sol.alpha_lower[l] - sol.alpha_upper[l]) * flows[l])
        .sum();
    SubsidyBreakdown {
        s1,
        s2: -sol.delta * market.case.kappa * market.emissions(&sol.p),
        s3: sol.eta * market.welfare(&sol.p, &sol.d),
    }
}

/// Settles a clearing solution into an outcome.
pub fn settle(market: &Market, sol: &MarketClearingSolution) -> MarketOutcome {
    let prices = extract_prices(market, sol);
    let mut out = MarketOutcome::settle(
        market,
        Mechanism::Proposed,
        sol.p.clone(),
        sol.d.clone(),
        prices.generator,
        prices.load,
        prices.carbon_tax_rate,
        subsidy(market, sol),
    );
    out.delta = Some(sol.delta);
    out.eta = Some(sol.eta);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSearchOptions {
    pub coarse_step: f64,
    pub refine_tol: f64,
    pub eta_zero_tol: f64,
}

impl Default for DeltaSearchOptions {
    fn default() -> Self {
        Self { coarse_step: 0.01, refine_tol: 1e-9, eta_zero_tol: ETA_ZERO_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub delta: f64,
    pub eta: f64,
    /// `S2 + S3` at this `δ`.
    pub delta_s: f64,
}

impl TracePoint {
    fn of(market: &Market, sol: &MarketClearingSolution) -> Self {
        Self { delta: sol.delta, eta: sol.eta, delta_s: subsidy(market, sol).delta() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaStatus {
    /// `δ = x* δ̃` balances the non-congestion cash flows.
    Balanced,
    /// No emissions at the optimum: the full tax is charged (and is zero).
    ZeroEmission,
    /// `η` is zero already at `δ = 0`, where `ΔS = 0` holds trivially.
    NoBalancingNeeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSearchResult {
    pub status: DeltaStatus,
    /// Lowest `δ` with `η = 0`.
    pub delta_tilde: f64,
    pub eta0: f64,
    /// Mixing weight `x*` with `δ = x* δ̃`.
    pub x: f64,
    pub delta: f64,
    /// Every clearing evaluated, in order of evaluation.
    pub trace: Vec<TracePoint>,
    pub notes: Vec<String>,
}

/// Lowest `δ` with `η*_δ ≤ eta_zero_tol`: a descending sweep from 1 locates
/// the first `δ` with positive `η`, then bisection narrows the bracket.
/// Bisection is sound because the zero set of `η` is an interval `[δ̃, 1]`.
pub fn find_delta_tilde(
    clearing: &Clearing<'_>,
    opts: &DeltaSearchOptions,
    trace: &mut Vec<TracePoint>,
) -> Result<f64> {
    let market = clearing.market;
    let eval = |delta: f64, trace: &mut Vec<TracePoint>| -> Result<f64> {
        let sol = clearing.solve(delta)?;
        trace.push(TracePoint::of(market, &sol));
        Ok(sol.eta)
    };
    let steps = (1.0 / opts.coarse_step).round() as usize;
    let mut prev = 1.0;
    let mut bracket = None;
    for k in 0..=steps {
        let delta = (1.0 - k as f64 * opts.coarse_step).max(0.0);
        if eval(delta, trace)? > opts.eta_zero_tol {
            bracket = Some((delta, prev));
            break;
        }
        prev = delta;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(MarketError::EtaAlwaysZero);
    };
    if lo == hi {
        // positive η already at δ = 1
        return Ok(1.0);
    }
    while hi - lo > opts.refine_tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid, trace)? > opts.eta_zero_tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Coefficients `(a, b, c)` of `ΔS(x) = a x² + b x + c` along the mixture of
/// the `δ = 0` and `δ = δ̃` clearings with `η = η_0 (1 − x)`.
pub fn mixing_coefficients(
    market: &Market,
    delta_tilde: f64,
    at_zero: &MarketClearingSolution,
    at_tilde: &MarketClearingSolution,
) -> (f64, f64, f64) {
    let kappa = market.case.kappa;
    let (e0, et) = (market.emissions(&at_zero.p), market.emissions(&at_tilde.p));
    let w0 = market.welfare(&at_zero.p, &at_zero.d);
    let dw = market.welfare(&at_tilde.p, &at_tilde.d) - w0;
    let eta0 = at_zero.eta;
    let a = -delta_tilde * kappa * (et - e0) - eta0 * dw;
    let b = -delta_tilde * kappa * e0 + eta0 * (dw - w0);
    let c = eta0 * w0;
    (a, b, c)
}

/// Roots of `a x² + b x + c` in `[0, 1]`, ascending.
fn unit_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    const SLACK: f64 = 1e-12;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(f64::MIN_POSITIVE);
    let mut roots = Vec::new();
    if a.abs() <= 1e-12 * scale {
        if b != 0.0 {
            roots.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            // numerically stable pair
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            roots.push(q / a);
            if q != 0.0 {
                roots.push(c / q);
            }
        }
    }
    let mut roots: Vec<f64> = roots
        .into_iter()
        .filter(|r| r.is_finite() && (-SLACK..=1.0 + SLACK).contains(r))
        .map(|r| r.clamp(0.0, 1.0))
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// Solves the mixing equation for `x*` and verifies each candidate by
/// clearing at `δ = x δ̃`. Falls back to bisection on `ΔS(δ)` over `[0, δ̃]`
/// if no closed-form root verifies.
pub fn solve_mixing_equation(
    clearing: &Clearing<'_>,
    delta_tilde: f64,
    at_zero: &MarketClearingSolution,
    at_tilde: &MarketClearingSolution,
    trace: &mut Vec<TracePoint>,
    notes: &mut Vec<String>,
) -> Result<f64> {
    let market = clearing.market;
    let (a, b, c) = mixing_coefficients(market, delta_tilde, at_zero, at_tilde);
    let roots = unit_roots(a, b, c);
    let eval = |delta: f64, trace: &mut Vec<TracePoint>| -> Result<(f64, f64)> {
        let sol = clearing.solve(delta)?;
        let s = subsidy(market, &sol);
        trace.push(TracePoint::of(market, &sol));
        Ok((s.delta(), balance_tol(s.s2)))
    };
    for &x in &roots {
        let (ds, tol) = eval(x * delta_tilde, trace)?;
        if ds.abs() <= tol {
            // δ̃ is only known to within the η tolerance band, so polish the
            // root with one secant step through (δ̃, S2) and keep the better one.
            let (d1, d2) = (x * delta_tilde, delta_tilde);
            let s2 = subsidy(market, at_tilde).delta();
            if ds != 0.0 && s2 != ds && d1 < d2 {
                let polished = (d1 - ds * (d2 - d1) / (s2 - ds)).clamp(0.0, delta_tilde);
                let (ds_p, _) = eval(polished, trace)?;
                if ds_p.abs() < ds.abs() {
                    return Ok(polished / delta_tilde);
                }
            }
            return Ok(x);
        }
    }
    if roots.is_empty() {
        notes.push(format!("mixing equation had no root in [0, 1] (a={a}, b={b}, c={c}); bisecting"));
    } else {
        notes.push("no mixing-equation root balanced the budget on re-solve; bisecting".into());
    }
    // ΔS(0) = S3 ≥ 0 and ΔS(δ̃) = S2 ≤ 0, and ΔS decreases in δ.
    let (mut lo, mut hi) = (0.0, delta_tilde);
    let (ds_lo, _) = eval(lo, trace)?;
    if ds_lo < 0.0 {
        return Err(MarketError::NoRootInUnitInterval { a, b, c });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (ds, tol) = eval(mid, trace)?;
        if ds.abs() <= tol {
            return Ok(mid / delta_tilde);
        }
        if ds > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    Err(MarketError::NoRootInUnitInterval { a, b, c })
}

/// The full `δ` determination procedure.
pub fn determine_delta(clearing: &Clearing<'_>, opts: &DeltaSearchOptions) -> Result<DeltaSearchResult> {
    let market = clearing.market;
    let mut trace = Vec::new();
    let mut notes = Vec::new();
    let at_zero = clearing.solve(0.0)?;
    trace.push(TracePoint::of(market, &at_zero));
    if at_zero.eta <= opts.eta_zero_tol {
        let zero_emission = market.emissions(&at_zero.p) * market.case.kappa == 0.0;
        let (status, delta) = if zero_emission {
            (DeltaStatus::ZeroEmission, 1.0)
        } else {
            (DeltaStatus::NoBalancingNeeded, 0.0)
        };
        return Ok(DeltaSearchResult {
            status,
            delta_tilde: 0.0,
            eta0: at_zero.eta,
            x: if zero_emission { 1.0 } else { 0.0 },
            delta,
            trace,
            notes,
        });
    }
    let delta_tilde = find_delta_tilde(clearing, opts, &mut trace)?;
    let at_tilde = clearing.solve(delta_tilde)?;
    let x = solve_mixing_equation(clearing, delta_tilde, &at_zero, &at_tilde, &mut trace, &mut notes)?;
    Ok(DeltaSearchResult {
        status: DeltaStatus::Balanced,
        delta_tilde,
        eta0: at_zero.eta,
        x,
        delta: x * delta_tilde,
        trace,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    Auto,
    Fixed(f64),
}

/// Clears the proposed mechanism. In auto mode the search result is returned too.
pub fn run_proposed(market: &Market, mode: DeltaMode) -> Result<(MarketOutcome, Option<DeltaSearchResult>)> {
    if let DeltaMode::Fixed(delta) = mode {
        check_delta(delta)?;
    }
    let clearing = Clearing::new(market)?;
    let (delta, search) = match mode {
        DeltaMode::Fixed(delta) => (delta, None),
        DeltaMode::Auto => {
            let search = determine_delta(&clearing, &DeltaSearchOptions::default())?;
            (search.delta, Some(search))
        }
    };
    let sol = clearing.solve(delta)?;
    let mut outcome = settle(market, &sol);
    if let Some(s) = &search {
        outcome.notes.extend(s.notes.iter().cloned());
        if s.status != DeltaStatus::Balanced {
            outcome.notes.push(format!("delta search: {:?}", s.status));
        }
    }
    Ok((outcome, search))
}
