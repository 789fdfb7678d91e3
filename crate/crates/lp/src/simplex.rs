//! Two-phase primal simplex on a dense bounded-variable tableau.
//!
//! Every variable is brought to the internal form `0 <= x' <= u'` (shifted,
//! mirrored, or split into a positive and a negative part), every `>=` row is
//! negated into a `<=` row, and rows are scaled to unit max-norm. Each row then
//! gets either its slack or an artificial column as initial basic variable, so
//! the columns of the initial basis form an identity and the matching tableau
//! columns always hold `B^-1`. Duals are read off those columns at the end.
//!
//! Entering variables are chosen by Dantzig's largest-reduced-cost rule until a
//! run of degenerate pivots exceeds [`BLAND_AFTER`], after which Bland's
//! smallest-index rule is used for the rest of the phase.

use crate::error::LpError;
use crate::model::{dot, LinearProgram, Relation};
use crate::solution::{LpSolution, Status};

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
pub const BLAND_AFTER: usize = 50;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
const ZERO_ROW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    /// `x = offset + x'`
    Shift { col: usize, offset: f64 },
    /// `x = offset - x'`
    Mirror { col: usize, offset: f64 },
    /// `x = x'pos - x'neg`
    Split { pos: usize, neg: usize },
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    n: usize,
    /// Row-major `m x n` tableau `B^-1 A`.
    t: Vec<f64>,
    /// Internal standard-form matrix, kept for the final residual refresh.
    a: Vec<f64>,
    b: Vec<f64>,
    beta: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    init_basic: Vec<usize>,
    first_artificial: usize,
    /// Reduced costs of the phase currently running.
    d: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    trace: bool,
}

pub(crate) fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let sign = lp.sense.sign();
    let m = lp.num_constraints();

    // Column layout for the structural part.
    let mut maps = Vec::with_capacity(lp.num_vars());
    let mut struct_cost = Vec::new();
    let mut struct_upper = Vec::new();
    let mut struct_src: Vec<(usize, f64)> = Vec::new(); // (original var, coefficient multiplier)
    for k in 0..lp.num_vars() {
        let (l, u, c) = (lp.lower[k], lp.upper[k], sign * lp.objective[k]);
        let col = struct_cost.len();
        if l.is_finite() {
            maps.push(ColumnMap::Shift { col, offset: l });
            struct_cost.push(c);
            struct_upper.push(u - l);
            struct_src.push((k, 1.0));
        } else if u.is_finite() {
            maps.push(ColumnMap::Mirror { col, offset: u });
            struct_cost.push(-c);
            struct_upper.push(f64::INFINITY);
            struct_src.push((k, -1.0));
        } else {
            maps.push(ColumnMap::Split { pos: col, neg: col + 1 });
            struct_cost.extend([c, -c]);
            struct_upper.extend([f64::INFINITY, f64::INFINITY]);
            struct_src.extend([(k, 1.0), (k, -1.0)]);
        }
    }
    let n_struct = struct_cost.len();

    // Rows: structural coefficients, adjusted rhs, scaling and orientation.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut row_factor = Vec::with_capacity(m);
    let mut has_slack = Vec::with_capacity(m);
    let mut slack_sign = Vec::with_capacity(m);
    for con in &lp.constraints {
        let mut row: Vec<f64> = struct_src
            .iter()
            .map(|&(k, mult)| mult * con.coefficients[k])
            .collect();
        let mut b = con.rhs;
        for (k, map) in maps.iter().enumerate() {
            let a = con.coefficients[k];
            match *map {
                ColumnMap::Shift { offset, .. } | ColumnMap::Mirror { offset, .. } => {
                    b -= a * offset
                }
                ColumnMap::Split { .. } => {}
            }
        }
        let norm = row.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        // Rows that are zero up to round-off keep unit scale.
        let scale = if norm > ZERO_ROW { 1.0 / norm } else { 1.0 };
        let mut factor = scale;
        if con.relation == Relation::GreaterEq {
            factor = -factor;
        }
        let mut s = 1.0;
        if b * factor < 0.0 {
            factor = -factor;
            if con.relation != Relation::Equal {
                s = -1.0;
            }
        }
        for v in &mut row {
            *v *= factor;
        }
        b *= factor;
        rows.push(row);
        rhs.push(b);
        row_factor.push(factor);
        has_slack.push(con.relation != Relation::Equal);
        // `>=` rows were negated into `<=` rows above, so the slack enters
        // with +1 unless the row had to be flipped for a nonnegative rhs.
        slack_sign.push(s);
    }

    let n_slack = has_slack.iter().filter(|&&h| h).count();
    let needs_art: Vec<bool> = (0..m)
        .map(|i| !has_slack[i] || slack_sign[i] < 0.0)
        .collect();
    let n_art = needs_art.iter().filter(|&&h| h).count();
    let n = n_struct + n_slack + n_art;
    let first_artificial = n_struct + n_slack;

    let mut a = vec![0.0; m * n];
    let mut upper = struct_upper;
    upper.extend(std::iter::repeat(f64::INFINITY).take(n_slack + n_art));
    let mut init_basic = vec![0; m];
    let mut slack_col = n_struct;
    let mut art_col = first_artificial;
    for i in 0..m {
        a[i * n..i * n + n_struct].copy_from_slice(&rows[i]);
        if has_slack[i] {
            a[i * n + slack_col] = slack_sign[i];
            if slack_sign[i] > 0.0 {
                init_basic[i] = slack_col;
            }
            slack_col += 1;
        }
        if needs_art[i] {
            a[i * n + art_col] = 1.0;
            init_basic[i] = art_col;
            art_col += 1;
        }
    }

    let mut state = vec![VarState::AtLower; n];
    for &c in &init_basic {
        state[c] = VarState::Basic;
    }
    let mut tab = Tableau {
        m,
        n,
        t: a.clone(),
        a,
        b: rhs.clone(),
        beta: rhs,
        upper,
        basis: init_basic.clone(),
        state,
        init_basic,
        first_artificial,
        d: vec![0.0; n],
        iterations: 0,
        max_iterations: 50 * (m + n) + 1000,
        trace: std::env::var("LP_TRACE").map(|v| v == "1").unwrap_or(false),
    };

    let b_scale = tab.b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));

    // Phase 1: drive the artificials to zero.
    if n_art > 0 {
        let mut cost1 = vec![0.0; n];
        for c in cost1.iter_mut().skip(first_artificial) {
            *c = -1.0;
        }
        tab.run_phase(&cost1, 1)?;
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= first_artificial)
            .map(|i| tab.beta[i].max(0.0))
            .sum();
        if infeasibility > FEAS_TOL * b_scale {
            return Ok(LpSolution::without_optimum(Status::Infeasible, tab.iterations));
        }
        tab.evict_artificials();
    }

    let mut cost2 = struct_cost;
    cost2.resize(n, 0.0);
    let c_scale = cost2.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    match tab.run_phase_scaled(&cost2, 2, c_scale)? {
        PhaseEnd::Unbounded => {
            return Ok(LpSolution::without_optimum(Status::Unbounded, tab.iterations))
        }
        PhaseEnd::Optimal => {}
    }
    tab.refresh_beta();

    // Internal primal values.
    let mut xi = vec![0.0; n];
    for j in 0..n {
        xi[j] = match tab.state[j] {
            VarState::AtLower | VarState::Basic => 0.0,
            VarState::AtUpper => tab.upper[j],
        };
    }
    for (i, &j) in tab.basis.iter().enumerate() {
        xi[j] = tab.beta[i];
    }
    let primal: Vec<f64> = maps
        .iter()
        .zip(lp.lower.iter().zip(&lp.upper))
        .map(|(map, (&l, &u))| {
            let v = match *map {
                ColumnMap::Shift { col, offset } => offset + xi[col],
                ColumnMap::Mirror { col, offset } => offset - xi[col],
                ColumnMap::Split { pos, neg } => xi[pos] - xi[neg],
            };
            v.clamp(l, u)
        })
        .collect();

    // Row duals: y_int = c_B^T B^-1, mapped back through scaling/orientation and sense.
    let duals: Vec<f64> = (0..m)
        .map(|i| {
            let col = tab.init_basic[i];
            let y: f64 = (0..m).map(|k| cost2[tab.basis[k]] * tab.t[k * n + col]).sum();
            sign * row_factor[i] * y
        })
        .collect();
    let reduced_costs: Vec<f64> = (0..lp.num_vars())
        .map(|k| {
            lp.objective[k]
                - lp
                    .constraints
                    .iter()
                    .zip(&duals)
                    .map(|(con, y)| con.coefficients[k] * y)
                    .sum::<f64>()
        })
        .collect();
    let objective = dot(&lp.objective, &primal);
    Ok(LpSolution {
        status: Status::Optimal,
        primal,
        duals,
        reduced_costs,
        objective,
        iterations: tab.iterations,
    })
}

impl Tableau {
    fn run_phase(&mut self, cost: &[f64], phase: u8) -> Result<PhaseEnd, LpError> {
        let c_scale = cost.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        self.run_phase_scaled(cost, phase, c_scale)
    }

    fn run_phase_scaled(
        &mut self,
        cost: &[f64],
        phase: u8,
        c_scale: f64,
    ) -> Result<PhaseEnd, LpError> {
        let (m, n) = (self.m, self.n);
        // d_j = c_j - c_B^T T_j
        self.d.copy_from_slice(cost);
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * n..(i + 1) * n];
                for (dj, tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for &j in &self.basis {
            self.d[j] = 0.0;
        }

        let opt_tol = OPT_TOL * c_scale;
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::NumericalFailure(format!(
                    "pivot limit of {} reached in phase {phase}",
                    self.max_iterations
                )));
            }
            let Some(q) = self.entering(opt_tol, bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            self.iterations += 1;
            let dir = if self.state[q] == VarState::AtUpper { -1.0 } else { 1.0 };

            let mut theta = self.upper[q];
            let mut leave: Option<(usize, bool, f64)> = None; // (row, to_upper, |alpha|)
            for i in 0..m {
                let alpha = dir * self.t[i * n + q];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let bvar = self.basis[i];
                let (ratio, to_upper) = if alpha > 0.0 {
                    (self.beta[i].max(0.0) / alpha, false)
                } else if self.upper[bvar].is_finite() {
                    ((self.upper[bvar] - self.beta[i]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let take = match leave {
                    _ if ratio < theta - RATIO_TIE => true,
                    None => false,
                    Some((r, _, best_alpha)) if (ratio - theta).abs() <= RATIO_TIE => {
                        if bland {
                            bvar < self.basis[r]
                        } else {
                            alpha.abs() > best_alpha
                                || (alpha.abs() == best_alpha && bvar < self.basis[r])
                        }
                    }
                    Some(_) => false,
                };
                if take {
                    theta = ratio.min(theta);
                    leave = Some((i, to_upper, alpha.abs()));
                }
            }
            if theta.is_infinite() {
                return Ok(PhaseEnd::Unbounded);
            }

            if theta > 0.0 {
                for i in 0..m {
                    let tiq = self.t[i * n + q];
                    if tiq != 0.0 {
                        self.beta[i] -= dir * theta * tiq;
                    }
                }
            }
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > BLAND_AFTER {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            match leave {
                None => {
                    self.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                    if self.trace {
                        eprintln!(
                            "lp phase {phase} it {}: bound flip x{q} theta={theta:.6e}",
                            self.iterations
                        );
                    }
                }
                Some((r, to_upper, _)) => {
                    let entering_value = if dir > 0.0 { theta } else { self.upper[q] - theta };
                    let leaving = self.basis[r];
                    self.pivot(r, q);
                    self.basis[r] = q;
                    self.state[q] = VarState::Basic;
                    self.state[leaving] = if to_upper { VarState::AtUpper } else { VarState::AtLower };
                    self.beta[r] = entering_value;
                    if self.trace {
                        eprintln!(
                            "lp phase {phase} it {}: enter x{q} leave x{leaving} row {r} theta={theta:.6e}{}",
                            self.iterations,
                            if bland { " [bland]" } else { "" }
                        );
                    }
                }
            }
        }
    }

    fn entering(&self, tol: f64, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            let score = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower if self.upper[j] > 0.0 && self.d[j] > tol => self.d[j],
                VarState::AtUpper if self.d[j] < -tol => -self.d[j],
                _ => continue,
            };
            if bland {
                return Some(j);
            }
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let piv = self.t[r * n + q];
        let prow: Vec<f64> = self.t[r * n..(r + 1) * n].iter().map(|v| v / piv).collect();
        let nz: Vec<usize> = (0..n).filter(|&j| prow[j] != 0.0).collect();
        let sparse = nz.len() * 3 < n;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            if sparse {
                for &j in &nz {
                    row[j] -= f * prow[j];
                }
            } else {
                for (x, p) in row.iter_mut().zip(&prow) {
                    *x -= f * p;
                }
            }
            row[q] = 0.0;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for &j in &nz {
                self.d[j] -= dq * prow[j];
            }
        }
        self.d[q] = 0.0;
        self.t[r * n..(r + 1) * n].copy_from_slice(&prow);
        self.t[r * n + q] = 1.0;
    }

    /// Pivots artificial variables out of the basis after phase 1 and fixes
    /// every artificial column at zero. Rows whose artificial cannot leave are
    /// linearly dependent and keep it basic at zero.
    fn evict_artificials(&mut self) {
        let n = self.n;
        for r in 0..self.m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let row = &self.t[r * n..(r + 1) * n];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.first_artificial {
                if self.state[j] == VarState::Basic {
                    continue;
                }
                let v = row[j].abs();
                if v > 1e-7 && best.map_or(true, |(_, s)| v > s) {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                let value = match self.state[q] {
                    VarState::AtUpper => self.upper[q],
                    _ => 0.0,
                };
                let leaving = self.basis[r];
                // Remaining artificial level is ~0; shift the other basics so the
                // entering column keeps its current value.
                let art_level = self.beta[r];
                let piv = self.t[r * n + q];
                if art_level != 0.0 {
                    let step = art_level / piv;
                    for i in 0..self.m {
                        if i != r {
                            self.beta[i] -= step * self.t[i * n + q];
                        }
                    }
                }
                self.pivot(r, q);
                self.basis[r] = q;
                self.state[q] = VarState::Basic;
                self.state[leaving] = VarState::AtLower;
                self.beta[r] = value + art_level / piv;
            }
        }
        for j in self.first_artificial..n {
            self.upper[j] = 0.0;
        }
    }

    /// Recomputes basic values as `B^-1 (b - N x_N)` from the untouched matrix.
    fn refresh_beta(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut r = self.b.clone();
        for j in 0..n {
            if self.state[j] == VarState::AtUpper {
                let u = self.upper[j];
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri -= self.a[i * n + j] * u;
                }
            }
        }
        for k in 0..m {
            let row = &self.t[k * n..(k + 1) * n];
            self.beta[k] = (0..m).map(|i| row[self.init_basic[i]] * r[i]).sum();
        }
    }
}
