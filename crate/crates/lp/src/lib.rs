//! Dense linear programming with exact dual extraction.
//!
//! [`solve`] runs a two-phase bounded-variable primal simplex and returns
//! primal values, row duals and reduced costs taken from the final basis.
//! [`solve_lexicographic`] optimises a secondary objective over the optimal
//! face of a primary one.
//!
//! Set `LP_TRACE=1` to log every pivot to standard error.

mod error;
mod model;
mod simplex;
mod solution;

pub use error::LpError;
pub use model::{Constraint, LinearProgram, Relation, Sense};
pub use solution::{Certificate, LpSolution, Status};

/// Primal feasibility tolerance (scaled rows).
pub const FEAS_TOL: f64 = 1e-8;
/// Duality gap tolerance, relative to `max(1, |objective|)`.
pub const GAP_TOL: f64 = 1e-7;
/// Complementary slackness tolerance.
pub const CS_TOL: f64 = 1e-7;

/// Objective drift allowed by [`solve_lexicographic`] for a primary optimum `obj`.
pub fn pin_tol(obj: f64) -> f64 {
    1e-7 * obj.abs().max(1.0)
}

/// Threshold below which a reduced cost or row dual counts as zero when the
/// optimal face is extracted, relative to the largest objective coefficient.
const FACE_TOL: f64 = 1e-9;

/// Solves `lp`. Infeasible and unbounded programs are reported through
/// [`LpSolution::status`]; errors are reserved for malformed input and
/// numerical breakdown.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    simplex::solve(lp)
}

/// Optimises `secondary` (in `secondary_sense`) over the set of optimal
/// solutions of `lp`.
///
/// The optimal face is cut out with the primary certificate: every variable
/// with a nonzero reduced cost is fixed at the bound it sits on and every
/// inequality row with a nonzero dual becomes an equality. Any feasible point
/// of that restriction is complementary to the primary duals and therefore
/// optimal. The returned solution carries the secondary optimiser's primal
/// values, the primary objective value and the primary duals.
pub fn solve_lexicographic(
    lp: &LinearProgram,
    secondary: &[f64],
    secondary_sense: Sense,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    if secondary.len() != lp.num_vars() {
        return Err(LpError::Malformed(format!(
            "secondary objective has {} entries, expected {}",
            secondary.len(),
            lp.num_vars()
        )));
    }
    let first = solve(lp)?;
    if !first.is_optimal() {
        return Err(LpError::NoPrimaryOptimum(first.status));
    }

    let c_scale = lp.objective.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let tol = FACE_TOL * c_scale;
    let s = lp.sense.sign();
    let mut face = lp.clone();
    face.objective = secondary.to_vec();
    face.sense = secondary_sense;
    for k in 0..lp.num_vars() {
        let r = s * first.reduced_costs[k];
        if r > tol && lp.upper[k].is_finite() {
            face.lower[k] = lp.upper[k];
        } else if r < -tol && lp.lower[k].is_finite() {
            face.upper[k] = lp.lower[k];
        }
    }
    for (con, &y) in face.constraints.iter_mut().zip(&first.duals) {
        let norm = con.coefficients.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if con.relation != Relation::Equal && (y * norm).abs() > tol {
            con.relation = Relation::Equal;
        }
    }

    let second = solve(&face)?;
    match second.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(LpError::PinInfeasible),
        Status::Unbounded => return Err(LpError::SecondaryUnbounded),
    }
    let objective = lp.objective_value(&second.primal);
    if (objective - first.objective).abs() > pin_tol(first.objective) {
        return Err(LpError::NumericalFailure(format!(
            "primary objective drifted from {} to {} on the optimal face",
            first.objective, objective
        )));
    }
    Ok(LpSolution {
        status: Status::Optimal,
        primal: second.primal,
        duals: first.duals,
        reduced_costs: first.reduced_costs,
        objective,
        iterations: first.iterations + second.iterations,
    })
}
