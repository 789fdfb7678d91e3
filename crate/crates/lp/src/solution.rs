//! Solver result and optimality certificate.

use crate::model::{dot, LinearProgram, Relation, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve.
///
/// When `status` is not [`Status::Optimal`] the vectors are empty and
/// `objective` is NaN.
///
/// Duals and reduced costs are sensitivities of the optimal objective, in the
/// program's own sense:
///
/// | item                 | maximize     | minimize     |
/// |----------------------|--------------|--------------|
/// | `<=` row dual        | `>= 0`       | `<= 0`       |
/// | `>=` row dual        | `<= 0`       | `>= 0`       |
/// | `=` row dual         | free         | free         |
/// | reduced cost, x at upper | `>= 0`   | `<= 0`       |
/// | reduced cost, x at lower | `<= 0`   | `>= 0`       |
///
/// with `reduced_costs = objective - A^T duals`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Residuals of an optimal solution against its program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Largest row or bound violation, rows measured after unit max-norm scaling.
    pub primal_infeasibility: f64,
    /// Largest dual sign violation (row duals and reduced costs).
    pub dual_infeasibility: f64,
    /// `|primal objective - dual objective|`.
    pub duality_gap: f64,
    /// Largest `|dual x slack|` product over inequality rows and bounds.
    pub complementarity: f64,
    pub dual_objective: f64,
}

impl LpSolution {
    pub(crate) fn without_optimum(status: Status, iterations: usize) -> Self {
        Self {
            status,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective: f64::NAN,
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Evaluates primal feasibility, dual feasibility, duality gap and
    /// complementary slackness. Only meaningful for optimal solutions.
    pub fn certify(&self, lp: &LinearProgram) -> Certificate {
        let s = lp.sense.sign();
        let mut primal_inf = 0.0_f64;
        let mut dual_inf = 0.0_f64;
        let mut comp = 0.0_f64;
        let mut dual_obj = 0.0;

        for (i, con) in lp.constraints.iter().enumerate() {
            let norm = con
                .coefficients
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()))
                .max(f64::MIN_POSITIVE);
            let lhs = dot(&con.coefficients, &self.primal);
            let slack = con.rhs - lhs;
            let y = self.duals[i];
            let scaled = slack / norm;
            let viol = match con.relation {
                Relation::LessEq => (-scaled).max(0.0),
                Relation::GreaterEq => scaled.max(0.0),
                Relation::Equal => scaled.abs(),
            };
            primal_inf = primal_inf.max(viol);
            // In maximisation form (multiply by s) a `<=` dual is >= 0.
            let ys = s * y;
            let sign_viol = match con.relation {
                Relation::LessEq => (-ys).max(0.0),
                Relation::GreaterEq => ys.max(0.0),
                Relation::Equal => 0.0,
            };
            dual_inf = dual_inf.max(sign_viol);
            if con.relation != Relation::Equal {
                comp = comp.max((y * slack).abs());
            }
            dual_obj += y * con.rhs;
        }

        for k in 0..lp.num_vars() {
            let (l, u, x) = (lp.lower[k], lp.upper[k], self.primal[k]);
            let r = self.reduced_costs[k];
            primal_inf = primal_inf.max((l - x).max(0.0)).max((x - u).max(0.0));
            let rs = s * r;
            // rs > 0 needs a finite upper bound, rs < 0 a finite lower bound.
            if rs > 0.0 {
                if u.is_finite() {
                    dual_obj += r * u;
                    comp = comp.max((r * (u - x)).abs());
                } else {
                    dual_inf = dual_inf.max(rs);
                    dual_obj += r * x;
                }
            } else if rs < 0.0 {
                if l.is_finite() {
                    dual_obj += r * l;
                    comp = comp.max((r * (x - l)).abs());
                } else {
                    dual_inf = dual_inf.max(-rs);
                    dual_obj += r * x;
                }
            }
        }

        Certificate {
            primal_infeasibility: primal_inf,
            dual_infeasibility: dual_inf,
            duality_gap: (self.objective - dual_obj).abs(),
            complementarity: comp,
            dual_objective: dual_obj,
        }
    }
}

impl Sense {
    /// The opposite direction.
    pub fn flipped(self) -> Sense {
        match self {
            Sense::Maximize => Sense::Minimize,
            Sense::Minimize => Sense::Maximize,
        }
    }
}
