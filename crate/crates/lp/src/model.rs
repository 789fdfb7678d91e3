//! Problem description consumed by the simplex engine.

use crate::error::LpError;

/// Optimisation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// `+1` for maximisation, `-1` for minimisation.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }
}

/// Relation between a constraint row and its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    Equal,
    GreaterEq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A dense linear program with per-variable bounds.
///
/// Lower bounds may be `f64::NEG_INFINITY` and upper bounds `f64::INFINITY`.
/// Rows are dense and must have exactly one coefficient per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub var_labels: Vec<String>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            var_labels: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Adds a variable and returns its column index.
    ///
    /// Existing rows are padded with a zero coefficient so the program stays
    /// well-formed when variables are appended after constraints.
    pub fn add_variable(
        &mut self,
        label: impl Into<String>,
        objective: f64,
        lower: f64,
        upper: f64,
    ) -> usize {
        self.objective.push(objective);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_labels.push(label.into());
        for row in &mut self.constraints {
            row.coefficients.push(0.0);
        }
        self.objective.len() - 1
    }

    /// Adds a row given as `(column, coefficient)` pairs; repeated columns accumulate.
    pub fn add_constraint(
        &mut self,
        label: impl Into<String>,
        terms: &[(usize, f64)],
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let mut coefficients = vec![0.0; self.num_vars()];
        for &(col, a) in terms {
            coefficients[col] += a;
        }
        self.add_dense_constraint(label, coefficients, relation, rhs)
    }

    pub fn add_dense_constraint(
        &mut self,
        label: impl Into<String>,
        coefficients: Vec<f64>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            label: label.into(),
            coefficients,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    /// Objective value of `x` under this program's objective.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Checks the structural invariants: consistent lengths, finite data and
    /// `lower <= upper` for every variable.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.var_labels.len() != n {
            return Err(LpError::Malformed(format!(
                "objective has {n} entries but bounds/labels have {}/{}/{}",
                self.lower.len(),
                self.upper.len(),
                self.var_labels.len()
            )));
        }
        for (k, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!(
                    "variable {k} ({}) has invalid bounds [{l}, {u}]",
                    self.var_labels[k]
                )));
            }
            if !self.objective[k].is_finite() {
                return Err(LpError::Malformed(format!(
                    "objective coefficient of variable {k} is not finite"
                )));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coefficients.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {i} ({}) has {} coefficients, expected {n}",
                    row.label,
                    row.coefficients.len()
                )));
            }
            if !row.rhs.is_finite() || row.coefficients.iter().any(|a| !a.is_finite()) {
                return Err(LpError::Malformed(format!(
                    "row {i} ({}) contains non-finite data",
                    row.label
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
