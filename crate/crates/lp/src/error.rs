use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    /// Dimension mismatch or invalid data; always a caller bug.
    #[error("malformed linear program: {0}")]
    Malformed(String),
    /// The pivot budget was exhausted or the final basis failed its residual check.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// `solve_lexicographic` was handed a program that is not optimal-solvable.
    #[error("primary problem has no optimum ({0:?})")]
    NoPrimaryOptimum(crate::Status),
    /// Restricting to the optimal face left nothing feasible.
    #[error("optimal face is empty after pinning the primary objective")]
    PinInfeasible,
    #[error("secondary objective is unbounded over the optimal face")]
    SecondaryUnbounded,
}
