use ecmarket_lp::LpError;
use thiserror::Error;

use crate::case::CaseError;
use crate::cef::CefError;
use crate::grid::GridError;

/// Errors raised while clearing or analysing a market.
#[derive(Debug, Error)]
pub enum MarketError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Cef(#[from] CefError),
    #[error("solver: {0}")]
    Lp(#[from] LpError),
    /// An LP that cannot be infeasible or unbounded by construction was.
    #[error("{problem} returned status {status:?}")]
    UnexpectedStatus {
        problem: &'static str,
        status: ecmarket_lp::Status,
    },
    #[error("delta must lie in [0, 1], got {0}")]
    InvalidDelta(f64),
    /// eta is already zero at delta = 0, so the threshold search has nothing to find.
    #[error("strong-duality multiplier is zero for every delta")]
    EtaAlwaysZero,
    #[error("mixing equation has no root in [0, 1] (a={a}, b={b}, c={c})")]
    NoRootInUnitInterval { a: f64, b: f64, c: f64 },
    #[error("consistency check failed: {0}")]
    Inconsistent(String),
}

impl MarketError {
    /// Input problems (bad case data or arguments) as opposed to solver trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            MarketError::Case(_) | MarketError::InvalidDelta(_) | MarketError::Grid(_)
        )
    }
}

pub type Result<T, E = MarketError> = std::result::Result<T, E>;
