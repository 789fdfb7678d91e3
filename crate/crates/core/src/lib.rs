//! Joint electricity and carbon market clearing.
//!
//! The crate clears a DC-network electricity market with a carbon price
//! under four pricing rules: carbon-blind LMP ([`run_traditional`]),
//! marginal carbon pricing ([`run_t1`]), emission-flow-based load pricing
//! ([`run_t2`]) and the primal-dual embedded mechanism with a scaled carbon
//! tax ([`run_proposed`]). [`verification`] turns the mechanism's economic
//! guarantees into executable checks.

pub mod baselines;
pub mod case;
pub mod cef;
mod error;
pub mod grid;
pub mod market;
pub mod mechanism;
pub mod outcome;
pub mod social;
pub mod verification;

pub use baselines::{run_t1, run_t2, run_traditional, T2Options};
pub use case::{bundled_case, bundled_simple_system, load_case, random_batch_case, random_case, save_case, MarketCase};
pub use error::{MarketError, Result};
pub use market::Market;
pub use mechanism::{run_proposed, DeltaMode};
pub use outcome::{Mechanism, MarketOutcome};

/// Clears `market` under `mechanism` with default options.
pub fn run_mechanism(market: &Market, mechanism: Mechanism) -> Result<MarketOutcome> {
    match mechanism {
        Mechanism::Traditional => run_traditional(market),
        Mechanism::T1 => run_t1(market),
        Mechanism::T2 => run_t2(market, &T2Options::default()),
        Mechanism::Proposed => run_proposed(market, DeltaMode::Auto).map(|(o, _)| o),
    }
}
