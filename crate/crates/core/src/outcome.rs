//! Cleared market results shared by every pricing mechanism.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::market::Market;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Traditional,
    T1,
    T2,
    Proposed,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [Mechanism::Traditional, Mechanism::T1, Mechanism::T2, Mechanism::Proposed];
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Traditional => "Traditional",
            Mechanism::T1 => "T1",
            Mechanism::T2 => "T2",
            Mechanism::Proposed => "Proposed",
        })
    }
}

impl std::str::FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "traditional" => Ok(Mechanism::Traditional),
            "t1" => Ok(Mechanism::T1),
            "t2" => Ok(Mechanism::T2),
            "proposed" => Ok(Mechanism::Proposed),
            _ => Err(format!("unknown mechanism {s:?} (traditional, t1, t2, proposed)")),
        }
    }
}

/// Decomposition of the operator's net cash position.
///
/// `s1` is the congestion part, `s2` the carbon-charge part and `s3` the
/// strong-duality part. Their sum equals revenue minus tax minus payment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsidyBreakdown {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl SubsidyBreakdown {
    /// Everything except congestion rent.
    pub fn delta(&self) -> f64 {
        self.s2 + self.s3
    }

    pub fn total(&self) -> f64 {
        self.s1 + self.s2 + self.s3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSettlement {
    pub output: f64,
    pub price: f64,
    pub revenue: f64,
    pub carbon_tax: f64,
    pub cost: f64,
    pub net_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSettlement {
    pub demand: f64,
    pub price: f64,
    pub payment: f64,
    pub utility: f64,
    pub net_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcome {
    pub mechanism: Mechanism,
    pub p: Vec<f64>,
    pub d: Vec<f64>,
    pub generator_prices: Vec<f64>,
    pub load_prices: Vec<f64>,
    /// Carbon tax charged per unit of emission.
    pub carbon_tax_rate: f64,
    pub generators: Vec<GeneratorSettlement>,
    pub loads: Vec<LoadSettlement>,
    pub breakdown: SubsidyBreakdown,
    /// Carbon-aware welfare of the dispatch, always with the full κ.
    pub welfare: f64,
    pub flows: Vec<f64>,
    /// Some constrained line is at its limit.
    pub congested: bool,
    /// Carbon-tax scaling used by the proposed mechanism.
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub iterations: Option<usize>,
    /// Human-readable warnings (non-convergence, curtailment, ...).
    pub notes: Vec<String>,
}

/// Relative tolerance for calling a line binding.
const BINDING_TOL: f64 = 1e-7;

impl MarketOutcome {
    /// Settles a dispatch at the given prices and tax rate.
    #[allow(clippy::too_many_arguments)]
    pub fn settle(
        market: &Market,
        mechanism: Mechanism,
        p: Vec<f64>,
        d: Vec<f64>,
        generator_prices: Vec<f64>,
        load_prices: Vec<f64>,
        carbon_tax_rate: f64,
        breakdown: SubsidyBreakdown,
    ) -> Self {
        let case = &market.case;
        let generators = case
            .generators
            .iter()
            .zip(p.iter().zip(&generator_prices))
            .map(|(g, (&out, &price))| {
                let revenue = price * out;
                let carbon_tax = carbon_tax_rate * g.emission * out;
                let cost = g.cost * out;
                GeneratorSettlement { output: out, price, revenue, carbon_tax, cost, net_profit: revenue - carbon_tax - cost }
            })
            .collect();
        let loads = case
            .loads
            .iter()
            .zip(d.iter().zip(&load_prices))
            .map(|(l, (&dem, &price))| {
                let payment = price * dem;
                let utility = l.utility * dem;
                LoadSettlement { demand: dem, price, payment, utility, net_utility: utility - payment }
            })
            .collect();
        let flows = market.flows(&p, &d);
        let congested = market.constrained_lines().iter().any(|&l| {
            let cap = case.network.lines[l].capacity;
            flows[l].abs() >= cap - BINDING_TOL * cap.max(1.0)
        });
        let welfare = market.welfare(&p, &d);
        Self {
            mechanism,
            p,
            d,
            generator_prices,
            load_prices,
            carbon_tax_rate,
            generators,
            loads,
            breakdown,
            welfare,
            flows,
            congested,
            delta: None,
            eta: None,
            iterations: None,
            notes: Vec::new(),
        }
    }

    pub fn generator_revenue(&self) -> f64 {
        self.generators.iter().map(|g| g.revenue).sum()
    }

    pub fn carbon_tax(&self) -> f64 {
        self.generators.iter().map(|g| g.carbon_tax).sum()
    }

    pub fn load_payment(&self) -> f64 {
        self.loads.iter().map(|l| l.payment).sum()
    }

    pub fn generator_net_profit(&self) -> f64 {
        self.generators.iter().map(|g| g.net_profit).sum()
    }

    pub fn load_net_utility(&self) -> f64 {
        self.loads.iter().map(|l| l.net_utility).sum()
    }

    /// Subsidy from the settlement: revenue − tax − payment.
    pub fn subsidy(&self) -> f64 {
        self.generator_revenue() - self.carbon_tax() - self.load_payment()
    }
}
