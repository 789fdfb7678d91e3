//! Command bodies. Each returns the report text; `run` writes it out.

use std::path::Path;

use ecmarket::case::{
    bundled_case, load_case, random_batch_case, random_case, synthetic_case, CaseError, ComparisonReport,
    MarketCase, RandomCaseConfig, BUNDLED_CASES,
};
use ecmarket::mechanism::{run_proposed, subsidy, Clearing, DeltaMode, DeltaSearchResult, DeltaStatus};
use ecmarket::verification::{check_lemma_linearity, property_suite, PropertyReport};
use ecmarket::{run_t1, run_t2, run_traditional, Market, MarketError, MarketOutcome, Mechanism, T2Options};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::report::{self, CapacityRow, DeltaRow, MetricRow, PropertyRow};
use crate::{
    Cli, ClearArgs, Command, CompareArgs, GenerateArgs, SweepCapacityArgs, SweepDeltaArgs, T2Args, VerifyArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Property(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Property(_) => 3,
        }
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

impl From<CaseError> for CliError {
    fn from(e: CaseError) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Snaps grid points like `0.1 * 3` to the nearest 1e-12 so reports print
/// `0.3` rather than `0.30000000000000004`.
fn grid_point(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global()?;
    }
    let (text, result) = match &cli.command {
        Command::Clear(a) => (clear(cli, a)?, Ok(())),
        Command::Compare(a) => compare(cli, a)?,
        Command::SweepDelta(a) => (sweep_delta(cli, a)?, Ok(())),
        Command::SweepCapacity(a) => (sweep_capacity(cli, a)?, Ok(())),
        Command::Verify(a) => verify(cli, a)?,
        Command::Generate(a) => (generate(a)?, Ok(())),
    };
    match &cli.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    result
}

/// A case file path, or the name of a bundled case.
pub fn resolve_case(arg: &str) -> CliResult<MarketCase> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(load_case(path)?);
    }
    if BUNDLED_CASES.contains(&arg) {
        return Ok(bundled_case(arg)?);
    }
    Err(CliError::Input(format!(
        "case file {} not found and not a bundled case ({})",
        path.display(),
        BUNDLED_CASES.join(", ")
    )))
}

fn parse_mechanism(s: &str) -> CliResult<Mechanism> {
    s.parse().map_err(CliError::Input)
}

fn t2_options(a: &T2Args) -> CliResult<T2Options> {
    let d = T2Options::default();
    let opts = T2Options {
        max_iterations: a.t2_max_iterations.unwrap_or(d.max_iterations),
        damping: a.t2_damping.unwrap_or(d.damping),
        tolerance: a.t2_tolerance.or(d.tolerance),
        generator_carbon_price: a.t2_generator_carbon_price,
        generator_carbon_tax: a.t2_generator_carbon_tax,
    };
    opts.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(opts)
}

fn run_one(
    market: &Market,
    mechanism: Mechanism,
    delta: DeltaMode,
    t2: &T2Options,
) -> Result<(MarketOutcome, Option<DeltaSearchResult>), MarketError> {
    match mechanism {
        Mechanism::Proposed => run_proposed(market, delta),
        Mechanism::T2 => Ok((run_t2(market, t2)?, None)),
        Mechanism::T1 => Ok((run_t1(market)?, None)),
        Mechanism::Traditional => Ok((run_traditional(market)?, None)),
    }
}

fn print_notes(outcome: &MarketOutcome) {
    for note in &outcome.notes {
        eprintln!("note: [{}] {note}", outcome.mechanism);
    }
}

#[derive(Serialize)]
struct ClearReport<'a> {
    case: &'a str,
    display_scale: f64,
    outcome: &'a MarketOutcome,
    delta_search: Option<&'a DeltaSearchResult>,
}

fn clear(cli: &Cli, a: &ClearArgs) -> CliResult<String> {
    let mechanism = parse_mechanism(&a.mechanism)?;
    let delta = match a.delta.as_deref() {
        None => DeltaMode::Auto,
        Some(_) if mechanism != Mechanism::Proposed => {
            return Err(CliError::Input("--delta applies only to the proposed mechanism".into()))
        }
        Some("auto") => DeltaMode::Auto,
        Some(v) => DeltaMode::Fixed(
            v.parse().map_err(|_| CliError::Input(format!("--delta expects `auto` or a number, got {v:?}")))?,
        ),
    };
    if a.t2.is_set() && mechanism != Mechanism::T2 {
        return Err(CliError::Input("T2 options apply only to the t2 mechanism".into()));
    }
    let t2 = t2_options(&a.t2)?;
    let case = resolve_case(&a.case.case)?;
    let market = Market::new(&case)?;
    let (outcome, search) = run_one(&market, mechanism, delta, &t2)?;
    print_notes(&outcome);
    if cli.json {
        return Ok(report::json(&ClearReport {
            case: &case.name,
            display_scale: case.display_scale,
            outcome: &outcome,
            delta_search: search.as_ref(),
        }));
    }
    let k = case.display_scale;
    let num = |v: f64| v.to_string();
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let mut rows = vec![
        MetricRow { metric: "case", value: case.name.clone() },
        MetricRow { metric: "mechanism", value: outcome.mechanism.to_string() },
        MetricRow { metric: "delta", value: opt(outcome.delta) },
        MetricRow { metric: "eta", value: opt(outcome.eta) },
    ];
    if let Some(s) = &search {
        rows.push(MetricRow { metric: "delta_tilde", value: num(s.delta_tilde) });
        rows.push(MetricRow { metric: "delta_status", value: format!("{:?}", s.status) });
    }
    rows.extend([
        MetricRow { metric: "carbon_tax_rate", value: num(outcome.carbon_tax_rate) },
        MetricRow { metric: "generator_net_profit", value: num(k * outcome.generator_net_profit()) },
        MetricRow { metric: "load_net_profit", value: num(k * outcome.load_net_utility()) },
        MetricRow { metric: "generator_revenue", value: num(k * outcome.generator_revenue()) },
        MetricRow { metric: "load_payment", value: num(k * outcome.load_payment()) },
        MetricRow { metric: "carbon_tax", value: num(k * outcome.carbon_tax()) },
        MetricRow { metric: "subsidy", value: num(k * outcome.subsidy()) },
        MetricRow { metric: "social_welfare", value: num(k * outcome.welfare) },
        MetricRow { metric: "congested", value: outcome.congested.to_string() },
        MetricRow { metric: "iterations", value: outcome.iterations.map(|i| i.to_string()).unwrap_or_default() },
    ]);
    Ok(report::csv(&rows))
}

/// Runs every mechanism; the error half of the pair reports per-mechanism
/// failures after the table for the others has been written.
fn compare(cli: &Cli, a: &CompareArgs) -> CliResult<(String, CliResult<()>)> {
    let t2 = t2_options(&a.t2)?;
    let case = resolve_case(&a.case.case)?;
    let market = Market::new(&case)?;
    let mut outcomes = Vec::new();
    let mut failed = Vec::new();
    for mechanism in Mechanism::ALL {
        match run_one(&market, mechanism, DeltaMode::Auto, &t2) {
            Ok((o, _)) => {
                print_notes(&o);
                outcomes.push(o);
            }
            Err(e) => {
                eprintln!("error: {mechanism} failed: {e}");
                failed.push(mechanism.to_string());
            }
        }
    }
    let table = ComparisonReport::new(&case, &outcomes);
    let text = if cli.json { report::json(&table) } else { table.to_csv() };
    let result = if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(format!("mechanisms failed: {}", failed.join(", "))))
    };
    Ok((text, result))
}

fn sweep_delta(cli: &Cli, a: &SweepDeltaArgs) -> CliResult<String> {
    if !(a.step > 0.0 && a.step <= 1.0) {
        return Err(CliError::Input(format!("--step must lie in (0, 1], got {}", a.step)));
    }
    let case = resolve_case(&a.case.case)?;
    let market = Market::new(&case)?;
    let clearing = Clearing::new(&market)?;
    let n = (1.0 / a.step - 1e-9).ceil() as usize;
    let rows: Vec<DeltaRow> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let delta = grid_point(k as f64 * a.step).min(1.0);
            let sol = clearing.solve(delta)?;
            Ok(DeltaRow { delta, eta: sol.eta, delta_s: case.display_scale * subsidy(&market, &sol).delta() })
        })
        .collect::<Result<_, MarketError>>()?;
    Ok(if cli.json { report::json(&rows) } else { report::csv(&rows) })
}

fn sweep_capacity(cli: &Cli, a: &SweepCapacityArgs) -> CliResult<String> {
    if !(a.from > 0.0 && a.to >= a.from && a.step > 0.0) {
        return Err(CliError::Input("capacity sweep needs 0 < from <= to and step > 0".into()));
    }
    let case = resolve_case(&a.case.case)?;
    let n = ((a.to - a.from) / a.step + 1e-9).floor() as usize;
    let t2 = T2Options::default();
    let rows: Vec<CapacityRow> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let factor = grid_point(a.from + k as f64 * a.step);
            let market = Market::new(&case.with_scaled_capacities(factor))?;
            let o_star = Clearing::new(&market)?.optimal_welfare();
            let welfare = |m| run_one(&market, m, DeltaMode::Auto, &t2).map(|(o, _)| case.display_scale * o.welfare);
            Ok(CapacityRow {
                factor,
                social_optimum: case.display_scale * o_star,
                proposed: welfare(Mechanism::Proposed)?,
                t1: welfare(Mechanism::T1)?,
                t2: welfare(Mechanism::T2)?,
                traditional: welfare(Mechanism::Traditional)?,
            })
        })
        .collect::<Result<_, MarketError>>()?;
    Ok(if cli.json { report::json(&rows) } else { report::csv(&rows) })
}

#[derive(Serialize)]
struct CaseVerification {
    case: String,
    reports: Vec<PropertyReport>,
}

/// Proposition checks for one case, plus the `η` profile check when a
/// balanced δ search ran.
fn verify_case(case: &MarketCase, mechanism: Mechanism) -> Result<CaseVerification, MarketError> {
    let market = Market::new(case)?;
    let (outcome, search) = run_one(&market, mechanism, DeltaMode::Auto, &T2Options::default())?;
    let clearing = Clearing::new(&market)?;
    let mut reports = property_suite(&market, &outcome, clearing.optimal_welfare())?;
    if let Some(s) = search.filter(|s| s.status == DeltaStatus::Balanced) {
        let samples: Vec<f64> = (1..=9).map(|k| grid_point(0.1 * k as f64)).collect();
        reports.push(check_lemma_linearity(&clearing, s.delta_tilde, &samples)?);
    }
    Ok(CaseVerification { case: case.name.clone(), reports })
}

fn verify(cli: &Cli, a: &VerifyArgs) -> CliResult<(String, CliResult<()>)> {
    let mechanism = parse_mechanism(&a.mechanism)?;
    let cases: Vec<MarketCase> = match (&a.case, a.random) {
        (_, Some(n)) => (a.seed..a.seed + n).map(random_batch_case).collect(),
        (Some(arg), None) => vec![resolve_case(arg)?],
        (None, None) => return Err(CliError::Input("verify needs --case or --random".into())),
    };
    let results: Vec<CaseVerification> = cases
        .par_iter()
        .map(|c| verify_case(c, mechanism))
        .collect::<Result<_, MarketError>>()?;
    let (mut checks, mut failures) = (0, 0);
    for r in &results {
        for p in &r.reports {
            checks += 1;
            if !p.passed {
                failures += 1;
                for w in p.witnesses.iter().take(5) {
                    eprintln!("witness: {} / {} / {}: {} ({})", r.case, p.property, w.agent, w.magnitude, w.detail);
                }
            }
        }
    }
    let text = if cli.json {
        report::json(&results)
    } else {
        let rows: Vec<PropertyRow> = results
            .iter()
            .flat_map(|r| {
                r.reports.iter().map(|p| PropertyRow {
                    case: r.case.clone(),
                    property: p.property.clone(),
                    passed: p.passed,
                    tolerance: p.tolerance,
                    worst: p.worst(),
                    witnesses: p.witnesses.len(),
                })
            })
            .collect();
        report::csv(&rows)
    };
    let result = if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Property(format!("{failures} of {checks} property checks failed")))
    };
    Ok((text, result))
}

fn generate(a: &GenerateArgs) -> CliResult<String> {
    let mut case = match &a.preset {
        Some(name) => synthetic_case(name)?,
        None => {
            if a.buses == 0 || a.generators == 0 || a.loads == 0 {
                return Err(CliError::Input("generate needs at least one bus, generator and load".into()));
            }
            if !(0.0..=1.0).contains(&a.monitored) {
                return Err(CliError::Input(format!("--monitored must lie in [0, 1], got {}", a.monitored)));
            }
            let cfg = RandomCaseConfig {
                generators: a.generators,
                loads: a.loads,
                buses: a.buses,
                extra_lines: a.extra_lines,
                monitored: a.monitored,
                kappa: a.kappa,
                ..RandomCaseConfig::default()
            };
            random_case(a.seed, &cfg)
        }
    };
    if let Some(name) = &a.name {
        case.name = name.clone();
    }
    case.validate()?;
    Ok(case.to_json())
}
