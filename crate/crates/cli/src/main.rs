//! `ecmarket`: clear carbon-aware electricity markets from the command line.
//!
//! Exit codes: 0 success, 1 bad input, 2 solver failure, 3 a checked
//! property failed.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "ecmarket", version, about = "Carbon-aware electricity market clearing and verification")]
pub struct Cli {
    /// Worker threads for sweeps and verification; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the report to a file instead of standard output.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clear one case under one mechanism.
    Clear(ClearArgs),
    /// Run all four mechanisms and tabulate the cash flows.
    Compare(CompareArgs),
    /// Trace η and the balancing subsidy over δ ∈ [0, 1].
    SweepDelta(SweepDeltaArgs),
    /// Welfare of every mechanism as line limits are scaled.
    SweepCapacity(SweepCapacityArgs),
    /// Check budget balance, individual rationality, dispatch following and
    /// truthful bidding.
    Verify(VerifyArgs),
    /// Write a bundled preset or a seeded random case to a case file.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct CaseArg {
    /// Case file path or bundled case name (simple, mesh5, syn39, syn118).
    #[arg(long, value_name = "PATH|NAME")]
    pub case: String,
}

#[derive(Debug, Args, Default)]
pub struct T2Args {
    /// T2 iteration cap.
    #[arg(long, value_name = "N")]
    pub t2_max_iterations: Option<usize>,
    /// T2 damping γ in (0, 1].
    #[arg(long, value_name = "GAMMA")]
    pub t2_damping: Option<f64>,
    /// T2 fixed-point tolerance in power units.
    #[arg(long, value_name = "TOL")]
    pub t2_tolerance: Option<f64>,
    /// Pay T2 generators LMP plus their carbon charge.
    #[arg(long)]
    pub t2_generator_carbon_price: bool,
    /// Charge T2 generators the carbon tax.
    #[arg(long)]
    pub t2_generator_carbon_tax: bool,
}

impl T2Args {
    fn is_set(&self) -> bool {
        self.t2_max_iterations.is_some()
            || self.t2_damping.is_some()
            || self.t2_tolerance.is_some()
            || self.t2_generator_carbon_price
            || self.t2_generator_carbon_tax
    }
}

#[derive(Debug, Args)]
pub struct ClearArgs {
    #[command(flatten)]
    pub case: CaseArg,
    /// traditional, t1, t2 or proposed.
    #[arg(long, default_value = "proposed")]
    pub mechanism: String,
    /// `auto` runs the δ search; a number in [0, 1] fixes δ. Proposed only.
    #[arg(long, value_name = "auto|VALUE")]
    pub delta: Option<String>,
    #[command(flatten)]
    pub t2: T2Args,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub case: CaseArg,
    #[command(flatten)]
    pub t2: T2Args,
}

#[derive(Debug, Args)]
pub struct SweepDeltaArgs {
    #[command(flatten)]
    pub case: CaseArg,
    /// Spacing of the δ grid.
    #[arg(long, default_value_t = 0.02)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct SweepCapacityArgs {
    #[command(flatten)]
    pub case: CaseArg,
    #[arg(long, default_value_t = 0.8)]
    pub from: f64,
    #[arg(long, default_value_t = 1.3)]
    pub to: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Case file path or bundled name; omit with `--random`.
    #[arg(long, value_name = "PATH|NAME", required_unless_present = "random")]
    pub case: Option<String>,
    /// traditional, t1, t2 or proposed.
    #[arg(long, default_value = "proposed")]
    pub mechanism: String,
    /// Verify this many seeded random cases instead of one case.
    #[arg(long, value_name = "N", conflicts_with = "case")]
    pub random: Option<u64>,
    /// First seed of the random batch.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Regenerate a bundled synthetic case (mesh5, syn39, syn118).
    #[arg(long, conflicts_with_all = ["buses", "generators", "loads", "extra_lines", "monitored", "kappa"])]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub buses: usize,
    #[arg(long, default_value_t = 4)]
    pub generators: usize,
    #[arg(long, default_value_t = 4)]
    pub loads: usize,
    /// Lines added on top of a random spanning tree.
    #[arg(long, default_value_t = 2)]
    pub extra_lines: usize,
    /// Fraction of lines with a finite limit.
    #[arg(long, default_value_t = 1.0)]
    pub monitored: f64,
    #[arg(long, default_value_t = 0.07)]
    pub kappa: f64,
    /// Case name written into the file.
    #[arg(long)]
    pub name: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

impl From<rayon::ThreadPoolBuildError> for CliError {
    fn from(e: rayon::ThreadPoolBuildError) -> Self {
        CliError::Input(format!("cannot start worker pool: {e}"))
    }
}
