//! Command-line driver: configuration parsing, run orchestration and
//! artifact emission for selflow.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;
pub mod selftest;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::Mode;
use error::CliError;
use run::DiagnoseArgs;

#[derive(Debug, Parser)]
#[command(
    name = "selflow",
    version,
    about = "Stochastic relaxed Ericksen-Leslie simulations and diagnostics"
)]
pub struct Cli {
    /// Worker threads for ensemble runs (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a single path and write energy records and final fields.
    Simulate { config: PathBuf },
    /// Run a Monte-Carlo ensemble and write moment summaries.
    Ensemble { config: PathBuf },
    /// Run an epsilon sweep with noise shared across epsilon.
    Sweep { config: PathBuf },
    /// Pohozaev, defect and stress-pairing diagnostics of a director snapshot.
    Diagnose(DiagnoseCmd),
    /// Invariant checks on small fixtures.
    Selftest,
}

#[derive(Debug, Args)]
pub struct DiagnoseCmd {
    pub snapshot: PathBuf,
    #[arg(long)]
    pub pohozaev: bool,
    #[arg(long)]
    pub defects: bool,
    #[arg(long)]
    pub pairings: bool,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Domain lengths `lx,ly` (snapshots store node counts only).
    #[arg(long, value_parser = parse_pair, default_value = "1,1")]
    pub domain: (f64, f64),
    /// Pohozaev ball centre `x,y` (default: domain centre).
    #[arg(long, value_parser = parse_pair)]
    pub center: Option<(f64, f64)>,
    /// Pohozaev ball radius, and the defect scan radius.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long = "delta0-sq")]
    pub delta0_sq: Option<f64>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn run_mode(path: &Path, mode: Mode) -> Result<(), CliError> {
    let mut cfg = run::load_config(path)?;
    // the subcommand decides what runs, whatever run.mode says
    cfg.mode = mode;
    let out = match mode {
        Mode::Simulate => run::simulate(&cfg)?,
        Mode::Ensemble => run::ensemble(&cfg)?,
        Mode::Sweep => run::sweep(&cfg)?,
        other => {
            return Err(CliError::Validation(format!(
                "{} does not take a run config",
                other.name()
            )))
        }
    };
    println!("{}", out.summary);
    println!("output: {}", out.dir.display());
    Ok(())
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 1;
        }
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let result = match &cli.command {
        Command::Simulate { config } => run_mode(config, Mode::Simulate),
        Command::Ensemble { config } => run_mode(config, Mode::Ensemble),
        Command::Sweep { config } => run_mode(config, Mode::Sweep),
        Command::Diagnose(d) => {
            let args = DiagnoseArgs {
                pohozaev: d.pohozaev,
                defects: d.defects,
                pairings: d.pairings,
                eps: d.eps,
                domain: d.domain,
                center: d.center.map(|(x, y)| [x, y]),
                radius: d.radius,
                delta0_sq: d.delta0_sq,
            };
            run::diagnose(&d.snapshot, &args).map(|csv| print!("{csv}"))
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            for c in &checks {
                println!(
                    "{} {} {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!(
                "{} of {} checks passed",
                checks.len() - failed,
                checks.len()
            );
            return if failed == 0 { 0 } else { 2 };
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` and runs; clap usage errors exit 1, help and version 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
