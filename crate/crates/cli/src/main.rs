//! `topoft`: threshold sweeps, fits and analytic reports for topological cluster-state
//! error correction.

mod analytic;
mod config;
mod experiments;
mod oracle;
mod output;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "topoft", version, about = "Topological fault-tolerance experiments")]
struct Cli {
    /// Worker threads [default: available cores].
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Failure rates over a grid of sizes and error rates.
    Sweep(experiments::SweepArgs),
    /// Scaling-ansatz fit of a sweep.csv.
    Fit(experiments::FitArgs),
    /// Thresholds along directions of the local/gate Model 2 plane.
    Tradeoff(experiments::TradeoffArgs),
    /// Sweep on L x L x 2L lattices bordering a defect.
    NearDefect(experiments::SweepArgs),
    /// Effective channels, Reed-Muller recursion and thresholds at given error rates.
    Analytic(analytic::AnalyticArgs),
    /// Resource overhead for a number of non-Clifford rotations.
    Overhead(analytic::OverheadArgs),
    /// Checks the library against brute-force oracles; exit status 3 on failure.
    Oracle(oracle::OracleArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Sweep(a) => experiments::sweep(a, false),
        Command::NearDefect(a) => experiments::sweep(a, true),
        Command::Fit(a) => experiments::fit(a),
        Command::Tradeoff(a) => experiments::tradeoff(a),
        Command::Analytic(a) => analytic::analytic(a),
        Command::Overhead(a) => analytic::overhead(a),
        Command::Oracle(a) => oracle::oracle(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<config::UsageError>().is_some() {
                ExitCode::from(1)
            } else if e.downcast_ref::<oracle::OracleFailure>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
