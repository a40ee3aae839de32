//! `cmcm`: forecast, simulate and explain epidemic direct costs from daily
//! CSV data.

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{forecast, ingest, report, rules, simulate};
use error::CliError;

/// Seed used when neither the command line nor a config supplies one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "cmcm", version, about = "Composite Monte Carlo cost forecasting pipeline")]
struct Cli {
    /// Seed for every stochastic stage; overrides a config's own seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory receiving all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Increase log detail (-v info, -vv debug, -vvv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a daily CSV and write lag-embedded datasets.
    Ingest(ingest::Args),
    /// Fit and rank forecasters per series, then forecast the horizon.
    Forecast(forecast::Args),
    /// Run the Monte Carlo cost simulation over forecasts and distributions.
    Simulate(simulate::Args),
    /// Label the trend, induce fuzzy rules and list those above a CF threshold.
    Rules(rules::Args),
    /// Combine the stage outputs into one markdown report.
    Report(report::Args),
}

pub struct Globals {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    let globals = Globals {
        seed: cli.seed,
        out_dir: cli.out_dir,
    };
    let result: Result<(), CliError> = match cli.command {
        Command::Ingest(a) => ingest::run(&globals, a),
        Command::Forecast(a) => forecast::run(&globals, a),
        Command::Simulate(a) => simulate::run(&globals, a),
        Command::Rules(a) => rules::run(&globals, a),
        Command::Report(a) => report::run(&globals, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
