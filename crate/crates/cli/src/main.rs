use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use nlwave_cli::{parse_config, run, Command, Overrides, EXIT_CONFIG};

/// Nonlocal wave and FPUT lattice experiments.
#[derive(Debug, Parser)]
#[command(name = "nlwave", version, allow_negative_numbers = true)]
struct Cli {
    /// Experiment to run; may instead be given as `command` in the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the summary and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Nonlocality scale, or `dirac-limit` for the classical system.
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Nonlinearity power.
    #[arg(long)]
    n: Option<i64>,
    /// Number of grid nodes.
    #[arg(long)]
    grid_n: Option<i64>,
    /// Half-length L of the box [-L, L).
    #[arg(long)]
    grid_l: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Time step; defaults to the CFL step.
    #[arg(long)]
    dt: Option<f64>,
    /// Write the diagnostic time series (simulate only).
    #[arg(long)]
    emit_timeseries: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG as u8),
            };
        }
    };
    let overrides = Overrides {
        command: cli.command,
        out: cli.out,
        delta: cli.delta,
        epsilon: cli.epsilon,
        n: cli.n,
        grid_n: cli.grid_n,
        grid_l: cli.grid_l,
        t_end: cli.t_end,
        dt: cli.dt,
        emit_timeseries: cli.emit_timeseries,
    };
    match parse_config(cli.config.as_deref(), &overrides) {
        Ok(cfg) => ExitCode::from(run(&cfg) as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
