//! Experiment runner behind the `nlwave` binary.
//!
//! Every run prints one JSON summary on stdout (except `kernel-info`, which
//! prints its symbol table) and, when an output directory is configured,
//! writes the summary and the CSV files next to it. Diagnostics go to
//! stderr.
//!
//! Exit codes: 0 success, 1 numeric failure, 2 breakdown, 3 invalid config.

pub mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use nlwave::convergence::{self, ConvergenceReport};
use nlwave::dynamics::{self, make_initial, State, TimeSeries};
use nlwave::io as csv;
use nlwave::lattice;
use nlwave::Error;
use serde::Serialize;

pub use config::{parse_config, Command, ConfigError, DeltaSetting, ExperimentConfig, Overrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_BREAKDOWN: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("output: {0}")]
    Io(#[from] io::Error),
}

/// The exit code for a core error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Breakdown { .. } => EXIT_BREAKDOWN,
        Error::InvalidArgument { .. }
        | Error::InvalidKernel(_)
        | Error::InvalidSpec(_)
        | Error::Misaligned { .. }
        | Error::Table(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

/// Runs `cfg` against the process's stdout and stderr.
pub fn run(cfg: &ExperimentConfig) -> i32 {
    run_with(cfg, &mut io::stdout().lock(), &mut io::stderr().lock())
}

pub fn run_with(cfg: &ExperimentConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match cfg.command {
        Command::KernelInfo => kernel_info(cfg, stdout),
        Command::Simulate => simulate(cfg, stdout, stderr),
        Command::ConvergeDispersion | Command::ConvergeLattice => converge(cfg, stdout),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Core(e)) => {
            let _ = writeln!(stderr, "{}: {e}", cfg.command.name());
            exit_code(&e)
        }
        Err(e @ Failure::Io(_)) => {
            let _ = writeln!(stderr, "{}: {e}", cfg.command.name());
            EXIT_NUMERIC
        }
    }
}

fn create(dir: &Path, name: &str) -> io::Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn emit_summary<T: Serialize>(
    cfg: &ExperimentConfig,
    summary: &T,
    stdout: Option<&mut dyn Write>,
) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(summary).map_err(io::Error::from)?;
    if let Some(out) = stdout {
        writeln!(out, "{text}")?;
    }
    if let Some(dir) = &cfg.out {
        let mut f = create(dir, "summary.json")?;
        writeln!(f, "{text}")?;
        f.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct KernelInfoSummary<'a> {
    command: &'static str,
    kernel: &'static str,
    passed: bool,
    failures: Vec<String>,
    evenness_residual: f64,
    min_symbol: f64,
    max_symbol: f64,
    argmax: f64,
    normalization_residual: f64,
    tolerance: f64,
    config: &'a ExperimentConfig,
}

fn kernel_info(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let kernel = &cfg.resolved_kernel;
    let last = (cfg.xi_count - 1) as f64;
    let xi: Vec<f64> = (0..cfg.xi_count).map(|i| cfg.xi_max * i as f64 / last).collect();
    let mut table = Vec::new();
    writeln!(table, "xi,symbol,k")?;
    for &x in &xi {
        writeln!(
            table,
            "{},{},{}",
            csv::fmt_f64(x),
            csv::fmt_f64(kernel.symbol(x)),
            csv::fmt_f64(kernel.k_symbol(x)?)
        )?;
    }
    stdout.write_all(&table)?;

    let samples: Vec<f64> = xi.iter().flat_map(|&x| [x, -x]).collect();
    let report = kernel.validate(&samples)?;
    if let Some(dir) = &cfg.out {
        let mut f = create(dir, "kernel_info.csv")?;
        f.write_all(&table)?;
        f.flush()?;
    }
    let summary = KernelInfoSummary {
        command: cfg.command.name(),
        kernel: report.kernel,
        passed: report.passed(),
        failures: report.failures.iter().map(|f| f.to_string()).collect(),
        evenness_residual: report.evenness_residual,
        min_symbol: report.min_symbol,
        max_symbol: report.max_symbol,
        argmax: report.argmax,
        normalization_residual: report.normalization_residual,
        tolerance: report.tolerance,
        config: cfg,
    };
    emit_summary(cfg, &summary, None)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    command: &'static str,
    status: &'static str,
    /// Time of the last accepted state.
    t_final: f64,
    halt_time: Option<f64>,
    steps: usize,
    /// `null` when hyperbolicity is lost.
    energy: Option<f64>,
    monitor: f64,
    u_linf: f64,
    min_hyperbolicity: f64,
    config: &'a ExperimentConfig,
}

fn simulate(cfg: &ExperimentConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let grid = cfg.grid();
    let model = cfg.model();
    let initial = make_initial(&cfg.u0, &cfg.v0, &grid)?;
    let mut series = TimeSeries::new(&model, &grid, cfg.timeseries_stride)?;
    let mut last: Option<State> = None;
    let mut steps = 0usize;
    let mut keep = |s: &State| {
        if last.is_some() {
            steps += 1;
        }
        last = Some(s.clone());
    };
    let result = if cfg.emit_timeseries {
        dynamics::integrate(&model, initial, &mut [&mut keep, &mut series])
    } else {
        dynamics::integrate(&model, initial, &mut [&mut keep])
    };
    let (status, halt_time, code) = match result {
        Ok(_) => ("completed", None, EXIT_OK),
        Err(Error::Breakdown {
            time,
            monitor,
            threshold,
        }) => {
            writeln!(
                stderr,
                "breakdown: halted at t = {} (monitor {} exceeds threshold {})",
                csv::fmt_f64(time),
                csv::fmt_f64(monitor),
                csv::fmt_f64(threshold)
            )?;
            ("breakdown", Some(time), EXIT_BREAKDOWN)
        }
        Err(e) => return Err(e.into()),
    };

    if cfg.emit_timeseries {
        if let Some(dir) = &cfg.out {
            let mut f = create(dir, "timeseries.csv")?;
            csv::write_time_series(&mut f, &series.rows)?;
            f.flush()?;
        }
    }
    let state = match last {
        Some(s) => s,
        // Breakdown on the initial data: nothing was accepted.
        None => make_initial(&cfg.u0, &cfg.v0, &grid)?,
    };
    if let Some(dir) = &cfg.out {
        for (name, field) in [("u.csv", &state.u), ("v.csv", &state.v)] {
            let mut f = create(dir, name)?;
            csv::write_field(&mut f, field)?;
            f.flush()?;
        }
    }
    let summary = SimulateSummary {
        command: cfg.command.name(),
        status,
        t_final: state.t,
        halt_time,
        steps,
        energy: dynamics::energy(&state, &model).ok(),
        monitor: dynamics::breakdown_monitor(&state, &model)?,
        u_linf: nlwave::spectral::linf_norm(&state.u),
        min_hyperbolicity: dynamics::min_hyperbolicity(&state, &model),
        config: cfg,
    };
    emit_summary(cfg, &summary, Some(stdout))?;
    Ok(code)
}

#[derive(Serialize)]
struct ConvergenceSummary<'a> {
    command: &'static str,
    /// `null` when fewer than two errors are positive.
    slope: Option<f64>,
    intercept: Option<f64>,
    r2: Option<f64>,
    fit_used: usize,
    fit_excluded: usize,
    deltas: Vec<f64>,
    errors: Vec<f64>,
    dt: f64,
    config: &'a ExperimentConfig,
}

fn converge(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let sweep = cfg.sweep();
    let report: ConvergenceReport = match cfg.command {
        Command::ConvergeLattice => convergence::lattice_sweep(&sweep)?,
        _ => convergence::zero_dispersion_sweep(&sweep)?,
    };
    if let Some(dir) = &cfg.out {
        let mut f = create(dir, "report.csv")?;
        csv::write_report(&mut f, &report)?;
        f.flush()?;
        let mut f = create(dir, "errors.csv")?;
        csv::write_error_history(&mut f, &report)?;
        f.flush()?;
        if cfg.command == Command::ConvergeLattice {
            let delta = *sweep.deltas.last().expect("validated");
            let chain = convergence::lattice_initial_chain(&sweep, delta)?;
            let chain = lattice::integrate_chain(&chain, sweep.epsilon, sweep.n, report.dt, sweep.t_end)?;
            let mut f = create(dir, "chain.csv")?;
            csv::write_chain(&mut f, &chain)?;
            f.flush()?;
        }
    }
    let fit = report.fit;
    let summary = ConvergenceSummary {
        command: cfg.command.name(),
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r2: fit.map(|f| f.r2),
        fit_used: fit.map_or(0, |f| f.used),
        fit_excluded: fit.map_or(report.runs.len(), |f| f.excluded),
        deltas: report.deltas(),
        errors: report.errors(),
        dt: report.dt,
        config: cfg,
    };
    emit_summary(cfg, &summary, Some(stdout))?;
    Ok(EXIT_OK)
}
