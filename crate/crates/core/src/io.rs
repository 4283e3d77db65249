//! CSV emission. Every float is written with 17 significant digits.

use std::io::{self, Write};

use crate::convergence::{running_slopes, ConvergenceReport};
use crate::dynamics::Diagnostics;
use crate::lattice::Chain;
use crate::spectral::Field;

/// `x` with 17 significant digits; non-finite values become `nan`, `inf` or `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// `x,value`, one row per node.
pub fn write_field<W: Write>(mut out: W, field: &Field) -> io::Result<()> {
    writeln!(out, "x,value")?;
    for (j, v) in field.samples().iter().enumerate() {
        writeln!(out, "{},{}", fmt_f64(field.grid().node(j)), fmt_f64(*v))?;
    }
    Ok(())
}

/// `j,x,u,u_t`, one row per site.
pub fn write_chain<W: Write>(mut out: W, chain: &Chain) -> io::Result<()> {
    writeln!(out, "j,x,u,u_t")?;
    for j in 0..chain.len() {
        writeln!(
            out,
            "{j},{},{},{}",
            fmt_f64(chain.site(j)),
            fmt_f64(chain.strains[j]),
            fmt_f64(chain.velocities[j])
        )?;
    }
    Ok(())
}

/// `t,E_s,monitor,u_linf`.
pub fn write_time_series<W: Write>(mut out: W, rows: &[Diagnostics]) -> io::Result<()> {
    writeln!(out, "t,E_s,monitor,u_linf")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.energy),
            fmt_f64(r.monitor),
            fmt_f64(r.u_linf)
        )?;
    }
    Ok(())
}

/// `delta,error_terminal,slope_running`. The running slope is the fit over
/// the rows so far and is `nan` until two positive errors are available.
pub fn write_report<W: Write>(mut out: W, report: &ConvergenceReport) -> io::Result<()> {
    writeln!(out, "delta,error_terminal,slope_running")?;
    let pairs = report.pairs();
    for ((d, e), slope) in pairs.iter().zip(running_slopes(&pairs)) {
        writeln!(
            out,
            "{},{},{}",
            fmt_f64(*d),
            fmt_f64(*e),
            fmt_f64(slope.unwrap_or(f64::NAN))
        )?;
    }
    Ok(())
}

/// `delta,t,error,u_part,v_part` for every recorded sample of every run.
pub fn write_error_history<W: Write>(mut out: W, report: &ConvergenceReport) -> io::Result<()> {
    writeln!(out, "delta,t,error,u_part,v_part")?;
    for run in &report.runs {
        for s in &run.samples {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(run.delta),
                fmt_f64(s.t),
                fmt_f64(s.total()),
                fmt_f64(s.u_part),
                fmt_f64(s.v_part)
            )?;
        }
    }
    Ok(())
}
