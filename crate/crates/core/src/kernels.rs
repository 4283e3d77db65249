//! Dispersive kernels identified by their Fourier symbols.
//!
//! A kernel `β` enters the model only through its symbol `β̂(ξ)` and the
//! square-root symbol `k(ξ) = √β̂(ξ)` that defines the operator `K`. The
//! length scale `δ` is never stored; the scaled family is evaluated as
//! `β̂_δ(ξ) = β̂(δξ)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Below this value of `|ξ/2|` the triangular symbol switches to its Taylor
/// expansion `1 − ξ²/12`.
const TRIANGULAR_TAYLOR_CUTOFF: f64 = 1e-4;

/// Residual tolerance for evenness and normalization of closed-form kernels.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-12;
/// Residual tolerance for evenness and normalization of tabulated kernels.
pub const TABLE_TOLERANCE: f64 = 1e-8;

/// A symbol sampled at nonnegative frequencies and extended evenly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    xi: Vec<f64>,
    values: Vec<f64>,
}

impl SymbolTable {
    /// Builds a table from ascending nonnegative frequencies.
    pub fn new(xi: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::Table("table is empty".into()));
        }
        if xi.len() != values.len() {
            return Err(Error::Table(format!(
                "{} frequencies but {} values",
                xi.len(),
                values.len()
            )));
        }
        if xi.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Table("non-finite entry".into()));
        }
        if xi[0] < 0.0 {
            return Err(Error::Table("frequencies must be nonnegative".into()));
        }
        if xi.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Table("frequencies must be strictly ascending".into()));
        }
        Ok(Self { xi, values })
    }

    /// Parses the two-column whitespace-separated text format. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xi = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Table(format!("line {}: expected two columns", lineno + 1)));
            };
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Table(format!("line {}: {e}", lineno + 1)))
            };
            xi.push(parse(a)?);
            values.push(parse(b)?);
        }
        Self::new(xi, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.xi
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation in `|ξ|`, clamped to the edge values.
    fn eval(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let n = self.xi.len();
        if a <= self.xi[0] {
            return self.values[0];
        }
        if a >= self.xi[n - 1] {
            return self.values[n - 1];
        }
        // First index with xi[i] > a; guaranteed to be in 1..n.
        let i = self.xi.partition_point(|&x| x <= a);
        let (x0, x1) = (self.xi[i - 1], self.xi[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        y0 + (y1 - y0) * (a - x0) / (x1 - x0)
    }
}

/// A dispersive kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `β = δ_0`, the classical (local) limit; `β̂ ≡ 1`.
    Dirac,
    /// `β(x) = ½e^{−|x|}`; `β̂(ξ) = 1/(1+ξ²)`.
    Exponential,
    /// `β(x) = (1−|x|)₊`; `β̂(ξ) = (4/ξ²) sin²(ξ/2)`.
    Triangular,
    /// Tabulated symbol with even extension.
    Table(SymbolTable),
}

impl Kernel {
    pub const BUILT_IN: [Kernel; 3] = [Kernel::Dirac, Kernel::Exponential, Kernel::Triangular];

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Dirac => "dirac",
            Kernel::Exponential => "exponential",
            Kernel::Triangular => "triangular",
            Kernel::Table(_) => "table",
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Kernel::Table(_))
    }

    /// Tolerance used for evenness, normalization and sign checks.
    pub fn tolerance(&self) -> f64 {
        if self.is_closed_form() {
            CLOSED_FORM_TOLERANCE
        } else {
            TABLE_TOLERANCE
        }
    }

    /// The Fourier symbol `β̂(ξ)`.
    pub fn symbol(&self, xi: f64) -> f64 {
        match self {
            Kernel::Dirac => 1.0,
            Kernel::Exponential => 1.0 / (1.0 + xi * xi),
            Kernel::Triangular => {
                let half = 0.5 * xi;
                if half.abs() < TRIANGULAR_TAYLOR_CUTOFF {
                    1.0 - xi * xi / 12.0
                } else {
                    let sinc = half.sin() / half;
                    sinc * sinc
                }
            }
            Kernel::Table(t) => t.eval(xi),
        }
    }

    /// The square-root symbol `k(ξ) = √β̂(ξ)`.
    ///
    /// Slightly negative symbol values (within the kernel's tolerance) are
    /// treated as zero; anything below that is an invalid kernel.
    pub fn k_symbol(&self, xi: f64) -> Result<f64> {
        let b = self.symbol(xi);
        if b < 0.0 {
            if b < -self.tolerance() {
                return Err(Error::InvalidKernel(format!(
                    "{} symbol is negative ({b:e}) at xi = {xi}",
                    self.name()
                )));
            }
            return Ok(0.0);
        }
        Ok(b.sqrt())
    }

    /// `β̂_δ(ξ) = β̂(δξ)`.
    pub fn scaled_symbol(&self, delta: f64, xi: f64) -> Result<f64> {
        check_delta(delta)?;
        Ok(self.symbol(delta * xi))
    }

    /// `k(δξ)`.
    pub fn scaled_k_symbol(&self, delta: f64, xi: f64) -> Result<f64> {
        check_delta(delta)?;
        self.k_symbol(delta * xi)
    }

    /// `|k(ξ) − 1| / |ξ|^θ`, the ratio bounded by the constant in the
    /// estimate `|k(ξ) − 1| ≤ C|ξ|^θ`.
    pub fn taylor_deviation(&self, xi: f64, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta <= 2.0) {
            return Err(Error::invalid("theta", format!("{theta} is outside (0, 2]")));
        }
        if xi == 0.0 || !xi.is_finite() {
            return Err(Error::invalid("xi", "must be finite and nonzero"));
        }
        Ok((self.k_symbol(xi)? - 1.0).abs() / xi.abs().powf(theta))
    }

    /// Checks the kernel hypotheses on a set of sample frequencies.
    pub fn validate(&self, samples: &[f64]) -> Result<ValidationReport> {
        if samples.is_empty() {
            return Err(Error::invalid("xi_samples", "sample list is empty"));
        }
        let tol = self.tolerance();
        let mut evenness_residual = 0.0_f64;
        let mut min_symbol = f64::INFINITY;
        let mut max_symbol = f64::NEG_INFINITY;
        let mut argmax = samples[0];
        let mut finite = true;
        for &xi in samples {
            let b = self.symbol(xi);
            let b_neg = self.symbol(-xi);
            finite &= b.is_finite() && b_neg.is_finite();
            evenness_residual = evenness_residual.max((b - b_neg).abs());
            min_symbol = min_symbol.min(b);
            if b > max_symbol {
                max_symbol = b;
                argmax = xi;
            }
        }
        let normalization_residual = (self.symbol(0.0) - 1.0).abs();

        let mut failures = Vec::new();
        if !finite || !max_symbol.is_finite() {
            failures.push(Failure::Unbounded);
        }
        if evenness_residual > tol {
            failures.push(Failure::Evenness);
        }
        if min_symbol < -tol {
            failures.push(Failure::Nonnegativity);
        }
        if normalization_residual > tol {
            failures.push(Failure::Normalization);
        }
        Ok(ValidationReport {
            kernel: self.name(),
            evenness_residual,
            min_symbol,
            max_symbol,
            argmax,
            normalization_residual,
            tolerance: tol,
            failures,
        })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("delta", format!("{delta} is not a positive length")))
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirac" => Ok(Kernel::Dirac),
            "exponential" => Ok(Kernel::Exponential),
            "triangular" => Ok(Kernel::Triangular),
            other => Err(Error::InvalidKernel(format!("unknown kernel name `{other}`"))),
        }
    }
}

/// Which kernel hypothesis a validation run found violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Evenness,
    Nonnegativity,
    Normalization,
    Unbounded,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Failure::Evenness => "evenness",
            Failure::Nonnegativity => "nonnegativity",
            Failure::Normalization => "normalization",
            Failure::Unbounded => "boundedness",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub kernel: &'static str,
    /// `max |β̂(ξ) − β̂(−ξ)|` over the samples.
    pub evenness_residual: f64,
    pub min_symbol: f64,
    pub max_symbol: f64,
    /// Sample frequency where the maximum was attained.
    pub argmax: f64,
    /// `|β̂(0) − 1|`.
    pub normalization_residual: f64,
    pub tolerance: f64,
    pub failures: Vec<Failure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}
