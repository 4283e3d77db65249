//! Experiment configuration: a flat JSON object whose keys mirror the
//! command-line flags. Flags override file values; every omitted key takes
//! its default and is echoed back in the run summary.

use std::fmt;
use std::path::{Path, PathBuf};

use nlwave::convergence::SweepConfig;
use nlwave::kernels::SymbolTable;
use nlwave::{Error, Grid, Kernel, ModelConfig, Profile, Scale};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    KernelInfo,
    Simulate,
    ConvergeDispersion,
    ConvergeLattice,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::KernelInfo => "kernel-info",
            Command::Simulate => "simulate",
            Command::ConvergeDispersion => "converge-dispersion",
            Command::ConvergeLattice => "converge-lattice",
        }
    }
}

/// A field-level configuration error (exit code 3).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config-invalid: {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// Attributes a core validation error to the config field it concerns.
    pub fn from_core(err: &Error) -> Self {
        let field = match err {
            Error::InvalidArgument { name, reason } => return Self::new(*name, reason),
            Error::InvalidKernel(_) | Error::Table(_) => "kernel",
            Error::Misaligned { .. } => "delta_list",
            Error::InvalidSpec(_) => "initial data",
            _ => "config",
        };
        Self::new(field, err)
    }
}

/// `delta` is a positive number or the string `"dirac-limit"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSetting {
    Value(f64),
    DiracLimit,
}

pub const DIRAC_LIMIT: &str = "dirac-limit";

impl DeltaSetting {
    pub fn scale(self) -> Scale {
        match self {
            DeltaSetting::Value(d) => Scale::Delta(d),
            DeltaSetting::DiracLimit => Scale::DiracLimit,
        }
    }

    fn from_json(v: &Value) -> Result<Self, ConfigError> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .map(DeltaSetting::Value)
                .ok_or_else(|| ConfigError::new("delta", "not representable as f64")),
            Value::String(s) => Self::parse(s),
            other => Err(ConfigError::new(
                "delta",
                format!("expected a number or \"{DIRAC_LIMIT}\", got {other}"),
            )),
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        if s.trim() == DIRAC_LIMIT {
            return Ok(DeltaSetting::DiracLimit);
        }
        s.trim()
            .parse::<f64>()
            .map(DeltaSetting::Value)
            .map_err(|_| ConfigError::new("delta", format!("`{s}` is neither a number nor \"{DIRAC_LIMIT}\"")))
    }
}

impl Serialize for DeltaSetting {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DeltaSetting::Value(d) => s.serialize_f64(*d),
            DeltaSetting::DiracLimit => s.serialize_str(DIRAC_LIMIT),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub delta: Option<String>,
    pub epsilon: Option<f64>,
    pub n: Option<i64>,
    pub grid_n: Option<i64>,
    pub grid_l: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub emit_timeseries: bool,
}

/// The fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub grid_l: f64,
    pub grid_n: usize,
    /// A built-in kernel name or the path of a two-column symbol table.
    pub kernel: String,
    pub delta: DeltaSetting,
    pub delta_list: Vec<f64>,
    pub epsilon: f64,
    pub n: u32,
    pub s: f64,
    pub theta: f64,
    /// Resolved time step (the CFL step unless given).
    pub dt: f64,
    pub t_end: f64,
    pub u0: Profile,
    pub v0: Profile,
    pub breakdown_threshold: f64,
    pub emit_timeseries: bool,
    pub timeseries_stride: usize,
    pub time_samples: usize,
    pub xi_max: f64,
    pub xi_count: usize,
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub resolved_kernel: Kernel,
}

pub const KEYS: [&str; 21] = [
    "command",
    "grid_l",
    "grid_n",
    "kernel",
    "delta",
    "delta_list",
    "epsilon",
    "n",
    "s",
    "theta",
    "dt",
    "t_end",
    "u0",
    "v0",
    "breakdown_threshold",
    "emit_timeseries",
    "timeseries_stride",
    "time_samples",
    "xi_max",
    "xi_count",
    "out",
];

fn take<T: DeserializeOwned>(map: &mut Map<String, Value>, key: &str) -> Result<Option<T>, ConfigError> {
    match map.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v)
            .map(Some)
            .map_err(|e| ConfigError::new(key, e)),
    }
}

fn count(field: &str, v: i64, min: i64) -> Result<usize, ConfigError> {
    if v < min {
        return Err(ConfigError::new(field, format!("{v} is below the minimum {min}")));
    }
    usize::try_from(v).map_err(|e| ConfigError::new(field, e))
}

fn load_kernel(spec: &str, base: Option<&Path>) -> Result<Kernel, ConfigError> {
    if let Ok(k) = spec.parse::<Kernel>() {
        return Ok(k);
    }
    let mut path = PathBuf::from(spec);
    if path.is_relative() {
        if let Some(dir) = base {
            path = dir.join(path);
        }
    }
    if !path.is_file() {
        return Err(ConfigError::new(
            "kernel",
            format!("`{spec}` is not a built-in kernel (dirac, exponential, triangular) or a table file"),
        ));
    }
    let table = SymbolTable::load(&path).map_err(|e| ConfigError::new("kernel", e))?;
    let samples = table.frequencies().to_vec();
    let kernel = Kernel::Table(table);
    let report = kernel.validate(&samples).map_err(|e| ConfigError::new("kernel", e))?;
    if !report.passed() {
        return Err(ConfigError::new(
            "kernel",
            format!("table fails validation: {:?}", report.failures),
        ));
    }
    Ok(kernel)
}

/// Reads the optional config file, applies the overrides, fills defaults
/// and validates the result.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut map = match path {
        None => Map::new(),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| ConfigError::new("config", format!("{}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text).map_err(|e| ConfigError::new("config", e))? {
                Value::Object(m) => m,
                _ => return Err(ConfigError::new("config", "top level must be a JSON object")),
            }
        }
    };
    if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::new(k.clone(), "unknown key"));
    }
    let base = path.and_then(Path::parent);

    let command = overrides
        .command
        .or(take(&mut map, "command")?)
        .ok_or_else(|| ConfigError::new("command", "no command given"))?;
    let grid_l = overrides.grid_l.or(take(&mut map, "grid_l")?).unwrap_or(20.0);
    let grid_n = count(
        "grid_n",
        overrides.grid_n.or(take(&mut map, "grid_n")?).unwrap_or(1024),
        0,
    )?;
    let kernel: String = take(&mut map, "kernel")?.unwrap_or_else(|| "triangular".into());
    let delta = match &overrides.delta {
        Some(s) => DeltaSetting::parse(s)?,
        None => match map.remove("delta") {
            None | Some(Value::Null) => DeltaSetting::Value(1.0),
            Some(v) => DeltaSetting::from_json(&v)?,
        },
    };
    let delta_list: Vec<f64> = take(&mut map, "delta_list")?.unwrap_or_else(|| vec![0.4, 0.2, 0.1, 0.05]);
    let epsilon = overrides.epsilon.or(take(&mut map, "epsilon")?).unwrap_or(0.1);
    let n = count("n", overrides.n.or(take(&mut map, "n")?).unwrap_or(1), 1)?;
    let n = u32::try_from(n).map_err(|e| ConfigError::new("n", e))?;
    let s: f64 = take(&mut map, "s")?.unwrap_or(3.0);
    let theta: f64 = take(&mut map, "theta")?.unwrap_or(2.0);
    let dt: Option<f64> = overrides.dt.or(take(&mut map, "dt")?);
    let t_end = overrides.t_end.or(take(&mut map, "t_end")?).unwrap_or(1.0);
    let u0 = take(&mut map, "u0")?.unwrap_or_else(|| Profile::gaussian(0.5, 2.0));
    let v0 = take(&mut map, "v0")?.unwrap_or(Profile::Zero);
    let breakdown_threshold: f64 =
        take(&mut map, "breakdown_threshold")?.unwrap_or(nlwave::dynamics::DEFAULT_BREAKDOWN_THRESHOLD);
    let emit_timeseries = overrides.emit_timeseries || take(&mut map, "emit_timeseries")?.unwrap_or(false);
    let timeseries_stride = count(
        "timeseries_stride",
        take(&mut map, "timeseries_stride")?.unwrap_or(1),
        1,
    )?;
    let time_samples = count(
        "time_samples",
        take(&mut map, "time_samples")?.unwrap_or(nlwave::convergence::DEFAULT_TIME_SAMPLES as i64),
        1,
    )?;
    let xi_max: f64 = take(&mut map, "xi_max")?.unwrap_or(20.0);
    let xi_count = count("xi_count", take(&mut map, "xi_count")?.unwrap_or(201), 2)?;
    let out = overrides.out.clone().or(take(&mut map, "out")?);

    let grid = Grid::new(grid_l, grid_n).map_err(|e| ConfigError::from_core(&e))?;
    if let DeltaSetting::Value(d) = delta {
        if !(d > 0.0 && d.is_finite()) {
            return Err(ConfigError::new("delta", format!("{d} must be positive")));
        }
    }
    if !(xi_max > 0.0 && xi_max.is_finite()) {
        return Err(ConfigError::new("xi_max", format!("{xi_max} must be positive")));
    }
    if let Some(dt) = dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::new("dt", format!("{dt} must be positive")));
        }
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(ConfigError::new("t_end", format!("{t_end} must be nonnegative")));
    }
    for (name, p) in [("u0", &u0), ("v0", &v0)] {
        p.sample(&grid).map_err(|e| ConfigError::new(name, e))?;
    }
    let resolved_kernel = load_kernel(&kernel, base)?;

    let mut cfg = ExperimentConfig {
        command,
        grid_l,
        grid_n,
        kernel,
        delta,
        delta_list,
        epsilon,
        n,
        s,
        theta,
        dt: dt.unwrap_or(f64::NAN),
        t_end,
        u0,
        v0,
        breakdown_threshold,
        emit_timeseries,
        timeseries_stride,
        time_samples,
        xi_max,
        xi_count,
        out,
        resolved_kernel,
    };

    let model = cfg.model();
    model.validate().map_err(|e| ConfigError::from_core(&e))?;
    let sweep = cfg.sweep();
    sweep.validate().map_err(|e| ConfigError::from_core(&e))?;
    if matches!(command, Command::ConvergeLattice) {
        for &d in &cfg.delta_list {
            nlwave::convergence::aligned_sites(&grid, d).map_err(|e| ConfigError::from_core(&e))?;
        }
    }
    cfg.dt = match (dt, command) {
        (Some(dt), _) => Ok(dt),
        (None, Command::ConvergeDispersion | Command::ConvergeLattice) => sweep.resolved_dt(),
        (None, _) => model.cfl_dt(&grid),
    }
    .map_err(|e| ConfigError::from_core(&e))?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.grid_l, self.grid_n).expect("validated")
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            kernel: self.resolved_kernel.clone(),
            scale: self.delta.scale(),
            epsilon: self.epsilon,
            n: self.n,
            dt: if self.dt.is_nan() { 1.0 } else { self.dt },
            t_end: self.t_end,
            s: self.s,
            breakdown_threshold: self.breakdown_threshold,
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            kernel: self.resolved_kernel.clone(),
            deltas: self.delta_list.clone(),
            epsilon: self.epsilon,
            n: self.n,
            s: self.s,
            theta_expected: self.theta,
            t_end: self.t_end,
            u0: self.u0.clone(),
            v0: self.v0.clone(),
            grid: self.grid(),
            dt: if self.dt.is_nan() { None } else { Some(self.dt) },
            time_samples: self.time_samples,
            breakdown_threshold: self.breakdown_threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_command(c: Command) -> Overrides {
        Overrides {
            command: Some(c),
            ..Overrides::default()
        }
    }

    #[test]
    fn defaults_are_filled() {
        let cfg = parse_config(None, &with_command(Command::Simulate)).unwrap();
        assert_eq!((cfg.grid_l, cfg.grid_n, cfg.s), (20.0, 1024, 3.0));
        assert_eq!(cfg.delta, DeltaSetting::Value(1.0));
        let h = 40.0 / 1024.0;
        assert!((cfg.dt - 0.25 * h).abs() < 1e-15);
        assert_eq!(cfg.resolved_kernel, Kernel::Triangular);
    }

    #[test]
    fn field_level_errors() {
        let mut o = with_command(Command::Simulate);
        o.delta = Some("-0.5".into());
        assert_eq!(parse_config(None, &o).unwrap_err().field, "delta");
        o.delta = Some("dirac-limit".into());
        assert!(parse_config(None, &o).is_ok());
        o.n = Some(0);
        assert_eq!(parse_config(None, &o).unwrap_err().field, "n");
        let mut o = with_command(Command::Simulate);
        o.grid_n = Some(7);
        assert_eq!(parse_config(None, &o).unwrap_err().field, "grid_n");
        let mut o = with_command(Command::Simulate);
        o.grid_l = Some(-1.0);
        assert_eq!(parse_config(None, &o).unwrap_err().field, "grid_l");
        let mut o = with_command(Command::Simulate);
        o.epsilon = Some(-0.1);
        assert_eq!(parse_config(None, &o).unwrap_err().field, "epsilon");
    }

    #[test]
    fn misaligned_lattice_deltas_are_config_errors() {
        let mut o = with_command(Command::ConvergeLattice);
        o.grid_l = Some(12.8);
        o.grid_n = Some(2048);
        assert!(parse_config(None, &o).is_ok());
        o.grid_l = Some(20.0);
        o.grid_n = Some(1000);
        assert_eq!(parse_config(None, &o).unwrap_err().field, "delta_list");
    }
}
