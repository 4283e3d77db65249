use thiserror::Error;

/// Errors raised by the solver, the lattice integrator and the sweep drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("state became non-finite at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("breakdown detected at t = {time}: monitor {monitor} exceeds threshold {threshold}")]
    Breakdown { time: f64, monitor: f64, threshold: f64 },

    #[error("hyperbolicity violated: min(1 + w) = {min}")]
    HyperbolicityViolated { min: f64 },

    #[error("invalid initial-data spec: {0}")]
    InvalidSpec(String),

    #[error("strain compatibility violated: periodic sum {sum} exceeds {tolerance}")]
    CompatibilityViolated { sum: f64, tolerance: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("delta {delta} is not aligned with the grid: {reason}")]
    Misaligned { delta: f64, reason: String },

    #[error("kernel table: {0}")]
    Table(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
