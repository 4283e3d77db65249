//! Pseudospectral solver for convolution-type nonlocal wave equations
//!
//! ```text
//! u_t = K_δ v_x,   v_t = K_δ (u + εⁿ uⁿ⁺¹)_x
//! ```
//!
//! on a periodic box, together with the FPUT chain they contain and tools
//! for measuring convergence rates in the nonlocality scale `δ`.

pub mod convergence;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod kernels;
pub mod lattice;
pub mod profile;
pub mod spectral;

pub use convergence::{
    fit_rate, lattice_sweep, operator_error, zero_dispersion_sweep, ConvergenceReport, OperatorError, RateFit,
    SweepConfig,
};
pub use dynamics::{integrate, ModelConfig, Scale, State};
pub use error::{Error, Result};
pub use kernels::{Kernel, SymbolTable};
pub use lattice::Chain;
pub use profile::Profile;
pub use spectral::{Field, Grid};
