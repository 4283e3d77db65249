//! Built-in initial-data shapes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

/// An initial-data specification for `u₀` or `v₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// `a·e^{−b x²}`
    Gaussian {
        a: f64,
        b: f64,
    },
    /// `a·sin(kπx/L)`
    Sine {
        a: f64,
        k: f64,
    },
    /// `a·sech²(b x)`
    Sech2 {
        a: f64,
        b: f64,
    },
    /// Values at the grid nodes.
    Samples {
        values: Vec<f64>,
    },
}

impl Profile {
    pub fn gaussian(a: f64, b: f64) -> Self {
        Profile::Gaussian { a, b }
    }

    pub fn check(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Profile::Zero => Ok(()),
            Profile::Gaussian { a, b } | Profile::Sech2 { a, b } => {
                if !finite(&[*a, *b]) {
                    Err(Error::InvalidSpec(format!("{self:?}: non-finite parameter")))
                } else if *b <= 0.0 {
                    Err(Error::InvalidSpec(format!(
                        "{self:?}: width parameter b must be positive"
                    )))
                } else {
                    Ok(())
                }
            }
            Profile::Sine { a, k } => {
                if finite(&[*a, *k]) {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!("{self:?}: non-finite parameter")))
                }
            }
            Profile::Samples { values } => {
                if finite(values) {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec("sample array contains non-finite values".into()))
                }
            }
        }
    }

    /// Evaluates the shape at `x` on the box of half-length `half_length`.
    /// Returns `None` for sample arrays, which have no off-node values.
    pub fn value_at(&self, x: f64, half_length: f64) -> Option<f64> {
        match *self {
            Profile::Zero => Some(0.0),
            Profile::Gaussian { a, b } => Some(a * (-b * x * x).exp()),
            Profile::Sine { a, k } => Some(a * (k * std::f64::consts::PI * x / half_length).sin()),
            Profile::Sech2 { a, b } => {
                let c = (b * x).cosh();
                Some(a / (c * c))
            }
            Profile::Samples { .. } => None,
        }
    }

    /// Samples the shape at the grid nodes.
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        self.check()?;
        match self {
            Profile::Samples { values } => {
                if values.len() != grid.size() {
                    return Err(Error::InvalidSpec(format!(
                        "sample array has {} values but the grid has {} nodes",
                        values.len(),
                        grid.size()
                    )));
                }
                Field::new(*grid, values.clone())
            }
            shape => {
                let l = grid.half_length();
                Ok(Field::from_fn(*grid, |x| shape.value_at(x, l).unwrap_or(0.0)))
            }
        }
    }
}
