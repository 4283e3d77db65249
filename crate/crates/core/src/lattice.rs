//! Direct integration of the FPUT chain in strain form,
//!
//! ```text
//! u_tt = Δ_δ (u + εⁿ uⁿ⁺¹),   Δ_δ g_j = (g_{j+1} − 2g_j + g_{j−1}) / δ²
//! ```
//!
//! on a periodic chain of `M` sites with spacing `δ = 2L/M`. Nothing here
//! uses the spectral machinery, so the chain can be cross-checked against
//! the spectral solver with the triangular kernel.

use crate::dynamics::step_times;
use crate::error::{Error, Result};
use crate::profile::Profile;

/// Periodic chain of strains and strain velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    delta: f64,
    half_length: f64,
    pub strains: Vec<f64>,
    pub velocities: Vec<f64>,
    pub t: f64,
}

impl Chain {
    /// A chain at rest on `[−L, L)` with `sites` sites.
    pub fn new(half_length: f64, sites: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::invalid(
                "grid_l",
                format!("{half_length} is not a positive length"),
            ));
        }
        if sites < 3 {
            return Err(Error::invalid("sites", "a periodic chain needs at least 3 sites"));
        }
        Ok(Self {
            delta: 2.0 * half_length / sites as f64,
            half_length,
            strains: vec![0.0; sites],
            velocities: vec![0.0; sites],
            t: 0.0,
        })
    }

    /// Strain `u₀` at the sites and velocity from [`initial_velocity`].
    pub fn from_profiles(half_length: f64, sites: usize, u0: &Profile, v0: &Profile) -> Result<Self> {
        let mut chain = Self::new(half_length, sites)?;
        u0.check()?;
        let xs = chain.sites();
        chain.strains = xs
            .iter()
            .map(|&x| {
                u0.value_at(x, half_length)
                    .ok_or_else(|| Error::InvalidSpec("chain strains need an analytic profile".into()))
            })
            .collect::<Result<_>>()?;
        chain.velocities = initial_velocity(v0, chain.delta, &xs, half_length)?;
        Ok(chain)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.strains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strains.is_empty()
    }

    pub fn site(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.delta
    }

    pub fn sites(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.site(j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.strains.iter().chain(&self.velocities).all(|v| v.is_finite())
    }

    /// Periodic sum of the strain velocities.
    pub fn momentum(&self) -> f64 {
        self.velocities.iter().sum()
    }
}

/// Centered second difference with periodic wraparound.
pub fn second_difference(values: &[f64], delta: f64) -> Vec<f64> {
    let m = values.len();
    let inv = 1.0 / (delta * delta);
    (0..m)
        .map(|j| {
            let prev = values[(j + m - 1) % m];
            let next = values[(j + 1) % m];
            (next - 2.0 * values[j] + prev) * inv
        })
        .collect()
}

/// `(u_t, u_tt)` for the chain.
pub fn lattice_rhs(chain: &Chain, epsilon: f64, n: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let acc = acceleration(&chain.strains, chain.delta, epsilon.powi(n as i32), n);
    if acc.iter().all(|a| a.is_finite()) {
        Ok((chain.velocities.clone(), acc))
    } else {
        Err(Error::NonFinite("lattice_rhs"))
    }
}

fn acceleration(strains: &[f64], delta: f64, coefficient: f64, n: u32) -> Vec<f64> {
    let g: Vec<f64> = if coefficient == 0.0 {
        strains.to_vec()
    } else {
        strains
            .iter()
            .map(|&u| u + coefficient * u.powi(n as i32 + 1))
            .collect()
    };
    second_difference(&g, delta)
}

/// `(v₀(x + δ/2) − v₀(x − δ/2)) / δ` at every site.
pub fn initial_velocity_with(v0: impl Fn(f64) -> f64, delta: f64, sites: &[f64]) -> Vec<f64> {
    let h = 0.5 * delta;
    sites.iter().map(|&x| (v0(x + h) - v0(x - h)) / delta).collect()
}

/// Discrete initial velocity from an analytic profile. Sample arrays are
/// rejected since they cannot be evaluated at half-sites.
pub fn initial_velocity(v0: &Profile, delta: f64, sites: &[f64], half_length: f64) -> Result<Vec<f64>> {
    v0.check()?;
    if matches!(v0, Profile::Samples { .. }) {
        return Err(Error::InvalidSpec(
            "initial velocity needs an analytic v0 (sample arrays have no half-site values)".into(),
        ));
    }
    Ok(initial_velocity_with(
        |x| v0.value_at(x, half_length).unwrap_or(0.0),
        delta,
        sites,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    DisplacementToStrain,
    StrainToDisplacement,
}

/// `u_j = (w_{j+1} − w_j) / δ` with periodic wraparound.
pub fn strain_from_displacement(w: &[f64], delta: f64) -> Vec<f64> {
    let m = w.len();
    (0..m).map(|j| (w[(j + 1) % m] - w[j]) / delta).collect()
}

/// Inverse of [`strain_from_displacement`] in the gauge `w₀ = 0`.
///
/// A periodic displacement exists only when the strains sum to zero.
pub fn displacement_from_strain(u: &[f64], delta: f64) -> Result<Vec<f64>> {
    let sum: f64 = u.iter().sum();
    let tolerance = 1e-10 * u.len() as f64;
    if sum.abs() > tolerance {
        return Err(Error::CompatibilityViolated { sum, tolerance });
    }
    let mut w = Vec::with_capacity(u.len());
    let mut acc = 0.0;
    for &uj in u {
        w.push(acc);
        acc += delta * uj;
    }
    Ok(w)
}

pub fn strain_displacement(values: &[f64], delta: f64, direction: Direction) -> Result<Vec<f64>> {
    match direction {
        Direction::DisplacementToStrain => Ok(strain_from_displacement(values, delta)),
        Direction::StrainToDisplacement => displacement_from_strain(values, delta),
    }
}

fn rk4_chain(chain: &Chain, dt: f64, coefficient: f64, n: u32) -> Chain {
    let d = chain.delta;
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(x, y)| x + a * y).collect() };

    let (u, p) = (&chain.strains, &chain.velocities);
    let k1u = p.clone();
    let k1p = acceleration(u, d, coefficient, n);
    let u2 = axpy(u, 0.5 * dt, &k1u);
    let k2u = axpy(p, 0.5 * dt, &k1p);
    let k2p = acceleration(&u2, d, coefficient, n);
    let u3 = axpy(u, 0.5 * dt, &k2u);
    let k3u = axpy(p, 0.5 * dt, &k2p);
    let k3p = acceleration(&u3, d, coefficient, n);
    let u4 = axpy(u, dt, &k3u);
    let k4u = axpy(p, dt, &k3p);
    let k4p = acceleration(&u4, d, coefficient, n);

    let combine = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], e: &[f64]| -> Vec<f64> {
        (0..y.len())
            .map(|j| y[j] + dt / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * c[j] + e[j]))
            .collect()
    };
    Chain {
        strains: combine(u, &k1u, &k2u, &k3u, &k4u),
        velocities: combine(p, &k1p, &k2p, &k3p, &k4p),
        t: chain.t + dt,
        ..chain.clone()
    }
}

/// RK4 on the `2M`-dimensional system up to `t_end`; the last step is
/// shortened when `dt` does not divide the interval.
pub fn integrate_chain(chain: &Chain, epsilon: f64, n: u32, dt: f64, t_end: f64) -> Result<Chain> {
    integrate_chain_observed(chain, epsilon, n, dt, t_end, |_| {})
}

/// [`integrate_chain`], calling `observe` on the initial chain and after every step.
pub fn integrate_chain_observed(
    chain: &Chain,
    epsilon: f64,
    n: u32,
    dt: f64,
    t_end: f64,
    mut observe: impl FnMut(&Chain),
) -> Result<Chain> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("{dt} must be positive")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", format!("{epsilon} must be nonnegative")));
    }
    if n < 1 {
        return Err(Error::invalid("n", "nonlinearity power must be at least 1"));
    }
    if t_end < chain.t {
        return Err(Error::invalid(
            "t_end",
            format!("{t_end} precedes the chain time {}", chain.t),
        ));
    }
    if !chain.is_finite() {
        return Err(Error::NonFiniteState { time: chain.t });
    }
    let coefficient = epsilon.powi(n as i32);
    observe(chain);
    let mut state = chain.clone();
    for target in step_times(state.t, t_end, dt) {
        let mut next = rk4_chain(&state, target - state.t, coefficient, n);
        next.t = target;
        if !next.is_finite() {
            return Err(Error::NonFiniteState { time: state.t });
        }
        observe(&next);
        state = next;
    }
    Ok(state)
}
