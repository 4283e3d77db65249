//! Time evolution of the first-order systems
//!
//! ```text
//! nonlocal:   u_t = K_δ v_x,   v_t = K_δ (u + εⁿ uⁿ⁺¹)_x
//! classical:  u_t = v_x,       v_t = (u + εⁿ uⁿ⁺¹)_x
//! ```
//!
//! where `K_δ` is the Fourier multiplier with symbol `k(δξ)`. The
//! nonlinear product is dealiased and both systems differentiate in
//! conservative form, so the classical system is the `k ≡ 1` member of the
//! nonlocal family with identical arithmetic.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::profile::Profile;
use crate::spectral::{self, Field, Grid};

pub const DEFAULT_BREAKDOWN_THRESHOLD: f64 = 1e3;
/// Safety factor of the unit-speed CFL guard `dt ≤ c·h / max k`.
pub const CFL_SAFETY: f64 = 0.25;

/// Nonlocality scale of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Delta(f64),
    /// `δ → 0`: the classical elasticity system.
    DiracLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kernel: Kernel,
    pub scale: Scale,
    /// Amplitude parameter `ε ≥ 0`; `ε = 0` is the linear system.
    pub epsilon: f64,
    /// Nonlinearity power, `g(u) = εⁿ uⁿ⁺¹`.
    pub n: u32,
    pub dt: f64,
    pub t_end: f64,
    /// Sobolev index used by the energy diagnostic.
    pub s: f64,
    pub breakdown_threshold: f64,
}

impl ModelConfig {
    pub fn new(kernel: Kernel, scale: Scale) -> Self {
        Self {
            kernel,
            scale,
            epsilon: 0.1,
            n: 1,
            dt: 1e-3,
            t_end: 1.0,
            s: 3.0,
            breakdown_threshold: DEFAULT_BREAKDOWN_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Scale::Delta(d) = self.scale {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::invalid("delta", format!("{d} is not a positive length")));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(
                "epsilon",
                format!("{} must be nonnegative", self.epsilon),
            ));
        }
        if self.n < 1 {
            return Err(Error::invalid("n", "nonlinearity power must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("{} must be positive", self.dt)));
        }
        if !self.t_end.is_finite() {
            return Err(Error::invalid("t_end", "must be finite"));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::invalid("s", format!("{} must be nonnegative", self.s)));
        }
        if self.breakdown_threshold.is_nan() || self.breakdown_threshold <= 0.0 {
            return Err(Error::invalid("breakdown_threshold", "must be positive"));
        }
        Ok(())
    }

    /// `εⁿ`, the coefficient of the nonlinear term.
    pub fn nonlinear_coefficient(&self) -> f64 {
        self.epsilon.powi(self.n as i32)
    }

    /// `k(δξ)` for the active scale (identically 1 in the dirac limit).
    pub fn k_at(&self, xi: f64) -> Result<f64> {
        match self.scale {
            Scale::Delta(d) => self.kernel.scaled_k_symbol(d, xi),
            Scale::DiracLimit => Ok(1.0),
        }
    }

    /// Largest admissible step under the CFL guard on `grid`.
    pub fn cfl_dt(&self, grid: &Grid) -> Result<f64> {
        let mut kmax = 0.0_f64;
        for k in 0..grid.size() {
            kmax = kmax.max(self.k_at(grid.frequency(k))?);
        }
        Ok(CFL_SAFETY * grid.spacing() / kmax.max(f64::MIN_POSITIVE))
    }
}

/// The unknowns `(u, v)` at time `t`.
#[derive(Debug, Clone)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl State {
    pub fn new(u: Field, v: Field, t: f64) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::invalid("state", "u and v live on different grids"));
        }
        Ok(Self { u, v, t })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            u: Field::zeros(grid),
            v: Field::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Builds the initial state from `(u₀, v₀)` at `t = 0`.
pub fn make_initial(u0: &Profile, v0: &Profile, grid: &Grid) -> Result<State> {
    State::new(u0.sample(grid)?, v0.sample(grid)?, 0.0)
}

/// Precomputed right-hand side of one of the two systems on a fixed grid.
#[derive(Debug, Clone)]
pub struct Evolution {
    grid: Grid,
    /// `iξ k(δξ)` in FFT order, Nyquist zeroed.
    odd: Vec<Complex64>,
    coefficient: f64,
    power: u32,
    label: &'static str,
}

impl Evolution {
    /// The system selected by `cfg.scale`.
    pub fn new(cfg: &ModelConfig, grid: &Grid) -> Result<Self> {
        cfg.validate()?;
        let mut k = Vec::with_capacity(grid.size());
        for i in 0..grid.size() {
            k.push(cfg.k_at(grid.frequency(i))?);
        }
        let mut odd = spectral::odd_table(grid, |_| 1.0);
        for (o, kk) in odd.iter_mut().zip(&k) {
            *o *= *kk;
        }
        Ok(Self {
            grid: *grid,
            odd,
            coefficient: cfg.nonlinear_coefficient(),
            power: cfg.n + 1,
            label: match cfg.scale {
                Scale::Delta(_) => "nonlocal_rhs",
                Scale::DiracLimit => "classical_rhs",
            },
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `u_t` alone.
    pub fn du_dt(&self, state: &State) -> Field {
        spectral::apply_table(&state.v, &self.odd)
    }

    /// `(u_t, v_t)`.
    pub fn rhs(&self, state: &State) -> Result<(Field, Field)> {
        let du = self.du_dt(state);
        let mut g = state.u.spectrum().to_vec();
        if self.coefficient != 0.0 {
            let p = spectral::dealiased_power_spectrum(&state.u, self.power);
            for (a, b) in g.iter_mut().zip(&p) {
                *a += b * self.coefficient;
            }
        }
        for (a, m) in g.iter_mut().zip(&self.odd) {
            *a *= m;
        }
        let dv = Field::from_spectrum(self.grid, g);
        if du.is_finite() && dv.is_finite() {
            Ok((du, dv))
        } else {
            Err(Error::NonFinite(self.label))
        }
    }
}

/// `(u_t, v_t) = (K_δ v_x, K_δ (u + εⁿuⁿ⁺¹)_x)`.
pub fn nonlocal_rhs(state: &State, cfg: &ModelConfig) -> Result<(Field, Field)> {
    if !matches!(cfg.scale, Scale::Delta(_)) {
        return Err(Error::invalid("delta", "nonlocal_rhs needs a finite length scale"));
    }
    Evolution::new(cfg, state.grid())?.rhs(state)
}

/// `(u_t, v_t) = (v_x, (u + εⁿuⁿ⁺¹)_x)`.
pub fn classical_rhs(state: &State, cfg: &ModelConfig) -> Result<(Field, Field)> {
    let cfg = ModelConfig {
        scale: Scale::DiracLimit,
        ..cfg.clone()
    };
    Evolution::new(&cfg, state.grid())?.rhs(state)
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(state: &State, dt: f64, rhs: F) -> Result<State>
where
    F: Fn(&State) -> Result<(Field, Field)>,
{
    let stage = |a: f64, k: &(Field, Field)| State {
        u: state.u.axpy(a, &k.0),
        v: state.v.axpy(a, &k.1),
        t: state.t + a,
    };
    let k1 = rhs(state)?;
    let k2 = rhs(&stage(0.5 * dt, &k1))?;
    let k3 = rhs(&stage(0.5 * dt, &k2))?;
    let k4 = rhs(&stage(dt, &k3))?;

    let combine = |y: &Field, a: &Field, b: &Field, c: &Field, d: &Field| {
        let samples = y
            .samples()
            .iter()
            .zip(a.samples())
            .zip(b.samples())
            .zip(c.samples())
            .zip(d.samples())
            .map(|((((y, a), b), c), d)| y + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d))
            .collect();
        Field::from_parts(*y.grid(), samples)
    };
    Ok(State {
        u: combine(&state.u, &k1.0, &k2.0, &k3.0, &k4.0),
        v: combine(&state.v, &k1.1, &k2.1, &k3.1, &k4.1),
        t: state.t + dt,
    })
}

/// Target times of the steps taking `t0` to `t_end` with step `dt`; the
/// last step is shortened when `dt` does not divide the interval.
pub fn step_times(t0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let span = t_end - t0;
    if span <= 0.0 {
        return Vec::new();
    }
    let ratio = span / dt;
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    } as usize;
    let mut times: Vec<f64> = (1..steps).map(|k| t0 + k as f64 * dt).collect();
    times.push(t_end);
    times
}

/// Receives every state produced by [`integrate`], starting with the initial one.
pub trait Observer {
    fn observe(&mut self, state: &State);
}

impl<F: FnMut(&State)> Observer for F {
    fn observe(&mut self, state: &State) {
        self(state)
    }
}

/// Integrates from `initial` to `cfg.t_end` with RK4.
///
/// The breakdown monitor is evaluated on every state; the run stops with
/// [`Error::Breakdown`] as soon as it exceeds `cfg.breakdown_threshold`.
pub fn integrate(cfg: &ModelConfig, initial: State, observers: &mut [&mut dyn Observer]) -> Result<State> {
    if cfg.t_end < initial.t {
        return Err(Error::invalid(
            "t_end",
            format!("{} precedes the initial time {}", cfg.t_end, initial.t),
        ));
    }
    let evolution = Evolution::new(cfg, initial.grid())?;
    let check = |state: &State| -> Result<()> {
        if !state.is_finite() {
            return Err(Error::NonFiniteState { time: state.t });
        }
        let monitor = monitor_with(&evolution, state);
        if monitor.is_nan() || monitor > cfg.breakdown_threshold {
            return Err(Error::Breakdown {
                time: state.t,
                monitor,
                threshold: cfg.breakdown_threshold,
            });
        }
        Ok(())
    };

    check(&initial)?;
    for o in observers.iter_mut() {
        o.observe(&initial);
    }
    let mut state = initial;
    for target in step_times(state.t, cfg.t_end, cfg.dt) {
        let dt = target - state.t;
        let mut next = rk4_step(&state, dt, |s| evolution.rhs(s)).map_err(|e| match e {
            Error::NonFinite(_) => Error::NonFiniteState { time: state.t },
            other => other,
        })?;
        next.t = target;
        check(&next)?;
        for o in observers.iter_mut() {
            o.observe(&next);
        }
        state = next;
    }
    Ok(state)
}

/// `min_x (1 + w)` with `w = (n+1)εⁿuⁿ`.
pub fn min_hyperbolicity(state: &State, cfg: &ModelConfig) -> f64 {
    let c = (cfg.n + 1) as f64 * cfg.nonlinear_coefficient();
    state
        .u
        .samples()
        .iter()
        .map(|&u| 1.0 + c * u.powi(cfg.n as i32))
        .fold(f64::INFINITY, f64::min)
}

/// The `H^s` energy `E_s = (½∫((1+w)(Λ^s u)² + (Λ^s v)²)dx)^{1/2}` with
/// `s = cfg.s`.
pub fn energy(state: &State, cfg: &ModelConfig) -> Result<f64> {
    let min = min_hyperbolicity(state, cfg);
    if min.is_nan() || min <= 0.0 {
        return Err(Error::HyperbolicityViolated { min });
    }
    let c = (cfg.n + 1) as f64 * cfg.nonlinear_coefficient();
    let lu = spectral::lambda_s(&state.u, cfg.s);
    let lv = spectral::lambda_s(&state.v, cfg.s);
    let sum: f64 = state
        .u
        .samples()
        .iter()
        .zip(lu.samples())
        .zip(lv.samples())
        .map(|((&u, a), b)| (1.0 + c * u.powi(cfg.n as i32)) * a * a + b * b)
        .sum();
    Ok((0.5 * state.grid().spacing() * sum).sqrt())
}

fn monitor_with(evolution: &Evolution, state: &State) -> f64 {
    let ut = evolution.du_dt(state);
    let ux = spectral::derivative(&state.u);
    spectral::linf_norm(&state.u) + spectral::linf_norm(&ut) + spectral::linf_norm(&ux)
}

/// `‖u‖_∞ + ‖u_t‖_∞ + ‖u_x‖_∞`, with `u_t` taken from the active system.
pub fn breakdown_monitor(state: &State, cfg: &ModelConfig) -> Result<f64> {
    Ok(monitor_with(&Evolution::new(cfg, state.grid())?, state))
}

/// One row of the diagnostic time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    /// `NaN` when hyperbolicity is lost.
    pub energy: f64,
    pub monitor: f64,
    pub u_linf: f64,
}

/// Observer recording [`Diagnostics`] every `stride` states.
#[derive(Debug)]
pub struct TimeSeries {
    cfg: ModelConfig,
    evolution: Evolution,
    stride: usize,
    seen: usize,
    pub rows: Vec<Diagnostics>,
}

impl TimeSeries {
    pub fn new(cfg: &ModelConfig, grid: &Grid, stride: usize) -> Result<Self> {
        Ok(Self {
            cfg: cfg.clone(),
            evolution: Evolution::new(cfg, grid)?,
            stride: stride.max(1),
            seen: 0,
            rows: Vec::new(),
        })
    }

    pub fn record(&mut self, state: &State) {
        self.rows.push(Diagnostics {
            t: state.t,
            energy: energy(state, &self.cfg).unwrap_or(f64::NAN),
            monitor: monitor_with(&self.evolution, state),
            u_linf: spectral::linf_norm(&state.u),
        });
    }
}

impl Observer for TimeSeries {
    fn observe(&mut self, state: &State) {
        let due = self.seen.is_multiple_of(self.stride) || state.t == self.cfg.t_end;
        self.seen += 1;
        if due {
            self.record(state);
        }
    }
}
