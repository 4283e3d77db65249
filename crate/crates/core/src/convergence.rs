//! Rate studies in the nonlocality scale `δ`.
//!
//! Three sweeps are provided: the operator error `‖K_δv − v‖_{H^s}`, the
//! zero-dispersion comparison of nonlocal and classical solutions, and the
//! lattice-to-continuum comparison of the FPUT chain with the classical
//! system. Rates come from least-squares fits in `log δ`.

use std::cell::RefCell;

use rayon::prelude::*;

use crate::dynamics::{self, integrate, make_initial, ModelConfig, Scale, State};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::lattice::{self, Chain};
use crate::profile::Profile;
use crate::spectral::{self, apply_multiplier, sobolev_norm, Field, Grid};

/// Default number of time samples recorded per run.
pub const DEFAULT_TIME_SAMPLES: usize = 10;
pub const MIN_DELTAS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorError {
    /// `‖K_δv − v‖_{H^s}`.
    pub error: f64,
    /// `error / (δ^θ ‖v‖_{H^{s+θ}})`.
    pub bound_ratio: f64,
}

/// Measures `‖K_δv − v‖_{H^s}` and its ratio to `δ^θ‖v‖_{H^{s+θ}}`.
pub fn operator_error(kernel: &Kernel, delta: f64, v: &Field, s: f64, theta: f64) -> Result<OperatorError> {
    if !(theta > 0.0 && theta <= 2.0) {
        return Err(Error::invalid("theta", format!("{theta} is outside (0, 2]")));
    }
    // Validate δ and the symbol once before the per-mode closure.
    kernel.scaled_k_symbol(delta, 0.0)?;
    let reference = sobolev_norm(v, s + theta);
    if reference == 0.0 {
        return Err(Error::Degenerate("‖v‖ in H^{s+θ} vanishes".into()));
    }
    let failure = RefCell::new(None);
    let diff = apply_multiplier(v, |xi| match kernel.scaled_k_symbol(delta, xi) {
        Ok(k) => k - 1.0,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    })?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let error = sobolev_norm(&diff, s);
    Ok(OperatorError {
        error,
        bound_ratio: error / (delta.powf(theta) * reference),
    })
}

/// Least-squares line through `(log δ, log e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    /// `log C` in `e ≈ C δ^slope`.
    pub intercept: f64,
    pub r2: f64,
    /// Number of pairs used in the fit.
    pub used: usize,
    /// Pairs dropped because their error was zero (or not finite).
    pub excluded: usize,
}

impl RateFit {
    pub fn has_exclusions(&self) -> bool {
        self.excluded > 0
    }
}

pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(d, e)| *e > 0.0 && e.is_finite() && *d > 0.0)
        .map(|&(d, e)| (d.ln(), e.ln()))
        .collect();
    let excluded = pairs.len() - pts.len();
    if pts.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} positive errors; at least 2 are needed",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all deltas coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        used: pts.len(),
        excluded,
    })
}

/// Slope of the fit over the first `i + 1` pairs, for each `i`.
pub fn running_slopes(pairs: &[(f64, f64)]) -> Vec<Option<f64>> {
    (1..=pairs.len())
        .map(|i| fit_rate(&pairs[..i]).ok().map(|f| f.slope))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kernel: Kernel,
    /// Strictly decreasing, at least [`MIN_DELTAS`] values.
    pub deltas: Vec<f64>,
    pub epsilon: f64,
    pub n: u32,
    /// Diagnostic Sobolev index; errors are measured in `H^{s−1}`.
    pub s: f64,
    pub theta_expected: f64,
    pub t_end: f64,
    pub u0: Profile,
    pub v0: Profile,
    pub grid: Grid,
    /// Time step; `None` selects the CFL step shared by every run.
    pub dt: Option<f64>,
    pub time_samples: usize,
    pub breakdown_threshold: f64,
}

impl SweepConfig {
    pub fn new(kernel: Kernel, deltas: Vec<f64>, grid: Grid) -> Self {
        Self {
            kernel,
            deltas,
            epsilon: 0.1,
            n: 1,
            s: 3.0,
            theta_expected: 2.0,
            t_end: 1.0,
            u0: Profile::gaussian(0.5, 2.0),
            v0: Profile::Zero,
            grid,
            dt: None,
            time_samples: DEFAULT_TIME_SAMPLES,
            breakdown_threshold: dynamics::DEFAULT_BREAKDOWN_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.deltas.len() < MIN_DELTAS {
            return Err(Error::invalid(
                "delta_list",
                format!("needs at least {MIN_DELTAS} values, got {}", self.deltas.len()),
            ));
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::invalid("delta_list", "every delta must be positive"));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid(
                "delta_list ordering",
                "deltas must be strictly decreasing",
            ));
        }
        if !(self.theta_expected > 0.0 && self.theta_expected <= 2.0) {
            return Err(Error::invalid(
                "theta",
                format!("{} is outside (0, 2]", self.theta_expected),
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", "must be nonnegative"));
        }
        if self.s < 1.0 {
            return Err(Error::invalid(
                "s",
                "errors are measured in H^{s-1}; s must be at least 1",
            ));
        }
        self.u0.check()?;
        self.v0.check()?;
        Ok(())
    }

    fn model(&self, scale: Scale, dt: f64) -> ModelConfig {
        ModelConfig {
            kernel: self.kernel.clone(),
            scale,
            epsilon: self.epsilon,
            n: self.n,
            dt,
            t_end: self.t_end,
            s: self.s,
            breakdown_threshold: self.breakdown_threshold,
        }
    }

    /// The shared time step: the explicit one, or the smallest CFL step
    /// over the classical run and every nonlocal run.
    pub fn resolved_dt(&self) -> Result<f64> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid("dt", format!("{dt} must be positive")));
            }
            return Ok(dt);
        }
        let mut dt = self.model(Scale::DiracLimit, 1.0).cfl_dt(&self.grid)?;
        for &d in &self.deltas {
            dt = dt.min(self.model(Scale::Delta(d), 1.0).cfl_dt(&self.grid)?);
        }
        Ok(dt)
    }
}

/// Error split into its two components at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub t: f64,
    /// `‖u^δ − u‖_{H^{s−1}}`.
    pub u_part: f64,
    /// `‖v^δ − v‖_{H^{s−1}}` (zero-dispersion) or `‖u_t^δ − u_t‖_{H^{s−1}}` (lattice).
    pub v_part: f64,
}

impl ErrorSample {
    pub fn total(&self) -> f64 {
        self.u_part + self.v_part
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRun {
    pub delta: f64,
    pub samples: Vec<ErrorSample>,
}

impl DeltaRun {
    pub fn terminal(&self) -> ErrorSample {
        *self.samples.last().expect("every run records its initial state")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub runs: Vec<DeltaRun>,
    /// `None` when fewer than two terminal errors are positive.
    pub fit: Option<RateFit>,
    pub dt: f64,
}

impl ConvergenceReport {
    fn assemble(runs: Vec<DeltaRun>, dt: f64) -> Self {
        let pairs: Vec<(f64, f64)> = runs.iter().map(|r| (r.delta, r.terminal().total())).collect();
        Self {
            fit: fit_rate(&pairs).ok(),
            runs,
            dt,
        }
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.delta).collect()
    }

    /// Terminal-time errors, one per delta.
    pub fn errors(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.terminal().total()).collect()
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.runs.iter().map(|r| (r.delta, r.terminal().total())).collect()
    }
}

/// Which steps of a run are sampled: every `stride`-th and the last.
#[derive(Debug, Clone, Copy)]
struct Sampling {
    stride: usize,
    last: usize,
}

impl Sampling {
    fn new(steps: usize, samples: usize) -> Self {
        Self {
            stride: (steps / samples.max(1)).max(1),
            last: steps,
        }
    }

    fn wants(&self, index: usize) -> bool {
        index.is_multiple_of(self.stride) || index == self.last
    }
}

/// Classical run recorded at the sampled steps.
fn classical_samples(cfg: &ModelConfig, initial: State, sampling: Sampling) -> Result<Vec<State>> {
    let mut recorded = Vec::new();
    let mut index = 0;
    let mut obs = |s: &State| {
        if sampling.wants(index) {
            recorded.push(s.clone());
        }
        index += 1;
    };
    integrate(cfg, initial, &mut [&mut obs])?;
    Ok(recorded)
}

/// Compares nonlocal solutions with the classical solution from the same
/// `(u₀, v₀)` for every `δ` in the list.
pub fn zero_dispersion_sweep(cfg: &SweepConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let dt = cfg.resolved_dt()?;
    let grid = cfg.grid;
    let initial = make_initial(&cfg.u0, &cfg.v0, &grid)?;
    let steps = dynamics::step_times(0.0, cfg.t_end, dt).len();
    let sampling = Sampling::new(steps, cfg.time_samples);
    let sm1 = cfg.s - 1.0;

    let reference = classical_samples(&cfg.model(Scale::DiracLimit, dt), initial.clone(), sampling)?;

    let runs = cfg
        .deltas
        .par_iter()
        .map(|&delta| -> Result<DeltaRun> {
            let model = cfg.model(Scale::Delta(delta), dt);
            let mut samples = Vec::with_capacity(reference.len());
            let mut index = 0;
            let mut next_ref = reference.iter();
            let mut obs = |s: &State| {
                if sampling.wants(index) {
                    let r = next_ref.next().expect("identical schedules");
                    debug_assert_eq!(r.t, s.t);
                    samples.push(ErrorSample {
                        t: s.t,
                        u_part: sobolev_norm(&s.u.sub(&r.u), sm1),
                        v_part: sobolev_norm(&s.v.sub(&r.v), sm1),
                    });
                }
                index += 1;
            };
            integrate(&model, initial.clone(), &mut [&mut obs])?;
            Ok(DeltaRun { delta, samples })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::assemble(runs, dt))
}

/// Number of chain sites for `δ` on `grid`, or an alignment error.
pub fn aligned_sites(grid: &Grid, delta: f64) -> Result<usize> {
    let exact = 2.0 * grid.half_length() / delta;
    let m = exact.round();
    let misaligned = |reason: String| Error::Misaligned { delta, reason };
    if (exact - m).abs() > 1e-9 * m.max(1.0) {
        return Err(misaligned(format!("2L/delta = {exact} is not an integer")));
    }
    let m = m as usize;
    if m < Grid::MIN_SIZE || !m.is_multiple_of(2) {
        return Err(misaligned(format!(
            "{m} sites; need an even count of at least {}",
            Grid::MIN_SIZE
        )));
    }
    if !grid.size().is_multiple_of(m) {
        return Err(misaligned(format!(
            "{m} sites do not divide the {} grid nodes",
            grid.size()
        )));
    }
    Ok(m)
}

/// Chain with `sites` sites on every `N/sites`-th node of `u0`'s grid:
/// strains copied from `u0`, velocities from [`lattice::initial_velocity`].
fn chain_on_grid(u0: &Field, v0: &Profile, sites: usize, delta: f64) -> Result<Chain> {
    let grid = u0.grid();
    let stride = grid.size() / sites;
    let nodes: Vec<f64> = (0..sites).map(|j| grid.node(j * stride)).collect();
    let mut chain = Chain::new(grid.half_length(), sites)?;
    chain.strains = (0..sites).map(|j| u0.samples()[j * stride]).collect();
    chain.velocities = lattice::initial_velocity(v0, delta, &nodes, grid.half_length())?;
    Ok(chain)
}

/// The initial chain [`lattice_sweep`] uses for `delta`.
pub fn lattice_initial_chain(cfg: &SweepConfig, delta: f64) -> Result<Chain> {
    let sites = aligned_sites(&cfg.grid, delta)?;
    chain_on_grid(&cfg.u0.sample(&cfg.grid)?, &cfg.v0, sites, delta)
}

/// Compares the FPUT chain with the classical system for every `δ`.
///
/// The chain starts from `u₀` and the discrete velocity of `v₀`; the
/// classical run starts from `(u₀, v₀)`, i.e. `u_t(·,0) = v₀'`. Errors are
/// measured at the chain sites, which coincide with every `N/M`-th grid
/// node, in the discrete `H^{s−1}` norm of the chain's own periodic grid.
pub fn lattice_sweep(cfg: &SweepConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let grid = cfg.grid;
    let sites: Vec<usize> = cfg
        .deltas
        .iter()
        .map(|&d| aligned_sites(&grid, d))
        .collect::<Result<_>>()?;
    let dt = cfg.resolved_dt()?;
    let steps = dynamics::step_times(0.0, cfg.t_end, dt).len();
    let sampling = Sampling::new(steps, cfg.time_samples);
    let sm1 = cfg.s - 1.0;
    let l = grid.half_length();

    let initial = make_initial(&cfg.u0, &cfg.v0, &grid)?;
    let classical = cfg.model(Scale::DiracLimit, dt);
    let reference: Vec<(f64, Field, Field)> = classical_samples(&classical, initial.clone(), sampling)?
        .into_iter()
        .map(|s| {
            let ut = spectral::derivative(&s.v);
            (s.t, s.u, ut)
        })
        .collect();

    let runs = cfg
        .deltas
        .par_iter()
        .zip(sites.par_iter())
        .map(|(&delta, &m)| -> Result<DeltaRun> {
            let stride = grid.size() / m;
            let coarse = Grid::new(l, m)?;
            let chain = chain_on_grid(&initial.u, &cfg.v0, m, delta)?;

            let restrict = |f: &Field| -> Vec<f64> { (0..m).map(|j| f.samples()[j * stride]).collect() };
            let mut samples = Vec::with_capacity(reference.len());
            let mut index = 0;
            let mut next_ref = reference.iter();
            let mut failure = None;
            let observe = |c: &Chain| {
                if sampling.wants(index) {
                    let (t, u, ut) = next_ref.next().expect("identical schedules");
                    debug_assert_eq!(*t, c.t);
                    let du: Vec<f64> = c.strains.iter().zip(restrict(u)).map(|(a, b)| a - b).collect();
                    let dut: Vec<f64> = c.velocities.iter().zip(restrict(ut)).map(|(a, b)| a - b).collect();
                    match (Field::new(coarse, du), Field::new(coarse, dut)) {
                        (Ok(du), Ok(dut)) => samples.push(ErrorSample {
                            t: c.t,
                            u_part: sobolev_norm(&du, sm1),
                            v_part: sobolev_norm(&dut, sm1),
                        }),
                        (Err(e), _) | (_, Err(e)) => {
                            failure.get_or_insert(e);
                        }
                    }
                }
                index += 1;
            };
            lattice::integrate_chain_observed(&chain, cfg.epsilon, cfg.n, dt, cfg.t_end, observe)?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(DeltaRun { delta, samples })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::assemble(runs, dt))
}
