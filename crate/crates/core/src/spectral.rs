//! Periodic grids, sampled fields and Fourier-multiplier operators.
//!
//! The real line is truncated to the periodic box `[−L, L)` sampled at
//! `N` nodes `x_j = −L + jh`. Spectra are unnormalized DFTs in FFT order,
//! so index `k` carries the frequency `ξ = mπ/L` with `m = k` for
//! `k < N/2` and `m = k − N` otherwise (the Nyquist mode is `m = −N/2`).

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(len)
        } else {
            p.plan_fft_inverse(len)
        }
    })
}

pub(crate) fn forward_real(samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    plan(buf.len(), true).process(&mut buf);
    buf
}

/// Inverse transform scaled by `scale`, keeping the real part.
pub(crate) fn inverse_real(mut spectrum: Vec<Complex64>, scale: f64) -> Vec<f64> {
    plan(spectrum.len(), false).process(&mut spectrum);
    spectrum.into_iter().map(|c| c.re * scale).collect()
}

/// A uniform periodic grid on `[−L, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_length: f64,
    size: usize,
}

impl Grid {
    pub const MIN_SIZE: usize = 8;

    pub fn new(half_length: f64, size: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::invalid(
                "grid_l",
                format!("{half_length} is not a positive length"),
            ));
        }
        if size < Self::MIN_SIZE || !size.is_multiple_of(2) {
            return Err(Error::invalid(
                "grid_n",
                format!("{size} must be even and at least {}", Self::MIN_SIZE),
            ));
        }
        Ok(Self { half_length, size })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.size as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.size).map(|j| self.node(j)).collect()
    }

    /// Signed mode number of FFT index `k`.
    pub fn mode(&self, k: usize) -> i64 {
        if k < self.size / 2 {
            k as i64
        } else {
            k as i64 - self.size as i64
        }
    }

    /// Frequency `ξ` of FFT index `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        self.mode(k) as f64 * PI / self.half_length
    }

    /// All frequencies in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.size).map(|k| self.frequency(k)).collect()
    }

    /// `ξ_max = (N/2)π/L`.
    pub fn max_frequency(&self) -> f64 {
        (self.size / 2) as f64 * PI / self.half_length
    }

    /// FFT index of the Nyquist mode.
    pub fn nyquist(&self) -> usize {
        self.size / 2
    }

    pub(crate) fn norm_weight(&self) -> f64 {
        // (π/L) · h² / (2π) = 2L / N²
        2.0 * self.half_length / (self.size as f64 * self.size as f64)
    }
}

/// Real samples on a grid with a lazily computed spectrum.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    samples: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Field {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.size() {
            return Err(Error::invalid(
                "samples",
                format!("expected {} samples, got {}", grid.size(), samples.len()),
            ));
        }
        Ok(Self::from_parts(grid, samples))
    }

    pub(crate) fn from_parts(grid: Grid, samples: Vec<f64>) -> Self {
        Self {
            grid,
            samples,
            spectrum: OnceLock::new(),
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_parts(grid, vec![0.0; grid.size()])
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..grid.size()).map(|j| f(grid.node(j))).collect();
        Self::from_parts(grid, samples)
    }

    /// Synthesizes a field from an unnormalized spectrum.
    pub(crate) fn from_spectrum(grid: Grid, spectrum: Vec<Complex64>) -> Self {
        let scale = 1.0 / grid.size() as f64;
        Self::from_parts(grid, inverse_real(spectrum, scale))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Mutable access to the samples; drops the cached spectrum.
    pub fn samples_mut(&mut self) -> &mut [f64] {
        self.spectrum.take();
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Unnormalized DFT of the samples in FFT order.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| forward_real(&self.samples))
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(x, y)| x + a * y)
            .collect();
        Self::from_parts(self.grid, samples)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|x| a * x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_parts(self.grid, self.samples.iter().map(|&x| f(x)).collect())
    }

    /// Discrete `L²` inner product `h Σ f_j g_j`.
    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.spacing() * self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Physical-space `L²` norm `(h Σ f_j²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }
}

fn checked(field: Field, what: &'static str) -> Result<Field> {
    if field.is_finite() {
        Ok(field)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Multiplies the spectrum of `f` pointwise by `m(ξ)`.
pub fn apply_multiplier(f: &Field, m: impl Fn(f64) -> f64) -> Result<Field> {
    let grid = *f.grid();
    let spec = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(k, c)| c * m(grid.frequency(k)))
        .collect();
    checked(Field::from_spectrum(grid, spec), "apply_multiplier")
}

/// Multiplies the spectrum by precomputed per-index complex factors.
pub(crate) fn apply_table(f: &Field, table: &[Complex64]) -> Field {
    let spec = f.spectrum().iter().zip(table).map(|(c, m)| c * m).collect();
    Field::from_spectrum(*f.grid(), spec)
}

/// Factors `iξ·m(ξ)` in FFT order with the Nyquist entry zeroed.
pub(crate) fn odd_table(grid: &Grid, m: impl Fn(f64) -> f64) -> Vec<Complex64> {
    let mut t: Vec<Complex64> = (0..grid.size())
        .map(|k| {
            let xi = grid.frequency(k);
            Complex64::new(0.0, xi * m(xi))
        })
        .collect();
    t[grid.nyquist()] = Complex64::new(0.0, 0.0);
    t
}

/// Spectral `∂_x`; the Nyquist mode is zeroed.
pub fn derivative(f: &Field) -> Field {
    apply_table(f, &odd_table(f.grid(), |_| 1.0))
}

/// `Λ^s f = (1 − ∂_x²)^{s/2} f`.
pub fn lambda_s(f: &Field, s: f64) -> Field {
    let grid = *f.grid();
    let spec = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let xi = grid.frequency(k);
            c * (1.0 + xi * xi).powf(0.5 * s)
        })
        .collect();
    Field::from_spectrum(grid, spec)
}

/// Discrete `H^s` norm `(Σ (π/L)(1+ξ²)^s |f̂(ξ)|²)^{1/2}`.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    let grid = *f.grid();
    let sum: f64 = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let xi = grid.frequency(k);
            (1.0 + xi * xi).powf(s) * c.norm_sqr()
        })
        .sum();
    (grid.norm_weight() * sum).sqrt()
}

pub fn linf_norm(f: &Field) -> f64 {
    f.samples().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Computes `f^p` with the product dealiased by zero padding.
///
/// The transform is padded to `(p+1)N/2` points, which removes every
/// aliased contribution of a degree-`p` product of band-limited factors;
/// the result is truncated back to the original `N` modes.
pub fn dealiased_power(f: &Field, p: u32) -> Field {
    let grid = *f.grid();
    Field::from_spectrum(grid, dealiased_power_spectrum(f, p))
}

pub(crate) fn dealiased_power_spectrum(f: &Field, p: u32) -> Vec<Complex64> {
    let n = f.grid().size();
    match p {
        0 => {
            let mut s = vec![Complex64::new(0.0, 0.0); n];
            s[0] = Complex64::new(n as f64, 0.0);
            return s;
        }
        1 => return f.spectrum().to_vec(),
        _ => {}
    }
    let half = n / 2;
    let padded_len = (p as usize + 1) * half;
    let src = f.spectrum();
    let zero = Complex64::new(0.0, 0.0);

    let mut pad = vec![zero; padded_len];
    pad[..half].copy_from_slice(&src[..half]);
    for m in 1..half {
        pad[padded_len - m] = src[n - m];
    }
    // Split the Nyquist coefficient so the padded series stays real.
    pad[half] = src[half] * 0.5;
    pad[padded_len - half] = src[half] * 0.5;

    // Samples of the trigonometric interpolant on the fine grid.
    let fine = inverse_real(pad, 1.0 / n as f64);
    let powered: Vec<f64> = fine.iter().map(|&x| x.powi(p as i32)).collect();
    let fine_spec = forward_real(&powered);

    let rescale = n as f64 / padded_len as f64;
    let mut out = vec![zero; n];
    for m in 0..half {
        out[m] = fine_spec[m] * rescale;
    }
    for m in 1..half {
        out[n - m] = fine_spec[padded_len - m] * rescale;
    }
    out[half] = (fine_spec[half] + fine_spec[padded_len - half]) * rescale;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.samples()
            .iter()
            .zip(b.samples())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    fn pi_grid(n: usize) -> Grid {
        Grid::new(PI, n).unwrap()
    }

    /// Random smooth field: a handful of low modes plus a gaussian.
    fn random_smooth(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
        let coeffs: Vec<(f64, f64)> = (0..6)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let l = grid.half_length();
        let c = rng.gen_range(-1.0..1.0);
        Field::from_fn(grid, |x| {
            let mut s = c * (-x * x).exp();
            for (m, (a, b)) in coeffs.iter().enumerate() {
                let w = (m + 1) as f64 * PI / l;
                s += a * (w * x).cos() + b * (w * x).sin();
            }
            s
        })
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(1.0, 6).is_err());
        assert!(Grid::new(1.0, 9).is_err());
        assert!(Grid::new(0.0, 16).is_err());
        let g = Grid::new(20.0, 1024).unwrap();
        assert_relative_eq!(g.spacing() * g.size() as f64, 40.0);
        assert_relative_eq!(g.max_frequency(), 512.0 * PI / 20.0);
        assert_eq!(g.mode(g.nyquist()), -512);
        assert_eq!(g.node(0), -20.0);
    }

    #[test]
    fn round_trip_reproduces_samples() {
        let grid = Grid::new(10.0, 256).unwrap();
        let f = Field::from_fn(grid, |x| (-x * x).exp() + 0.3 * (0.2 * x).sin());
        let g = Field::from_spectrum(grid, f.spectrum().to_vec());
        let scale = linf_norm(&f);
        assert!(max_diff(&f, &g) / scale < 1e-13);
    }

    #[test]
    fn spectrum_is_hermitian() {
        let grid = Grid::new(5.0, 64).unwrap();
        let f = Field::from_fn(grid, |x| (x * 0.7).sin() + (-x * x).exp());
        let s = f.spectrum();
        for k in 1..64 {
            assert!((s[k] - s[64 - k].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn mutation_invalidates_spectrum() {
        let grid = pi_grid(16);
        let mut f = Field::zeros(grid);
        assert_eq!(f.spectrum()[0].re, 0.0);
        f.samples_mut().iter_mut().for_each(|x| *x = 1.0);
        assert_relative_eq!(f.spectrum()[0].re, 16.0);
    }

    #[test]
    fn multiplier_examples() {
        let grid = pi_grid(64);
        let f = Field::from_fn(grid, |x| x.sin() + 0.5 * (3.0 * x).cos());
        let id = apply_multiplier(&f, |_| 1.0).unwrap();
        assert!(max_diff(&id, &f) < 1e-13);

        let sin = Field::from_fn(grid, f64::sin);
        let tri = apply_multiplier(&sin, |xi| crate::kernels::Kernel::Triangular.symbol(xi)).unwrap();
        let factor = 4.0 * 0.5_f64.sin().powi(2);
        assert_relative_eq!(factor, 0.9193953, epsilon = 1e-7);
        assert!(max_diff(&tri, &sin.scale(factor)) < 1e-13);

        let z = apply_multiplier(&f, |_| 0.0).unwrap();
        assert_eq!(linf_norm(&z), 0.0);

        assert!(matches!(apply_multiplier(&f, |_| f64::NAN), Err(Error::NonFinite(_))));
    }

    #[test]
    fn derivative_examples() {
        let grid = pi_grid(64);
        let f = Field::from_fn(grid, |x| (2.0 * x).sin());
        let d = derivative(&f);
        let exact = Field::from_fn(grid, |x| 2.0 * (2.0 * x).cos());
        assert!(max_diff(&d, &exact) < 1e-11);

        let c = Field::from_fn(grid, |_| 3.5);
        assert!(linf_norm(&derivative(&c)) < 1e-14);
    }

    #[test]
    fn derivative_matches_extrapolated_finite_difference() {
        let grid = Grid::new(10.0, 1024).unwrap();
        let g = |x: f64| (-4.0 * x * x).exp();
        let d = derivative(&Field::from_fn(grid, g));
        // Richardson-extrapolated central difference: O(η⁴).
        let eta = 1e-3;
        let cd = |x: f64, e: f64| (g(x + e) - g(x - e)) / (2.0 * e);
        let oracle = Field::from_fn(grid, |x| (4.0 * cd(x, eta / 2.0) - cd(x, eta)) / 3.0);
        assert!(max_diff(&d, &oracle) < 1e-6);
    }

    #[test]
    fn lambda_s_examples() {
        let grid = pi_grid(32);
        let f = Field::from_fn(grid, |x| x.sin() + (2.0 * x).cos());
        assert!(max_diff(&lambda_s(&f, 0.0), &f) < 1e-14);
        let sin = Field::from_fn(grid, f64::sin);
        assert!(max_diff(&lambda_s(&sin, 2.0), &sin.scale(2.0)) < 1e-13);
        let back = lambda_s(&lambda_s(&f, 1.7), -1.7);
        assert!(max_diff(&back, &f) < 1e-12);
    }

    #[test]
    fn sobolev_norm_examples() {
        let grid = pi_grid(64);
        assert_eq!(sobolev_norm(&Field::zeros(grid), 3.0), 0.0);
        let sin = Field::from_fn(grid, f64::sin);
        // Physical-space quadrature of ∫ sin² over one period.
        let oracle = sin.l2_norm();
        assert_relative_eq!(oracle, PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(sobolev_norm(&sin, 0.0), PI.sqrt(), max_relative = 1e-13);
        assert!((sobolev_norm(&sin, 1.0) - (2.0 * PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn linf_examples() {
        let grid = pi_grid(64);
        assert_eq!(linf_norm(&Field::zeros(grid)), 0.0);
        // x = π/2 is node 48 of 64 on [−π, π).
        assert_relative_eq!(linf_norm(&Field::from_fn(grid, f64::sin)), 1.0, epsilon = 1e-15);
        let g = Grid::new(10.0, 128).unwrap();
        assert_eq!(linf_norm(&Field::from_fn(g, |x| 3.0 * (-x * x).exp())), 3.0);
    }

    #[test]
    fn parseval_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = Grid::new(6.0, 128).unwrap();
        for _ in 0..20 {
            let samples = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = Field::new(grid, samples).unwrap();
            assert_relative_eq!(sobolev_norm(&f, 0.0), f.l2_norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn multipliers_compose_and_commute_with_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = Grid::new(8.0, 128).unwrap();
        let k = |xi: f64| crate::kernels::Kernel::Triangular.k_symbol(0.7 * xi).unwrap();
        let m2 = |xi: f64| crate::kernels::Kernel::Exponential.symbol(xi);
        for _ in 0..10 {
            let f = random_smooth(grid, &mut rng);
            let a = apply_multiplier(&apply_multiplier(&f, k).unwrap(), m2).unwrap();
            let b = apply_multiplier(&f, |xi| k(xi) * m2(xi)).unwrap();
            assert!(max_diff(&a, &b) < 1e-12);

            let dk = derivative(&apply_multiplier(&f, k).unwrap());
            let kd = apply_multiplier(&derivative(&f), k).unwrap();
            assert!(max_diff(&dk, &kd) < 1e-12);
        }
    }

    #[test]
    fn k_is_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = Grid::new(8.0, 128).unwrap();
        let k = |xi: f64| crate::kernels::Kernel::Exponential.k_symbol(1.3 * xi).unwrap();
        for _ in 0..10 {
            let f = random_smooth(grid, &mut rng);
            let g = random_smooth(grid, &mut rng);
            let lhs = apply_multiplier(&f, k).unwrap().inner(&g);
            let rhs = f.inner(&apply_multiplier(&g, k).unwrap());
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn triangular_multiplier_matches_direct_convolution() {
        let grid = Grid::new(20.0, 1024).unwrap();
        let f = |x: f64| (-2.0 * x * x).exp();
        let field = Field::from_fn(grid, f);
        let got = apply_multiplier(&field, |xi| crate::kernels::Kernel::Triangular.symbol(xi)).unwrap();
        // (β^T ∗ f)(x) = ∫_{-1}^{1} (1−|y|) f(x−y) dy by the trapezoidal rule.
        let panels = 4000;
        let dy = 2.0 / panels as f64;
        let conv = Field::from_fn(grid, |x| {
            (0..=panels)
                .map(|i| {
                    let y = -1.0 + i as f64 * dy;
                    let w = if i == 0 || i == panels { 0.5 } else { 1.0 };
                    w * (1.0 - y.abs()) * f(x - y)
                })
                .sum::<f64>()
                * dy
        });
        assert!(max_diff(&got, &conv) < 1e-6, "{}", max_diff(&got, &conv));
    }

    #[test]
    fn parity_is_preserved_and_flipped() {
        let grid = Grid::new(8.0, 64).unwrap();
        let n = grid.size();
        // Reflection x_j ↦ −x_j maps node j to node (N − j) mod N.
        let reflect = |f: &Field, sign: f64| {
            let s = f.samples();
            (0..n).fold(0.0_f64, |m, j| m.max((s[j] - sign * s[(n - j) % n]).abs()))
        };
        let even = Field::from_fn(grid, |x| (-x * x).exp() * (1.0 + 0.2 * x * x));
        let odd = Field::from_fn(grid, |x| x * (-x * x).exp());
        let k = |xi: f64| crate::kernels::Kernel::Triangular.k_symbol(xi).unwrap();
        assert!(reflect(&apply_multiplier(&even, k).unwrap(), 1.0) < 1e-14);
        assert!(reflect(&apply_multiplier(&odd, k).unwrap(), -1.0) < 1e-14);
        assert!(reflect(&derivative(&even), -1.0) < 1e-14);
        assert!(reflect(&derivative(&odd), 1.0) < 1e-14);
    }

    #[test]
    fn dealiased_power_is_exact_for_band_limited_input() {
        let grid = pi_grid(16);
        // cos(3x)² = ½ + ½cos(6x) is representable on 16 points; cos(5x)² is not.
        let c3 = Field::from_fn(grid, |x| (3.0 * x).cos());
        let sq = dealiased_power(&c3, 2);
        let exact = Field::from_fn(grid, |x| 0.5 + 0.5 * (6.0 * x).cos());
        assert!(max_diff(&sq, &exact) < 1e-14);

        // cos(5x)² = ½ + ½cos(10x); mode 10 exceeds N/2 = 8 and must be dropped
        // instead of aliasing onto cos(6x).
        let c5 = Field::from_fn(grid, |x| (5.0 * x).cos());
        let sq = dealiased_power(&c5, 2);
        assert!(max_diff(&sq, &Field::from_fn(grid, |_| 0.5)) < 1e-14);

        // Cubic: cos³(2x) = ¾cos(2x) + ¼cos(6x).
        let c2 = Field::from_fn(grid, |x| (2.0 * x).cos());
        let cube = dealiased_power(&c2, 3);
        let exact = Field::from_fn(grid, |x| 0.75 * (2.0 * x).cos() + 0.25 * (6.0 * x).cos());
        assert!(max_diff(&cube, &exact) < 1e-14);
    }

    #[test]
    fn dealiased_power_matches_pointwise_for_resolved_data() {
        let grid = Grid::new(20.0, 512).unwrap();
        let f = Field::from_fn(grid, |x| 0.5 * (-2.0 * x * x).exp());
        for p in 1..=4 {
            let d = dealiased_power(&f, p);
            let pw = f.map(|x| x.powi(p as i32));
            assert!(max_diff(&d, &pw) < 1e-14, "p={p}");
        }
    }
}
