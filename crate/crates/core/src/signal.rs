//! Periodic sampling grids, complex/real signals and Fourier transforms.
//!
//! Fourier convention: the forward transform uses the kernel `e^{+iωt}`,
//!
//! ```text
//! c_k = ∫ e^{+iω_k t} E(t) dt        ≈ dt · Σ_j E(t_j) e^{+iω_k t_j}
//! E(t) = (1/T_w) Σ_k c_k e^{-iω_k t}
//! ```
//!
//! with `ω_k = 2πk/T_w`. Under this convention the tone `e^{-iΩt}` is a
//! *positive* frequency and single-sideband (SSB) signals have `c_k = 0`
//! for `k < 0`. Parseval reads `Σ|E_j|² dt = (1/T_w) Σ|c_k|²`.
//!
//! Coefficients are stored in FFT order (`k = 0, 1, …, n/2-1, -n/2, …, -1`);
//! use [`Spectrum::coeff`] for signed indexing.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub type Complex = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("sample spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("signals live on different grids")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// `Σ_j x_j e^{+2πijk/n}` in place (unnormalized).
pub(crate) fn fft_plus(buf: &mut [Complex]) {
    plan(buf.len(), true).process(buf);
}

/// `Σ_j x_j e^{-2πijk/n}` in place (unnormalized).
pub(crate) fn fft_minus(buf: &mut [Complex]) {
    plan(buf.len(), false).process(buf);
}

/// Uniform periodic sampling grid `t_j = t0 + j·dt`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n_samples: usize,
    dt: f64,
    t0: f64,
}

impl TimeGrid {
    pub fn new(n_samples: usize, dt: f64) -> Result<Self, SignalError> {
        if n_samples == 0 || !n_samples.is_power_of_two() {
            return Err(SignalError::NotPowerOfTwo(n_samples));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SignalError::InvalidSpacing(dt));
        }
        Ok(Self { n_samples, dt, t0: 0.0 })
    }

    pub fn with_origin(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Period `T_w = n·dt`.
    pub fn period(&self) -> f64 {
        self.n_samples as f64 * self.dt
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(|j| self.time(j))
    }

    /// Signed frequency index of FFT slot `idx`.
    pub fn frequency_index(&self, idx: usize) -> i64 {
        let n = self.n_samples as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT slot of signed frequency index `k` (taken modulo n).
    pub fn slot(&self, k: i64) -> usize {
        k.rem_euclid(self.n_samples as i64) as usize
    }

    /// `ω_k = 2πk/T_w`.
    pub fn angular_frequency(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.period()
    }

    /// Same period and origin, `factor` times more samples.
    pub fn refined(&self, factor: usize) -> Result<Self, SignalError> {
        Ok(TimeGrid::new(self.n_samples * factor, self.dt / factor as f64)?.with_origin(self.t0))
    }

    fn same_as(&self, other: &TimeGrid) -> bool {
        let tol = 1e-12 * self.period();
        self.n_samples == other.n_samples
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.t0 - other.t0).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    grid: TimeGrid,
    samples: Vec<Complex>,
    pub label: String,
}

impl ComplexSignal {
    pub fn new(grid: TimeGrid, samples: Vec<Complex>) -> Result<Self, SignalError> {
        if samples.len() != grid.n_samples {
            return Err(SignalError::LengthMismatch { expected: grid.n_samples, got: samples.len() });
        }
        if let Some(i) = samples.iter().position(|z| !z.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(Self { grid, samples, label: String::new() })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex) -> Result<Self, SignalError> {
        Self::new(grid, grid.times().map(f).collect())
    }

    pub fn constant(grid: TimeGrid, c: Complex) -> Self {
        Self { grid, samples: vec![c; grid.n_samples], label: String::new() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Pointwise map; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(Complex) -> Complex) -> Result<Self, SignalError> {
        Ok(Self::new(self.grid, self.samples.iter().map(|&z| f(z)).collect())?.with_label(self.label.clone()))
    }

    /// Pointwise map with the sample time.
    pub fn map_t(&self, f: impl Fn(f64, Complex) -> Complex) -> Result<Self, SignalError> {
        let s = self.samples.iter().enumerate().map(|(j, &z)| f(self.grid.time(j), z)).collect();
        Ok(Self::new(self.grid, s)?.with_label(self.label.clone()))
    }

    pub fn modulus(&self) -> RealSignal {
        RealSignal { grid: self.grid, samples: self.samples.iter().map(|z| z.norm()).collect(), label: String::new() }
    }

    pub fn min_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Root-mean-square sample magnitude.
    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64).sqrt()
    }

    /// `∫|E|² dt` over one period.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dt
    }

    pub fn check_grid(&self, other: &ComplexSignal) -> Result<(), SignalError> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(SignalError::GridMismatch)
        }
    }
}

/// Real-valued samples on a grid (intensities, phases).
#[derive(Debug, Clone, PartialEq)]
pub struct RealSignal {
    grid: TimeGrid,
    samples: Vec<f64>,
    pub label: String,
}

impl RealSignal {
    pub fn new(grid: TimeGrid, samples: Vec<f64>) -> Result<Self, SignalError> {
        if samples.len() != grid.n_samples {
            return Err(SignalError::LengthMismatch { expected: grid.n_samples, got: samples.len() });
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(Self { grid, samples, label: String::new() })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self, SignalError> {
        Self::new(grid, grid.times().map(f).collect())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn to_complex(&self) -> ComplexSignal {
        ComplexSignal {
            grid: self.grid,
            samples: self.samples.iter().map(|&x| Complex::new(x, 0.0)).collect(),
            label: self.label.clone(),
        }
    }
}

/// Fourier-series coefficients `c_k` under the `e^{+iωt}` convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: TimeGrid,
    coeffs: Vec<Complex>,
}

impl Spectrum {
    /// `coeffs` in FFT order.
    pub fn new(grid: TimeGrid, coeffs: Vec<Complex>) -> Result<Self, SignalError> {
        if coeffs.len() != grid.n_samples {
            return Err(SignalError::LengthMismatch { expected: grid.n_samples, got: coeffs.len() });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self { grid, coeffs: vec![Complex::new(0.0, 0.0); grid.n_samples] }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Coefficients in FFT order.
    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex] {
        &mut self.coeffs
    }

    /// Coefficient at signed index `k ∈ [-n/2, n/2)`.
    pub fn coeff(&self, k: i64) -> Complex {
        self.coeffs[self.grid.slot(k)]
    }

    pub fn set_coeff(&mut self, k: i64, c: Complex) {
        let s = self.grid.slot(k);
        self.coeffs[s] = c;
    }

    /// `(k, c_k)` pairs in FFT order.
    pub fn indexed(&self) -> impl Iterator<Item = (i64, Complex)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, &c)| (self.grid.frequency_index(i), c))
    }

    /// `(1/T_w) Σ|c_k|²`, equal to the time-domain energy.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.period()
    }

    /// Trigonometric interpolation: the Fourier series evaluated at any `t`.
    pub fn evaluate(&self, t: f64) -> Complex {
        let w = -2.0 * PI * t / self.grid.period();
        let mut acc = Complex::new(0.0, 0.0);
        for (k, c) in self.indexed() {
            if c.re != 0.0 || c.im != 0.0 {
                acc += c * Complex::from_polar(1.0, w * k as f64);
            }
        }
        acc / self.grid.period()
    }
}

pub fn forward_transform(sig: &ComplexSignal) -> Spectrum {
    let grid = sig.grid;
    let mut buf = sig.samples.clone();
    fft_plus(&mut buf);
    let (dt, t0) = (grid.dt, grid.t0);
    for (i, c) in buf.iter_mut().enumerate() {
        *c *= dt;
        if t0 != 0.0 {
            *c *= Complex::from_polar(1.0, grid.angular_frequency(grid.frequency_index(i)) * t0);
        }
    }
    Spectrum { grid, coeffs: buf }
}

pub fn inverse_transform(spec: &Spectrum) -> ComplexSignal {
    let grid = spec.grid;
    let mut buf = spec.coeffs.clone();
    let tw = grid.period();
    for (i, c) in buf.iter_mut().enumerate() {
        *c /= tw;
        if grid.t0 != 0.0 {
            *c *= Complex::from_polar(1.0, -grid.angular_frequency(grid.frequency_index(i)) * grid.t0);
        }
    }
    fft_minus(&mut buf);
    ComplexSignal { grid, samples: buf, label: String::new() }
}

/// Zeroes every strictly negative frequency, including the Nyquist slot `k = -n/2`.
pub fn analytic_projection(sig: &ComplexSignal) -> ComplexSignal {
    let mut spec = forward_transform(sig);
    let n = sig.grid.n_samples;
    for c in &mut spec.coeffs[n / 2..] {
        *c = Complex::new(0.0, 0.0);
    }
    inverse_transform(&spec).with_label(sig.label.clone())
}

/// Periodic Hilbert transform: spectral multiplier `-i·sgn(ω)`, `sgn(0) = 0`.
///
/// Equals `(1/T_w) p.v.∫ f(t') cot(π(t'-t)/T_w) dt'`, so `hilbert(cos Ωt) = -sin Ωt`
/// and an SSB signal satisfies `s - s̄ = i·hilbert(s)`.
/// The Nyquist slot counts as a negative frequency.
pub fn hilbert(sig: &ComplexSignal) -> ComplexSignal {
    let mut spec = forward_transform(sig);
    apply_hilbert_multiplier(&mut spec.coeffs);
    inverse_transform(&spec).with_label(sig.label.clone())
}

fn apply_hilbert_multiplier(coeffs: &mut [Complex]) {
    let n = coeffs.len();
    coeffs[0] = Complex::new(0.0, 0.0);
    let minus_i = Complex::new(0.0, -1.0);
    for c in &mut coeffs[1..n / 2] {
        *c *= minus_i;
    }
    for c in &mut coeffs[n / 2..] {
        *c *= -minus_i;
    }
}

/// Hilbert transform of a real signal, returned as a real signal.
///
/// The Nyquist component contributes a purely imaginary term and is therefore dropped.
pub fn hilbert_real(sig: &RealSignal) -> RealSignal {
    let h = hilbert(&sig.to_complex());
    RealSignal { grid: sig.grid, samples: h.samples.iter().map(|z| z.re).collect(), label: sig.label.clone() }
}

/// `(1/T_w) ∫ E dt`, the sample mean.
pub fn time_average(sig: &ComplexSignal) -> Complex {
    sig.samples.iter().sum::<Complex>() / sig.len() as f64
}

/// Band-limited interpolation onto a grid `factor` times finer (zero-padding the spectrum).
///
/// The Nyquist coefficient is split evenly between `±n/2` so real signals stay real.
pub fn upsample(sig: &ComplexSignal, factor: usize) -> Result<ComplexSignal, SignalError> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(SignalError::InvalidParameter(format!("upsampling factor {factor} must be a power of two")));
    }
    if factor == 1 {
        return Ok(sig.clone());
    }
    let spec = forward_transform(sig);
    let fine = sig.grid.refined(factor)?;
    let n = sig.grid.n_samples;
    let mut out = Spectrum::zeros(fine);
    for (k, c) in spec.indexed() {
        if n > 1 && k == -(n as i64) / 2 {
            out.set_coeff(k, c * 0.5);
            out.set_coeff(-k, c * 0.5);
        } else {
            out.set_coeff(k, c);
        }
    }
    Ok(inverse_transform(&out).with_label(sig.label.clone()))
}

/// Every `factor`-th sample (inverse of [`upsample`] on band-limited signals).
pub fn decimate(sig: &ComplexSignal, factor: usize) -> Result<ComplexSignal, SignalError> {
    let coarse = TimeGrid::new(sig.grid.n_samples / factor, sig.grid.dt * factor as f64)?.with_origin(sig.grid.t0);
    let samples = sig.samples.iter().step_by(factor).copied().collect();
    Ok(ComplexSignal::new(coarse, samples)?.with_label(sig.label.clone()))
}
