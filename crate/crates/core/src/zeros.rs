//! Lower-half-plane zeros of SSB fields: root oracle, Blaschke ratio, Lorentzian fits, zero flipping.
//!
//! A periodic SSB field is a polynomial in `w = e^{-2πiz/T_w}`. A root `w_k`
//! inside the unit disk is a zero at `z_k = t_k - i|τ_k|` with
//!
//! ```text
//! t_k = -arg(w_k)·T_w/2π  (mod T_w),     |τ_k| = -(T_w/2π)·ln|w_k|.
//! ```
//!
//! The field and its minimum-phase partner differ by a product of unimodular
//! periodic factors, `E/E₀ = e^{iθ} Π_k S_k(t)`,
//!
//! ```text
//! S_k(t) = sin(π(t - t_k + i|τ_k|)/T_w) / sin(π(t - t_k - i|τ_k|)/T_w),
//! ```
//!
//! each of which dips to `-1` at `t_k`; to first order in `|τ_k|/T_w`,
//! `S_k - 1 ≈ 2i(π|τ_k|/T_w)·cot(π(t - t_k - i|τ_k|)/T_w)`, a Lorentzian of height 2.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::roots::{polynomial_roots, RootSolver};
use crate::signal::{forward_transform, time_average, Complex, ComplexSignal, SignalError, TimeGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZeroError {
    #[error("signal is not single-sideband (negative-frequency content {ratio:e} of peak)")]
    NotSsb { ratio: f64 },
    #[error("constant Fourier coefficient vanishes; zeros are not isolated")]
    DegenerateLeadingCoefficients,
    #[error("found {found} peaks, expected {expected}")]
    PeakCountMismatch { found: usize, expected: usize },
    #[error("Lorentzian fit diverged: {0}")]
    FitDiverged(String),
    #[error("ratio is not a pure phase (||H|-1| up to {deviation:e})")]
    NotUnimodular { deviation: f64 },
    #[error("invalid zero: {0}")]
    InvalidZero(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroMethod {
    Oracle,
    LorentzianFit,
}

/// A zero at `t_k - i·tau_abs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroEstimate {
    pub t_k: f64,
    pub tau_abs: f64,
    pub method: ZeroMethod,
    /// RMS complex fit residual over the fit windows (0 for the oracle).
    pub residual: f64,
}

impl ZeroEstimate {
    pub fn new(t_k: f64, tau_abs: f64) -> Self {
        Self { t_k, tau_abs, method: ZeroMethod::Oracle, residual: 0.0 }
    }

    /// The periodic unimodular factor `S_k(t)` with period `t_w`.
    pub fn factor(&self, t: f64, t_w: f64) -> Complex {
        let u = Complex::new(PI * (t - self.t_k) / t_w, PI * self.tau_abs / t_w);
        u.sin() / u.conj().sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub solver: RootSolver,
    /// Allowed negative-frequency magnitude relative to the largest coefficient.
    pub ssb_tolerance: f64,
    /// Trailing coefficients below `trim·max|c|` are dropped.
    pub trim: f64,
    /// Roots with `||w| - 1|` below this are on the real axis and skipped with a warning.
    pub axis_band: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { solver: RootSolver::Aberth, ssb_tolerance: 1e-10, trim: 1e-12, axis_band: 1e-9 }
    }
}

pub fn zeros_oracle(sig: &ComplexSignal) -> Result<Vec<ZeroEstimate>, ZeroError> {
    zeros_oracle_with(sig, &OracleOptions::default())
}

/// Lower-half-plane zeros from the roots of the field's `w`-polynomial, sorted by `t_k`.
pub fn zeros_oracle_with(sig: &ComplexSignal, opts: &OracleOptions) -> Result<Vec<ZeroEstimate>, ZeroError> {
    let spec = forward_transform(sig);
    let n = sig.len() as i64;
    let max = spec.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return Err(ZeroError::DegenerateLeadingCoefficients);
    }
    let neg = (-n / 2..0).map(|k| spec.coeff(k).norm()).fold(0.0, f64::max);
    if neg > opts.ssb_tolerance * max {
        return Err(ZeroError::NotSsb { ratio: neg / max });
    }
    let mut c: Vec<Complex> = (0..n / 2).map(|k| spec.coeff(k)).collect();
    while c.last().is_some_and(|x| x.norm() < opts.trim * max) {
        c.pop();
    }
    if c.is_empty() || c[0].norm() < opts.trim * max {
        return Err(ZeroError::DegenerateLeadingCoefficients);
    }
    let tw = sig.grid().period();
    let mut zeros: Vec<ZeroEstimate> = Vec::new();
    for w in polynomial_roots(&c, opts.solver) {
        let r = w.norm();
        if (r - 1.0).abs() <= opts.axis_band {
            log::warn!("root |w| = {r} lies on the real axis; not classified");
            continue;
        }
        if r < 1.0 {
            let mut t_k = (-w.arg() * tw / TAU).rem_euclid(tw);
            if t_k >= tw {
                t_k = 0.0;
            }
            zeros.push(ZeroEstimate::new(t_k, -tw / TAU * r.ln()));
        }
    }
    zeros.sort_by(|a, b| a.t_k.total_cmp(&b.t_k));
    Ok(zeros)
}

/// `H_N(t) = E(t)/E₀(t)` with `E₀ = minphase_signal(|E|², φ̄)`.
pub fn blaschke_ratio(sig: &ComplexSignal, bias_phase: f64) -> Result<ComplexSignal, ZeroError> {
    analysis::check_floor(sig)?;
    let e0 = analysis::minphase_signal(&analysis::intensity(sig), bias_phase)?;
    let s = sig.samples().iter().zip(e0.samples()).map(|(a, b)| a / b).collect();
    Ok(ComplexSignal::new(*sig.grid(), s)?)
}

/// `e^{iθ} Π_k S_k(t)`.
pub fn blaschke_model(zeros: &[ZeroEstimate], theta: f64, t: f64, t_w: f64) -> Complex {
    zeros.iter().fold(Complex::from_polar(1.0, theta), |acc, z| acc * z.factor(t, t_w))
}

pub fn blaschke_model_signal(zeros: &[ZeroEstimate], theta: f64, grid: &TimeGrid) -> ComplexSignal {
    let tw = grid.period();
    ComplexSignal::from_fn(*grid, |t| blaschke_model(zeros, theta, t, tw)).expect("finite model")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorentzianFit {
    pub zeros: Vec<ZeroEstimate>,
    /// Global phase `θ` of the ratio.
    pub theta: f64,
}

/// Local maxima above this are unambiguous zeros; there may be no more of them than expected.
const PEAK_THRESHOLD: f64 = 0.5;
/// Zeros much narrower than the sample spacing only show up as small tails.
const PEAK_FLOOR: f64 = 1e-9;
const UNIMODULAR_TOLERANCE: f64 = 1e-3;
/// Fit windows extend this many `|τ_k|` either side of each peak.
const WINDOW_TAUS: f64 = 20.0;
/// …but never fewer than this many samples.
const WINDOW_MIN_SAMPLES: f64 = 8.0;

pub fn fit_lorentzians(ratio: &ComplexSignal, n_expected: usize) -> Result<Vec<ZeroEstimate>, ZeroError> {
    Ok(fit_lorentzians_detailed(ratio, n_expected)?.zeros)
}

/// Peak detection on `|H - e^{iθ}|` followed by a joint Levenberg-Marquardt fit of the
/// complex ratio against the periodic product model.
pub fn fit_lorentzians_detailed(ratio: &ComplexSignal, n_expected: usize) -> Result<LorentzianFit, ZeroError> {
    let h = ratio.samples();
    let deviation = h.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    if deviation > UNIMODULAR_TOLERANCE {
        return Err(ZeroError::NotUnimodular { deviation });
    }
    // H is analytic in the unit w-disk, so its time average is H(w=0) = e^{iθ}Π|w_k|
    let theta0 = time_average(ratio).arg();
    let base = Complex::from_polar(1.0, theta0);
    let d: Vec<f64> = h.iter().map(|z| (z - base).norm()).collect();
    let grid = ratio.grid();
    let n = d.len();
    let dt = grid.dt();
    let tw = grid.period();

    let mut peaks: Vec<usize> =
        (0..n).filter(|&j| d[j] > PEAK_FLOOR && d[j] >= d[(j + n - 1) % n] && d[j] > d[(j + 1) % n]).collect();
    peaks.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let strong = peaks.iter().filter(|&&j| d[j] > PEAK_THRESHOLD).count();
    if peaks.len() < n_expected || strong > n_expected {
        let found = if strong > n_expected { strong } else { peaks.len() };
        return Err(ZeroError::PeakCountMismatch { found, expected: n_expected });
    }
    peaks.truncate(n_expected);
    if peaks.is_empty() {
        return Ok(LorentzianFit { zeros: Vec::new(), theta: theta0 });
    }

    let mut zeros: Vec<ZeroEstimate> = peaks
        .iter()
        .map(|&j| {
            let (dl, dc, dr) = (d[(j + n - 1) % n], d[j], d[(j + 1) % n]);
            let curv = dl - 2.0 * dc + dr;
            let off = if curv < 0.0 { (0.5 * (dl - dr) / curv).clamp(-0.5, 0.5) } else { 0.0 };
            let t_k = grid.time(j) + off * dt;
            ZeroEstimate { t_k, tau_abs: initial_depth(&d, j, dt), method: ZeroMethod::LorentzianFit, residual: 0.0 }
        })
        .collect();

    let mut theta = theta0;
    // refit once with windows sized by the fitted depths
    for _ in 0..2 {
        let idx = window_indices(grid, &zeros);
        let (z, th, res) = levenberg_marquardt(ratio, &idx, &zeros, theta)?;
        theta = th;
        zeros = z;
        for zk in &mut zeros {
            zk.residual = res;
        }
    }
    for zk in &mut zeros {
        zk.t_k = zk.t_k.rem_euclid(tw);
        if zk.t_k >= tw {
            zk.t_k = 0.0;
        }
    }
    zeros.sort_by(|a, b| a.t_k.total_cmp(&b.t_k));
    Ok(LorentzianFit { zeros, theta })
}

/// Half-width at which `|S - 1| = √2`, or an estimate from the peak height when unresolved.
fn initial_depth(d: &[f64], j: usize, dt: f64) -> f64 {
    let n = d.len();
    let level = std::f64::consts::SQRT_2;
    let cross = |dir: isize| -> Option<f64> {
        let mut prev = d[j];
        for s in 1..n / 4 {
            let i = (j as isize + dir * s as isize).rem_euclid(n as isize) as usize;
            if d[i] < level {
                return Some((s as f64 - 1.0 + (prev - level) / (prev - d[i])) * dt);
            }
            prev = d[i];
        }
        None
    };
    match (d[j] > level, cross(-1), cross(1)) {
        (true, Some(l), Some(r)) if l > 0.0 && r > 0.0 => 0.5 * (l + r),
        _ => {
            let p = d[j].min(1.999);
            p * dt / (4.0 * (4.0 - p * p).sqrt())
        }
    }
}

fn window_indices(grid: &TimeGrid, zeros: &[ZeroEstimate]) -> Vec<usize> {
    let n = grid.n_samples();
    let dt = grid.dt();
    let mut mask = vec![false; n];
    for z in zeros {
        let half = (WINDOW_TAUS * z.tau_abs).max(WINDOW_MIN_SAMPLES * dt);
        let c = ((z.t_k - grid.t0()) / dt).round() as isize;
        let w = ((half / dt).ceil() as isize).min(n as isize / 2);
        for s in -w..=w {
            mask[(c + s).rem_euclid(n as isize) as usize] = true;
        }
    }
    (0..n).filter(|&i| mask[i]).collect()
}

/// Model values and Jacobian columns `∂M/∂p` for `p = [θ, t_1, ln τ_1, …]`.
fn model_and_jacobian(zeros: &[ZeroEstimate], theta: f64, t: f64, tw: f64) -> (Complex, Vec<Complex>) {
    let a = PI / tw;
    let mut m = Complex::from_polar(1.0, theta);
    let mut dlog = Vec::with_capacity(1 + 2 * zeros.len());
    dlog.push(Complex::i());
    for z in zeros {
        let up = Complex::new(a * (t - z.t_k), a * z.tau_abs);
        let um = up.conj();
        let (cp, cm) = (up.cos() / up.sin(), um.cos() / um.sin());
        m *= up.sin() / um.sin();
        dlog.push(-a * (cp - cm));
        dlog.push(Complex::i() * a * z.tau_abs * (cp + cm));
    }
    let jac = dlog.into_iter().map(|g| g * m).collect();
    (m, jac)
}

fn levenberg_marquardt(
    ratio: &ComplexSignal,
    idx: &[usize],
    start: &[ZeroEstimate],
    theta0: f64,
) -> Result<(Vec<ZeroEstimate>, f64, f64), ZeroError> {
    let grid = ratio.grid();
    let tw = grid.period();
    let h = ratio.samples();
    let np = 1 + 2 * start.len();
    let unpack = |p: &DVector<f64>| -> (Vec<ZeroEstimate>, f64) {
        let z = start
            .iter()
            .enumerate()
            .map(|(k, z0)| ZeroEstimate { t_k: p[1 + 2 * k], tau_abs: p[2 + 2 * k].exp(), ..*z0 })
            .collect();
        (z, p[0])
    };
    let cost = |p: &DVector<f64>| -> f64 {
        let (z, th) = unpack(p);
        idx.iter().map(|&j| (h[j] - blaschke_model(&z, th, grid.time(j), tw)).norm_sqr()).sum()
    };
    let mut p = DVector::from_iterator(
        np,
        std::iter::once(theta0).chain(start.iter().flat_map(|z| [z.t_k, z.tau_abs.ln()])),
    );
    let mut c = cost(&p);
    let mut lambda = 1e-3;
    for _ in 0..300 {
        let (z, th) = unpack(&p);
        let mut jtj = DMatrix::<f64>::zeros(np, np);
        let mut jtr = DVector::<f64>::zeros(np);
        for &j in idx {
            let (m, jac) = model_and_jacobian(&z, th, grid.time(j), tw);
            let r = h[j] - m;
            // residual r = H - M, so ∂r/∂p = -∂M/∂p
            for a in 0..np {
                jtr[a] -= jac[a].re * r.re + jac[a].im * r.im;
                for b in a..np {
                    jtj[(a, b)] += jac[a].re * jac[b].re + jac[a].im * jac[b].im;
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut lhs = jtj.clone();
            for a in 0..np {
                lhs[(a, a)] += lambda * jtj[(a, a)].max(1e-300);
            }
            let Some(step) = lhs.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &p + &step;
            let ct = cost(&trial);
            if ct.is_finite() && ct <= c {
                let rel = (c - ct) / c.max(1e-300);
                let small = step.iter().zip(p.iter()).all(|(s, v)| s.abs() <= 1e-14 * v.abs().max(1.0));
                p = trial;
                c = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = !(rel < 1e-14 || small);
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let (z, th) = unpack(&p);
    for (zk, z0) in z.iter().zip(start) {
        let drift = (zk.t_k - z0.t_k).abs();
        if !zk.t_k.is_finite() || !zk.tau_abs.is_finite() || drift > tw / 2.0 || zk.tau_abs > tw {
            return Err(ZeroError::FitDiverged(format!("zero started at t={} went to t={}, |τ|={}", z0.t_k, zk.t_k, zk.tau_abs)));
        }
    }
    Ok((z, th, (c / idx.len() as f64).sqrt()))
}

/// Moves `zero` to its mirror image in the upper half-plane by dividing out `S_k`.
///
/// The factor is unimodular and, for an exact zero, keeps the field a polynomial of
/// the same degree in `w`, so intensity and band support are preserved.
pub fn flip_zero(sig: &ComplexSignal, zero: &ZeroEstimate) -> Result<ComplexSignal, ZeroError> {
    if !(zero.tau_abs > 0.0 && zero.tau_abs.is_finite() && zero.t_k.is_finite()) {
        return Err(ZeroError::InvalidZero(format!("t_k={}, |τ|={}", zero.t_k, zero.tau_abs)));
    }
    let tw = sig.grid().period();
    Ok(sig.map_t(|t, e| e / zero.factor(t, tw))?)
}

/// How many decades below the peak the model tracks the measured `|H - 1|`.
///
/// Every sample with `|H - 1|` above `peak·10^{-depth}` agrees with the model to
/// `tolerance` relative error. When no sample disagrees this is the full dynamic range of the data.
pub fn agreement_decades(measured: &ComplexSignal, model: &ComplexSignal, tolerance: f64) -> f64 {
    let one = Complex::new(1.0, 0.0);
    let pairs: Vec<(f64, f64)> =
        measured.samples().iter().zip(model.samples()).map(|(h, m)| ((h - one).norm(), (m - one).norm())).collect();
    let peak = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    let worst = pairs.iter().filter(|(h, m)| (h - m).abs() > tolerance * h).map(|p| p.0).fold(0.0, f64::max);
    let floor = if worst > 0.0 { worst } else { pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) };
    (peak / floor).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{reconstruction_error, winding_number};
    use crate::signal::TimeGrid;
    use proptest::prelude::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(256, 4.0 / 256.0).unwrap()
    }

    fn poly(g: TimeGrid, c: &[Complex]) -> ComplexSignal {
        let tw = g.period();
        ComplexSignal::from_fn(g, |t| {
            let w = Complex::from_polar(1.0, -TAU * t / tw);
            c.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &ck| acc * w + ck)
        })
        .unwrap()
    }

    fn re(c: &[f64]) -> Vec<Complex> {
        c.iter().map(|&x| Complex::new(x, 0.0)).collect()
    }

    #[test]
    fn oracle_single_zero() {
        let g = grid();
        let tw = g.period();
        let z = zeros_oracle(&poly(g, &re(&[1.0, 2.0]))).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0].t_k - tw / 2.0).abs() < 1e-12 * tw);
        assert!((z[0].tau_abs - tw / TAU * 2f64.ln()).abs() < 1e-12 * tw);
        assert!(zeros_oracle(&poly(g, &re(&[2.0, 1.0]))).unwrap().is_empty());
    }

    #[test]
    fn oracle_errors() {
        let g = grid();
        let tw = g.period();
        let two_sided = ComplexSignal::from_fn(g, |t| Complex::new(2.0 + (TAU * t / tw).cos(), 0.0)).unwrap();
        assert!(matches!(zeros_oracle(&two_sided), Err(ZeroError::NotSsb { .. })));
        assert_eq!(zeros_oracle(&poly(g, &re(&[0.0, 1.0, 0.5]))), Err(ZeroError::DegenerateLeadingCoefficients));
    }

    #[test]
    fn oracle_matches_winding_on_random_polynomials() {
        use rand::{Rng, SeedableRng};
        let g = TimeGrid::new(128, 1.0).unwrap();
        for seed in 0..40 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<Complex> =
                (0..12).map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let e = poly(g, &c);
            let w = winding_number(&e).unwrap();
            assert_eq!(zeros_oracle(&e).unwrap().len() as i64, -w, "seed {seed}");
            let comp = zeros_oracle_with(&e, &OracleOptions { solver: RootSolver::Companion, ..Default::default() }).unwrap();
            assert_eq!(comp.len() as i64, -w);
        }
    }

    #[test]
    fn blaschke_ratio_of_single_zero() {
        let g = grid();
        let tw = g.period();
        let e = poly(g, &re(&[1.0, 2.0]));
        let h = blaschke_ratio(&e, 0.0).unwrap();
        for (j, z) in h.samples().iter().enumerate() {
            let w = Complex::from_polar(1.0, -TAU * g.time(j) / tw);
            assert!((z - (1.0 + 2.0 * w) / (2.0 + w)).norm() < 1e-6);
            assert!((z.norm() - 1.0).abs() < 1e-6);
        }
        assert!((h.samples()[128] + 1.0).norm() < 1e-6);
        // the closed-form factor agrees with the explicit Blaschke ratio
        let zk = zeros_oracle(&e).unwrap()[0];
        let m = blaschke_model_signal(&[zk], 0.0, &g);
        assert!(reconstruction_error(&h, &m).unwrap() < 1e-6);
        let mp = blaschke_ratio(&poly(g, &re(&[2.0, 1.0])), 0.0).unwrap();
        assert!(mp.samples().iter().all(|z| (z - 1.0).norm() < 1e-6));
    }

    #[test]
    fn first_order_factor_is_lorentzian() {
        let z = ZeroEstimate::new(1.0, 1e-4);
        let tw = 100.0;
        for t in [0.9999, 1.0, 1.0002, 3.0] {
            let u = Complex::new(PI * (t - z.t_k) / tw, -PI * z.tau_abs / tw);
            let approx = 1.0 + Complex::new(0.0, 2.0 * PI * z.tau_abs / tw) * u.cos() / u.sin();
            assert!((z.factor(t, tw) - approx).norm() < 1e-6);
        }
        assert!((z.factor(1.0, tw) + 1.0).norm() < 1e-15);
    }

    #[test]
    fn fit_single_zero() {
        let g = grid();
        let tw = g.period();
        let h = blaschke_ratio(&poly(g, &re(&[1.0, 2.0])), 0.0).unwrap();
        let z = fit_lorentzians(&h, 1).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].method, ZeroMethod::LorentzianFit);
        assert!((z[0].t_k - tw / 2.0).abs() < 1e-6);
        assert!((z[0].tau_abs / (tw / TAU * 2f64.ln()) - 1.0).abs() < 1e-6);
        assert!(matches!(fit_lorentzians(&h, 2), Err(ZeroError::PeakCountMismatch { found: 1, expected: 2 })));
        let flat = ComplexSignal::constant(g, Complex::new(1.0, 0.0));
        assert!(fit_lorentzians(&flat, 0).unwrap().is_empty());
        let bad = ComplexSignal::constant(g, Complex::new(1.1, 0.0));
        assert!(matches!(fit_lorentzians(&bad, 0), Err(ZeroError::NotUnimodular { .. })));
    }

    #[test]
    fn fit_recovers_narrow_zeros_from_exact_model() {
        let g = TimeGrid::new(4096, 1.0 / 64.0).unwrap();
        let truth = [ZeroEstimate::new(10.3, 0.05), ZeroEstimate::new(31.77, 0.2), ZeroEstimate::new(50.01, 0.011)];
        let h = blaschke_model_signal(&truth, 0.3, &g);
        let fit = fit_lorentzians_detailed(&h, 3).unwrap();
        assert!((fit.theta - 0.3).abs() < 1e-9);
        for (f, t) in fit.zeros.iter().zip(&truth) {
            assert!((f.t_k - t.t_k).abs() < 1e-9 && (f.tau_abs / t.tau_abs - 1.0).abs() < 1e-9, "{f:?}");
        }
        let m = blaschke_model_signal(&fit.zeros, fit.theta, &g);
        let h1 = blaschke_model_signal(&truth, 0.0, &g);
        let m1 = blaschke_model_signal(&fit.zeros, fit.theta - 0.3, &g);
        let dd = agreement_decades(&h1, &m1, 0.1);
        // no sample disagrees, so the depth is the full dynamic range of |H - 1| on this grid
        assert!(dd > 5.5, "{dd}");
        assert!(reconstruction_error(&h, &m).unwrap() < 1e-9);
    }

    #[test]
    fn flip_single_zero_gives_partner() {
        let g = grid();
        let e = poly(g, &re(&[1.0, 2.0]));
        let z = zeros_oracle(&e).unwrap()[0];
        let f = flip_zero(&e, &z).unwrap();
        assert!(reconstruction_error(&poly(g, &re(&[2.0, 1.0])), &f).unwrap() < 1e-12);
        assert!(zeros_oracle(&f).unwrap().is_empty());
        assert!(flip_zero(&e, &ZeroEstimate::new(1.0, 0.0)).is_err());
        assert!(flip_zero(&e, &ZeroEstimate::new(f64::NAN, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn flip_preserves_modulus_and_band(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = TimeGrid::new(64, 1.0).unwrap();
            let c: Vec<Complex> = (0..8).map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let e = poly(g, &c);
            let zs = zeros_oracle(&e).unwrap();
            prop_assume!(!zs.is_empty());
            let f = flip_zero(&e, &zs[0]).unwrap();
            for (a, b) in e.samples().iter().zip(f.samples()) {
                prop_assert!((a.norm() - b.norm()).abs() < 1e-10);
            }
            let spec = forward_transform(&f);
            let out: f64 = spec.indexed().filter(|(k, _)| *k < 0 || *k > 7).map(|(_, v)| v.norm_sqr()).sum();
            let tot: f64 = spec.coeffs().iter().map(|v| v.norm_sqr()).sum();
            prop_assert!(out < 1e-8 * tot);
            prop_assert_eq!(zeros_oracle(&f).unwrap().len(), zs.len() - 1);
        }
    }
}
