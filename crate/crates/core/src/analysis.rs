//! Minimum-phase test, sufficiency conditions and logarithmic-Hilbert phase retrieval.
//!
//! A periodic SSB field `E(t) = Σ_{k≥0} α_k w^k`, `w = e^{-2πit/T_w}`, is minimum
//! phase iff its trajectory does not wind around the origin. The winding is
//! signed: `-N` means the field circles the origin `N` times clockwise, which
//! is what each zero inside the unit `w`-disk (a lower-half-plane zero in `t`)
//! contributes. For minimum-phase fields the phase follows from the intensity,
//!
//! ```text
//! φ(t) = φ̄ + hilbert(½ log I)(t),
//! ```
//!
//! and `φ̄` is both the time average of `φ` and `arg` of the time average of `E`.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::signal::{
    decimate, forward_transform, hilbert_real, time_average, upsample, Complex, ComplexSignal, RealSignal, SignalError,
    Spectrum,
};

/// Relative intensity floor below which a sample counts as a zero of the field.
pub const INTENSITY_FLOOR: f64 = 1e-30;

/// Steps with a larger sampled phase increment are bisected before being accumulated.
const REFINE_STEP: f64 = PI / 4.0;
const REFINE_DEPTH: u32 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("|E| = {magnitude:e} at sample {index} is below the zero floor")]
    ZeroCrossing { index: usize, magnitude: f64 },
    #[error("accumulated phase is {residue} turns away from an integer; trajectory under-sampled")]
    Undersampled { residue: f64 },
    #[error("field winds {winding} times around the origin")]
    NotMinimumPhase { winding: i64 },
    #[error("intensity {value:e} at sample {index} is not above the floor")]
    NonPositiveIntensity { index: usize, value: f64 },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

pub(crate) fn check_floor(sig: &ComplexSignal) -> Result<(), AnalysisError> {
    let floor = sig.max_abs() * INTENSITY_FLOOR.sqrt();
    for (index, z) in sig.samples().iter().enumerate() {
        let magnitude = z.norm();
        if magnitude <= floor || magnitude == 0.0 {
            return Err(AnalysisError::ZeroCrossing { index, magnitude });
        }
    }
    Ok(())
}

/// Running state of the unwrapped phase along the (refined) trajectory.
struct PhaseWalk {
    phase: f64,
    lo: f64,
    hi: f64,
}

impl PhaseWalk {
    fn step(&mut self, d: f64) {
        self.phase += d;
        self.lo = self.lo.min(self.phase);
        self.hi = self.hi.max(self.phase);
    }
}

/// Walks the closed trajectory, bisecting any step larger than `REFINE_STEP` using
/// the exact trigonometric interpolant.
fn walk_phase(sig: &ComplexSignal) -> Result<PhaseWalk, AnalysisError> {
    check_floor(sig)?;
    let s = sig.samples();
    let grid = sig.grid();
    let n = s.len();
    let mut spec: Option<Spectrum> = None;
    let start = s[0].arg();
    let mut walk = PhaseWalk { phase: start, lo: start, hi: start };
    for j in 0..n {
        let (a, b) = (s[j], s[(j + 1) % n]);
        let d = (b * a.conj()).arg();
        if d.abs() <= REFINE_STEP {
            walk.step(d);
            continue;
        }
        let spec = spec.get_or_insert_with(|| forward_transform(sig));
        let ta = grid.time(j);
        refine(spec, ta, ta + grid.dt(), a, b, REFINE_DEPTH, &mut walk);
    }
    walk.phase -= start;
    Ok(walk)
}

/// Total continuous phase change of `E(t)` over one period, in radians.
pub fn accumulated_phase(sig: &ComplexSignal) -> Result<f64, AnalysisError> {
    Ok(walk_phase(sig)?.phase)
}

fn refine(spec: &Spectrum, ta: f64, tb: f64, a: Complex, b: Complex, depth: u32, walk: &mut PhaseWalk) {
    let d = (b * a.conj()).arg();
    let tm = 0.5 * (ta + tb);
    let m = if d.abs() <= REFINE_STEP || depth == 0 { None } else { Some(spec.evaluate(tm)) };
    match m {
        Some(m) if m.norm() > 0.0 => {
            refine(spec, ta, tm, a, m, depth - 1, walk);
            refine(spec, tm, tb, m, b, depth - 1, walk);
        }
        _ => walk.step(d),
    }
}

/// Signed winding number of the trajectory around the origin (see module docs for the sign).
pub fn winding_number(sig: &ComplexSignal) -> Result<i64, AnalysisError> {
    let turns = accumulated_phase(sig)? / TAU;
    let n = turns.round();
    let residue = (turns - n).abs();
    if residue >= 0.25 {
        return Err(AnalysisError::Undersampled { residue });
    }
    Ok(n as i64)
}

/// Sufficient conditions for minimum phase.
///
/// `envelope` is evaluated on the samples; `half_plane` follows the continuous
/// trajectory, so a zero passing between samples is not missed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditions {
    /// `Some(φ₀)` with `Re[E(t)e^{iφ₀}] > 0` along the trajectory, if such an angle exists.
    pub half_plane: Option<f64>,
    /// `max|E - Ē|² < |Ē|²`.
    pub envelope: bool,
    /// `|Ē| > Σ_k |α_k|` over the Fourier amplitudes of `E - Ē`, a spectral bound on `max|E - Ē|`.
    pub spectral_energy: bool,
}

/// Evaluates the sufficiency conditions; `bias` defaults to the time average.
pub fn check_conditions(sig: &ComplexSignal, bias: Option<Complex>) -> Conditions {
    let bias = bias.unwrap_or_else(|| time_average(sig));
    let b2 = bias.norm_sqr();
    let envelope = sig.samples().iter().all(|z| (z - bias).norm_sqr() < b2);

    let spec = forward_transform(sig);
    let tw = sig.grid().period();
    let mut amp = (spec.coeff(0) / tw - bias).norm();
    for (k, c) in spec.indexed() {
        if k != 0 {
            amp += c.norm() / tw;
        }
    }
    let spectral_energy = amp < bias.norm();

    Conditions { half_plane: half_plane_angle(sig), envelope, spectral_energy }
}

/// Rotation `φ₀` that maps the trajectory into the open right half-plane, if one exists:
/// the unwrapped phase must stay within an arc shorter than π.
fn half_plane_angle(sig: &ComplexSignal) -> Option<f64> {
    let walk = walk_phase(sig).ok()?;
    if walk.hi - walk.lo >= PI {
        return None;
    }
    Some((-(walk.hi + walk.lo) / 2.0).rem_euclid(TAU))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub winding: i64,
    /// `|winding|`, the number of lower-half-plane zeros.
    pub zero_count: u64,
    pub min_phase: bool,
    pub conditions: Conditions,
    /// `arg Ē_av`, the natural phase bias for retrieval.
    pub phase_bias: f64,
    pub min_abs: f64,
    pub average: Complex,
}

pub fn analyze(sig: &ComplexSignal) -> Result<AnalysisReport, AnalysisError> {
    let winding = winding_number(sig)?;
    let average = time_average(sig);
    Ok(AnalysisReport {
        winding,
        zero_count: winding.unsigned_abs(),
        min_phase: winding == 0,
        conditions: check_conditions(sig, None),
        phase_bias: average.arg(),
        min_abs: sig.min_abs(),
        average,
    })
}

/// `arg` of the time average.
pub fn phase_bias(sig: &ComplexSignal) -> f64 {
    time_average(sig).arg()
}

/// `G(t) = log[E(t)/Ē]` with a continuous imaginary part whose mean is nearest zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LogField {
    signal: ComplexSignal,
    bias: Complex,
}

impl LogField {
    pub fn samples(&self) -> &[Complex] {
        self.signal.samples()
    }

    pub fn as_signal(&self) -> &ComplexSignal {
        &self.signal
    }

    pub fn bias(&self) -> Complex {
        self.bias
    }

    /// `Ē·exp(G)`, which reproduces the field.
    pub fn exp(&self) -> ComplexSignal {
        let b = self.bias;
        self.signal.map(|g| b * g.exp()).expect("finite log field")
    }
}

pub fn log_field(sig: &ComplexSignal, bias: Complex) -> Result<LogField, AnalysisError> {
    let winding = winding_number(sig)?;
    if winding != 0 {
        return Err(AnalysisError::NotMinimumPhase { winding });
    }
    if bias.norm() == 0.0 {
        return Err(SignalError::InvalidParameter("log field needs a nonzero bias".into()).into());
    }
    let s = sig.samples();
    let mut g = Vec::with_capacity(s.len());
    let mut phase = (s[0] / bias).arg();
    for (j, z) in s.iter().enumerate() {
        if j > 0 {
            phase += (z * s[j - 1].conj()).arg();
        }
        g.push(Complex::new((z.norm() / bias.norm()).ln(), phase));
    }
    let mean_im = g.iter().map(|z| z.im).sum::<f64>() / g.len() as f64;
    let shift = (mean_im / TAU).round() * TAU;
    for z in &mut g {
        z.im -= shift;
    }
    Ok(LogField { signal: ComplexSignal::new(*sig.grid(), g)?, bias })
}

/// How finely the intensity is interpolated before taking its logarithm.
///
/// `log I` is not band-limited, so a Hilbert transform on the sampling grid
/// aliases; interpolating the (band-limited) intensity first removes that error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oversampling {
    /// Fixed power-of-two interpolation factor (1 = raw grid).
    Fixed(usize),
    /// Double the factor until the phase moves by less than `tolerance` (radians),
    /// never exceeding `max_samples` points on the fine grid.
    Converge { tolerance: f64, max_samples: usize },
}

impl Default for Oversampling {
    fn default() -> Self {
        Oversampling::Converge { tolerance: 1e-11, max_samples: 1 << 23 }
    }
}

/// Treatment of intensity samples at or below the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntensityFloor {
    /// Fail with [`AnalysisError::NonPositiveIntensity`] (floor `1e-30·max I`).
    Reject,
    /// Clamp up to `relative·max I` and count the clamped samples.
    Clamp { relative: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Retrieval {
    pub oversampling: Oversampling,
    pub floor: IntensityFloor,
}

impl Default for IntensityFloor {
    fn default() -> Self {
        IntensityFloor::Reject
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedPhase {
    pub phase: RealSignal,
    /// Samples of the input raised to the floor.
    pub clamped: usize,
    /// Interpolation factor finally used.
    pub factor: usize,
}

impl Retrieval {
    pub fn phase(&self, intensity: &RealSignal, phase_bias: f64) -> Result<RetrievedPhase, AnalysisError> {
        let (intensity, floor, clamped) = self.prepare(intensity)?;
        let n = intensity.grid().n_samples();
        let phase = match self.oversampling {
            Oversampling::Fixed(f) => (self.log_hilbert(&intensity, floor, f)?, f),
            Oversampling::Converge { tolerance, max_samples } => {
                let mut f = if n * 4 <= max_samples { 4 } else { 1 };
                let mut cur = self.log_hilbert(&intensity, floor, f)?;
                let mut change = f64::INFINITY;
                while n * f * 2 <= max_samples {
                    let next = self.log_hilbert(&intensity, floor, f * 2)?;
                    f *= 2;
                    change = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    cur = next;
                    if change < tolerance {
                        break;
                    }
                }
                if change >= tolerance {
                    log::warn!("phase retrieval stopped at {f}x interpolation, last change {change:.1e} rad");
                }
                (cur, f)
            }
        };
        let (samples, factor) = phase;
        let samples = samples.into_iter().map(|p| p + phase_bias).collect();
        Ok(RetrievedPhase { phase: RealSignal::new(*intensity.grid(), samples)?, clamped, factor })
    }

    /// `E₀ = √I·e^{iφ}` together with the retrieval details.
    pub fn field(&self, intensity: &RealSignal, phase_bias: f64) -> Result<(ComplexSignal, RetrievedPhase), AnalysisError> {
        let r = self.phase(intensity, phase_bias)?;
        let (floor, _) = self.floor_value(intensity);
        let samples = intensity
            .samples()
            .iter()
            .zip(r.phase.samples())
            .map(|(&i, &p)| Complex::from_polar(i.max(floor).sqrt(), p))
            .collect();
        Ok((ComplexSignal::new(*intensity.grid(), samples)?, r))
    }

    fn floor_value(&self, intensity: &RealSignal) -> (f64, bool) {
        let max = intensity.samples().iter().copied().fold(0.0, f64::max);
        match self.floor {
            IntensityFloor::Reject => (max * INTENSITY_FLOOR, false),
            IntensityFloor::Clamp { relative } => (max * relative, true),
        }
    }

    fn prepare(&self, intensity: &RealSignal) -> Result<(RealSignal, f64, usize), AnalysisError> {
        let (floor, clamp) = self.floor_value(intensity);
        if floor <= 0.0 {
            return Err(AnalysisError::NonPositiveIntensity { index: 0, value: 0.0 });
        }
        let mut clamped = 0;
        let mut out = Vec::with_capacity(intensity.samples().len());
        for (index, &value) in intensity.samples().iter().enumerate() {
            if value <= floor {
                if !clamp {
                    return Err(AnalysisError::NonPositiveIntensity { index, value });
                }
                clamped += 1;
                out.push(floor);
            } else {
                out.push(value);
            }
        }
        Ok((RealSignal::new(*intensity.grid(), out)?, floor, clamped))
    }

    /// Zero-mean `hilbert(½ log I)` on the input grid, computed on a grid `factor` times finer.
    fn log_hilbert(&self, intensity: &RealSignal, floor: f64, factor: usize) -> Result<Vec<f64>, AnalysisError> {
        let fine = upsample(&intensity.to_complex(), factor)?;
        let clamp = matches!(self.floor, IntensityFloor::Clamp { .. });
        let mut half_log = Vec::with_capacity(fine.len());
        for (j, z) in fine.samples().iter().enumerate() {
            let mut v = z.re;
            if v <= floor {
                if !clamp {
                    return Err(AnalysisError::NonPositiveIntensity { index: j / factor, value: v });
                }
                v = floor;
            }
            half_log.push(0.5 * v.ln());
        }
        let h = hilbert_real(&RealSignal::new(*fine.grid(), half_log)?);
        let coarse = decimate(&h.to_complex(), factor)?;
        let mut phase: Vec<f64> = coarse.samples().iter().map(|z| z.re).collect();
        // the decimated samples pick up aliased high-frequency content in their mean
        let mean = phase.iter().sum::<f64>() / phase.len() as f64;
        phase.iter_mut().for_each(|p| *p -= mean);
        Ok(phase)
    }
}

/// `φ(t) = φ̄ + hilbert(½ log I)` with default (converging) interpolation.
pub fn retrieve_phase(intensity: &RealSignal, phase_bias: f64) -> Result<RealSignal, AnalysisError> {
    Ok(Retrieval::default().phase(intensity, phase_bias)?.phase)
}

/// The minimum-phase field with the given intensity, `√I·e^{iφ}`.
pub fn minphase_signal(intensity: &RealSignal, phase_bias: f64) -> Result<ComplexSignal, AnalysisError> {
    Ok(Retrieval::default().field(intensity, phase_bias)?.0)
}

/// `min_θ RMS(a - b e^{iθ}) / RMS(a)`, attained at `θ = arg Σ a·conj(b)`.
pub fn reconstruction_error(a: &ComplexSignal, b: &ComplexSignal) -> Result<f64, SignalError> {
    a.check_grid(b)?;
    let cross: Complex = a.samples().iter().zip(b.samples()).map(|(x, y)| x * y.conj()).sum();
    let rot = if cross.norm() > 0.0 { cross / cross.norm() } else { Complex::new(1.0, 0.0) };
    let num: f64 = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y * rot).norm_sqr()).sum();
    let den: f64 = a.samples().iter().map(|x| x.norm_sqr()).sum();
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}

/// Intensity `|E|²`.
pub fn intensity(sig: &ComplexSignal) -> RealSignal {
    RealSignal::new(*sig.grid(), sig.samples().iter().map(|z| z.norm_sqr()).collect())
        .expect("finite field has finite intensity")
        .with_label(sig.label.clone())
}
