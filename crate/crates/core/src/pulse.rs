//! Root-raised-cosine pulses, shifted constellations and SSB signal synthesis.
//!
//! A symbol block `a_0 … a_{N-1}` is carried by
//!
//! ```text
//! E_s(t) = Σ_n a_n e^{-i(1+β)π(t-nT)/T} H_β(t-nT)
//! ```
//!
//! whose spectrum occupies `(0, 2πB)` with `B = (1+β)/T`. Pulses wrap
//! periodically onto the grid, so the block length must equal the grid period.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::signal::{fft_minus, fft_plus, forward_transform, inverse_transform, Complex, ComplexSignal, SignalError, Spectrum, TimeGrid};

/// Distance from a removable singularity below which limits are used.
const SINGULAR_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    beta: f64,
    t_sym: f64,
}

impl PulseConfig {
    pub fn new(beta: f64, t_sym: f64) -> Result<Self, SignalError> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(SignalError::InvalidParameter(format!("roll-off must lie in (0, 1], got {beta}")));
        }
        if !(t_sym > 0.0 && t_sym.is_finite()) {
            return Err(SignalError::InvalidParameter(format!("symbol period must be positive, got {t_sym}")));
        }
        Ok(Self { beta, t_sym })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn t_sym(&self) -> f64 {
        self.t_sym
    }

    /// `B = (1+β)/T` in Hz.
    pub fn b_limit(&self) -> f64 {
        (1.0 + self.beta) / self.t_sym
    }

    /// Angular carrier `(1+β)π/T` that centres the pulse spectrum in `(0, 2πB)`.
    pub fn carrier(&self) -> f64 {
        (1.0 + self.beta) * PI / self.t_sym
    }

    /// Samples per symbol on `grid` for a block of `n_sym` symbols; checks the block fills the period.
    pub fn oversampling(&self, grid: &TimeGrid, n_sym: usize) -> Result<usize, SignalError> {
        let span = n_sym as f64 * self.t_sym;
        if n_sym == 0 || (span - grid.period()).abs() > 1e-9 * grid.period() {
            return Err(SignalError::InvalidParameter(format!(
                "grid period {} does not match {n_sym} symbols of {}",
                grid.period(),
                self.t_sym
            )));
        }
        let n = grid.n_samples();
        if n % n_sym != 0 {
            return Err(SignalError::InvalidParameter(format!("{n} samples do not divide into {n_sym} symbols")));
        }
        let m = n / n_sym;
        if m < 4 {
            return Err(SignalError::InvalidParameter(format!("oversampling {m} < 4 aliases the signal band")));
        }
        Ok(m)
    }
}

/// `H_β(t)`, including the `β → 0` limit `sinc(πt/T)/√T`.
pub fn rrc_pulse_beta(t: f64, beta: f64, t_sym: f64) -> f64 {
    let x = t / t_sym;
    let norm = 1.0 / t_sym.sqrt();
    if x.abs() < SINGULAR_BAND {
        return norm * (1.0 - beta + 4.0 * beta / PI);
    }
    if beta == 0.0 {
        return norm * (PI * x).sin() / (PI * x);
    }
    let xs = 1.0 / (4.0 * beta);
    if (x.abs() - xs).abs() < SINGULAR_BAND * xs {
        // linear interpolation across the removable singularity
        let (xa, xb) = (xs * (1.0 - 2.0 * SINGULAR_BAND), xs * (1.0 + 2.0 * SINGULAR_BAND));
        let (ha, hb) = (rrc_raw(xa, beta), rrc_raw(xb, beta));
        return norm * (ha + (hb - ha) * (x.abs() - xa) / (xb - xa));
    }
    norm * rrc_raw(x.abs(), beta)
}

fn rrc_raw(x: f64, beta: f64) -> f64 {
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    let den = PI * x * (1.0 - (4.0 * beta * x).powi(2));
    num / den
}

pub fn rrc_pulse(t: f64, cfg: &PulseConfig) -> f64 {
    rrc_pulse_beta(t, cfg.beta, cfg.t_sym)
}

/// `C_β(x)`; for `β = 0` this is the limit object (`1/√2` at `|x| = 1/2`).
pub fn rrc_spectrum_beta(x: f64, beta: f64) -> f64 {
    let ax = x.abs();
    let lo = (1.0 - beta) / 2.0;
    let hi = (1.0 + beta) / 2.0;
    if beta == 0.0 {
        return if ax < 0.5 {
            1.0
        } else if ax == 0.5 {
            FRAC_1_SQRT_2
        } else {
            0.0
        };
    }
    if ax <= lo {
        1.0
    } else if ax <= hi {
        (PI / (2.0 * beta) * (ax - lo)).cos()
    } else {
        0.0
    }
}

pub fn rrc_spectrum(x: f64, cfg: &PulseConfig) -> f64 {
    rrc_spectrum_beta(x, cfg.beta)
}

/// Pulse spectrum `H̃_β(ω - (1+β)π/T)` at grid frequency index `k` of a block of `n_sym` symbols.
fn shifted_pulse_spectrum(k: i64, n_sym: usize, cfg: &PulseConfig) -> f64 {
    let x = k as f64 / n_sym as f64 - (1.0 + cfg.beta) / 2.0;
    cfg.t_sym.sqrt() * rrc_spectrum(x, cfg)
}

/// Symbol alphabets, in units of `√T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constellation {
    /// `(b+k₁) + i(b+k₂)`, `k₁,k₂ ∈ {0,…,levels-1}`. The literal "16QAM" grid uses 8 levels.
    ShiftedQam { bias: f64, levels: usize },
    /// `b + k`, `k ∈ {0,…,levels-1}`.
    ShiftedAm { bias: f64, levels: usize },
    /// Square grid `(a+½+k₁) + i(a+½+k₂)`, `k ∈ {0,…,3}`: every point has both quadratures above `a`.
    BiasedQuadrant { margin: f64 },
}

impl Constellation {
    pub fn shifted_16qam(bias: f64) -> Self {
        Constellation::ShiftedQam { bias, levels: 8 }
    }

    /// The 4×4 reading of "16QAM".
    pub fn shifted_16qam_compact(bias: f64) -> Self {
        Constellation::ShiftedQam { bias, levels: 4 }
    }

    pub fn shifted_8am(bias: f64) -> Self {
        Constellation::ShiftedAm { bias, levels: 8 }
    }

    pub fn biased_quadrant(margin: f64) -> Self {
        Constellation::BiasedQuadrant { margin }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let (offset, levels) = self.offset_levels();
        if !offset.is_finite() || offset < 0.0 {
            return Err(SignalError::InvalidParameter(format!("constellation bias must be non-negative, got {offset}")));
        }
        if levels < 2 {
            return Err(SignalError::InvalidParameter(format!("need at least two levels, got {levels}")));
        }
        Ok(())
    }

    fn offset_levels(&self) -> (f64, usize) {
        match *self {
            Constellation::ShiftedQam { bias, levels } => (bias, levels),
            Constellation::ShiftedAm { bias, levels } => (bias, levels),
            Constellation::BiasedQuadrant { margin } => (margin + 0.5, 4),
        }
    }

    pub fn is_quadrature(&self) -> bool {
        !matches!(self, Constellation::ShiftedAm { .. })
    }

    pub fn levels(&self) -> usize {
        self.offset_levels().1
    }

    /// Point for level indices (imaginary index ignored for AM), in units of `√T`.
    pub fn point(&self, k1: usize, k2: usize) -> Complex {
        let (b, _) = self.offset_levels();
        if self.is_quadrature() {
            Complex::new(b + k1 as f64, b + k2 as f64)
        } else {
            Complex::new(b + k1 as f64, 0.0)
        }
    }

    /// Mean of the equiprobable alphabet, in units of `√T`.
    pub fn centroid(&self) -> Complex {
        let (b, levels) = self.offset_levels();
        let mid = b + (levels as f64 - 1.0) / 2.0;
        if self.is_quadrature() {
            Complex::new(mid, mid)
        } else {
            Complex::new(mid, 0.0)
        }
    }

    /// Nearest level indices for `y` (units of `√T`); ties go to the smaller index.
    pub fn decide(&self, y: Complex) -> (usize, usize) {
        let (b, levels) = self.offset_levels();
        let q = |x: f64| -> usize {
            let k = (x - b - 0.5).ceil();
            k.clamp(0.0, (levels - 1) as f64) as usize
        };
        if self.is_quadrature() {
            (q(y.re), q(y.im))
        } else {
            (q(y.re), 0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    /// `a_n` including the `√T` factor.
    pub symbols: Vec<Complex>,
    /// Level indices `(k₁, k₂)` behind each symbol (`k₂ = 0` for AM).
    pub indices: Vec<(usize, usize)>,
    pub seed: u64,
    pub constellation: Constellation,
    /// Constant field `Ē` added on top of the pulses.
    pub bias_field: Option<Complex>,
    pub t_sym: f64,
}

impl SymbolSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Moves the constellation centroid `c` onto a constant carrier: the pulses carry
    /// `a_n - c√T` and `Ē = c/√T`. The field is `Ē + Σ(a_n - c√T)p_n`, whose mean is `Ē`.
    pub fn centroid_carrier(&self) -> SymbolSequence {
        let sq = self.t_sym.sqrt();
        let c = self.constellation.centroid();
        SymbolSequence {
            symbols: self.symbols.iter().map(|a| a - c * sq).collect(),
            bias_field: Some(c / sq + self.bias_field.unwrap_or_default()),
            ..self.clone()
        }
    }

    /// Number of positions whose level indices differ.
    pub fn symbol_errors(&self, other: &SymbolSequence) -> usize {
        self.error_indices(other).len()
    }

    pub fn error_indices(&self, other: &SymbolSequence) -> Vec<usize> {
        self.indices.iter().zip(&other.indices).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i).collect()
    }
}

/// Seeded uniform draw of `n_sym` symbols.
pub fn make_constellation(
    kind: Constellation,
    n_sym: usize,
    seed: u64,
    t_sym: f64,
) -> Result<SymbolSequence, SignalError> {
    kind.validate()?;
    if n_sym == 0 {
        return Err(SignalError::InvalidParameter("need at least one symbol".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = kind.levels();
    let sq = t_sym.sqrt();
    let mut symbols = Vec::with_capacity(n_sym);
    let mut indices = Vec::with_capacity(n_sym);
    for _ in 0..n_sym {
        let k1 = rng.random_range(0..levels);
        let k2 = if kind.is_quadrature() { rng.random_range(0..levels) } else { 0 };
        symbols.push(kind.point(k1, k2) * sq);
        indices.push((k1, k2));
    }
    Ok(SymbolSequence { symbols, indices, seed, constellation: kind, bias_field: None, t_sym })
}

/// Sequence with explicit level indices (no randomness).
pub fn symbols_from_indices(kind: Constellation, indices: Vec<(usize, usize)>, t_sym: f64) -> SymbolSequence {
    let sq = t_sym.sqrt();
    SymbolSequence {
        symbols: indices.iter().map(|&(a, b)| kind.point(a, b) * sq).collect(),
        indices,
        seed: 0,
        constellation: kind,
        bias_field: None,
        t_sym,
    }
}

/// Time-domain synthesis with each pulse wrapped to its nearest periodic image.
pub fn synthesize(seq: &SymbolSequence, cfg: &PulseConfig, grid: &TimeGrid) -> Result<ComplexSignal, SignalError> {
    let n_sym = seq.len();
    cfg.oversampling(grid, n_sym)?;
    let tw = grid.period();
    let t = cfg.t_sym;
    let bias = seq.bias_field.unwrap_or_default();
    let carrier = cfg.carrier();
    let samples = grid
        .times()
        .map(|tj| {
            let mut acc = bias;
            for (n, a) in seq.symbols.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let d = (tj - n as f64 * t + tw / 2.0).rem_euclid(tw) - tw / 2.0;
                acc += a * Complex::from_polar(rrc_pulse(d, cfg), -carrier * d);
            }
            acc
        })
        .collect();
    ComplexSignal::new(*grid, samples)
}

/// Exactly band-limited synthesis from the spectrum `Σ a_n e^{inTω} H̃_β(ω - (1+β)π/T)`.
pub fn synthesize_spectral(
    seq: &SymbolSequence,
    cfg: &PulseConfig,
    grid: &TimeGrid,
) -> Result<ComplexSignal, SignalError> {
    Ok(inverse_transform(&synthesis_spectrum(seq, cfg, grid)?))
}

pub fn synthesis_spectrum(seq: &SymbolSequence, cfg: &PulseConfig, grid: &TimeGrid) -> Result<Spectrum, SignalError> {
    let n_sym = seq.len();
    cfg.oversampling(grid, n_sym)?;
    // A[m] = Σ_n a_n e^{2πi nm/N}, periodic in the frequency index with period N
    let mut a = seq.symbols.clone();
    fft_plus(&mut a);
    let mut spec = Spectrum::zeros(*grid);
    let n = grid.n_samples() as i64;
    for k in 1..n / 2 {
        let h = shifted_pulse_spectrum(k, n_sym, cfg);
        if h != 0.0 {
            spec.set_coeff(k, a[(k as usize) % n_sym] * h);
        }
    }
    if let Some(bias) = seq.bias_field {
        spec.set_coeff(0, bias * grid.period());
    }
    Ok(spec)
}

/// Correlates the field with each pulse, `y_n = ∫ E(t) conj(p_n(t)) dt`.
///
/// A constant field does not leak into `y_n` since the pulse spectrum vanishes at DC.
pub fn matched_filter(sig: &ComplexSignal, cfg: &PulseConfig, n_sym: usize) -> Result<Vec<Complex>, SignalError> {
    cfg.oversampling(sig.grid(), n_sym)?;
    let spec = forward_transform(sig);
    let mut z = vec![Complex::new(0.0, 0.0); n_sym];
    for (k, c) in spec.indexed() {
        let h = shifted_pulse_spectrum(k, n_sym, cfg);
        if h != 0.0 {
            z[k.rem_euclid(n_sym as i64) as usize] += c * h;
        }
    }
    fft_minus(&mut z);
    let tw = sig.grid().period();
    Ok(z.into_iter().map(|y| y / tw).collect())
}
