//! Minimum-phase signal analysis for band-limited single-sideband fields.
//!
//! * [`signal`]: periodic grids, Fourier transforms (`e^{+iωt}` forward convention), Hilbert transform.
//! * [`pulse`]: root-raised-cosine pulses, shifted constellations, SSB synthesis.
//! * [`analysis`]: winding number, sufficiency conditions, logarithmic-Hilbert phase retrieval.
//! * [`roots`]: polynomial roots (Aberth-Ehrlich iteration, companion-matrix eigenvalues).
//! * [`zeros`]: root oracle for the field zeros, Blaschke ratio, Lorentzian zero fits, zero flipping.
//! * [`link`]: Kramers-Kronig transmission experiment.

pub mod signal;
pub mod pulse;
pub mod analysis;
pub mod roots;
pub mod zeros;
pub mod link;
