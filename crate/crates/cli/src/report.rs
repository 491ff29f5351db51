//! JSON report documents. Every report carries `schema_version` and `kind`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub path: String,
    pub label: String,
    pub n_samples: usize,
    pub dt: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsJson {
    pub half_plane: bool,
    /// Rotation into the right half-plane, when one exists.
    pub half_plane_rotation: Option<f64>,
    pub envelope: bool,
    pub spectral_energy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroJson {
    pub t_k: f64,
    pub tau_abs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitJson {
    pub theta: f64,
    pub zeros: Vec<ZeroJson>,
    /// Decades below the peak over which the fitted model tracks `|H - 1|` to 10%.
    pub agreement_decades: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisJson {
    pub schema_version: u32,
    pub kind: String,
    pub input: InputEcho,
    pub winding: i64,
    pub zero_count: u64,
    pub min_phase: bool,
    pub conditions: ConditionsJson,
    pub phase_bias: f64,
    pub min_abs: f64,
    pub average: [f64; 2],
    pub zeros: Vec<ZeroJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    /// Relative RMS distance between the field and its minimum-phase projection.
    pub reconstruction_error: f64,
}

/// SNR in dB; infinity is written as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr(pub f64);

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Snr(x)),
            Raw::Text(t) => crate::parse_snr(&t).map(Snr).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEcho {
    pub constellation: String,
    pub bias: f64,
    pub beta: f64,
    pub n_sym: usize,
    pub oversample: usize,
    pub seed: u64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: Snr,
    pub ser: f64,
    pub ser_sigma: f64,
    pub symbols: usize,
    pub symbol_errors: usize,
    /// Mean over trials whose reception succeeded.
    pub field_rms_error: Option<f64>,
    pub winding_violations: usize,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationJson {
    pub schema_version: u32,
    pub kind: String,
    pub config: LinkEcho,
    pub results: Vec<SnrPoint>,
}
