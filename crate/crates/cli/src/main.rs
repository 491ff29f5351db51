//! `minphase` command-line tool: synthesize, analyze and retrieve fields, and run
//! Kramers-Kronig link simulations.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

mod io;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use minphase::analysis::{analyze, intensity, minphase_signal, reconstruction_error, Retrieval};
use minphase::link::{run_experiment, transmit, LinkConfig, LinkResult};
use minphase::pulse::{Constellation, PulseConfig};
use minphase::zeros::{
    agreement_decades, blaschke_model_signal, blaschke_ratio, fit_lorentzians_detailed, zeros_oracle, ZeroEstimate,
};

use report::{AnalysisJson, ConditionsJson, FitJson, InputEcho, LinkEcho, SimulationJson, Snr, SnrPoint, ZeroJson};

#[derive(Parser)]
#[command(name = "minphase", version, about = "Minimum-phase analysis and Kramers-Kronig link simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a pulse-shaped SSB field and write it as CSV.
    Synth(SynthArgs),
    /// Winding number, sufficiency conditions and zeros of a field file.
    Analyze(AnalyzeArgs),
    /// Reconstruct the minimum-phase field from an intensity file.
    Retrieve(RetrieveArgs),
    /// Monte Carlo symbol-error rate of the Kramers-Kronig link.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConstellationKind {
    /// 8x8 grid (b + k1) + i(b + k2), k in 0..8
    Qam16s,
    /// 4x4 grid, k in 0..4
    Qam16sCompact,
    /// Real levels b + k, k in 0..8
    Am8s,
    /// 4x4 grid offset into the first quadrant by `bias + 0.5`
    Quadrant,
}

impl ConstellationKind {
    fn build(self, bias: f64) -> Constellation {
        match self {
            Self::Qam16s => Constellation::shifted_16qam(bias),
            Self::Qam16sCompact => Constellation::shifted_16qam_compact(bias),
            Self::Am8s => Constellation::shifted_8am(bias),
            Self::Quadrant => Constellation::biased_quadrant(bias),
        }
    }

    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Args, Clone)]
struct LinkArgs {
    #[arg(long, value_enum, default_value = "qam16s")]
    constellation: ConstellationKind,
    /// Constellation shift b (margin for `quadrant`).
    #[arg(long, default_value_t = 1.1, allow_hyphen_values = true, value_parser = non_negative)]
    bias: f64,
    /// Roll-off factor in (0, 1].
    #[arg(long, default_value_t = 0.1, value_parser = roll_off)]
    beta: f64,
    /// Number of symbols (power of two).
    #[arg(long, default_value_t = 512, value_parser = power_of_two)]
    nsym: usize,
    /// Samples per symbol (power of two, at least 8).
    #[arg(long, default_value_t = 16, value_parser = samples_per_symbol)]
    oversample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl LinkArgs {
    fn config(&self) -> Result<LinkConfig> {
        let mut cfg = LinkConfig::new(self.constellation.build(self.bias)).with_seed(self.seed);
        cfg.pulse = PulseConfig::new(self.beta, 1.0)?;
        cfg.n_sym = self.nsym;
        cfg.oversampling = self.oversample;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    link: LinkArgs,
    /// Field CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the detected intensity |E|² here.
    #[arg(long)]
    intensity_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Also locate the zeros by fitting the Blaschke ratio.
    #[arg(long)]
    fit_zeros: bool,
    /// JSON report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    intensity: PathBuf,
    /// Phase bias φ̄ in radians (defaults to 0).
    #[arg(long, allow_hyphen_values = true)]
    phase_bias: Option<f64>,
    /// Field to compare the reconstruction against.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Field CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    link: LinkArgs,
    /// Comma-separated SNR values in dB; `inf` for noiseless.
    #[arg(long, value_delimiter = ',', default_value = "inf", value_parser = parse_snr)]
    snr: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Per-trial CSV dump.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// JSON report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn non_negative(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be a finite number ≥ 0, got {s}"))
    }
}

fn roll_off(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x <= 1.0 {
        Ok(x)
    } else {
        Err(format!("must be in (0, 1], got {s}"))
    }
}

fn power_of_two(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n.is_power_of_two() {
        Ok(n)
    } else {
        Err(format!("must be a power of two, got {s}"))
    }
}

fn samples_per_symbol(s: &str) -> Result<usize, String> {
    let n = power_of_two(s)?;
    if n >= 8 {
        Ok(n)
    } else {
        Err(format!("must be at least 8, got {s}"))
    }
}

pub(crate) fn parse_snr(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
        t => {
            let x: f64 = t.parse().map_err(|e| format!("bad SNR `{s}`: {e}"))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(format!("bad SNR `{s}`"))
            }
        }
    }
}

fn zero_json(z: &ZeroEstimate) -> ZeroJson {
    ZeroJson { t_k: z.t_k, tau_abs: z.tau_abs, residual: z.residual }
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    io::emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = args.link.config()?;
    let (field, _) = transmit(&cfg)?;
    io::emit(args.out.as_deref(), |w| io::write_field(w, &field))?;
    if let Some(p) = &args.intensity_out {
        io::emit(Some(p), |w| io::write_intensity(w, &intensity(&field)))?;
    }
    let avg = minphase::signal::time_average(&field);
    match analyze(&field) {
        Ok(r) => eprintln!("winding {}", r.winding),
        Err(e) => eprintln!("winding undefined: {e}"),
    }
    eprintln!("min|E| {:.6e}", field.min_abs());
    eprintln!("mean field {:.6e}{:+.6e}i", avg.re, avg.im);
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let field = io::read_field(&args.input)?;
    let rep = analyze(&field).context("winding number")?;
    let zeros = zeros_oracle(&field).context("zero oracle")?;
    let e0 = minphase_signal(&intensity(&field), rep.phase_bias).context("minimum-phase projection")?;
    let (fit, fit_error) = if args.fit_zeros {
        let n = rep.zero_count as usize;
        match blaschke_ratio(&field, rep.phase_bias).and_then(|h| {
            let f = fit_lorentzians_detailed(&h, n)?;
            let dec = (n > 0).then(|| agreement_decades(&h, &blaschke_model_signal(&f.zeros, f.theta, h.grid()), 0.1));
            Ok(FitJson { theta: f.theta, zeros: f.zeros.iter().map(zero_json).collect(), agreement_decades: dec })
        }) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let g = field.grid();
    let doc = AnalysisJson {
        schema_version: report::SCHEMA_VERSION,
        kind: "analysis".into(),
        input: InputEcho {
            path: args.input.display().to_string(),
            label: field.label.clone(),
            n_samples: g.n_samples(),
            dt: g.dt(),
            t0: g.t0(),
        },
        winding: rep.winding,
        zero_count: rep.zero_count,
        min_phase: rep.min_phase,
        conditions: ConditionsJson {
            half_plane: rep.conditions.half_plane.is_some(),
            half_plane_rotation: rep.conditions.half_plane,
            envelope: rep.conditions.envelope,
            spectral_energy: rep.conditions.spectral_energy,
        },
        phase_bias: rep.phase_bias,
        min_abs: rep.min_abs,
        average: [rep.average.re, rep.average.im],
        zeros: zeros.iter().map(zero_json).collect(),
        fit,
        fit_error,
        reconstruction_error: reconstruction_error(&field, &e0)?,
    };
    write_json(args.out.as_deref(), &doc)
}

fn cmd_retrieve(args: &RetrieveArgs) -> Result<()> {
    let int = io::read_intensity(&args.intensity)?;
    let phi = args.phase_bias.unwrap_or_else(|| {
        log::warn!("--phase-bias not given; using 0");
        0.0
    });
    let (field, details) = Retrieval::default().field(&int, phi).context("phase retrieval")?;
    let field = field.with_label("retrieved field");
    io::emit(args.out.as_deref(), |w| io::write_field(w, &field))?;
    eprintln!("interpolation factor {}", details.factor);
    if let Some(p) = &args.truth {
        let truth = io::read_field(p)?;
        eprintln!("reconstruction error {:.6e}", reconstruction_error(&truth, &field)?);
    }
    Ok(())
}

fn snr_point(snr: f64, r: &LinkResult) -> SnrPoint {
    SnrPoint {
        snr_db: Snr(snr),
        ser: r.ser,
        ser_sigma: r.ser_sigma(),
        symbols: r.symbols,
        symbol_errors: r.symbol_errors,
        field_rms_error: r.field_rms_error.is_finite().then_some(r.field_rms_error),
        winding_violations: r.winding_violations,
        failed_trials: r.trials.iter().filter(|t| t.failure.is_some()).count(),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = args.link.config()?;
    let mut results = Vec::new();
    let mut dump = args.dump.as_ref().map(csv::Writer::from_path).transpose().context("cannot create dump file")?;
    if let Some(d) = dump.as_mut() {
        d.write_record([
            "snr_db",
            "seed",
            "winding",
            "received_winding",
            "symbol_errors",
            "field_rms_error",
            "clamped",
            "failure",
        ])?;
    }
    let opt = |x: Option<i64>| x.map_or(String::new(), |v| v.to_string());
    for &snr in &args.snr {
        let r = run_experiment(&cfg.with_snr_db(snr), args.trials)?;
        if let Some(d) = dump.as_mut() {
            for t in &r.trials {
                d.write_record([
                    if snr.is_finite() { format!("{snr}") } else { "inf".into() },
                    t.seed.to_string(),
                    opt(t.winding),
                    opt(t.received_winding),
                    t.symbol_errors.to_string(),
                    t.field_rms_error.map_or(String::new(), |e| format!("{e:.16e}")),
                    t.clamped.to_string(),
                    t.failure.clone().unwrap_or_default(),
                ])?;
            }
        }
        eprintln!("snr {snr} dB: SER {:.4e} ± {:.1e}", r.ser, r.ser_sigma());
        results.push(snr_point(snr, &r));
    }
    if let Some(mut d) = dump {
        d.flush()?;
    }
    let l = &args.link;
    let doc = SimulationJson {
        schema_version: report::SCHEMA_VERSION,
        kind: "simulation".into(),
        config: LinkEcho {
            constellation: l.constellation.name(),
            bias: l.bias,
            beta: l.beta,
            n_sym: l.nsym,
            oversample: l.oversample,
            seed: l.seed,
            trials: args.trials,
        },
        results,
    };
    write_json(args.out.as_deref(), &doc)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MINPHASE_THREADS") {
        let n: usize = v.parse().with_context(|| format!("MINPHASE_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).format_timestamp(None).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    let run = || -> Result<()> {
        init_threads()?;
        match &cli.command {
            Command::Synth(a) => cmd_synth(a),
            Command::Analyze(a) => cmd_analyze(a),
            Command::Retrieve(a) => cmd_retrieve(a),
            Command::Simulate(a) => cmd_simulate(a),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
