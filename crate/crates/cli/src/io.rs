//! Signal files: `#`-prefixed `key=value` header lines followed by CSV rows.
//!
//! ```text
//! # minphase-signal v1
//! # n_samples=256
//! # dt=6.2500000000000000e-2
//! # t0=0.0000000000000000e0
//! # label=transmitted field
//! t,re,im
//! 0.0000000000000000e0,...
//! ```
//!
//! Intensity files use the `minphase-intensity` schema and columns `t,intensity`.
//! Floats are written with 17 significant digits so files round-trip exactly.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use minphase::signal::{Complex, ComplexSignal, RealSignal, TimeGrid};

pub const SCHEMA_VERSION: u32 = 1;
const FIELD_KIND: &str = "minphase-signal";
const INTENSITY_KIND: &str = "minphase-intensity";

struct Header {
    grid: TimeGrid,
    label: String,
}

fn write_header(out: &mut (impl Write + ?Sized), kind: &str, grid: &TimeGrid, label: &str) -> std::io::Result<()> {
    writeln!(out, "# {kind} v{SCHEMA_VERSION}")?;
    writeln!(out, "# n_samples={}", grid.n_samples())?;
    writeln!(out, "# dt={:.16e}", grid.dt())?;
    writeln!(out, "# t0={:.16e}", grid.t0())?;
    writeln!(out, "# label={}", label.replace('\n', " "))
}

pub fn write_field(out: &mut (impl Write + ?Sized), sig: &ComplexSignal) -> Result<()> {
    write_header(out, FIELD_KIND, sig.grid(), &sig.label)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "re", "im"])?;
    for (j, z) in sig.samples().iter().enumerate() {
        w.write_record([
            format!("{:.16e}", sig.grid().time(j)),
            format!("{:.16e}", z.re),
            format!("{:.16e}", z.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_intensity(out: &mut (impl Write + ?Sized), sig: &RealSignal) -> Result<()> {
    write_header(out, INTENSITY_KIND, sig.grid(), &sig.label)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "intensity"])?;
    for (j, v) in sig.samples().iter().enumerate() {
        w.write_record([format!("{:.16e}", sig.grid().time(j)), format!("{v:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_header(text: &str, kind: &str) -> Result<Header> {
    let mut lines = text.lines().take_while(|l| l.starts_with('#')).map(|l| l.trim_start_matches('#').trim());
    let magic = lines.next().context("missing header")?;
    let version = magic
        .strip_prefix(kind)
        .and_then(|v| v.trim().strip_prefix('v'))
        .with_context(|| format!("expected a `{kind}` file, found header `{magic}`"))?;
    let version: u32 = version.parse().with_context(|| format!("bad schema version `{version}`"))?;
    ensure!(version == SCHEMA_VERSION, "unsupported schema version {version}");
    let fields: BTreeMap<&str, &str> = lines.filter_map(|l| l.split_once('=')).map(|(k, v)| (k.trim(), v.trim())).collect();
    let get = |k: &str| fields.get(k).copied().with_context(|| format!("header is missing `{k}`"));
    let n: usize = get("n_samples")?.parse().context("bad n_samples")?;
    let dt: f64 = get("dt")?.parse().context("bad dt")?;
    let t0: f64 = fields.get("t0").map_or(Ok(0.0), |v| v.parse()).context("bad t0")?;
    let grid = TimeGrid::new(n, dt)?.with_origin(t0);
    Ok(Header { grid, label: fields.get("label").unwrap_or(&"").to_string() })
}

fn read_rows(text: &str, header: &Header, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let names: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    ensure!(names == columns, "expected columns {columns:?}, found {names:?}");
    let grid = &header.grid;
    let mut rows = Vec::with_capacity(grid.n_samples());
    for (j, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("row {}: not a number", j + 1))?;
        ensure!(vals.len() == columns.len(), "row {}: expected {} values", j + 1, columns.len());
        ensure!(
            (vals[0] - grid.time(j)).abs() <= 1e-9 * grid.period(),
            "row {}: t = {} is off the header grid (expected {})",
            j + 1,
            vals[0],
            grid.time(j)
        );
        rows.push(vals);
    }
    if rows.len() != grid.n_samples() {
        bail!("header declares {} samples but the file has {} rows", grid.n_samples(), rows.len());
    }
    Ok(rows)
}

pub fn parse_field(text: &str) -> Result<ComplexSignal> {
    let header = parse_header(text, FIELD_KIND)?;
    let rows = read_rows(text, &header, &["t", "re", "im"])?;
    let samples = rows.iter().map(|r| Complex::new(r[1], r[2])).collect();
    Ok(ComplexSignal::new(header.grid, samples)?.with_label(header.label))
}

pub fn parse_intensity(text: &str) -> Result<RealSignal> {
    let header = parse_header(text, INTENSITY_KIND)?;
    let rows = read_rows(text, &header, &["t", "intensity"])?;
    Ok(RealSignal::new(header.grid, rows.iter().map(|r| r[1]).collect())?.with_label(header.label))
}

pub fn read_field(path: &Path) -> Result<ComplexSignal> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_field(&text).with_context(|| format!("in {}", path.display()))
}

pub fn read_intensity(path: &Path) -> Result<RealSignal> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_intensity(&text).with_context(|| format!("in {}", path.display()))
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut buf = std::io::BufWriter::new(file);
            write(&mut buf)?;
            buf.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}
