use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minphase"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Number after `key` on a stderr summary line.
fn summary_value(out: &Output, key: &str) -> f64 {
    let s = stderr(out);
    let line = s.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no `{key}` in {s}"));
    line[key.len()..].trim().parse().unwrap()
}

/// Structural equality with a relative/absolute float tolerance.
fn assert_json_close(got: &Value, want: &Value, path: &str) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{path}: {a} vs {b}");
        }
        (Value::Object(a), Value::Object(b)) => {
            let mut ka: Vec<_> = a.keys().collect();
            let mut kb: Vec<_> = b.keys().collect();
            ka.sort();
            kb.sort();
            assert_eq!(ka, kb, "{path}: keys differ");
            for k in kb {
                assert_json_close(&a[k], &b[k], &format!("{path}.{k}"));
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}: lengths differ");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                assert_json_close(x, y, &format!("{path}[{i}]"));
            }
        }
        _ => assert_eq!(got, want, "{path}"),
    }
}

fn analyze_json(path: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["analyze", "--in", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    serde_json::from_slice(&ok(&args).stdout).unwrap()
}

#[test]
fn analyze_matches_golden_report() {
    let mut got = analyze_json(&fixture("one_plus_two_tone.csv"), &["--fit-zeros"]);
    let text = std::fs::read_to_string(fixture("one_plus_two_tone.analysis.json")).unwrap();
    let mut want: Value = serde_json::from_str(&text).unwrap();
    // the input path echoes however the file was named on the command line
    got["input"]["path"] = Value::Null;
    want["input"]["path"] = Value::Null;
    assert_json_close(&got, &want, "report");
}

#[test]
fn analyze_fixture_has_one_zero_at_half_period() {
    let r = analyze_json(&fixture("one_plus_two_tone.csv"), &[]);
    let tw = 64.0 / 16.0;
    assert_eq!(r["winding"].as_i64().unwrap().abs(), 1);
    assert_eq!(r["min_phase"], Value::Bool(false));
    let zeros = r["zeros"].as_array().unwrap();
    assert_eq!(zeros.len(), 1);
    let t_k = zeros[0]["t_k"].as_f64().unwrap();
    let tau = zeros[0]["tau_abs"].as_f64().unwrap();
    assert!((t_k - tw / 2.0).abs() < 1e-9 * tw);
    assert!((tau - tw / std::f64::consts::TAU * std::f64::consts::LN_2).abs() < 1e-9 * tau);
    assert!(r.get("fit").is_none());
}

#[test]
fn synth_is_deterministic_and_analyzes_as_minimum_phase() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let flags = ["synth", "--constellation", "qam16s", "--bias", "1.1", "--nsym", "64", "--seed", "1"];
    let out = ok(&[&flags[..], &["--out", a.to_str().unwrap()]].concat());
    assert_eq!(summary_value(&out, "winding"), 0.0);
    ok(&[&flags[..], &["--out", b.to_str().unwrap()]].concat());
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let rows = String::from_utf8(text).unwrap().lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 64 * 16);

    let r = analyze_json(&a, &["--fit-zeros"]);
    assert_eq!(r["winding"], 0);
    assert_eq!(r["min_phase"], Value::Bool(true));
    assert!(r["reconstruction_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(r["fit"]["zeros"].as_array().unwrap().len(), 0);
}

#[test]
fn synth_writes_to_stdout_without_out() {
    let out = ok(&["synth", "--nsym", "16", "--oversample", "8"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# minphase-signal v1\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 16 * 8);
}

#[test]
fn retrieve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("field.csv");
    let int = dir.path().join("int.csv");
    let rec = dir.path().join("rec.csv");
    ok(&[
        "synth",
        "--nsym",
        "64",
        "--seed",
        "1",
        "--out",
        field.to_str().unwrap(),
        "--intensity-out",
        int.to_str().unwrap(),
    ]);
    let phi = analyze_json(&field, &[])["phase_bias"].as_f64().unwrap().to_string();
    let out = ok(&[
        "retrieve",
        "--intensity",
        int.to_str().unwrap(),
        "--phase-bias",
        &phi,
        "--truth",
        field.to_str().unwrap(),
        "--out",
        rec.to_str().unwrap(),
    ]);
    assert!(summary_value(&out, "reconstruction error") < 1e-6);
    assert!(!stderr(&out).contains("--phase-bias not given"));
    // the reconstruction is itself minimum phase; its sampled phase has mean φ̄, which
    // matches arg of the sampled mean up to the aliasing of the (non-band-limited) phase
    let r = analyze_json(&rec, &[]);
    assert_eq!(r["winding"], 0);
    assert!((r["phase_bias"].as_f64().unwrap() - phi.parse::<f64>().unwrap()).abs() < 1e-4);
}

#[test]
fn retrieve_constant_intensity_defaults_bias_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let int = dir.path().join("const.csv");
    let mut text = String::from("# minphase-intensity v1\n# n_samples=32\n# dt=0.25\n# label=constant\nt,intensity\n");
    for j in 0..32 {
        text.push_str(&format!("{},{}\n", j as f64 * 0.25, 4.0));
    }
    std::fs::write(&int, text).unwrap();
    let out = ok(&["retrieve", "--intensity", int.to_str().unwrap()]);
    assert!(stderr(&out).contains("--phase-bias not given"));
    let csv = String::from_utf8(out.stdout).unwrap();
    for line in csv.lines().skip_while(|l| l.starts_with('#')).skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - 2.0).abs() < 1e-12 && v[2].abs() < 1e-12, "{line}");
    }
}

#[test]
fn simulate_noiseless_is_error_free_and_deterministic() {
    let args = ["simulate", "--nsym", "64", "--seed", "1", "--snr", "inf", "--trials", "5", "--bias", "1.1"];
    let a = ok(&args);
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["results"][0]["snr_db"], "inf");
    assert_eq!(r["results"][0]["ser"].as_f64().unwrap(), 0.0);
    assert_eq!(r["results"][0]["winding_violations"], 0);
    assert_eq!(a.stdout, ok(&args).stdout);
}

#[test]
fn simulate_sweep_is_monotone_and_dumps_trials() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("trials.csv");
    let out = ok(&[
        "simulate",
        "--nsym",
        "64",
        "--snr",
        "10,20,inf",
        "--trials",
        "6",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let res = r["results"].as_array().unwrap();
    assert_eq!(res.len(), 3);
    for w in res.windows(2) {
        let (p0, s0) = (w[0]["ser"].as_f64().unwrap(), w[0]["ser_sigma"].as_f64().unwrap());
        let (p1, s1) = (w[1]["ser"].as_f64().unwrap(), w[1]["ser_sigma"].as_f64().unwrap());
        assert!(p1 <= p0 + 3.0 * s0.hypot(s1), "{p0} -> {p1}");
    }
    let rows = std::fs::read_to_string(&dump).unwrap().lines().count();
    assert_eq!(rows, 1 + 3 * 6);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["simulate", "--nsym", "32", "--snr", "15", "--trials", "4"];
    let one = bin().args(args).env("MINPHASE_THREADS", "1").output().unwrap();
    let two = bin().args(args).env("MINPHASE_THREADS", "2").output().unwrap();
    assert!(one.status.success() && two.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["synth", "--bias", "-1"][..],
        &["synth", "--oversample", "4"],
        &["synth", "--nsym", "100"],
        &["synth", "--beta", "0"],
        &["synth", "--constellation", "psk"],
        &["simulate", "--snr", "loud"],
        &["analyze"],
        &["frobnicate"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = run(&["analyze", "--in", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cannot read"));

    // an intensity file where the field is not a field file
    let out = run(&["retrieve", "--intensity", fixture("one_plus_two_tone.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let zero = dir.path().join("zero.csv");
    let mut text = String::from("# minphase-intensity v1\n# n_samples=8\n# dt=1\nt,intensity\n");
    for j in 0..8 {
        text.push_str(&format!("{j},{}\n", if j == 3 { 0.0 } else { 1.0 }));
    }
    std::fs::write(&zero, text).unwrap();
    let out = run(&["retrieve", "--intensity", zero.to_str().unwrap(), "--phase-bias", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("intensity"));

    let out = bin().args(["simulate", "--nsym", "16", "--trials", "1"]).env("MINPHASE_THREADS", "lots").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
