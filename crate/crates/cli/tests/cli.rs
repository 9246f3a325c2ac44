use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nashlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nashlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run_ok(dir: &Path, command: &str, cfg: &str, out: &str) -> Value {
    let o = nashlab(dir, &[command, "--config", cfg, "--out", out, "--quiet"]);
    assert!(
        o.status.success(),
        "{command}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(
        o.stdout.is_empty(),
        "--quiet printed {:?}",
        String::from_utf8_lossy(&o.stdout)
    );
    let name = format!("{command}.json");
    serde_json::from_slice(&fs::read(dir.join(out).join(name)).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn check_schema(report: &Value, command: &str) {
    assert_eq!(report["schema"], format!("nashlab.{command}/v1"));
    assert_eq!(report["command"], command);
    assert!(report["id"].is_string());
    assert!(report["config"].is_object());
    assert!(report["warnings"].is_array());
    let checks = report["checks"].as_object().unwrap();
    assert!(checks.values().all(Value::is_boolean));
    assert!(report["results"].is_object());
}

const SMALL_MU: &str = "[grid]\nn = 300\n[rate]\ntrain = 40\nheld_out = 40\n";

#[test]
fn ou_spectrum_starts_at_the_integers() {
    let dir = TempDir::new().unwrap();
    config(
        dir.path(),
        "ou.toml",
        "[model]\nfamily = \"ou\"\n[spectrum]\ncount = 12\n",
    );
    let report = run_ok(dir.path(), "spectrum", "ou.toml", "out");
    check_schema(&report, "spectrum");
    let (header, rows) = csv_rows(&dir.path().join("out/spectrum.csv"));
    assert_eq!(header, ["index", "lambda", "exp_neg_lambda"]);
    assert_eq!(rows.len(), 12);
    for (n, row) in rows.iter().take(6).enumerate() {
        assert_eq!(row[0], n as f64);
        assert!((row[1] - n as f64).abs() < 1e-2, "lambda_{n} = {}", row[1]);
        assert!((row[2] - (-row[1]).exp()).abs() < 1e-15);
    }
}

#[test]
fn csv_floats_carry_seventeen_digits() {
    let dir = TempDir::new().unwrap();
    config(
        dir.path(),
        "ou.toml",
        "[model]\nfamily = \"ou\"\n[grid]\nn = 100\n[spectrum]\ncount = 3\n",
    );
    run_ok(dir.path(), "spectrum", "ou.toml", "out");
    let text = fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    let cell = text.lines().nth(2).unwrap().split(',').nth(1).unwrap();
    let mantissa = cell.split('e').next().unwrap();
    assert_eq!(
        mantissa.chars().filter(char::is_ascii_digit).count(),
        17,
        "{cell}"
    );
}

#[test]
fn malformed_config_exits_2_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    config(dir.path(), "bad.toml", "[model\nfamily = 1\n");
    config(dir.path(), "unknown.toml", "[grid]\nn = 100\npoints = 3\n");
    config(dir.path(), "range.toml", "times = [0.5, -1.0]\n");
    for cfg in ["bad.toml", "unknown.toml", "range.toml"] {
        let o = nashlab(dir.path(), &["spectrum", "--config", cfg, "--out", "out"]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        assert!(!o.stderr.is_empty());
        assert!(!dir.path().join("out").exists(), "{cfg} left output behind");
    }
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = nashlab(
        dir.path(),
        &["spectrum", "--config", "absent.toml", "--out", "out"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_run_leaves_existing_outputs_untouched() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("trace.csv"), "previous\n").unwrap();
    config(dir.path(), "u.toml", "[weight]\nkind = \"universal\"\n");
    let o = nashlab(dir.path(), &["trace", "--config", "u.toml", "--out", "out"]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(
        fs::read_to_string(out.join("trace.csv")).unwrap(),
        "previous\n"
    );
    let names: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 1, "{names:?}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    config(
        dir.path(),
        "scan.toml",
        &format!("{SMALL_MU}[scan]\ncount = 30\n"),
    );
    let a = run_ok(dir.path(), "nash-scan", "scan.toml", "a");
    run_ok(dir.path(), "nash-scan", "scan.toml", "b");
    for f in ["scan_pairs.csv", "scan_envelope.csv", "nash-scan.json"] {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
    check_schema(&a, "nash-scan");

    let o = nashlab(
        dir.path(),
        &[
            "nash-scan",
            "--config",
            "scan.toml",
            "--out",
            "c",
            "--seed",
            "7",
            "--quiet",
        ],
    );
    assert!(o.status.success());
    let c: Value =
        serde_json::from_slice(&fs::read(dir.path().join("c/nash-scan.json")).unwrap()).unwrap();
    assert_eq!(c["config"]["seed"], 7);
    assert_ne!(
        fs::read(dir.path().join("a/scan_pairs.csv")).unwrap(),
        fs::read(dir.path().join("c/scan_pairs.csv")).unwrap()
    );
}

#[test]
fn default_mu_a_verify_has_no_violations() {
    let dir = TempDir::new().unwrap();
    config(dir.path(), "default.toml", "");
    let report = run_ok(dir.path(), "verify", "default.toml", "out");
    check_schema(&report, "verify");
    let r = &report["results"];
    assert_eq!(r["mode"], "pipeline");
    let p = &r["pipeline"];
    assert_eq!(p["violations"], 0);
    assert!(p["c"].as_f64().unwrap() > 0.0);
    assert!(p["fit"]["shift"].as_f64().unwrap() > 0.0);
    assert!((p["fit"]["lambda"].as_f64().unwrap() - 48.0 / 49.0).abs() < 1e-12);
    assert!(p["max_kernel_slack"].as_f64().unwrap() < 0.0);
    let table = p["table"].as_array().unwrap();
    assert_eq!(table.len(), 3);
    for row in table {
        assert!(row["k_2t_exp_ct"].as_f64().unwrap() >= row["k_2t"].as_f64().unwrap());
    }
    assert!(report["checks"]
        .as_object()
        .unwrap()
        .values()
        .all(|v| v == true));

    let (header, rows) = csv_rows(&dir.path().join("out/trace.csv"));
    assert_eq!(header, ["t", "trace_p2t", "trace_bound"]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[1] <= r[2]));
}

#[test]
fn universal_weight_with_trace_check_exits_5() {
    let dir = TempDir::new().unwrap();
    config(dir.path(), "u.toml", "[weight]\nkind = \"universal\"\n");
    for command in ["verify", "trace"] {
        let o = nashlab(dir.path(), &[command, "--config", "u.toml", "--out", "out"]);
        assert_eq!(o.status.code(), Some(5), "{command}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("not in L²"));
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn log_rate_probe_reports_threshold() {
    let dir = TempDir::new().unwrap();
    for (a, expected) in [(1.5, false), (2.0, false), (2.5, true), (3.0, true)] {
        let name = format!("log{a}.toml");
        config(
            dir.path(),
            &name,
            &format!("[rate]\nkind = \"log\"\na = {a:?}\n"),
        );
        let report = run_ok(dir.path(), "verify", &name, &format!("out{a}"));
        check_schema(&report, "verify");
        assert_eq!(report["results"]["mode"], "rate_probe");
        assert_eq!(report["results"]["ultracontractive"], expected, "a = {a}");
    }
}

#[test]
fn converse_of_inverse_square_root_samples() {
    let dir = TempDir::new().unwrap();
    let mut samples = String::from("t,k\n");
    for i in 0..=400 {
        let t = 1e-3 * 10f64.powf(5.0 * i as f64 / 400.0);
        samples.push_str(&format!("{t:.17e},{:.17e}\n", t.powf(-0.5)));
    }
    fs::create_dir(dir.path().join("data")).unwrap();
    fs::write(dir.path().join("data/k.csv"), samples).unwrap();
    config(
        dir.path(),
        "data/converse.toml",
        "[converse]\nsamples = \"k.csv\"\n",
    );
    let report = run_ok(dir.path(), "converse", "data/converse.toml", "out");
    check_schema(&report, "converse");
    let r = &report["results"];
    let power = r["fitted_power"].as_f64().unwrap();
    let prefactor = r["fitted_prefactor"].as_f64().unwrap();
    let exact = 1.0 / (2.0 * std::f64::consts::E);
    assert!((power - 2.0).abs() < 0.05, "{power}");
    assert!((prefactor / exact - 1.0).abs() < 0.05, "{prefactor}");
    let (header, rows) = csv_rows(&dir.path().join("out/converse.csv"));
    assert_eq!(header, ["x", "phi"]);
    assert_eq!(rows.len(), 50);
}

#[test]
fn converse_rejects_bad_sample_files() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("k.csv"), "t,k\n0.1,abc\n").unwrap();
    config(dir.path(), "c.toml", "[converse]\nsamples = \"k.csv\"\n");
    config(dir.path(), "none.toml", "");
    for cfg in ["c.toml", "none.toml"] {
        let o = nashlab(dir.path(), &["converse", "--config", cfg, "--out", "out"]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
    }
}

#[test]
fn ou_kernel_table_matches_mehler() {
    let dir = TempDir::new().unwrap();
    config(
        dir.path(),
        "ou.toml",
        "[model]\nfamily = \"ou\"\n[grid]\nn = 1600\n[kernel]\nstride = 16\n",
    );
    let report = run_ok(dir.path(), "kernel", "ou.toml", "out");
    check_schema(&report, "kernel");
    assert_eq!(report["results"]["bound"], "mehler");
    let (header, rows) = csv_rows(&dir.path().join("out/kernel.csv"));
    assert_eq!(header, ["t", "x", "y", "p_t", "bound", "slack", "mehler"]);
    let mut worst: f64 = 0.0;
    for r in &rows {
        assert!(r[1].abs() <= 2.0 && r[2].abs() <= 2.0);
        assert_eq!(r[5], r[4] - r[3]);
        worst = worst.max((r[3] - r[6]).abs() / r[6]);
    }
    assert!(worst < 1e-2, "{worst}");
    assert_eq!(report["checks"]["mehler_agreement"], true);
    assert_eq!(report["checks"]["bound_holds"], true);
}

#[test]
fn mu_a_kernel_uses_calibrated_bound() {
    let dir = TempDir::new().unwrap();
    config(
        dir.path(),
        "mu.toml",
        &format!("{SMALL_MU}[kernel]\nstride = 4\n"),
    );
    let report = run_ok(dir.path(), "kernel", "mu.toml", "out");
    assert_eq!(report["results"]["bound"], "calibrated");
    assert!(report["results"]["lyapunov_constant"].as_f64().unwrap() > 0.0);
    let (header, rows) = csv_rows(&dir.path().join("out/kernel.csv"));
    assert_eq!(header.len(), 6);
    assert!(rows.iter().all(|r| r[5] > 0.0));
}

#[test]
fn constants_only_scan_warns_degenerate() {
    let dir = TempDir::new().unwrap();
    config(
        dir.path(),
        "c.toml",
        &format!("{SMALL_MU}[scan]\nfamily = \"constants\"\ncount = 5\n"),
    );
    let report = run_ok(dir.path(), "nash-scan", "c.toml", "out");
    assert_eq!(report["results"]["fit"]["degenerate"], true);
    let warnings = report["warnings"].as_array().unwrap();
    assert!(warnings
        .iter()
        .any(|w| w.as_str().unwrap().contains("degenerate")));
    let (_, pairs) = csv_rows(&dir.path().join("out/scan_pairs.csv"));
    assert_eq!(pairs.len(), 5);
    // The quotient is scale invariant.
    assert!(pairs
        .iter()
        .all(|p| p[1] == 0.0 && (p[0] / pairs[0][0] - 1.0).abs() < 1e-12));
}

#[test]
fn trace_report_matches_verify() {
    let dir = TempDir::new().unwrap();
    config(dir.path(), "mu.toml", SMALL_MU);
    let trace = run_ok(dir.path(), "trace", "mu.toml", "t");
    check_schema(&trace, "trace");
    run_ok(dir.path(), "verify", "mu.toml", "v");
    assert_eq!(
        fs::read(dir.path().join("t/trace.csv")).unwrap(),
        fs::read(dir.path().join("v/trace.csv")).unwrap()
    );
    assert_eq!(trace["checks"]["trace_domination"], true);
}
