//! Black-box tests of the `cgmetro` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cgmetro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgmetro"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../golden")
}

/// Data rows (no `#` comments, no header) split into cells.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn error_json(o: &Output) -> serde_json::Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(err.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {err}"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn fisher_ratio_matches_golden() {
    let o = cgmetro(&["fisher-ratio", "--M", "2..10", "--binning", "both"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("# cgmetro "));
    let golden = std::fs::read_to_string(golden_dir().join("fisher_ratio.csv")).unwrap();
    let mut expect: Vec<Vec<String>> = rows(&golden);
    let mut got = rows(&out);
    expect.sort();
    got.sort();
    assert_eq!(got.len(), 18);
    for (g, e) in got.iter().zip(&expect) {
        assert_eq!(g[..2], e[..2]);
        let (a, b): (f64, f64) = (g[2].parse().unwrap(), e[2].parse().unwrap());
        assert!((a - b).abs() < 1e-9, "{g:?} vs {e:?}");
    }
}

#[test]
fn fisher_ratio_examples() {
    let eq = stdout(&cgmetro(&["fisher-ratio", "--M", "2..10", "--binning", "equal"]));
    let last = rows(&eq).pop().unwrap();
    assert_eq!(last[..2], ["10", "equal"]);
    assert!((last[2].parse::<f64>().unwrap() - 0.95).abs() < 0.01);
    let opt = stdout(&cgmetro(&["fisher-ratio", "--M", "10", "--binning", "optimal", "--r", "0.8"]));
    assert!((rows(&opt)[0][2].parse::<f64>().unwrap() - 0.98).abs() < 0.01);
}

#[test]
fn bad_bin_number_is_a_usage_error() {
    let o = cgmetro(&["fisher-ratio", "--M", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["exit_code"], 2);
    assert!(e["message"].as_str().unwrap().contains("M must be >= 2"));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_subcommand_and_bad_config_exit_2() {
    assert_eq!(cgmetro(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"cfg\": {\"alpha\": -1, \"r\": 0.1}}");
    let o = cgmetro(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "config");
    let missing = dir.path().join("missing.json");
    let o = cgmetro(&["calibrate", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tables_agree_with_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = cgmetro(&[
        "tables",
        "--output",
        dir.path().to_str().unwrap(),
        "--check",
        golden_dir().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let equal = std::fs::read_to_string(dir.path().join("weights_equal.csv")).unwrap();
    let optimal = std::fs::read_to_string(dir.path().join("weights_optimal.csv")).unwrap();
    let row7 = |text: &str| -> Vec<f64> {
        rows(text)
            .into_iter()
            .find(|r| r[0] == "7")
            .unwrap()[1..8]
            .iter()
            .map(|c| c.parse().unwrap())
            .collect()
    };
    for (got, expect) in [
        (row7(&equal), [0.569, 0.376, 0.186, 0.0, -0.186, -0.376, -0.569]),
        (row7(&optimal), [0.594, 0.347, 0.164, 0.0, -0.164, -0.347, -0.594]),
    ] {
        for (a, b) in got.iter().zip(expect) {
            assert!((a - b).abs() <= 1e-3, "{got:?}");
        }
    }
}

#[test]
fn tables_check_detects_a_wrong_golden() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(golden_dir().join("weights_equal.csv")).unwrap();
    write(dir.path(), "weights_equal.csv", &text.replace("0.569", "0.579"));
    let opt = std::fs::read_to_string(golden_dir().join("weights_optimal.csv")).unwrap();
    write(dir.path(), "weights_optimal.csv", &opt);
    let o = cgmetro(&["tables", "--check", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(error_json(&o)["message"].as_str().unwrap().contains("M=7 w1"));
}

#[test]
fn simulate_is_deterministic_and_records_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "sim.json",
        r#"{"cfg": {"alpha": 5.7, "r": 0.4375}, "bins": [2, 4], "binnings": ["equal"],
            "phase_scan": {"lo_deg": -20, "hi_deg": 20, "count": 60}}"#,
    );
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = cgmetro(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            seed,
            "--output",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("9", "a.csv");
    assert_eq!(a, run("9", "b.csv"));
    assert_ne!(a, run("10", "c.csv"));
    assert!(a.contains("# seed: 9\n"));
    assert!(a.contains("# banner: nu=25 repeats=40\n"));
    assert!(a.contains("\"bins\":[2,4]"));
    assert!(a.contains(
        "\nM,binning,dphi_quantum,dphi_quantum_err,dphi_classical,dphi_classical_err,crb_quantum,dphi_ideal_quantum,dphi_ideal_classical\n"
    ));
    let data = rows(&a);
    assert_eq!(data.len(), 2);
    for r in &data {
        let quantum: f64 = r[2].parse().unwrap();
        let classical_ideal: f64 = r[8].parse().unwrap();
        assert!(quantum < classical_ideal, "{r:?}");
    }
}

#[test]
fn global_overrides_reach_the_campaign() {
    let o = cgmetro(&["calibrate", "--M", "3", "--nu", "10", "--repeats", "5", "--seed", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("\"nu\":10") && out.contains("\"repeats\":5") && out.contains("\"master_seed\":1"));
    assert!(out.contains("# alpha_hat: "));
    let table = rows(&out);
    assert_eq!(table.len(), 2001);
}

#[test]
fn phase_scan_reports_flags() {
    let o = cgmetro(&["phase-scan", "--M", "2", "--from-deg", "-16", "--to-deg", "16", "--count", "5"]);
    assert!(o.status.success());
    let data = rows(&stdout(&o));
    assert_eq!(data.len(), 5);
    assert_eq!(data[2][4], "ok");
    assert!(data[0][4].starts_with("saturated="));
}

#[test]
fn saturation_dominated_scan_exits_4() {
    let o = cgmetro(&["phase-scan", "--M", "2", "--from-deg", "14", "--to-deg", "19", "--count", "3"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(rows(&stdout(&o)).len(), 3);
    assert_eq!(error_json(&o)["error"], "saturation");
}

#[test]
fn json_output_and_weights() {
    let o = cgmetro(&["weights", "--M", "5", "--binning", "optimal", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["meta"]["command"], "weights");
    let w: Vec<f64> = serde_json::from_value(v["result"]["w"].clone()).unwrap();
    for (a, b) in w.iter().zip([0.646, 0.287, 0.0, -0.287, -0.646]) {
        assert!((a - b).abs() <= 1e-3, "{w:?}");
    }
}

#[test]
fn scaling_sweep_and_optimize_bins() {
    let o = cgmetro(&["scaling-sweep", "--M", "10", "--count", "4"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let slope: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("# loglog_slope: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((slope + 1.0).abs() < 0.02);
    assert_eq!(rows(&out).len(), 4);

    let o = cgmetro(&["optimize-bins", "--M", "4", "--r", "0"]);
    assert!(o.status.success());
    let b: Vec<f64> = rows(&stdout(&o)).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(b.len(), 5);
    assert_eq!((b[0], b[4]), (-4.0, 4.0));
    assert!((b[1] + b[3]).abs() < 1e-9 && b[2].abs() < 1e-12);
}

#[test]
fn help_and_version_succeed() {
    assert!(cgmetro(&["--help"]).status.success());
    assert!(cgmetro(&["--version"]).status.success());
}
