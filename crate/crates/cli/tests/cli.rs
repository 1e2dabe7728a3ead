use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qkd-nutshell"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn qkd(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> PathBuf {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().trim())
}

fn run_config(cfg: &Path, out: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&qkd(&args))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn first_line(p: &Path) -> String {
    fs::read_to_string(p).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn same_seed_gives_byte_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_config(&config("bb84_pccm.json"), &tmp.path().join("a"), &["--seed", "7"]);
    let b = run_config(&config("bb84_pccm.json"), &tmp.path().join("b"), &["--seed", "7"]);
    for f in ["results.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = run_config(&config("bb84_pccm.json"), &tmp.path().join("c"), &["--seed", "8"]);
    assert_ne!(fs::read(a.join("results.csv")).unwrap(), fs::read(c.join("results.csv")).unwrap());
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("bbm92_pccm.json", "1000"),
        ("qec422_rounds.json", "20000"),
        ("steane_hot.json", "20000"),
        ("qec422_scaling.json", "20000"),
        ("qcl.json", "100"),
        ("sidechannel_leakage.json", "2000"),
    ];
    for (name, shots) in cases {
        let dirs: Vec<PathBuf> = ["1", "3"]
            .iter()
            .map(|w| {
                run_config(
                    &config(name),
                    &tmp.path().join(format!("w{w}")),
                    &["--workers", w, "--shots", shots],
                )
            })
            .collect();
        for f in ["results.csv", "summary.json"] {
            assert_eq!(
                fs::read(dirs[0].join(f)).unwrap(),
                fs::read(dirs[1].join(f)).unwrap(),
                "{name} {f}"
            );
        }
    }
}

#[test]
fn csv_headers_are_pinned() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("bb84_pccm.json", "200", "round,x_A,b_A,b_B,x_B,b_E,x_E,herald"),
        ("bbm92_pccm.json", "200", "round,x_A,b_A,b_B,x_B,b_E,x_E,herald"),
        ("qcl.json", "50", "iteration,theta,loss,F_AB,F_AE"),
        (
            "qec422_rounds.json",
            "1000",
            "m,acceptance,flip_lq1,flip_lq2,stderr_acceptance,stderr_lq1,stderr_lq2",
        ),
        ("qec422_scaling.json", "1000", "lambda,p_L,acceptance,physical_ref"),
        ("steane_biased.json", "1000", "syndrome,count,round_of_detection"),
        ("sidechannel_quench.json", "500", "duration_us,p_dark_input0,p_dark_input1"),
        ("sidechannel_leakage.json", "500", "e_exposure_us,agreement,p_e_dark_input0,p_e_dark_input1"),
    ];
    for (name, shots, header) in cases {
        let dir = run_config(&config(name), &tmp.path().join(name), &["--shots", shots]);
        assert_eq!(first_line(&dir.join("results.csv")), header, "{name}");
        let bytes = fs::read(dir.join("results.csv")).unwrap();
        assert!(!bytes.contains(&b'\r'), "{name}: CRLF");
    }
}

#[test]
fn manifest_records_digests_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_config(&config("qec422_rounds.json"), &tmp.path().join("a"), &["--shots", "5000", "--seed", "42"]);
    let manifest = read_json(&dir.join("manifest.json"));
    for f in ["results.csv", "summary.json"] {
        let digest = hex::encode(Sha256::digest(fs::read(dir.join(f)).unwrap()));
        assert_eq!(manifest["outputs"][f], Value::String(digest), "{f}");
    }
    assert_eq!(manifest["master_seed"], 42);
    assert_eq!(manifest["config"]["shots"], 5000);
    assert!(manifest["version"].is_string());
    assert!(manifest["wall_time_s"].is_number());

    let again = run_config(&dir.join("manifest.json"), &tmp.path().join("b"), &[]);
    for f in ["results.csv", "summary.json"] {
        assert_eq!(fs::read(dir.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn existing_results_need_force() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let cfg = config("qcl.json");
    let args = ["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--shots", "20"];
    ok(&qkd(&args));
    let second = qkd(&args);
    assert_eq!(second.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&second.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    ok(&qkd(&forced));
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"experiment": "bb84", "attack": {"type": "pccm", "theta": 1.0}, "thta": 2}"#, "thta"),
        (r#"{"experiment": "bb84", "attack": {"type": "pccm", "theta": 9.0}}"#, "attack"),
        (r#"{"experiment": "qec422", "channel": {"type": "bitflip", "p": -0.1}}"#, "channel"),
        (r#"{"experiment": "steane-monitor", "rounds_max": 0}"#, "rounds_max"),
        (r#"{"experiment": "teleport"}"#, "experiment"),
        (r#"{"experiment": "qcl", "f": 0.2}"#, "qcl"),
        (r#"[1, 2]"#, "<root>"),
    ];
    for (i, (body, key)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("c{i}.json"), body);
        let out = qkd(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(key), "{body}: stderr {err}");
    }
    let missing = qkd(&["run", "/nonexistent/config.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_flag = qkd(&["run"]);
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = qkd(&["run", config("qcl.json").to_str().unwrap(), "--out", blocker.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // A λ that pushes the scaled probability past 1 fails inside the driver.
    let cfg = write_config(
        tmp.path(),
        "scale.json",
        r#"{"experiment": "qec422-scaling", "lambdas": [20.0], "p": 0.1, "estimator": "exact"}"#,
    );
    let out = qkd(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn theta_sweep_writes_one_row_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let grid: Vec<String> = (0..8).map(|k| format!("{:.4}", (k as f64 * std::f64::consts::PI / 7.0 * 1e4).floor() / 1e4)).collect();
    let out = qkd(&[
        "sweep",
        config("bb84_pccm.json").to_str().unwrap(),
        "--param",
        "theta",
        "--grid",
        &grid.join(","),
        "--out",
        tmp.path().to_str().unwrap(),
        "--shots",
        "600",
    ]);
    let root = ok(&out);
    let text = fs::read_to_string(root.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header[0], "theta");
    for col in ["C_AB", "C_AE", "std_err_AB", "std_err_AE"] {
        assert!(header.contains(&col), "{col} missing from {header:?}");
    }
    for (line, g) in lines[1..].iter().zip(&grid) {
        assert!(line.starts_with(&format!("{g},")));
    }
    for g in &grid {
        let point = root.join(format!("theta={g}"));
        for f in ["results.csv", "summary.json", "manifest.json"] {
            assert!(point.join(f).exists(), "{}", point.join(f).display());
        }
        let m = read_json(&point.join("manifest.json"));
        assert_eq!(m["config"]["attack"]["theta"].as_f64().unwrap(), g.parse::<f64>().unwrap());
    }
}

#[test]
fn lambda_sweep_and_sweep_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("qec422_scaling.json");
    let cfg = cfg.to_str().unwrap();
    let out_dir = tmp.path().to_str().unwrap();
    let root = ok(&qkd(&[
        "sweep", cfg, "--param", "lambda", "--grid", "0.1,0.5,1", "--out", out_dir, "--shots", "20000",
    ]));
    let text = fs::read_to_string(root.join("sweep.csv")).unwrap();
    assert!(text.starts_with("lambda,"));
    assert_eq!(text.lines().count(), 4);

    let empty = qkd(&["sweep", cfg, "--param", "lambda", "--grid", "", "--out", out_dir]);
    assert_eq!(empty.status.code(), Some(2));
    let fixed = qkd(&["sweep", cfg, "--param", "theta", "--grid", "1", "--out", out_dir]);
    assert_eq!(fixed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&fixed.stderr).contains("theta"));
    let word = qkd(&["sweep", cfg, "--param", "lambda", "--grid", "a,b", "--out", out_dir]);
    assert_eq!(word.status.code(), Some(2));
}

#[test]
fn steane_hot_summary_reports_top_three_syndromes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_config(&config("steane_hot.json"), tmp.path(), &["--shots", "200000"]);
    let summary = read_json(&dir.join("summary.json"));
    let top: BTreeSet<&str> = summary["details"]["top3_syndromes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(top, BTreeSet::from(["010000", "010010", "000010"]));
}

#[test]
fn qec422_rows_show_the_acceptance_plateau() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_config(&config("qec422_rounds.json"), tmp.path(), &["--shots", "200000"]);
    let text = fs::read_to_string(dir.join("results.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[1][1], 1.0);
    for r in &rows[2..] {
        assert!((r[1] - 0.705).abs() < 0.005, "acceptance {}", r[1]);
    }
}

#[test]
fn sidechannel_pump_saturates_dark_readings() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_config(&config("sidechannel_pump.json"), tmp.path(), &[]);
    let summary = read_json(&dir.join("summary.json"));
    let h = &summary["headline"];
    assert!(h["p_dark_input0"].as_f64().unwrap() > 0.99);
    assert!(h["p_dark_input1"].as_f64().unwrap() > 0.99);
    // Every bit reads dark, so half the sifted key disagrees.
    assert!((h["qber"].as_f64().unwrap() - 0.5).abs() < 0.05);
}
