//! End-to-end tests of the `ddlab` binary.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn ddlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn without_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# generated_at"))
        .collect::<Vec<_>>()
        .join("\n")
}

const TINY_SWEEP: &str = r#"
kind = "sweep"

[model]
system_qubits = 1
bath_spins = 1
epsilon_mhz = 1.0

[target]
kind = "rotation"
theta_rad = 3.141592653589793
phi_rad = 0.7853981633974483

[drive]
tau_ns = 4.0

[initial]
system = "plus"

[sweep]
axis = "gate-duration-ns"
points = [8.0, 16.0, 32.0]
sequences = ["none", "pdd"]
"#;

#[test]
fn sweep_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY_SWEEP).unwrap();

    let run = || {
        let out = ddlab(&["sweep", "--config", cfg.to_str().unwrap(), "--seed", "5"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(without_timestamp(&a), without_timestamp(&b));

    let header = a.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "axis,sequence,fidelity,wall_duration_s,status");
    assert!(a.lines().any(|l| l.starts_with("# config_sha256")));
    // 3 points x 2 sequences.
    let successes = a
        .lines()
        .filter(|l| l.ends_with(",ok") || l.ends_with(",floor"))
        .count();
    assert_eq!(successes, 6);
}

#[test]
fn sweep_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY_SWEEP).unwrap();
    let out = ddlab(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 6);
    assert!(doc["rows"][0]["fidelity"].as_f64().unwrap() <= 1.0 + 1e-9);
}

#[test]
fn config_schema_violations_exit_nonzero_with_json_error() {
    let dir = tempfile::tempdir().unwrap();

    // Unknown key.
    let cfg = dir.path().join("bad_key.toml");
    std::fs::write(&cfg, TINY_SWEEP.replace("epsilon_mhz = 1.0", "epsilon_mhz = 1.0\nwat = 1"))
        .unwrap();
    let out = ddlab(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("schema"));

    // Invalid unit value.
    let cfg = dir.path().join("bad_unit.toml");
    std::fs::write(&cfg, TINY_SWEEP.replace("epsilon_mhz = 1.0", "epsilon_mhz = \"one\""))
        .unwrap();
    let out = ddlab(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(!err["error"].as_str().unwrap().is_empty());
}

#[test]
fn preset_fig1a_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("fig1a.csv");
    let out = ddlab(&[
        "sweep",
        "--preset",
        "fig1a",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    // 10 points x 3 sequences, all successful (some at the numerical floor).
    let successes = text
        .lines()
        .filter(|l| l.ends_with(",ok") || l.ends_with(",floor"))
        .count();
    assert_eq!(successes, 30);
}

#[test]
fn presets_listing_names_all() {
    let out = ddlab(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig1a", "fig1b", "fig2a", "fig2c", "fig2d"] {
        assert!(text.contains(name), "{name} missing");
    }
}

fn emit_plan_text() -> String {
    let sched = ddlab::two_qubit_schedule(1.0e-8, ddlab::TwoQubitBase::Cdd2, false)
        .unwrap()
        .realize_pulses(2.5e-9, PI / 2.5e-9)
        .unwrap();
    let plan = ddlab::engineer(ddlab::TargetGate::CrossResonance { theta: -PI / 2.0 }, &sched)
        .unwrap();
    plan.to_text()
}

fn verify_file(path: &Path) -> (Option<i32>, String) {
    let out = ddlab(&["verify-schedule", path.to_str().unwrap()]);
    (
        out.status.code(),
        String::from_utf8(out.stdout).unwrap() + &String::from_utf8_lossy(&out.stderr),
    )
}

#[test]
fn verify_schedule_round_trip_passes() {
    let dir = tempfile::tempdir().unwrap();

    // A bare schedule file.
    let sched_path = dir.path().join("sched.txt");
    std::fs::write(&sched_path, ddlab::pdd_schedule(1.0e-8).to_text()).unwrap();
    let (code, text) = verify_file(&sched_path);
    assert_eq!(code, Some(0), "{text}");
    assert!(text.contains("overall: PASS"));

    // A full plan file.
    let plan_path = dir.path().join("plan.txt");
    std::fs::write(&plan_path, emit_plan_text()).unwrap();
    let (code, text) = verify_file(&plan_path);
    assert_eq!(code, Some(0), "{text}");
    assert!(text.contains("check frame equality: PASS"));
    assert!(text.contains("check area law: PASS"));
}

#[test]
fn verify_schedule_detects_hand_edits() {
    let dir = tempfile::tempdir().unwrap();

    // Perturb one drive sign column: frame equality must fail with the
    // segment index named.
    let plan = emit_plan_text();
    let seg_line = plan
        .lines()
        .find(|l| l.ends_with(" cr 1e0 -1e0") || l.contains(" cr "))
        .unwrap()
        .to_string();
    let perturbed = seg_line.rsplit_once(' ').map(|(head, sign)| {
        let flipped = if sign.starts_with('-') {
            format!("{head} 1e0")
        } else {
            format!("{head} -1e0")
        };
        plan.replacen(&seg_line, &flipped, 1)
    });
    let path = dir.path().join("edited.txt");
    std::fs::write(&path, perturbed.unwrap()).unwrap();
    let (code, text) = verify_file(&path);
    assert_eq!(code, Some(1), "{text}");
    assert!(text.contains("check frame equality: FAIL (segment"));
    assert!(text.contains("overall: FAIL"));

    // Scramble event ordering: the file is rejected as malformed.
    let sched = ddlab::pdd_schedule(1.0e-8).to_text();
    let swapped: Vec<String> = {
        let mut lines: Vec<String> = sched.lines().map(String::from).collect();
        let n = lines.len();
        lines.swap(n - 1, n - 2);
        lines
    };
    let path = dir.path().join("scrambled.txt");
    std::fs::write(&path, swapped.join("\n")).unwrap();
    let (code, text) = verify_file(&path);
    assert_eq!(code, Some(2), "{text}");
}

#[test]
fn circuit_matches_golden_and_reports_identity() {
    let dir = tempfile::tempdir().unwrap();
    let qasm_path = dir.path().join("m1.qasm");
    let out = ddlab(&[
        "circuit",
        "--order",
        "1",
        "--m",
        "1",
        "--out",
        qasm_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("identity distance"));

    let golden = include_str!("../../core/tests/golden/first_order_m1.qasm");
    assert_eq!(std::fs::read_to_string(&qasm_path).unwrap(), golden);
}

#[test]
fn circuit_rejects_bad_block_size() {
    let out = ddlab(&["circuit", "--order", "2", "--m", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("multiple of 4"));
}

#[test]
fn circuit_counts_deterministic_for_seed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.qasm");
    let counts_path = dir.path().join("c.counts.json");
    let run = || {
        let out = ddlab(&[
            "circuit",
            "--order",
            "2",
            "--m",
            "4",
            "--crosstalk",
            "--shots",
            "4000",
            "--seed",
            "11",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read_to_string(&counts_path).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    // Crosstalk circuits carry the two surrounding qubits.
    assert!(std::fs::read_to_string(&path).unwrap().contains("qreg q[4];"));
    let counts: serde_json::Value = serde_json::from_str(&a).unwrap();
    let total: u64 = counts
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(total, 4000);
}
