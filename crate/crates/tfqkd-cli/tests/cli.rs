//! End-to-end checks of the binary: exit codes, determinism and the
//! file outputs of each subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfqkd")).args(args).output().expect("spawn tfqkd")
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_owned()
}

#[test]
fn keyrate_replay_is_deterministic_and_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path_str(&fixture("twcc_finite_153.toml"));
    let counts = path_str(&fixture("twcc_finite_153.csv"));
    let mut reports = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = path_str(&dir.path().join(name));
        let res = run(&["keyrate", "--config", &cfg, "--counts", &counts, "--out", &out]);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("quantity,value\n"));
        assert!(text.contains("secure_bits,"));
        reports.push((text, res.stdout));
    }
    assert_eq!(reports[0], reports[1], "replay not byte-identical across runs");
}

#[test]
fn simulate_is_seed_deterministic_and_handles_zero_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path_str(&fixture("sns_368_asymptotic.toml"));
    let l1 = path_str(&dir.path().join("l1.csv"));
    let l2 = path_str(&dir.path().join("l2.csv"));
    for out in [&l1, &l2] {
        let res =
            run(&["simulate", "--config", &cfg, "--pairs", "5000000", "--seed", "9", "--out", out]);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(
        std::fs::read(&l1).unwrap(),
        std::fs::read(&l2).unwrap(),
        "ledgers differ across identically seeded runs"
    );

    let empty = path_str(&dir.path().join("empty.csv"));
    let res = run(&["simulate", "--config", &cfg, "--pairs", "0", "--out", &empty]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(&empty).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",0,0,0,0,0,0,0,0,0"), "zero-pair ledger row not empty: {line}");
    }
}

#[test]
fn bad_inputs_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[protocol]\nkind = \"sns\"\n").unwrap();
    let res = run(&["keyrate", "--config", &path_str(&bad)]);
    assert_eq!(res.status.code(), Some(2));

    // counts and ledger are mutually exclusive inputs
    let cfg = path_str(&fixture("sns_368_asymptotic.toml"));
    let counts = path_str(&fixture("sns_368_asymptotic.csv"));
    let res = run(&["keyrate", "--config", &cfg, "--counts", &counts, "--ledger", &counts]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn infeasible_analyses_exit_with_runtime_code() {
    let dir = tempfile::tempdir().unwrap();

    // a ledger with no detections cannot support the decoy estimates
    let empty = dir.path().join("empty_ledger.csv");
    let cfg = path_str(&fixture("sns_368_asymptotic.toml"));
    let sim = run(&["simulate", "--config", &cfg, "--pairs", "0", "--out", &path_str(&empty)]);
    assert!(sim.status.success());
    let res = run(&["keyrate", "--config", &cfg, "--ledger", &path_str(&empty)]);
    assert_eq!(res.status.code(), Some(3));

    // a session with almost no single-photon detections yields no positive key
    let mut shrunk = String::new();
    for line in std::fs::read_to_string(fixture("twcc_asymptotic_605.csv")).unwrap().lines() {
        let line = match line.split_once(',') {
            Some(("n1_before", _)) => "n1_before,1.0".to_owned(),
            _ => line.to_owned(),
        };
        shrunk.push_str(&line);
        shrunk.push('\n');
    }
    let weak = dir.path().join("weak.csv");
    std::fs::write(&weak, shrunk).unwrap();
    let res = run(&[
        "keyrate",
        "--config",
        &path_str(&fixture("twcc_asymptotic_605.toml")),
        "--counts",
        &path_str(&weak),
    ]);
    assert_eq!(res.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn twcc_writes_portable_bitmaps() {
    let dir = tempfile::tempdir().unwrap();
    let maps = dir.path().join("maps");
    let res = run(&[
        "twcc",
        "--counts",
        &path_str(&fixture("twcc_asymptotic_522.csv")),
        "--scale",
        "10",
        "--map-dir",
        &path_str(&maps),
        "--map-width",
        "64",
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    for name in ["key_a.pbm", "key_b.pbm", "key_diff.pbm"] {
        let bytes = std::fs::read(maps.join(name)).unwrap();
        assert!(bytes.starts_with(b"P4\n"), "{name} is not a P4 bitmap");
    }
}

#[test]
fn stabilise_and_print_config_run_clean() {
    let res = run(&["stabilise", "--duration", "2", "--seed", "3"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("reduction_factor"));
    assert!(text.contains("qber"));

    let res = run(&["print-config", "--config", &path_str(&fixture("cal_368.toml"))]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("kind = \"cal\""));
}
