use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn assosm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_assosm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn spec_file(id: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../specs/{id}.toml"))
}

/// Copies a shipped spec with a textual substitution.
fn edited_spec(dir: &Path, id: &str, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(spec_file(id)).unwrap();
    assert!(text.contains(from), "{from} not in {id}");
    let path = dir.join(format!("{id}-edited.toml"));
    fs::write(&path, text.replacen(from, to, 1)).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn collect_design_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let sol = dir.path().join("solution.toml");
    let out = assosm(&["collect", "--spec", s(&spec_file("b2")), "--out", s(&data)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.join("manifest.toml").is_file());
    let out = assosm(&["design", "--data", s(&data), "--out", s(&sol)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = assosm(&["verify", "--data", s(&data), "--solution", s(&sol)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("worst Lyapunov slack") && stdout.contains("PASS"),
        "{stdout}"
    );
}

#[test]
fn tampered_solution_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let sol = dir.path().join("solution.toml");
    assert_eq!(
        code(&assosm(&[
            "collect",
            "--spec",
            s(&spec_file("b1")),
            "--out",
            s(&data)
        ])),
        0
    );
    assert_eq!(
        code(&assosm(&["design", "--data", s(&data), "--out", s(&sol)])),
        0
    );
    let text = fs::read_to_string(&sol).unwrap();
    let tampered: String = text
        .lines()
        .map(|l| {
            if l.starts_with("kappa2") {
                "kappa2 = 0.0".to_string()
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&sol, tampered).unwrap();
    let out = assosm(&["verify", "--data", s(&data), "--solution", s(&sol)]);
    assert_eq!(code(&out), 30, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn seed_override_changes_the_noise() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str, seed: &str| {
        let d = dir.path().join(name);
        let out = assosm(&[
            "--seed",
            seed,
            "collect",
            "--spec",
            s(&spec_file("b2")),
            "--out",
            s(&d),
        ]);
        assert_eq!(code(&out), 0);
        fs::read(d.join("O1plus.csv")).unwrap()
    };
    assert_eq!(read("a", "5"), read("b", "5"));
    assert_ne!(read("a", "5"), read("c", "6"));
}

#[test]
fn single_sample_is_a_rank_failure() {
    let dir = tempfile::tempdir().unwrap();
    let spec = edited_spec(dir.path(), "b1", "samples = 3", "samples = 1");
    let out = assosm(&["simulate", "--spec", s(&spec)]);
    assert_eq!(code(&out), 20, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step 1"));
}

#[test]
fn slow_adaptation_on_the_unstable_plant_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let a = edited_spec(dir.path(), "b2", "lipschitz = 30000.0", "lipschitz = 300.0");
    let text = fs::read_to_string(&a)
        .unwrap()
        .replacen("eta1 = 3000.0", "eta1 = 30.0", 1)
        .replacen("eta2 = 1500.0", "eta2 = 15.0", 1);
    fs::write(&a, text).unwrap();
    let out = assosm(&["simulate", "--spec", s(&a)]);
    assert_eq!(code(&out), 40, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn setup_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&assosm(&["reproduce", "b9", "--out", s(dir.path())])),
        2
    );
    assert_eq!(code(&assosm(&["simulate"])), 2);
    let bad = edited_spec(
        dir.path(),
        "b1",
        "dt = 0.0001\nsigma_tol",
        "dt = -1.0\nsigma_tol",
    );
    assert_eq!(code(&assosm(&["simulate", "--spec", s(&bad)])), 2);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&assosm(&["simulate", "--spec", s(&missing)])), 2);
}

#[test]
fn unwritable_output_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = assosm(&[
        "collect",
        "--spec",
        s(&spec_file("b1")),
        "--out",
        s(&blocker.join("data")),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = edited_spec(dir.path(), "b1", "horizon = 20.0", "horizon = 2.0");
    let out_dir = dir.path().join("run");
    let out = assosm(&["simulate", "--spec", s(&spec), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "trajectory.csv",
        "report.txt",
        "solution.toml",
        "spec.toml",
        "phase.svg",
    ] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
    let header = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,x1,x2,sigma,s2,s2_hat,gain,nu,u,d\n"));
}

#[test]
fn reproduce_b1_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = assosm(&["reproduce", "b1", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[b1] |sigma| < 0.01 from t ="));
}
