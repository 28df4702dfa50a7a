use std::path::Path;
use std::process::{Command, Output};

fn pspin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pspin"))
        .args(args)
        .env_remove("PSPIN_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(code(&pspin(&["frobnicate"])), 2);
    assert_eq!(code(&pspin(&["sweep", "--no-such-flag"])), 2);
}

#[test]
fn bad_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "p = [3.0\n").unwrap();
    assert_eq!(
        code(&pspin(&[
            "sweep",
            "--config",
            s(&bad),
            "--out",
            s(dir.path())
        ])),
        3
    );
    std::fs::write(&bad, "colour = 1\n").unwrap();
    assert_eq!(
        code(&pspin(&[
            "sweep",
            "--config",
            s(&bad),
            "--out",
            s(dir.path())
        ])),
        3
    );
    std::fs::write(&bad, "alpha = [-1.0]\n").unwrap();
    assert_eq!(
        code(&pspin(&[
            "sweep",
            "--config",
            s(&bad),
            "--out",
            s(dir.path())
        ])),
        3
    );
}

#[test]
fn sweep_writes_header_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "p = [2.0, 3.0]\nalpha = [0.05]\nn1 = [40]\ntrials = 3\nseed = 9\n",
    )
    .unwrap();
    let o = pspin(&["sweep", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let mut rdr = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, pspin::experiments::SWEEP_HEADER);
    assert_eq!(rdr.records().count(), 6);

    let m: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("sweep.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(m["command"], "sweep");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["outputs"], serde_json::json!(["sweep.csv"]));
    assert_eq!(m["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn config_digest_ignores_key_order() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    std::fs::write(&a, "n1 = [30]\ntrials = 2\np = [3.0]\n").unwrap();
    std::fs::write(&b, "p = [3.0]\ntrials = 2\nn1 = [30]\n").unwrap();
    let digest = |cfg: &Path, out: &Path| {
        assert_eq!(
            code(&pspin(&["sweep", "--config", s(cfg), "--out", s(out)])),
            0
        );
        let m: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(out.join("sweep.manifest.json")).unwrap(),
        )
        .unwrap();
        m["config_digest"].as_str().unwrap().to_string()
    };
    let (oa, ob) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(digest(&a, &oa), digest(&b, &ob));
}

#[test]
fn sweep_output_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let o = pspin(&[
            "--threads",
            threads,
            "sweep",
            "--p",
            "2,3",
            "--alpha",
            "0.05,0.1",
            "--n1",
            "40",
            "--trials",
            "4",
            "--seed",
            "11",
            "--out",
            s(&out),
        ]);
        assert_eq!(code(&o), 0);
        outputs.push(std::fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_flag_beats_env() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_pspin"));
        cmd.args([
            "sweep",
            "--n1",
            "30",
            "--trials",
            "1",
            "--out",
            s(dir.path()),
        ]);
        cmd.env_remove("PSPIN_SEED");
        if let Some(e) = env {
            cmd.env("PSPIN_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.output().unwrap().status.success());
        let m: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("sweep.manifest.json")).unwrap(),
        )
        .unwrap();
        m["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 0);
    assert_eq!(run(Some("17"), None), 17);
    assert_eq!(run(Some("17"), Some("3")), 3);
}

#[test]
fn patterns_energy_descend_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    assert_eq!(
        code(&pspin(&[
            "gen-patterns",
            "--n1",
            "48",
            "--n2",
            "4",
            "--seed",
            "2",
            "--out",
            out
        ])),
        0
    );
    let pats = dir.path().join("patterns.bin");
    assert!(pats.exists());

    let o = pspin(&[
        "energy",
        "--patterns",
        s(&pats),
        "--p",
        "3",
        "--pattern",
        "2",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0);
    let e: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("energy.json")).unwrap())
            .unwrap();
    assert_eq!(e["n1"], 48);
    assert_eq!(e["nearest"], serde_json::json!([2, 0]));
    assert!(e["energy"].as_f64().unwrap() < 0.0);

    let o = pspin(&[
        "descend",
        "--patterns",
        s(&pats),
        "--p",
        "3",
        "--start-pattern",
        "2",
        "--perturb",
        "0.1",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0);
    let d: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("descent.json")).unwrap())
            .unwrap();
    assert_eq!(d["result"]["converged"], true);
    assert!(dir.path().join("descend.manifest.json").exists());

    let o = pspin(&[
        "energy",
        "--patterns",
        s(&pats),
        "--p",
        "3",
        "--pattern",
        "9",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn prior_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = pspin(&[
        "prior",
        "--family",
        "gaussian",
        "--p",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("prior.json")).unwrap())
            .unwrap();
    assert!((v["limit_estimate"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!((v["psi_norm"].as_f64().unwrap() - (8.0f64 / 3.0).sqrt()).abs() < 1e-8);
    let csv = std::fs::read_to_string(dir.path().join("cumulant.csv")).unwrap();
    assert!(csv.starts_with("x,u,ratio\n"));
    assert_eq!(
        code(&pspin(&[
            "prior",
            "--family",
            "cauchy",
            "--p",
            "2",
            "--out",
            s(dir.path())
        ])),
        2
    );
}

#[test]
fn exhaustive_scan_over_budget_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    assert_eq!(
        code(&pspin(&[
            "gen-patterns",
            "--n1",
            "60",
            "--n2",
            "2",
            "--out",
            out
        ])),
        0
    );
    let pats = dir.path().join("patterns.bin");
    let o = pspin(&[
        "scan",
        "--patterns",
        s(&pats),
        "--p",
        "3",
        "--radii",
        "0.5",
        "--samples",
        "0",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 4);
    let o = pspin(&[
        "scan",
        "--patterns",
        s(&pats),
        "--p",
        "3",
        "--radii",
        "0.02,0.05",
        "--samples",
        "0",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("barrier.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn verify_suite_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let o = pspin(&["verify", "--seed", "1", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap())
            .unwrap();
    assert_eq!(v["failed"], 0);
}
