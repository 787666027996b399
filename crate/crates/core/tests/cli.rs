use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use setlab::approx::{CollisionCertificate, PhiSpec};

fn setlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn verify_sumdec_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = setlab(&["verify", "--suite", "sumdec", "--out", path_str(&report)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = read_json(&report);
    assert_eq!(v["schema"], "setlab.report/v1");
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    assert_eq!(v["summary"]["failed"], 0);
}

#[test]
fn zero_tolerance_forces_failures() {
    let out = setlab(&["verify", "--suite", "all", "--tol", "0"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn verify_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let strip = |p: &Path| {
        let mut v = read_json(p);
        for c in v["checks"].as_array_mut().unwrap() {
            c.as_object_mut().unwrap().remove("wall_time");
        }
        v
    };
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert_eq!(
            code(&setlab(&[
                "verify",
                "--suite",
                "janossy",
                "--seed",
                "5",
                "--out",
                path_str(p)
            ])),
            0
        );
    }
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn unknown_suite_is_a_config_error() {
    assert_eq!(code(&setlab(&["verify", "--suite", "everything"])), 2);
}

#[test]
fn collide_analytic_case() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.json");
    let cert_path = dir.path().join("cert.json");
    let spec = PhiSpec::polynomial(vec![vec![1.0, 1.0]]).unwrap();
    fs::write(&phi, spec.to_json().unwrap()).unwrap();
    let out = setlab(&[
        "collide",
        "--phi",
        path_str(&phi),
        "-m",
        "2",
        "--out",
        path_str(&cert_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cert = CollisionCertificate::from_json(&fs::read_to_string(&cert_path).unwrap()).unwrap();
    cert.verify(&spec).unwrap();
    assert_eq!(cert.x_plus, vec![1.0, -1.0]);
    assert!(cert.x_minus.iter().all(|v| v.abs() <= 1e-12));
    assert_eq!(cert.f_gap, 2.0);
    assert_eq!(read_json(&cert_path)["schema"], "setlab.certificate/v1");
}

#[test]
fn collide_rejects_wrong_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.json");
    fs::write(
        &phi,
        PhiSpec::polynomial(vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0]])
            .unwrap()
            .to_json()
            .unwrap(),
    )
    .unwrap();
    let out = setlab(&[
        "collide",
        "--phi",
        path_str(&phi),
        "-m",
        "2",
        "--out",
        path_str(&dir.path().join("c.json")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn contours_f_star_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fstar.csv");
    let out = setlab(&[
        "contours",
        "--fn",
        "f-star",
        "--resolution",
        "201",
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 201 * 201);
    for r in &rows {
        if r[0] == r[1] {
            assert_eq!(r[2], -1.0);
        }
        if r[0] == 1.0 && r[1] == -1.0 {
            assert_eq!(r[2], 1.0);
        }
    }
}

#[test]
fn contours_reject_three_elements() {
    let dir = tempfile::tempdir().unwrap();
    let out = setlab(&[
        "contours",
        "--fn",
        "max",
        "-m",
        "3",
        "--out",
        path_str(&dir.path().join("g.csv")),
    ]);
    assert_eq!(code(&out), 2);
}

fn write_config(dir: &Path, m: usize, activation: &str, step: f64) -> std::path::PathBuf {
    let cfg = serde_json::json!({
        "task": "f_star", "M": m, "N": 2, "epochs": 3, "batch_size": 16, "step_size": step,
        "seed": 1, "samples": 64, "phi_hidden": [6], "rho_hidden": [6], "activation": activation,
        "eval_resolution": 7
    });
    let path = dir.join(format!("cfg_{m}_{activation}_{step}.json"));
    fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn train_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 3, "tanh", 0.05);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = setlab(&["train", "--config", path_str(&cfg), "--out", path_str(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["phi.json", "metrics.json", "checkpoint.json"] {
        assert!(a.join(name).exists(), "{name}");
        assert!(read_json(&a.join(name))["schema"].is_string(), "{name}");
    }
    assert_eq!(
        fs::read(a.join("checkpoint.json")).unwrap(),
        fs::read(b.join("checkpoint.json")).unwrap()
    );

    // The exported encoder feeds straight into the collision search.
    let cert = dir.path().join("cert.json");
    let o = setlab(&[
        "collide",
        "--phi",
        path_str(&a.join("phi.json")),
        "-m",
        "3",
        "--out",
        path_str(&cert),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn train_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), 0, "tanh", 0.05);
    assert_eq!(
        code(&setlab(&[
            "train",
            "--config",
            path_str(&bad),
            "--out",
            path_str(&dir.path().join("x"))
        ])),
        2
    );
    let wild = write_config(dir.path(), 3, "relu", 1e6);
    assert_eq!(
        code(&setlab(&[
            "train",
            "--config",
            path_str(&wild),
            "--out",
            path_str(&dir.path().join("y"))
        ])),
        3
    );
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sets.csv");
    fs::write(&input, "0.2,0.9,0.4\n-0.5,0.5,0.25\n1,1,-1\n").unwrap();
    let latent = dir.path().join("latent.csv");
    let back = dir.path().join("back.csv");
    assert_eq!(
        code(&setlab(&[
            "encode",
            "--input",
            path_str(&input),
            "--out",
            path_str(&latent)
        ])),
        0
    );
    assert_eq!(
        code(&setlab(&[
            "decode",
            "--input",
            path_str(&latent),
            "--out",
            path_str(&back)
        ])),
        0
    );
    let rows: Vec<Vec<f64>> = fs::read_to_string(&back)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|s| s.parse().unwrap()).collect())
        .collect();
    let expected = [[0.9, 0.4, 0.2], [0.5, 0.25, -0.5], [1.0, 1.0, -1.0]];
    for (r, e) in rows.iter().zip(expected) {
        for (a, b) in r.iter().zip(e) {
            assert!((a - b).abs() <= 1e-9, "{r:?} vs {e:?}");
        }
    }
}

#[test]
fn varsize_encode_decode() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sets.csv");
    fs::write(&input, "0.5\n0.0,1.0\n-0.3,0.8,0.1\n").unwrap();
    let latent = dir.path().join("latent.csv");
    let back = dir.path().join("back.csv");
    let run = |cmd: &str, i: &Path, o: &Path| {
        code(&setlab(&[
            cmd,
            "--input",
            path_str(i),
            "--out",
            path_str(o),
            "--m-max",
            "3",
        ]))
    };
    assert_eq!(run("encode", &input, &latent), 0);
    assert_eq!(run("decode", &latent, &back), 0);
    let text = fs::read_to_string(&back).unwrap();
    let sizes: Vec<usize> = text.lines().map(|l| l.split(',').count()).collect();
    assert_eq!(sizes, vec![1, 2, 3]);
}
