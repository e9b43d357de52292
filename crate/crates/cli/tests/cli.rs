//! End-to-end exercises of the command-line surface: exit codes, artifact
//! files, slice grids, and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wermer-forge"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn tune_default_accepts_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["tune", "--out", "report.json"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema"], "wermer-forge/1");
    assert_eq!(report["accepted"], true);
}

#[test]
fn tune_rejects_bad_p_with_usage_exit() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("targets.json"),
        serde_json::json!({
            "eps_id": 0.5, "p": 0.3, "c_core": 0.01,
            "budgets": {
                "max_n": 16384, "min_delta": 1e-8, "shadow_samples": 1024,
                "volume_samples": 2000, "inclusion_samples": 2000,
                "deviation_samples": 2000, "seed": 0
            }
        })
        .to_string(),
    )
    .unwrap();
    let out = run(&["tune", "--config", "targets.json"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn tune_unreadable_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["tune", "--config", "missing.json"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn certify_obstruction_tuned_params_then_identity() {
    let dir = tempfile::tempdir().unwrap();
    // tune first; reuse its params for the obstruction request
    let out = run(&["tune", "--out", "report.json"], dir.path());
    assert_eq!(code(&out), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let params = report["params"].clone();

    fs::write(
        dir.path().join("obstruction.json"),
        serde_json::json!({
            "map": {"kind": "WermerF", "params": params},
            "domain": {"kind": "ShiftedBallB"},
            "delta_ball": 0.2
        })
        .to_string(),
    )
    .unwrap();
    let certs = dir.path().join("certs");
    fs::create_dir(&certs).unwrap();
    let out = run(
        &[
            "certify",
            "--params",
            "obstruction.json",
            "--what",
            "obstruction",
            "--out",
            "certs",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // content-addressed certificate file exists and is valid
    let files: Vec<_> = fs::read_dir(&certs).unwrap().collect();
    assert_eq!(files.len(), 1);
    let cert: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(files[0].as_ref().unwrap().path()).unwrap(),
    )
    .unwrap();
    assert_eq!(cert["valid"], true);

    // identity map: no witness, certified-negative exit
    fs::write(
        dir.path().join("identity.json"),
        serde_json::json!({
            "map": {"kind": "Identity"},
            "domain": {"kind": "ShiftedBallB"},
            "delta_ball": 0.2
        })
        .to_string(),
    )
    .unwrap();
    let out = run(
        &[
            "certify",
            "--params",
            "identity.json",
            "--what",
            "obstruction",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn certify_zero_free_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // touching the axis trips the contour guard
    fs::write(
        dir.path().join("touching.json"),
        serde_json::json!({
            "n": 50,
            "rectangle": {"re_min": -1.0, "re_max": 0.0, "im_min": -2.0, "im_max": 2.0}
        })
        .to_string(),
    )
    .unwrap();
    let out = run(
        &["certify", "--params", "touching.json", "--what", "zero-free"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("re_max < 0"), "stderr: {err}");

    // a genuinely zero-free rectangle validates
    fs::write(
        dir.path().join("clean.json"),
        serde_json::json!({
            "n": 100,
            "rectangle": {"re_min": -2.0, "re_max": -0.01, "im_min": -2.0, "im_max": 2.0}
        })
        .to_string(),
    )
    .unwrap();
    let out = run(
        &[
            "certify",
            "--params",
            "clean.json",
            "--what",
            "zero-free",
            "--out",
            "zf.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("zf.json")).unwrap()).unwrap();
    assert_eq!(cert["winding"], 0);
}

#[test]
fn slice_membership_draws_the_dp_disk() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("slice.json"),
        serde_json::json!({
            "mode": "membership",
            "vary": "z3",
            "fixed_z1": [0.0, 0.0],
            "fixed_z2": [0.0, 0.0],
            "re_min": -2.4, "re_max": 0.4, "im_min": -1.4, "im_max": 1.4,
            "nx": 57, "ny": 57,
            "domain": {"kind": "WermerDp", "params": {"p": 0.1}}
        })
        .to_string(),
    )
    .unwrap();
    let out = run(
        &["slice", "--config", "slice.json", "--out", "grid.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 57);
    // on the axis slice the region is exactly {2x + x^2 + y^2 < 0}
    for (i, row) in rows.iter().enumerate() {
        let im = -1.4 + 2.8 * i as f64 / 56.0;
        for (j, cell) in row.split(',').enumerate() {
            let re = -2.4 + 2.8 * j as f64 / 56.0;
            let rho = 2.0 * re + re * re + im * im;
            let expect = if rho.abs() <= 1e-12 {
                "2"
            } else if rho < 0.0 {
                "1"
            } else {
                "0"
            };
            assert_eq!(cell, expect, "cell ({i},{j}) at z3 = {re}+{im}i, rho = {rho}");
        }
    }
}

#[test]
fn slice_image_membership_shows_the_annulus_with_the_hole() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("slice.json"),
        serde_json::json!({
            "mode": "image-membership",
            "vary": "z1",
            "fixed_z2": [0.0, 0.0],
            "fixed_z3": [1e-3, 0.0],
            "re_min": -0.2, "re_max": 0.2, "im_min": -0.2, "im_max": 0.2,
            "nx": 41, "ny": 41,
            "map": {"kind": "Phi"},
            "domain": {"kind": "WermerDp", "params": {"p": 0.1}}
        })
        .to_string(),
    )
    .unwrap();
    let out = run(
        &["slice", "--config", "slice.json", "--out", "grid.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    let rows: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    // center pixel (z1 = 0): the unique fiber point sits at Re z3 > 0, so
    // inversion fails: the hole
    assert_eq!(rows[20][20], "3");
    // the witness circle |z1| = 0.1 lies in the image
    let on_circle = |i: usize, j: usize| {
        let re = -0.2 + 0.4 * j as f64 / 40.0;
        let im = -0.2 + 0.4 * i as f64 / 40.0;
        (re * re + im * im).sqrt()
    };
    let mut in_img = 0;
    let mut total = 0;
    for i in 0..41 {
        for j in 0..41 {
            let r = on_circle(i, j);
            if (r - 0.1).abs() < 0.01 {
                total += 1;
                if rows[i][j] == "1" {
                    in_img += 1;
                }
            }
        }
    }
    assert!(total > 20 && in_img == total, "{in_img}/{total} annulus pixels in image");
}

#[test]
fn slice_runs_are_byte_identical_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("slice.json"),
        serde_json::json!({
            "mode": "membership",
            "vary": "z3",
            "fixed_z1": [0.0, 0.0],
            "fixed_z2": [0.0, 0.0],
            "re_min": -2.0, "re_max": 0.0, "im_min": -1.0, "im_max": 1.0,
            "nx": 33, "ny": 33,
            "domain": {"kind": "ShiftedBallB"}
        })
        .to_string(),
    )
    .unwrap();
    let strip = |s: &str| -> String {
        s.lines()
            .filter(|l| !l.starts_with("# generated:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let out = run(&["slice", "--config", "slice.json", "--out", "a.csv"], dir.path());
    assert_eq!(code(&out), 0);
    // threads must not change the bytes either
    let out = run(
        &["slice", "--config", "slice.json", "--out", "b.csv", "--threads", "4"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let a = strip(&fs::read_to_string(dir.path().join("a.csv")).unwrap());
    let b = strip(&fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert_eq!(a, b);
}

#[test]
fn slice_deviation_of_tuned_f_stays_under_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["tune", "--out", "report.json"], dir.path());
    assert_eq!(code(&out), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    fs::write(
        dir.path().join("slice.json"),
        serde_json::json!({
            "mode": "deviation",
            "vary": "z3",
            "fixed_z1": [0.3, 0.1],
            "fixed_z2": [-0.2, 0.2],
            "re_min": -1.9, "re_max": -0.02, "im_min": -0.8, "im_max": 0.8,
            "nx": 25, "ny": 25,
            "map": {"kind": "WermerF", "params": report["params"]},
            "domain": {"kind": "ScaledBallBPrime"}
        })
        .to_string(),
    )
    .unwrap();
    let out = run(
        &["slice", "--config", "slice.json", "--out", "dev.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("dev.csv")).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        for cell in line.split(',') {
            let v: f64 = cell.parse().unwrap();
            // off-domain pixels still evaluate (F is defined on H); every
            // finite cell stays under the tuning target
            assert!(v.is_nan() || v < 0.5, "deviation cell {v}");
        }
    }
}

#[test]
fn slice_rejects_inconsistent_plane_specs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("slice.json"),
        serde_json::json!({
            "mode": "membership",
            "vary": "z3",
            "fixed_z1": [0.0, 0.0],
            "fixed_z3": [0.0, 0.0],
            "re_min": -1.0, "re_max": 0.0, "im_min": -1.0, "im_max": 1.0,
            "nx": 8, "ny": 8,
            "domain": {"kind": "ShiftedBallB"}
        })
        .to_string(),
    )
    .unwrap();
    let out = run(&["slice", "--config", "slice.json"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn chain_build_resume_and_report_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["chain", "--n", "1", "--eps", "0.5", "--seed", "7", "--out", "state1.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let out = run(
        &[
            "chain", "--n", "2", "--eps", "0.5", "--seed", "7",
            "--resume", "state1.json", "--out", "state2.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let state: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("state2.json")).unwrap())
            .unwrap();
    assert_eq!(state["n"], 2);
    assert_eq!(state["ledger"].as_array().unwrap().len(), 10);

    let out = run(
        &[
            "report",
            "--inputs",
            "state2.json",
            "--out",
            "summary.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["items"][0]["kind"], "chain-state");
    assert_eq!(summary["items"][0]["ok"], true);
}

#[test]
fn verify_recertifies_tuned_params() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["tune", "--out", "report.json"], dir.path());
    assert_eq!(code(&out), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    fs::write(
        dir.path().join("verify.json"),
        serde_json::json!({
            "params": report["params"],
            "targets": report["targets"],
        })
        .to_string(),
    )
    .unwrap();
    let out = run(
        &["verify", "--params", "verify.json", "--out", "v.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // doubling delta2 past the inclusion threshold must fail stage 3
    let mut bad = report["params"].clone();
    let d2 = bad["delta2"].as_f64().unwrap();
    bad["delta2"] = serde_json::json!(d2 * 8.0);
    fs::write(
        dir.path().join("bad.json"),
        serde_json::json!({"params": bad, "targets": report["targets"]}).to_string(),
    )
    .unwrap();
    let out = run(&["verify", "--params", "bad.json"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage 3"));
}
