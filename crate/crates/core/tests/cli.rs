use std::path::Path;
use std::process::Command;

use vortex_chorus::choreography::OrbitResult;
use vortex_chorus::cli::{read_trajectory_csv, run, write_trajectory_csv, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE};
use vortex_chorus::hamiltonians::{first_integrals, SystemSpec, VortexState};
use vortex_chorus::integrate::{flow, Trajectory};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortex-chorus"))
}

fn run_args(args: &[&str]) -> (i32, String, String) {
    let mut out = vec![];
    let mut err = vec![];
    let argv = std::iter::once("vortex-chorus").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_writes_the_documented_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let status = bin()
        .args([
            "simulate", "--family", "euler", "--n", "4", "--init", "thomson", "--T", "10", "--tol", "1e-10",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let (header, rows) = read_trajectory_csv(&text).unwrap();
    assert_eq!(header.join(","), "t,x1,y1,x2,y2,x3,y3,x4,y4,H,I,P,Q");
    assert!(rows.len() > 2);
    assert_eq!(rows.last().unwrap()[0], 10.0);
    // 17 significant digits per value
    let first_value = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = first_value.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn thomson_triangle_has_eleven_columns() {
    let (code, out, _) = run_args(&["simulate", "--n", "3", "--T", "1"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.lines().all(|l| l.split(',').count() == 11));
}

#[test]
fn csv_round_trip_is_bitwise() {
    let spec = SystemSpec::bec(vec![1.0; 3], 1.0, 1.0).unwrap();
    let z = VortexState::from_xy(&[0.3, 0.1, -0.2, 0.25, 0.05, -0.4]).unwrap();
    let traj = flow(&spec, &z, 2.0, 1e-10).unwrap();
    let mut buf = vec![];
    write_trajectory_csv(&traj, &mut buf).unwrap();
    let (_, rows) = read_trajectory_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(rows.len(), traj.len());
    for (row, (t, (s, f))) in rows.iter().zip(traj.times.iter().zip(traj.states.iter().zip(&traj.integrals)))
    {
        let mut want = vec![*t];
        want.extend(s.to_xy());
        want.extend([f.h, f.i, f.p, f.q]);
        assert_eq!(row, &want);
    }
}

#[test]
fn empty_trajectory_is_header_only() {
    let spec = SystemSpec::euler(vec![1.0; 2]).unwrap();
    let traj = Trajectory { spec, times: vec![], states: vec![], integrals: vec![] };
    let mut buf = vec![];
    write_trajectory_csv(&traj, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "t,x1,y1,x2,y2,H,I,P,Q\n");
}

#[test]
fn json_export_mirrors_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.json");
    let (code, _, _) = run_args(&["simulate", "--n", "2", "--T", "0.5", "--out", p(&out)]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let first = v.as_array().unwrap()[0].as_object().unwrap();
    let keys: Vec<&str> = first.keys().map(String::as_str).collect();
    assert_eq!(keys, ["t", "x1", "y1", "x2", "y2", "H", "I", "P", "Q"]);
    let z = VortexState::polygon(2, 0.5);
    let f = first_integrals(&SystemSpec::euler(vec![1.0; 2]).unwrap(), &z).unwrap();
    assert_eq!(first["H"].as_f64().unwrap(), f.h);
}

#[test]
fn sphere_reports_max_defect() {
    let out = bin()
        .args(["sphere", "--target", "cpn1", "--n", "3", "--check-equivariance", "--samples", "100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("max_defect=")).unwrap();
    let v: f64 = line["max_defect=".len()..].parse().unwrap();
    assert!(v < 1e-12);
}

#[test]
fn search_emits_a_json_array() {
    let out = bin()
        .args(["search", "--family", "bec", "--n", "3", "--mu", "1", "--lambda", "1", "--I", "0.3"])
        .args(["--starts", "64", "--seed", "7", "--require-nontrivial"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let results: Vec<OrbitResult> = serde_json::from_slice(&out.stdout).unwrap();
    for r in &results {
        assert!(r.residual < 1e-9);
        assert_ne!(format!("{:?}", r.classification), "TrivialRelativeEquilibrium");
    }
}

#[test]
fn search_is_deterministic_across_thread_counts() {
    let args = ["search", "--family", "bec", "--n", "3", "--I", "0.3", "--starts", "8", "--seed", "3"];
    let one = bin().env("VORTEX_CHORUS_THREADS", "1").args(args).output().unwrap();
    let four = bin().env("VORTEX_CHORUS_THREADS", "4").args(args).output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"family": "bec", "n": 5, "t_end": 0.5, "radius": 0.4}"#).unwrap();
    let (code, out, err) = run_args(&["simulate", "--config", p(&cfg), "--n", "3"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.lines().next().unwrap().ends_with("x3,y3,H,I,P,Q"));
    let (_, rows) = read_trajectory_csv(&out).unwrap();
    assert_eq!(rows.last().unwrap()[0], 0.5);
    assert!((rows[0][1] - 0.4).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    assert_eq!(run_args(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run_args(&["simulate", "--T"]).0, EXIT_USAGE);
    let (code, out, _) = run_args(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("simulate"));
    // collision in the initial state
    assert_eq!(run_args(&["simulate", "--n", "2", "--state", "0.1,0,0.1,0", "--T", "1"]).0, EXIT_DOMAIN);
    // odd n on the centred sphere
    assert_eq!(run_args(&["sphere", "--target", "cpn2", "--n", "5", "--check-equivariance"]).0, EXIT_DOMAIN);
    // BEC vortex outside the disc
    assert_eq!(
        run_args(&["simulate", "--family", "bec", "--n", "2", "--radius", "1.5", "--T", "1"]).0,
        EXIT_DOMAIN
    );
    assert_eq!(bin().arg("nonsense").status().unwrap().code(), Some(EXIT_USAGE));
}

#[test]
fn no_converged_start_is_a_numerical_failure() {
    // one Newton iteration cannot reach the tolerance from a perturbed seed
    let (code, out, _) = run_args(&[
        "search",
        "--family",
        "bec",
        "--n",
        "3",
        "--I",
        "0.3",
        "--starts",
        "2",
        "--perturbation",
        "0.2",
        "--max-iter",
        "1",
        "--newton-tol",
        "1e-14",
    ]);
    assert_eq!(code, 2);
    assert_eq!(serde_json::from_str::<serde_json::Value>(&out).unwrap(), serde_json::json!([]));
}

#[test]
fn analyze_and_reduce_subcommands() {
    let (code, out, _) = run_args(&["analyze", "trap", "--alpha", "0.7", "--beta", "-0.4", "--n", "3"]);
    assert_eq!(code, EXIT_OK);
    let v: f64 = out.trim().trim_start_matches("trap_coefficient=").parse().unwrap();
    assert!((v - 2.0 * 0.2f64.powi(3)).abs() < 1e-14);

    let (code, out, _) = run_args(&["analyze", "maximality", "--n", "4", "--trials", "500"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], true);

    let (code, out, _) = run_args(&["reduce", "--family", "euler", "--n", "5"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["space"], "CPn2");
    assert!(v["fs_diameter"].as_f64().unwrap() < 1e-10);

    let (code, _, _) = run_args(&["analyze", "probe", "--family", "euler", "--n", "4", "--level", "-5"]);
    assert_eq!(code, EXIT_DOMAIN);
}
