use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solvstruct")).args(args).env_remove("SOLVSTRUCT_SEED").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn csv(o: &Output) -> Vec<Vec<f64>> {
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn write_system(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> String {
    let mut v = json(&run(&["export", "cm2:g=1"]));
    edit(&mut v);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn verify_cm_reports_bracket_coefficients() {
    let o = run(&["verify", "cm2:g=1"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["passed"], true);
    let s = &r["structure"];
    let entry = s["f_table"].as_array().unwrap().iter().find(|e| e["i"] == 2 && e["j"] == 2).unwrap();
    let points = s["points"].as_array().unwrap();
    assert_eq!(points.len(), 200);
    for (c, x) in entry["coefficients"].as_array().unwrap().iter().zip(points) {
        // extended point (t, q1, q2, p1, p2)
        let p = x[3].as_f64().unwrap() + x[4].as_f64().unwrap();
        assert!((c[0].as_f64().unwrap() - 4.0 * p).abs() < 1e-8);
        assert!((c[1].as_f64().unwrap() + 4.0).abs() < 1e-8);
    }
}

#[test]
fn verify_oscillators_has_zero_residuals() {
    let o = run(&["verify", "ho:n=2,m=1 1,c=1 2", "--samples", "50"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert!(r["structure"]["max_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn verify_reports_involution_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_system(dir.path(), "bad.json", |v| v["integrals"][0] = "p1".into());
    let o = run(&["verify", &path]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    let failing: Vec<_> =
        r["check"]["involution"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert!(failing.iter().any(|c| c["relation"] == "{F1,H}"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_system(dir.path(), "typo.json", |v| v["hamiltonian"] = "p1^2 + w".into());
    let o = run(&["verify", &path]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("hamiltonian:"));
    assert_eq!(code(&run(&["verify", "missing-file.json"])), 2);
    assert_eq!(code(&run(&["verify", "ho:n=2,m=1,c=1 2"])), 2);
    assert_eq!(code(&run(&["integrate", "cm2:g=1", "--x0", "1,2"])), 2);
    assert_eq!(code(&run(&["bogus"])), 2);
}

#[test]
fn missing_capabilities_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_system(dir.path(), "plain.json", |v| {
        v.as_object_mut().unwrap().remove("g_functions");
    });
    assert_eq!(code(&run(&["verify", &path])), 3);
    let o = run(&["integrate", &path, "--x0", "1,-1,0,0", "--method", "closed-form"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn closed_form_matches_explicit_solution() {
    let o =
        run(&["integrate", "cm2:g=1", "--x0", "1,-1,0,0", "--t1", "3", "--step", "0.25", "--method", "closed-form"]);
    assert_eq!(code(&o), 0);
    let header = String::from_utf8(o.stdout.clone()).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,q1,q2,p1,p2,F1,F2");
    let rows = csv(&o);
    assert_eq!(rows.len(), 13);
    for r in &rows {
        assert!((r[1] - 0.5 * (r[0] * r[0] + 4.0).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn methods_agree() {
    let args =
        |m: &'static str| ["integrate", "cm2:g=1", "--x0", "1,-1,0,0", "--t1", "2", "--step", "0.01", "--method", m];
    let rk = csv(&run(&args("rk4")));
    for m in ["closed-form", "quadrature"] {
        let other = csv(&run(&args(m)));
        assert_eq!(other.len(), rk.len());
        let dev =
            rk.iter().zip(&other).flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs())).fold(0.0, f64::max);
        assert!(dev < 1e-6, "{m}: {dev}");
    }
}

#[test]
fn empty_span_gives_one_row() {
    let o = run(&["integrate", "ho:n=1", "--x0", "0,1", "--t0", "0.5", "--t1", "0.5"]);
    assert_eq!(code(&o), 0);
    let rows = csv(&o);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.5);
}

#[test]
fn singular_start_exits_1() {
    assert_eq!(code(&run(&["integrate", "cm2:g=1", "--x0", "1,1,0,0"])), 1);
    assert_eq!(code(&run(&["integrate", "ho:n=1", "--x0", "0,0", "--method", "closed-form"])), 1);
}

#[test]
fn action_angle_outputs() {
    let o = run(&["action-angle", "ho:n=1,m=1,c=1"]);
    assert_eq!(code(&o), 0);
    let aa = &json(&o)["action_angle"];
    assert_eq!(aa["actions"][0], "p1^2/2 + q1^2/2");
    assert_eq!(aa["angles"][0], "atan(q1/p1)");

    let o = run(&["action-angle", "cm2:g=1"]);
    assert_eq!(code(&o), 0);
    let aa = &json(&o)["action_angle"];
    assert_eq!(aa["angles"][0], "q1 + q2");
    assert_eq!(aa["angles"][1], "p1*q1 - p2*q1 - p1*q2 + p2*q2");
    assert_eq!(aa["passed"], true);
    assert!(aa["canonicity"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn pfaffian_set_for_cm() {
    let o = run(&["pfaffian", "cm2:g=1", "--chart", "integral"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["pfaffian"]["lambda"], "-4*F1^2 + 8*F2");
    assert_eq!(r["pfaffian"]["forms"][2]["form"], "(1/2) · dF1");
    assert!(r["descent"]["halted"].is_null());
}

#[test]
fn output_file_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["verify", "cm2:g=1", "--samples", "20", "--seed", "9", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let a: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_solvstruct"))
        .args(["verify", "cm2:g=1", "--samples", "20"])
        .env("SOLVSTRUCT_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(a, json(&b));
    let c = json(&run(&["verify", "cm2:g=1", "--samples", "20"]));
    assert_ne!(a["structure"]["points"], c["structure"]["points"]);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn export_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ho.json");
    assert_eq!(code(&run(&["export", "ho:n=2,m=1 1,c=1 2", "-o", path.to_str().unwrap()])), 0);
    let o = run(&["verify", path.to_str().unwrap(), "--samples", "30"]);
    assert_eq!(code(&o), 0);
    let again = run(&["export", path.to_str().unwrap()]);
    let first: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json(&again), first);
}
