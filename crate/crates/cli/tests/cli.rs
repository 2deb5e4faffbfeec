use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> (i32, Option<Value>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hyperorbit")).args(args).output().expect("binary runs");
    let code = out.status.code().expect("exit code");
    let report = serde_json::from_slice(&out.stdout).ok();
    (code, report, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn trace_lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn ln_fact(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[test]
fn identities_exit_codes() {
    let (code, r, _) = run(&["identities", "--max-n", "200"]);
    assert_eq!(code, 0);
    let r = r.unwrap();
    assert_eq!(r["status"], "pass");
    for c in r["checks"].as_array().unwrap() {
        assert!(c.get("measured").is_some() && c.get("bound").is_some() && c.get("anchor").is_some());
    }
    assert_eq!(run(&["identities", "--max-n", "3"]).0, 0);
    let (code, r, _) = run(&["identities", "--max-n", "40", "--corrupt-fib", "11"]);
    assert_eq!(code, 1);
    assert_eq!(check(&r.unwrap(), "fibonacci_identities")["status"], "fail");
    assert_eq!(run(&["identities", "--max-n", "2"]).0, 2);
}

#[test]
fn contraction_ball_orbit_converges() {
    let dir = TempDir::new().unwrap();
    let x: Vec<String> = (1..=60).map(|i| format!("[{},0]", 0.3 / 60.0 * (i as f64).sin())).collect();
    let y: Vec<String> = (1..=60).map(|i| format!("[{},0]", -0.5 / 60.0 * (i as f64).cos())).collect();
    let init = format!(r#"[{{"space":"L1","coords":[{}]}},{{"space":"L1","coords":[{}]}}]"#, x.join(","), y.join(","));
    let init = write(&dir, "ball.json", &init);
    let (code, r, _) = run(&["orbit", "--operator", "m_l1", "--weights", "unit", "--init", &init, "--steps", "100"]);
    assert_eq!(code, 0);
    let r = r.unwrap();
    assert_eq!(r["results"]["classification"], "converges_to_zero");
    assert_eq!(check(&r, "closed_form")["status"], "pass");
}

#[test]
fn companion_orbit_has_target_weights() {
    let dir = TempDir::new().unwrap();
    let xy = dir.path().join("xy.json");
    let trace = dir.path().join("t.jsonl");
    let (code, r, _) = run(&["build", "companion", "--vectors", xy.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(r.unwrap()["status"], "pass");
    let (code, r, _) =
        run(&["orbit", "--operator", "m_l1", "--init", xy.to_str().unwrap(), "--steps", "16", "--trace", trace.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = r.unwrap();
    // x_{2n} = 2^n n!² B_ω^n(y)
    let kappa = r["results"]["log_kappa"].as_array().unwrap();
    for n in 1..=8 {
        let want = n as f64 * std::f64::consts::LN_2 + 2.0 * ln_fact(n);
        assert!((kappa[2 * n - 1].as_f64().unwrap() - want).abs() <= 1e-9 * want.max(1.0), "n = {n}");
    }
    assert_eq!(trace_lines(&trace).len(), 16);
}

#[test]
fn zero_init_gives_zero_trace() {
    let dir = TempDir::new().unwrap();
    let init = write(&dir, "z.json", r#"[{"space":"L1","coords":[[0,0],[0,0],[0,0],[0,0]]},{"space":"L1","coords":[[0,0],[0,0],[0,0],[0,0]]}]"#);
    let trace = dir.path().join("t.jsonl");
    let (code, _, _) = run(&["orbit", "--operator", "m_l1", "--init", &init, "--steps", "4", "--trace", trace.to_str().unwrap()]);
    assert_eq!(code, 0);
    for line in trace_lines(&trace) {
        assert!(line["log_norm"].is_null());
        assert!(line["coords"].as_array().unwrap().iter().all(|c| c == &serde_json::json!([0.0, 0.0])));
    }
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{ not json");
    assert_eq!(run(&["orbit", "--operator", "m_l1", "--init", &bad]).0, 2);
    let ok = write(&dir, "ok.json", r#"[{"space":"L1","coords":[[1,0]]},{"space":"L1","coords":[[1,0]]}]"#);
    assert_eq!(run(&["orbit", "--operator", "nope", "--init", &ok]).0, 2);
    assert_eq!(run(&["orbit", "--operator", "m_fg_prime", "--init", &ok]).0, 2);
    assert_eq!(run(&["orbit", "--operator", "m_l1", "--init", &ok, "--rational"]).0, 2);
    assert_eq!(run(&["build", "nothing"]).0, 2);
}

#[test]
fn symmetric_orbit_skips_closed_form() {
    let dir = TempDir::new().unwrap();
    let init = write(&dir, "s.json", r#"[{"space":"L1","coords":[[0.1,0],[0.2,0],[0.1,0]]},{"space":"L1","coords":[[0.3,0],[0.1,0],[0.1,0]]}]"#);
    let (code, r, _) = run(&["orbit", "--operator", "m_symmetric", "--init", &init, "--steps", "3"]);
    assert_eq!(code, 0);
    assert_eq!(check(&r.unwrap(), "closed_form")["status"], "skip");
}

#[test]
fn rational_steering_orbit() {
    let dir = TempDir::new().unwrap();
    let init = write(&dir, "r.json", r#"[{"space":"CN","param":5,"coords":[[2,0]]},{"space":"CN","param":5,"coords":[[1,0],[3,0],[-1,0],[4,0],[5,0]]}]"#);
    let trace = dir.path().join("t.jsonl");
    let (code, r, _) = run(&["orbit", "--operator", "mc_CN", "--rational", "--init", &init, "--steps", "3", "--trace", trace.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(check(&r.unwrap(), "rational_vs_float")["status"], "pass");
    let lines = trace_lines(&trace);
    // x_1 = [x_0]_1 B(y) = 2·(3, -1, 4, 5), x_2 = [y]_1 B(x_1)
    let first: Vec<&str> = lines[0]["coords"].as_array().unwrap().iter().map(|c| c["num"].as_str().unwrap()).collect();
    assert_eq!(first, ["6", "-2", "8", "10"]);
    let second: Vec<&str> = lines[1]["coords"].as_array().unwrap().iter().map(|c| c["num"].as_str().unwrap()).collect();
    assert_eq!(second, ["-2", "8", "10"]);
}

#[test]
fn universal_l1_three_blocks() {
    let (code, r, _) = run(&["build", "universal_l1", "--blocks", "3"]);
    assert_eq!(code, 0);
    let r = r.unwrap();
    for kind in ["block_norm", "phi_bound", "universality_residual"] {
        let cs: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["name"].as_str().unwrap().starts_with(kind)).collect();
        assert!(!cs.is_empty());
        assert!(cs.iter().all(|c| c["status"] == "pass"));
    }
    assert_eq!(r["results"]["n"].as_array().unwrap().len(), 3);
}

#[test]
fn symmetric_preimage_of_3e1() {
    let (code, r, _) = run(&["build", "symmetric_preimage", "--lambda=-4,2"]);
    assert_eq!(code, 0);
    let c = check(r.as_ref().unwrap(), "symmetric_residual");
    assert!(c["measured"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn companion_zero_coordinate_fails() {
    let dir = TempDir::new().unwrap();
    let y = write(&dir, "y.json", r#"{"space":"L1","coords":[[1,0],[0,0],[2,0]]}"#);
    let (code, r, _) = run(&["build", "companion", "--init", &y]);
    assert_eq!(code, 1);
    assert_eq!(check(&r.unwrap(), "zero_coordinate")["status"], "fail");
}

#[test]
fn other_builders_pass() {
    for target in ["delta_d", "q_blocks"] {
        let (code, r, _) = run(&["build", target]);
        assert_eq!(code, 0, "{target}");
        assert_eq!(r.unwrap()["status"], "pass");
    }
}

#[test]
fn conjugate_bases() {
    let (code, r, _) = run(&["conjugate", "--basis", "identity", "--n", "100", "--samples", "100"]);
    assert_eq!(code, 0);
    let r = r.unwrap();
    assert!(check(&r, "commutation_basis_pairs")["measured"].as_f64().unwrap() <= 1e-15);
    let (code, r, _) = run(&["conjugate", "--basis", "banded", "--scale", "0.3", "--n", "200", "--samples", "50"]);
    assert_eq!(code, 0);
    assert!(check(&r.unwrap(), "commutation_basis_pairs")["measured"].as_f64().unwrap() <= 1e-10);
    let (code, _, err) = run(&["conjugate", "--basis", "diagonal", "--scale", "3"]);
    assert_eq!(code, 2);
    assert!(err.contains("out of range"));
}

#[test]
fn julia_brackets() {
    let dir = TempDir::new().unwrap();
    let e12 = write(&dir, "e12.json", r#"{"space":"L1","coords":[[1,0],[1,0]]}"#);
    let (code, r, _) = run(&["julia", "--direction", &e12, "--bracket", "1,10"]);
    assert_eq!(code, 1);
    assert_eq!(check(&r.unwrap(), "bad_bracket")["status"], "fail");
    let (code, r, _) = run(&["julia"]);
    assert_eq!(code, 0);
    let r = r.unwrap();
    assert!(check(&r, "bracket_width")["measured"].as_f64().unwrap() <= 1e-9);
    assert_eq!(r["results"]["class_lo"], "converges_to_zero");
    assert_eq!(run(&["julia", "--bracket", "20,1"]).0, 1);
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let (code, _, _) = run(&["--seed", "5", "--out", p.to_str().unwrap(), "conjugate", "--basis", "banded", "--n", "60", "--samples", "20"]);
        assert_eq!(code, 0);
    }
    let strip = |p: &Path| {
        let mut v: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v["wall_time"] = Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
}
