use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

const GIG: &str = r#"{
  "group": {"kind": "positive_reals"},
  "subgroup": {"kind": "trivial"},
  "representation": {"kind": "diagonal_weights", "weights": [1, -1]},
  "v0": [0.5, 0.5],
  "characters": {"kind": "power"},
  "samples": {"count": 64, "seed": 3}
}"#;

struct Specs {
    dir: TempDir,
}

impl Specs {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn write(&self, name: &str, body: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }
}

fn repfam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repfam")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn check_gig_is_injective() {
    let s = Specs::new();
    let o = repfam(&["check", s.write("gig.json", GIG).to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["injective"], true);
    assert_eq!(r["condition_A"]["holds"], true);
    assert_eq!(r["condition_A"]["rank"]["rank"], 2);
    assert_eq!(r["prop1_consistent"], true);
    assert_eq!(r["provenance"]["seed"], 3);
    assert_eq!(r["provenance"]["tolerances"]["rank_rel"], 1e-9);
    assert!(r["provenance"]["version"].is_string());
}

#[test]
fn check_case_one_reports_non_cyclic() {
    let s = Specs::new();
    let p = s.write("c1.json", &GIG.replace("[0.5, 0.5]", "[1, 0]"));
    let o = repfam(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let r = json(&o);
    assert_eq!(r["cyclic"]["holds"], false);
    assert_eq!(r["cyclic"]["rank"]["rank"], 1);
    assert_eq!(r["injective"], false);
    assert!(r["injectivity"]["witness"].is_object());
}

#[test]
fn malformed_specs_exit_2() {
    let s = Specs::new();
    let bad_shape = s.write("shape.json", &GIG.replace("[0.5, 0.5]", "[0.5, 0.5, 1]"));
    assert_eq!(repfam(&["check", bad_shape.to_str().unwrap()]).status.code(), Some(2));

    let unknown = s.write("unknown.json", &GIG.replace("\"v0\"", "\"extra\": true,\n  \"v0\""));
    let o = repfam(&["check", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("extra") && msg.contains("line"), "{msg}");

    assert_eq!(repfam(&["check", "/nonexistent/spec.json"]).status.code(), Some(2));
    assert_eq!(repfam(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn equiv_recovers_scaling() {
    let s = Specs::new();
    let a = s.write("a.json", GIG);
    let b = s.write("b.json", &GIG.replace("[0.5, 0.5]", "[3, -1]"));
    let o = repfam(&["equiv", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&o);
    let psi = &r["intertwiner"]["psi"];
    for (i, j, want) in [(0, 0, 6.0), (0, 1, 0.0), (1, 0, 0.0), (1, 1, -2.0)] {
        assert!((psi[i][j].as_f64().unwrap() - want).abs() < 1e-8);
    }
    assert_eq!(r["same_family"]["same"], true);

    let o = repfam(&["equiv", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let psi = &json(&o)["intertwiner"]["psi"];
    assert!((psi[0][0].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(psi[0][1].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn equiv_negative_and_non_cyclic() {
    let s = Specs::new();
    let a = s.write("a.json", GIG);
    let w = s.write("w.json", &GIG.replace("[1, -1]", "[1, 2]"));
    let o = repfam(&["equiv", a.to_str().unwrap(), w.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let r = json(&o);
    assert_eq!(r["same_family"]["same"], false);
    assert!(r["same_family"]["residual_forward"].as_f64().unwrap() > 1e-8);

    let c1 = s.write("c1.json", &GIG.replace("[0.5, 0.5]", "[1, 0]"));
    let o = repfam(&["equiv", c1.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("equivalence defined on cyclic pairs"));
}

#[test]
fn family_grid_matches_exponential() {
    let s = Specs::new();
    let p = s.write("gig.json", GIG);
    let o = repfam(&["family", p.to_str().unwrap(), "--theta", "2,0,1", "--grid", "0.1:5:5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,pdf"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, p) = l.split_once(',').unwrap();
            (x.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    for (x, p) in rows {
        assert!((p - (-x).exp()).abs() < 1e-12, "x={x}");
    }
    assert!(stderr(&o).contains("phi="));
}

#[test]
fn family_outside_theta_exits_4() {
    let s = Specs::new();
    let p = s.write("gig.json", GIG);
    let o = repfam(&["family", p.to_str().unwrap(), "--theta", "1,0,-1", "--grid", "0.1:5:5"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("(ii)"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());

    let o = repfam(&["family", p.to_str().unwrap(), "--theta", "1,0", "--grid", "0.1:5:5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn family_sampling_is_deterministic() {
    let s = Specs::new();
    let p = s.write("gig.json", GIG);
    let run =
        |seed: &str| repfam(&["family", p.to_str().unwrap(), "--theta", "2,2,0.5", "--sample", "10", "--seed", seed]);
    let (a, b, c) = (run("1"), run("1"), run("2"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a).lines().count(), 10);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert!(stdout(&a).lines().all(|l| l.parse::<f64>().unwrap() > 0.0));
}

#[test]
fn reports_are_byte_identical() {
    let s = Specs::new();
    let a = s.write("a.json", GIG);
    let b = s.write("b.json", &GIG.replace("[0.5, 0.5]", "[3, -1]"));
    for args in [vec!["check", a.to_str().unwrap()], vec!["equiv", a.to_str().unwrap(), b.to_str().unwrap()]] {
        assert_eq!(repfam(&args).stdout, repfam(&args).stdout);
    }
}

#[test]
fn verify_gig_passes_and_detects_tampering() {
    let o = repfam(&["verify-gig"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("12/12 cases pass"), "{text}");
    assert!(text.contains("seed=") && text.contains("quad_tol="));

    let o = repfam(&["verify-gig", "--perturb-bessel", "1.000001"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("failures:"));
}
