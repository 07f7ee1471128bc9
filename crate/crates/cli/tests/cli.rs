use std::fs;
use std::path::Path;

use beckmann_cli::run_with;
use serde_json::Value;

const INSTANCES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/instances");

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("beckmann").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn instance(name: &str) -> String {
    format!("{INSTANCES}/{name}")
}

fn write_instance(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn selftest_passes_every_check() {
    let r = run(&["selftest"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.json();
    assert_eq!(report["all_passed"], Value::Bool(true));
    assert_eq!(report["failed"], 0);
    assert!(r.stderr.contains("PASS"));
    assert!(!r.stderr.contains("FAIL"));
}

#[test]
fn check_order_reports_the_counterexample_verdict() {
    let r = run(&["check-order", "--instance", &instance("counterexample.json")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.json();
    assert_eq!(report["verdict"], "no bimartingale coupling for (span e₁, span e₂)");
    assert_eq!(report["exists"], false);
    assert_eq!(report["witness"], Value::Null);
    assert_eq!(report["mode"], "rational");
}

#[test]
fn check_order_without_subspaces_uses_convex_order() {
    let r = run(&["check-order", "--instance", &instance("spread.json")]);
    assert_eq!(r.code, 0);
    let report = r.json();
    assert_eq!(report["order"], "convex");
    assert_eq!(report["exists"], true);
    assert_eq!(report["residuals"]["violation"], "0");
    assert_eq!(report["witness"].as_array().unwrap().len(), 2);
}

#[test]
fn solve_reports_the_degenerate_example() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("plan.csv");
    let lp = dir.path().join("primal.lp");
    let r = run(&[
        "solve",
        "--instance",
        &instance("degenerate.json"),
        "--csv",
        csv.to_str().unwrap(),
        "--lp-dump",
        lp.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.json();
    assert_eq!(report["primal_cost"], "1/4");
    assert_eq!(report["dual"]["value"], "1/4");
    assert_eq!(report["gap"], "0");
    assert_eq!(report["grid"]["source"], "generated");
    assert_eq!(report["tolerances"]["comparison"], 0.0);
    assert!(report["tolerances"]["spectral_gap"].is_number());
    assert!(fs::read_to_string(&csv).unwrap().starts_with("x,y,z,w,cost\n"));
    let dump = fs::read_to_string(&lp).unwrap();
    assert!(dump.starts_with("minimize") && dump.trim_end().ends_with("end"));
}

#[test]
fn solve_in_float_mode_agrees() {
    let r = run(&["solve", "--instance", &instance("degenerate.json"), "--mode", "float"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.json();
    assert_eq!(report["mode"], "float");
    assert!((report["primal_cost"].as_f64().unwrap() - 0.25).abs() < 1e-9);
}

#[test]
fn explicit_grid_files_are_used_as_given() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_instance(dir.path(), "grid.json", r#"{"grid": [[-1], [0], [1]]}"#);
    let r = run(&["solve", "--instance", &instance("spread.json"), "--grid", &grid]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.json();
    assert_eq!(report["grid"]["size"], 3);
    assert!(report["grid"]["source"].as_str().unwrap().starts_with("file:"));
    assert_eq!(report["primal_cost"], "1/2");
}

#[test]
fn infeasible_grids_ask_for_enlargement() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_instance(dir.path(), "grid.json", "[[5]]");
    let r = run(&["solve", "--instance", &instance("spread.json"), "--grid", &grid]);
    assert_eq!(r.code, 2);
    assert_eq!(r.json()["error"]["field"], "grid");
    let r = run(&["solve", "--instance", &instance("spread.json"), "--grid", &grid, "--enlarge"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn decompose_emits_tree_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("tree.dot");
    let r = run(&["decompose", "--instance", &instance("degenerate.json"), "--dot", dot.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.json();
    assert_eq!(report["leaf_count"], 2);
    assert_eq!(report["total_cost"], "1/4");
    let leaves = report["leaves"].as_array().unwrap();
    assert!(leaves.iter().all(|l| l["theta"] == "1/2"));
    assert_eq!(report["tree"]["children"].as_array().unwrap().len(), 2);
    let dot = fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("digraph") && dot.contains("\"root\" -> \"root/0\""));
}

#[test]
fn grillage_writes_svg_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("bars.svg");
    let csv = dir.path().join("bars.csv");
    let r = run(&[
        "grillage",
        "--instance",
        &instance("degenerate.json"),
        "--out",
        svg.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--verify-degree",
        "3",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.json();
    assert_eq!(report["div2"]["max_residual"], "0");
    assert_eq!(report["div2"]["checks"].as_array().unwrap().len(), 10);
    assert_eq!(report["total_variation"], report["plan_cost"]);
    let svg = fs::read_to_string(svg).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<line"));
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 1 + report["bar_count"].as_u64().unwrap() as usize);
}

#[test]
fn grillage_needs_a_planar_instance() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("bars.svg");
    let r = run(&["grillage", "--instance", &instance("spread.json"), "--out", svg.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert_eq!(r.json()["error"]["field"], "dim");
    assert!(!svg.exists());
}

#[test]
fn malformed_input_exits_with_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"dim":2,"mu":[{"x":[0],"w":1}],"nu":[{"x":[0,0],"w":1}]}"#, "mu[0].x"),
        (r#"{"dim":1,"mu":[{"x":[0],"w":"half"}],"nu":[{"x":[0],"w":1}]}"#, "mu[0].w"),
        (r#"{"dim":1,"mu":[{"x":[0],"w":1}],"nu":[{"x":[0],"w":-1}]}"#, "nu[0].w"),
        (r#"{"dim":1,"mu":[{"x":[0],"w":1}]}"#, "nu"),
        (r#"{"dim":0,"mu":[],"nu":[]}"#, "dim"),
        (r#"{"dim":1,"mu":[{"x":[0],"w":1}],"nu":[{"x":[0],"w":1}],"mode":"fast"}"#, "mode"),
        (r#"{"dim":1,"mu":[{"x":[0],"w":1}],"nu":[{"x":[0],"w":1}],"weights":[]}"#, "weights"),
        (r#"{"dim":1,"mu":[{"x":[0],"w":1}],"nu":[{"x":[1],"w":1}]}"#, "nu"),
        ("not json", "instance"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let path = write_instance(dir.path(), &format!("bad{i}.json"), text);
        let r = run(&["solve", "--instance", &path]);
        assert_eq!(r.code, 2, "case {i}: {}", r.stderr);
        assert_eq!(r.json()["error"]["field"], *field, "case {i}: {}", r.stdout);
        assert!(r.stderr.contains(field), "case {i}: {}", r.stderr);
    }
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["solve", "--instance", &instance("spread.json"), "--bogus"]).code, 2);
    assert_eq!(run(&["solve"]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
    assert_eq!(run(&["solve", "--instance", &instance("spread.json"), "--mode", "exact"]).code, 2);
    assert_eq!(run(&["solve", "--instance", "/no/such/file.json"]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn weights_are_normalised_and_original_mass_kept() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(dir.path(), "mass.json", r#"{"dim":1,"mu":[{"x":[0],"w":"3"}],"nu":[{"x":[-1],"w":1.5},{"x":[1],"w":"3/2"}]}"#);
    let r = run(&["solve", "--instance", &path]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = r.json();
    assert_eq!(report["instance"]["mu_mass"], "3");
    assert_eq!(report["instance"]["nu_mass"], "3");
    assert_eq!(report["primal_cost"], "1/2");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        vec!["selftest".to_string()],
        vec!["solve".into(), "--instance".into(), instance("degenerate.json")],
        vec!["decompose".into(), "--instance".into(), instance("degenerate.json")],
    ] {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = run(&argv).stdout;
        assert_eq!(first, run(&argv).stdout);
    }
}
