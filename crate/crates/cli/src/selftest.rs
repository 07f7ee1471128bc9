//! Built-in worked examples, run in exact arithmetic.

use beckmann_core::beckmann::{build_z_grid, quadratic_dual_bound, solve_primal};
use beckmann_core::leaf::{decompose, solve_decomposed, LeafKind};
use beckmann_core::linalg::SubspacePair;
use beckmann_core::measure::covariance_difference;
use beckmann_core::order::{find_bimartingale, marginal_martingale_pushforwards, martingale_residual, verify_bimartingale, Coupling};
use beckmann_core::{Point, Rational, Scalar, SymmetricMatrix};
use serde_json::{json, Value};

use crate::commands::Output;
use crate::error::CliError;
use crate::instance::InstanceFile;
use crate::json;

pub const COUNTEREXAMPLE: &str = include_str!("../instances/counterexample.json");
pub const DEGENERATE: &str = include_str!("../instances/degenerate.json");

type Q = Rational;

struct Check {
    example: &'static str,
    name: &'static str,
    expected: String,
    observed: String,
    pass: bool,
}

fn check(example: &'static str, name: &'static str, expected: impl ToString, observed: impl ToString) -> Check {
    let (expected, observed) = (expected.to_string(), observed.to_string());
    let pass = expected == observed;
    Check { example, name, expected, observed, pass }
}

fn q(n: i64, d: i64) -> Q {
    Q::from_ratio(n, d)
}

fn counterexample(out: &mut Vec<Check>) -> Result<(), CliError> {
    const EX: &str = "counterexample";
    let inst = InstanceFile::from_json(COUNTEREXAMPLE)?;
    let loaded = inst.load::<Q>()?;
    let pair = SubspacePair::coordinate(2, &[0], &[1])?;
    let pi = Coupling::new(
        2,
        loaded
            .mu
            .atoms()
            .iter()
            .zip(loaded.nu.atoms())
            .map(|((x, w), (y, _))| ((x.clone(), y.clone()), w.clone()))
            .collect(),
    )?;
    let report = verify_bimartingale(&pi, &pair);
    let at = Point::from_i64(&[0, 1]);
    let integral = report
        .source
        .iter()
        .find(|(x, _)| x.same_point(&at))
        .map(|(_, r)| r.coords()[0].clone())
        .ok_or_else(|| CliError::Internal("missing source atom (0, 1)".into()))?;
    out.push(check(EX, "bary1 integral against 1_{(0,1)}", q(-1, 2), integral));
    let (first, second) = marginal_martingale_pushforwards(&pi, &pair)?;
    out.push(check(EX, "first pushforward is martingale", q(0, 1), martingale_residual(&first)));
    out.push(check(EX, "second pushforward is martingale", q(0, 1), martingale_residual(&second)));
    let found = find_bimartingale(&loaded.mu, &loaded.nu, &pair)?;
    out.push(check(EX, "no bimartingale coupling of the marginals", "none", if found.is_some() { "found" } else { "none" }));
    Ok(())
}

fn degenerate(out: &mut Vec<Check>) -> Result<(), CliError> {
    const EX: &str = "degenerate covariance";
    let inst = InstanceFile::from_json(DEGENERATE)?;
    let loaded = inst.load::<Q>()?;
    let (mu, nu) = (&loaded.mu, &loaded.nu);
    let c = covariance_difference(mu, nu)?;
    out.push(check(EX, "<e2, C e2>", q(0, 1), c.quadratic_form(&Point::unit(2, 1))));
    out.push(check(EX, "C", SymmetricMatrix::diag(vec![q(1, 2), q(0, 1)]), &c));
    let tree = decompose(mu, nu, None)?;
    let leaves = tree.leaves();
    out.push(check(EX, "leaf count", 2, leaves.len()));
    let shape: Vec<String> = leaves.iter().map(|l| format!("depth {} theta {}", l.depth, l.theta)).collect();
    out.push(check(EX, "leaf depths and weights", "depth 1 theta 1/2; depth 1 theta 1/2", shape.join("; ")));
    let lower = leaves.iter().find(|l| l.key.same_point(&Point::from_i64(&[0, -1])));
    let lower_identical = lower.is_some_and(|l| l.mu.same_measure(&l.nu) && l.kind == LeafKind::Identical);
    out.push(check(EX, "x2 = -1 leaf has mu_S = nu_S", true, lower_identical));
    let sol = solve_decomposed(mu, nu, None)?;
    out.push(check(EX, "decomposed total cost", q(1, 4), &sol.total_cost));
    let dual = quadratic_dual_bound(mu, nu)?;
    let grid = build_z_grid(mu, nu, Some(&dual.split.pair), &[]);
    let direct = solve_primal(mu, nu, &grid)?;
    out.push(check(EX, "direct primal cost", q(1, 4), &direct.primal_cost));
    out.push(check(EX, "quadratic dual value", q(1, 4), &direct.dual.value));
    out.push(check(EX, "duality gap", q(0, 1), &direct.gap));
    Ok(())
}

pub fn run() -> Result<Output, CliError> {
    let mut checks = Vec::new();
    counterexample(&mut checks)?;
    degenerate(&mut checks)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    let mut table = String::new();
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        table.push_str(&format!("{status}  {:<22} {:<42} {}\n", c.example, c.name, c.observed));
    }
    table.push_str(&format!("{} passed, {} failed", checks.len() - failed, failed));
    let report = json!({
        "command": "selftest",
        "mode": "rational",
        "tolerances": json::tolerances::<Q>(),
        "grid": {"source": "generated", "structured_points": true, "bounding_simplex": false},
        "checks": checks.iter().map(|c| json!({
            "example": c.example,
            "name": c.name,
            "expected": c.expected,
            "observed": c.observed,
            "pass": c.pass,
        })).collect::<Vec<Value>>(),
        "passed": checks.len() - failed,
        "failed": failed,
        "all_passed": failed == 0,
    });
    Ok(Output { report, summary: table, exit_code: if failed == 0 { 0 } else { 1 } })
}
