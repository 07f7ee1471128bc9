//! Subcommand bodies. Each returns the JSON report and a one-paragraph
//! human summary; files requested by flags are written here.

use std::fs;
use std::path::{Path, PathBuf};

use beckmann_core::beckmann::{bounding_simplex, build_z_grid, primal_program, quadratic_dual_bound, solve_primal};
use beckmann_core::grillage::{bars_from_plan, total_variation, verify_div2};
use beckmann_core::leaf::{solve_decomposed, LeafNode};
use beckmann_core::linalg::{SpectralSplit, SubspacePair};
use beckmann_core::measure::barycenter;
use beckmann_core::order::{check_convex_order, find_bimartingale, verify_bimartingale};
use beckmann_core::{NumericMode, Point, Scalar};
use serde_json::{json, Map, Value};

use crate::emit;
use crate::error::CliError;
use crate::instance::{parse_grid, InstanceFile, Loaded};
use crate::json::{self, CliScalar};

/// Outcome of a subcommand.
pub struct Output {
    pub report: Value,
    pub summary: String,
    /// Nonzero when the command ran but its checks failed.
    pub exit_code: i32,
}

impl Output {
    fn ok(report: Value, summary: String) -> Self {
        Output { report, summary, exit_code: 0 }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn load_instance(path: &Path) -> Result<InstanceFile, CliError> {
    InstanceFile::from_json(&read(path)?)
}

/// Fields shared by every report.
fn header<S: CliScalar>(inst: &InstanceFile, loaded: &Loaded<S>, command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("mode".into(), json!(S::MODE.as_str()));
    m.insert(
        "instance".into(),
        json!({
            "dim": inst.dim,
            "mu_atoms": loaded.mu.len(),
            "nu_atoms": loaded.nu.len(),
            "mu_mass": loaded.mu.original_mass().json(),
            "nu_mass": loaded.nu.original_mass().json(),
        }),
    );
    m
}

fn tolerances<S: CliScalar>(split: Option<&SpectralSplit<S>>) -> Value {
    let mut t = json::tolerances::<S>();
    if let (Some(s), Value::Object(obj)) = (split, &mut t) {
        obj.insert("split_tol".into(), json!(s.tol));
        obj.insert("spectral_gap".into(), json!(s.spectral_gap));
    }
    t
}

const SUBSCRIPTS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];

fn subscript(i: usize) -> String {
    i.to_string().chars().map(|c| SUBSCRIPTS[c.to_digit(10).unwrap_or(0) as usize]).collect()
}

/// `e₁` for standard basis vectors, the coordinates otherwise.
fn vector_name<S: Scalar>(v: &Point<S>) -> String {
    let n = v.dim();
    for i in 0..n {
        if v.same_point(&Point::unit(n, i)) {
            return format!("e{}", subscript(i + 1));
        }
    }
    format!("{v}")
}

/// `span e₁`, `span(e₁, e₂)` or `{0}`.
pub fn span_name<S: Scalar>(basis: &[Point<S>]) -> String {
    match basis.len() {
        0 => "{0}".to_string(),
        1 => format!("span {}", vector_name(&basis[0])),
        _ => format!("span({})", basis.iter().map(vector_name).collect::<Vec<_>>().join(", ")),
    }
}

fn pair_from<S: CliScalar>(loaded: &Loaded<S>, dim: usize) -> Result<Option<SubspacePair<S>>, CliError> {
    match (&loaded.v1, &loaded.v2) {
        (Some(v1), Some(v2)) => {
            let pair = SubspacePair::from_spanning(dim, v1.clone(), v2.clone())
                .map_err(|e| CliError::field("v1", e.to_string()))?;
            if !pair.is_complementing() {
                return Err(CliError::field(
                    "v2",
                    format!("v1 and v2 span dimensions {} and {}, not complementary in R^{dim}", pair.dim1(), pair.dim2()),
                ));
            }
            Ok(Some(pair))
        }
        _ => Ok(None),
    }
}

pub fn check_order<S: CliScalar>(inst: &InstanceFile) -> Result<Output, CliError> {
    let loaded = inst.load::<S>()?;
    let (mu, nu) = (&loaded.mu, &loaded.nu);
    let mut report = header(inst, &loaded, "check-order");
    let pair = pair_from(&loaded, inst.dim)?;
    let (witness, order, used) = match &pair {
        Some(pair) => (find_bimartingale(mu, nu, pair)?, "convex-concave", pair.clone()),
        None => (check_convex_order(mu, nu)?, "convex", SubspacePair::full(inst.dim)),
    };
    let spans = format!("({}, {})", span_name(used.basis1()), span_name(used.basis2()));
    let verdict = match (&witness, pair.is_some()) {
        (Some(_), true) => format!("bimartingale coupling found for {spans}"),
        (None, true) => format!("no bimartingale coupling for {spans}"),
        (Some(_), false) => "martingale coupling found: mu precedes nu in convex order".to_string(),
        (None, false) => "no martingale coupling: mu does not precede nu in convex order".to_string(),
    };
    report.insert("verdict".into(), json!(verdict));
    report.insert("order".into(), json!(order));
    report.insert("exists".into(), json!(witness.is_some()));
    report.insert("v1".into(), json::points(used.basis1()));
    report.insert("v2".into(), json::points(used.basis2()));
    report.insert("tolerances".into(), tolerances::<S>(None));
    report.insert("barycenter_mu".into(), json::point(&barycenter(mu)?));
    report.insert("barycenter_nu".into(), json::point(&barycenter(nu)?));
    report.insert("witness".into(), witness.as_ref().map_or(Value::Null, json::coupling));
    report.insert(
        "residuals".into(),
        witness.as_ref().map_or(Value::Null, |pi| json::residuals(&verify_bimartingale(pi, &used))),
    );
    Ok(Output::ok(Value::Object(report), verdict))
}

/// Where the solver's `z` candidates came from.
struct GridChoice<S> {
    points: Vec<Point<S>>,
    provenance: Value,
}

pub struct SolveFlags {
    pub grid: Option<PathBuf>,
    pub enlarge: bool,
    pub csv: Option<PathBuf>,
    pub lp_dump: Option<PathBuf>,
}

fn choose_grid<S: CliScalar>(
    inst: &InstanceFile,
    loaded: &Loaded<S>,
    split: &SpectralSplit<S>,
    flags: &SolveFlags,
) -> Result<GridChoice<S>, CliError> {
    let (mu, nu) = (&loaded.mu, &loaded.nu);
    // Uncertified rational splits carry huge denominators; their structured points cost more than they help.
    let use_pair = split.certified || S::MODE == NumericMode::Float;
    let pair = use_pair.then_some(&split.pair);
    let explicit = match &flags.grid {
        Some(path) => Some((
            format!("file:{}", path.display()),
            parse_grid(&read(path)?, inst.dim)?
                .iter()
                .map(|p| Point::new(p.iter().map(S::from_rational).collect()))
                .collect::<Vec<_>>(),
        )),
        None => loaded.grid.clone().map(|g| ("instance".to_string(), g)),
    };
    let (source, points, structured, simplex) = match explicit {
        Some((source, given)) if !flags.enlarge => (source, given, false, false),
        Some((source, given)) => {
            let mut extra = given;
            extra.extend(bounding_simplex(mu, nu));
            (source, build_z_grid(mu, nu, pair, &extra), use_pair, true)
        }
        None => ("generated".to_string(), build_z_grid(mu, nu, pair, &bounding_simplex(mu, nu)), use_pair, true),
    };
    if points.is_empty() {
        return Err(CliError::field("grid", "no points"));
    }
    let provenance = json!({
        "source": source,
        "structured_points": structured,
        "bounding_simplex": simplex,
        "includes_atoms": structured || simplex,
        "size": points.len(),
    });
    Ok(GridChoice { points, provenance })
}

pub fn solve<S: CliScalar>(inst: &InstanceFile, flags: &SolveFlags) -> Result<Output, CliError> {
    let loaded = inst.load::<S>()?;
    let (mu, nu) = (&loaded.mu, &loaded.nu);
    let dual = quadratic_dual_bound(mu, nu)?;
    let grid = choose_grid(inst, &loaded, &dual.split, flags)?;
    if let Some(path) = &flags.lp_dump {
        write(path, &primal_program(mu, nu, &grid.points)?.to_string())?;
    }
    let r = solve_primal(mu, nu, &grid.points)?;
    if let Some(path) = &flags.csv {
        write(path, &emit::plan_csv(&r.plan))?;
    }
    let mut report = header(inst, &loaded, "solve");
    report.insert("tolerances".into(), tolerances(Some(&r.dual.split)));
    report.insert("grid".into(), grid.provenance);
    report.insert("primal_cost".into(), r.primal_cost.json());
    report.insert("gap".into(), r.gap.json());
    report.insert("tight".into(), json!(r.is_tight()));
    report.insert("regime".into(), json!(r.regime()));
    report.insert(
        "dual".into(),
        json!({
            "value": r.dual.value.json(),
            "half_schatten1": r.dual.half_schatten1,
            "split": json::split(&r.dual.split),
        }),
    );
    report.insert("optimality".into(), json::optimality(&r.optimality));
    report.insert("plan".into(), json::plan(&r.plan));
    report.insert(
        "lp".into(),
        json!({
            "iterations": r.lp_iterations,
            "safeguard_triggered": r.safeguard_triggered,
            "warm_started": r.warm_started,
            "short_circuit": r.short_circuit,
            "grid_size": r.z_grid_size,
        }),
    );
    let summary = format!(
        "primal {} dual {} gap {} on {} grid points ({}, {})",
        r.primal_cost,
        r.dual.value,
        r.gap,
        r.z_grid_size,
        S::MODE,
        r.regime()
    );
    Ok(Output::ok(Value::Object(report), summary))
}

fn node_json<S: CliScalar>(node: &LeafNode<S>) -> Value {
    json!({
        "path": node.path,
        "label": node.label(),
        "depth": node.depth,
        "kind": node.kind.as_str(),
        "theta": node.theta.json(),
        "key": json::point(&node.key),
        "anchor": json::point(&node.anchor),
        "tangent": json::points(&node.tangent),
        "kernel": json::points(&node.kernel),
        "split": node.split.as_ref().map_or(Value::Null, json::split),
        "mu": json::measure(&node.mu),
        "nu": json::measure(&node.nu),
        "children": node.children.iter().map(node_json).collect::<Vec<_>>(),
    })
}

pub fn decompose<S: CliScalar>(inst: &InstanceFile, dot: Option<&Path>) -> Result<Output, CliError> {
    let loaded = inst.load::<S>()?;
    let sol = solve_decomposed(&loaded.mu, &loaded.nu, None)?;
    if let Some(path) = dot {
        write(path, &emit::tree_dot(&sol.tree))?;
    }
    let leaves: Vec<Value> = sol
        .tree
        .leaves()
        .iter()
        .zip(&sol.leaves)
        .map(|(node, cost)| {
            let pair = node.pair();
            json!({
                "path": cost.path,
                "label": node.label(),
                "kind": cost.kind.as_str(),
                "depth": node.depth,
                "theta": cost.theta.json(),
                "key": json::point(&node.key),
                "v1": json::points(pair.basis1()),
                "v2": json::points(pair.basis2()),
                "cost": cost.cost.json(),
                "dual_value": cost.dual_value.json(),
                "weighted_cost": cost.theta.mul_ref(&cost.cost).json(),
                "optimality": json::optimality(&cost.optimality),
            })
        })
        .collect();
    let mut report = header(inst, &loaded, "decompose");
    report.insert("tolerances".into(), tolerances(sol.tree.split.as_ref()));
    report.insert("tree".into(), node_json(&sol.tree));
    report.insert("leaf_count".into(), json!(leaves.len()));
    report.insert("height".into(), json!(sol.tree.height()));
    report.insert("leaves".into(), Value::Array(leaves));
    report.insert("total_cost".into(), sol.total_cost.json());
    report.insert("total_dual".into(), sol.total_dual.json());
    report.insert("plan".into(), json::plan(&sol.plan));
    let summary = format!(
        "{} leaves (height {}), total cost {}, total dual {}",
        sol.leaves.len(),
        sol.tree.height(),
        sol.total_cost,
        sol.total_dual
    );
    Ok(Output::ok(Value::Object(report), summary))
}

pub fn grillage<S: CliScalar>(inst: &InstanceFile, out: &Path, csv: Option<&Path>, degree: usize) -> Result<Output, CliError> {
    if inst.dim != 2 {
        return Err(CliError::field("dim", format!("grillages are planar; expected 2, found {}", inst.dim)));
    }
    let loaded = inst.load::<S>()?;
    let (mu, nu) = (&loaded.mu, &loaded.nu);
    let sol = solve_decomposed(mu, nu, None)?;
    let g = bars_from_plan(&sol.plan)?;
    let tv = total_variation(&g);
    let div2 = verify_div2(&g, mu, nu, degree)?;
    write(out, &emit::grillage_svg(&g, mu, nu))?;
    if let Some(path) = csv {
        write(path, &emit::bars_csv(&g))?;
    }
    let plan_cost = sol.plan.cost();
    let mut report = header(inst, &loaded, "grillage");
    report.insert("tolerances".into(), tolerances(sol.tree.split.as_ref()));
    report.insert("plan_source".into(), json!("decomposed"));
    report.insert("plan_cost".into(), plan_cost.json());
    report.insert("bar_count".into(), json!(g.len()));
    report.insert("total_mass".into(), g.total_mass().json());
    report.insert("total_variation".into(), tv.json());
    report.insert("variation_equals_cost".into(), json!(tv.approx_eq(&plan_cost)));
    report.insert(
        "bars".into(),
        Value::Array(
            g.bars
                .iter()
                .map(|b| {
                    json!({"from": json::point(&b.from), "to": json::point(&b.to), "sign": b.sign,
                           "weight": b.weight.json(), "mass": b.mass().json()})
                })
                .collect(),
        ),
    );
    report.insert(
        "div2".into(),
        json!({
            "degree": div2.degree,
            "max_residual": div2.max_residual.json(),
            "zero": div2.is_zero(),
            "checks": div2.checks.iter().map(|c| json!({
                "exponents": [c.exponents.0, c.exponents.1],
                "pairing": c.pairing.json(),
                "target": c.target.json(),
                "residual": c.residual.json(),
            })).collect::<Vec<_>>(),
        }),
    );
    report.insert("svg".into(), json!(out.display().to_string()));
    let summary = format!(
        "{} bars, mass {}, total variation {}, div2 residual {} up to degree {}",
        g.len(),
        g.total_mass(),
        tv,
        div2.max_residual,
        degree
    );
    Ok(Output::ok(Value::Object(report), summary))
}
