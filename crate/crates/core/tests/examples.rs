//! Worked examples, each value recomputed by an oracle from the testkit.

use beckmann_core::beckmann::{build_z_grid, quadratic_dual_bound, solve_primal};
use beckmann_core::leaf::{decompose, solve_decomposed, LeafKind};
use beckmann_core::linalg::SubspacePair;
use beckmann_core::measure::covariance_difference;
use beckmann_core::order::{
    check_convex_order, find_bimartingale, marginal_martingale_pushforwards, martingale_residual, verify_bimartingale,
    Coupling,
};
use beckmann_core::{DiscreteMeasure, Point, Scalar, SymmetricMatrix};
use beckmann_testkit::oracle::{
    bimartingale_program, enumerate_feasible, enumerate_min, half_nuclear_norm, minilp_min, primal_dense,
};
use beckmann_testkit::{p, q, Q};

fn counterexample() -> Coupling<Q> {
    Coupling::new(2, vec![((p(&[0, 1]), p(&[-1, 1])), q(1, 2)), ((p(&[0, -1]), p(&[1, -1])), q(1, 2))]).unwrap()
}

fn reduction_pair() -> (DiscreteMeasure<Q>, DiscreteMeasure<Q>) {
    let mu = DiscreteMeasure::from_int_atoms(2, &[(&[-1, -1], 1, 4), (&[1, -1], 1, 4), (&[0, 1], 1, 2)]).unwrap();
    let nu = DiscreteMeasure::from_int_atoms(2, &[(&[-1, -1], 1, 4), (&[1, -1], 1, 4), (&[-1, 1], 1, 4), (&[1, 1], 1, 4)])
        .unwrap();
    (mu, nu)
}

#[test]
fn counterexample_fails_the_first_barycentre_condition() {
    let pi = counterexample();
    let pair = SubspacePair::coordinate(2, &[0], &[1]).unwrap();
    let report = verify_bimartingale(&pi, &pair);
    let (_, r) = report.source.iter().find(|(x, _)| *x == p(&[0, 1])).unwrap();
    assert_eq!(r.coords()[0], q(-1, 2));
    assert_eq!(r.coords()[1], q(0, 1));
    assert!(!report.is_zero());

    let (first, second) = marginal_martingale_pushforwards(&pi, &pair).unwrap();
    assert_eq!(martingale_residual(&first), q(0, 1));
    assert_eq!(martingale_residual(&second), q(0, 1));
}

#[test]
fn counterexample_marginals_admit_no_bimartingale_coupling() {
    let pi = counterexample();
    let mu = pi.first_marginal().unwrap();
    let nu = pi.second_marginal().unwrap();
    let pair = SubspacePair::coordinate(2, &[0], &[1]).unwrap();
    assert!(find_bimartingale(&mu, &nu, &pair).unwrap().is_none());
    let oracle = bimartingale_program(&mu, &nu, &[Point::unit(2, 0)], &[Point::unit(2, 1)]);
    assert!(!enumerate_feasible(&oracle));
}

#[test]
fn point_against_symmetric_pair_on_the_line() {
    let mu = DiscreteMeasure::<Q>::dirac(p(&[0]));
    let nu = DiscreteMeasure::from_int_atoms(1, &[(&[-1], 1, 2), (&[1], 1, 2)]).unwrap();
    let grid = build_z_grid(&mu, &nu, None, &[]);
    let report = solve_primal(&mu, &nu, &grid).unwrap();
    let (oracle, _) = enumerate_min(&primal_dense(&mu, &nu, &grid)).unwrap();
    assert_eq!(report.primal_cost, oracle);
    assert_eq!(report.primal_cost, q(1, 2));
    assert_eq!(report.dual.value, q(1, 2));
    assert!(report.is_tight());
    assert!(report.optimality.is_zero());
}

#[test]
fn degenerate_covariance_example() {
    let (mu, nu) = reduction_pair();
    let c = covariance_difference(&mu, &nu).unwrap();
    assert_eq!(c, SymmetricMatrix::diag(vec![q(1, 2), q(0, 1)]));
    let e2 = Point::unit(2, 1);
    assert_eq!(c.quadratic_form(&e2), q(0, 1));

    let tree = decompose(&mu, &nu, None).unwrap();
    let leaves = tree.leaves();
    assert_eq!(leaves.len(), 2);
    assert!(leaves.iter().all(|l| l.depth == 1 && l.theta == q(1, 2)));
    let lower = leaves.iter().find(|l| l.key == p(&[0, -1])).unwrap();
    assert!(lower.mu.same_measure(&lower.nu));
    assert_eq!(lower.kind, LeafKind::Identical);

    let sol = solve_decomposed(&mu, &nu, None).unwrap();
    assert_eq!(sol.total_cost, q(1, 4));
    assert!((half_nuclear_norm(&c.to_f64_rows()) - 0.25).abs() < 1e-12);

    // Independent float LP over the half-integer grid of [-1, 1]².
    let grid: Vec<Point<Q>> = (-2..=2)
        .flat_map(|a| (-2..=2).map(move |b| Point::new(vec![q(a, 2), q(b, 2)])))
        .collect();
    let oracle = minilp_min(&primal_dense(&mu, &nu, &grid)).unwrap();
    assert!((oracle - 0.25).abs() < 1e-9, "minilp optimum {oracle}");
}

#[test]
fn degenerate_example_solves_directly_with_zero_gap() {
    let (mu, nu) = reduction_pair();
    let dual = quadratic_dual_bound(&mu, &nu).unwrap();
    let grid = build_z_grid(&mu, &nu, Some(&dual.split.pair), &[]);
    let report = solve_primal(&mu, &nu, &grid).unwrap();
    assert_eq!(report.primal_cost, q(1, 4));
    assert_eq!(report.dual.value, q(1, 4));
    assert!(report.is_tight());
}

#[test]
fn reversed_convex_order_has_no_martingale_coupling() {
    let mu = DiscreteMeasure::<Q>::from_int_atoms(1, &[(&[-1], 1, 2), (&[1], 1, 2)]).unwrap();
    let nu = DiscreteMeasure::dirac(p(&[0]));
    assert!(check_convex_order(&mu, &nu).unwrap().is_none());
    assert!(check_convex_order(&nu, &mu).unwrap().is_some());
}

#[test]
fn float_mode_agrees_on_the_degenerate_example() {
    let (mu, nu) = reduction_pair();
    let (muf, nuf) = (mu.to_f64(), nu.to_f64());
    let sol = solve_decomposed(&muf, &nuf, None).unwrap();
    assert!((sol.total_cost - 0.25).abs() <= f64::tolerance());
    assert_eq!(sol.leaves.len(), 2);
}
