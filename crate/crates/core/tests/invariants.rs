//! Module-level invariants: moments, spectra, the simplex and order checks.

use beckmann_core::linalg::{eigendecompose, schatten1, split_subspaces_default, SubspacePair, Which};
use beckmann_core::lp::{solve_lp, LinearProgram, LpStatus, Relation};
use beckmann_core::measure::{barycenter, covariance_difference, variance};
use beckmann_core::order::{check_convex_order, find_bimartingale, verify_bimartingale};
use beckmann_core::{DiscreteMeasure, Point, Scalar, SymmetricMatrix};
use beckmann_testkit::gen::{convex_order_candidate, forward_bimartingale, random_common_barycenter, rational_orthonormal_basis};
use beckmann_testkit::oracle::{enumerate_min, DenseProgram};
use beckmann_testkit::{q, Q};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct SmallLp {
    objective: Vec<Q>,
    rows: Vec<(Vec<Q>, Relation, Q)>,
}

fn random_lp(r: &mut ChaCha8Rng) -> SmallLp {
    let n = r.gen_range(1..=6);
    let m = r.gen_range(1..=5);
    let objective = (0..n).map(|_| q(r.gen_range(-3..=5), 1)).collect();
    let mut rows: Vec<(Vec<Q>, Relation, Q)> = (0..m)
        .map(|_| {
            let coeffs = (0..n).map(|_| q(r.gen_range(-3..=3), r.gen_range(1..=2))).collect();
            let rel = [Relation::Eq, Relation::Le, Relation::Ge][r.gen_range(0..3)];
            (coeffs, rel, q(r.gen_range(-4..=6), 1))
        })
        .collect();
    // Keeps the program bounded so vertex enumeration decides it.
    rows.push(((0..n).map(|_| q(1, 1)).collect(), Relation::Le, q(10, 1)));
    SmallLp { objective, rows }
}

fn to_program(lp: &SmallLp, order: &[usize]) -> LinearProgram<Q> {
    let mut out = LinearProgram::new(lp.objective.clone());
    for &i in order {
        let (c, rel, b) = &lp.rows[i];
        out.add_dense(c.clone(), *rel, b.clone()).unwrap();
    }
    out
}

/// Equality form with one slack column per inequality.
fn to_dense(lp: &SmallLp) -> DenseProgram {
    let n = lp.objective.len();
    let slacks = lp.rows.iter().filter(|(_, rel, _)| *rel != Relation::Eq).count();
    let mut prog = DenseProgram::new(n + slacks);
    prog.objective[..n].clone_from_slice(&lp.objective);
    let mut s = n;
    for (c, rel, b) in &lp.rows {
        let mut row = c.clone();
        row.resize(n + slacks, q(0, 1));
        match rel {
            Relation::Eq => {}
            Relation::Le => {
                row[s] = q(1, 1);
                s += 1;
            }
            Relation::Ge => {
                row[s] = q(-1, 1);
                s += 1;
            }
        }
        prog.push(row, b.clone());
    }
    prog
}

fn random_symmetric(r: &mut ChaCha8Rng, n: usize) -> SymmetricMatrix<f64> {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = r.gen_range(-3.0..3.0);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymmetricMatrix::from_rows(rows).unwrap()
}

/// `Q diag(s) Qᵀ` with `Q` the eigenvectors of a random matrix and `s ∈ [−1, 1]ⁿ`.
fn random_contraction(r: &mut ChaCha8Rng, n: usize) -> SymmetricMatrix<f64> {
    let eig = eigendecompose(&random_symmetric(r, n)).unwrap();
    let mut a = SymmetricMatrix::zeros(n);
    for v in &eig.vectors {
        a.add_outer(&r.gen_range(-1.0..=1.0), v);
    }
    a
}

fn rotate(basis: &[Point<Q>], p: &Point<Q>) -> Point<Q> {
    Point::new(basis.iter().map(|b| b.dot(p)).collect())
}

/// `Σ cₖ max(0, ⟨wₖ, a⟩ − tₖ)² + α ‖a‖²`, convex in `a`.
fn convex_piece(r: &mut ChaCha8Rng, dim: usize) -> impl Fn(&[f64]) -> f64 {
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..3)
        .map(|_| (r.gen_range(0.0..2.0), (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect(), r.gen_range(-2.0..2.0)))
        .collect();
    let alpha = r.gen_range(0.0..1.0);
    move |a: &[f64]| {
        let quad: f64 = a.iter().map(|v| v * v).sum::<f64>() * alpha;
        quad + terms
            .iter()
            .map(|(c, w, t)| {
                let s = w.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() - t;
                c * s.max(0.0).powi(2)
            })
            .sum::<f64>()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn simplex_matches_vertex_enumeration(seed in any::<u64>()) {
        let lp = random_lp(&mut rng(seed));
        let order: Vec<usize> = (0..lp.rows.len()).collect();
        let out = solve_lp(&to_program(&lp, &order)).unwrap();
        match enumerate_min(&to_dense(&lp)) {
            None => prop_assert_eq!(out.status, LpStatus::Infeasible),
            Some((value, _)) => {
                prop_assert_eq!(out.status, LpStatus::Optimal);
                prop_assert_eq!(&out.value, &value);
                // Strong duality in the original row orientation.
                let dual = out.duals.iter().zip(&lp.rows).fold(q(0, 1), |acc, (y, (_, _, b))| acc + y * b);
                prop_assert_eq!(dual, value);
            }
        }
    }

    #[test]
    fn permuting_rows_keeps_the_value(seed in any::<u64>()) {
        let mut r = rng(seed);
        let lp = random_lp(&mut r);
        let mut order: Vec<usize> = (0..lp.rows.len()).collect();
        let a = solve_lp(&to_program(&lp, &order)).unwrap();
        order.reverse();
        order.rotate_left(r.gen_range(0..lp.rows.len()));
        let b = solve_lp(&to_program(&lp, &order)).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.value, b.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn covariance_difference_identities(seed in any::<u64>(), n in 1usize..=3) {
        let (mu, nu) = random_common_barycenter(&mut rng(seed), n, 5);
        let c = covariance_difference(&mu, &nu).unwrap();
        prop_assert_eq!(c.neg(), covariance_difference(&nu, &mu).unwrap());
        prop_assert_eq!(c.trace(), variance(&nu).unwrap() - variance(&mu).unwrap());
        // Splitting every atom in two equal halves changes nothing once merged back.
        let doubled = DiscreteMeasure::new(
            n,
            mu.atoms().iter().flat_map(|(p, w)| [(p.clone(), w * q(1, 2)), (p.clone(), w * q(1, 2))]).collect(),
        )
        .unwrap();
        prop_assert_eq!(barycenter(&doubled).unwrap(), barycenter(&mu).unwrap());
        prop_assert_eq!(variance(&doubled).unwrap(), variance(&mu).unwrap());
        prop_assert_eq!(covariance_difference(&doubled, &nu).unwrap(), c);
    }

    #[test]
    fn projections_are_orthogonal(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let basis = rational_orthonormal_basis(&mut r, n);
        let k1 = r.gen_range(0..=n);
        let k2 = r.gen_range(0..=n - k1);
        let pair = SubspacePair::from_spanning(n, basis[..k1].to_vec(), basis[k1..k1 + k2].to_vec()).unwrap();
        let x = Point::new((0..n).map(|_| q(r.gen_range(-9..=9), r.gen_range(1..=4))).collect());
        let (p1, p2, pk) = (pair.project(Which::First, &x), pair.project(Which::Second, &x), pair.project_kernel(&x));
        prop_assert_eq!(&(&(&p1 + &p2) + &pk), &x);
        prop_assert_eq!(x.norm_sq(), p1.norm_sq() + p2.norm_sq() + pk.norm_sq());
        let v = &p1 + &p2;
        prop_assert_eq!(pair.apply_isometry(&v).norm_sq(), v.norm_sq());
    }

    #[test]
    fn schatten1_is_the_largest_contraction_pairing(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_symmetric(&mut r, 3);
        let norm = schatten1(&m).unwrap();
        for _ in 0..10 {
            let a = random_contraction(&mut r, 3);
            prop_assert!(a.trace_product(&m) <= norm + 1e-9);
        }
        let split = split_subspaces_default(&m).unwrap();
        prop_assert!((split.pair.isometry().trace_product(&m) - norm).abs() <= 1e-9 * (1.0 + norm));
    }

    #[test]
    fn martingale_and_bimartingale_checks_agree_for_the_full_space(seed in any::<u64>(), n in 1usize..=2) {
        let (mu, nu) = convex_order_candidate(&mut rng(seed), n, 3);
        prop_assume!(barycenter(&mu).unwrap() == barycenter(&nu).unwrap());
        let plain = check_convex_order(&mu, &nu).unwrap();
        let bimart = find_bimartingale(&mu, &nu, &SubspacePair::full(n)).unwrap();
        prop_assert_eq!(plain.is_some(), bimart.is_some());
    }

    #[test]
    fn bimartingale_witnesses_order_convex_concave_functions(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let inst = forward_bimartingale(&mut r, n);
        let pi = find_bimartingale(&inst.mu, &inst.nu, &inst.pair).unwrap();
        prop_assert!(pi.is_some());
        prop_assert!(verify_bimartingale(pi.as_ref().unwrap(), &inst.pair).is_zero());
        let coords = |which, p: &Point<Q>| inst.pair.coordinates(which, p).to_f64();
        for _ in 0..50 {
            let g = convex_piece(&mut r, inst.pair.dim1());
            let h = convex_piece(&mut r, inst.pair.dim2());
            let f = |p: &Point<Q>| g(&coords(Which::First, p)) - h(&coords(Which::Second, p));
            let int = |m: &DiscreteMeasure<Q>| m.atoms().iter().map(|(p, w)| w.to_f64() * f(p)).sum::<f64>();
            let (a, b) = (int(&inst.mu), int(&inst.nu));
            prop_assert!(a <= b + 1e-9 * (1.0 + a.abs()), "{} > {}", a, b);
        }
    }

    #[test]
    fn order_verdicts_are_rotation_invariant(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = rng(seed);
        let (mu, nu) = random_common_barycenter(&mut r, n, 3);
        let basis = rational_orthonormal_basis(&mut r, n);
        let k = r.gen_range(0..=n);
        let pair = SubspacePair::from_spanning(n, basis[..k].to_vec(), basis[k..].to_vec()).unwrap();
        let turn_basis = rational_orthonormal_basis(&mut r, n);
        let turn = |m: &DiscreteMeasure<Q>| m.map(n, |p| rotate(&turn_basis, p)).unwrap();
        let turned_pair = SubspacePair::from_spanning(
            n,
            pair.basis1().iter().map(|b| rotate(&turn_basis, b)).collect(),
            pair.basis2().iter().map(|b| rotate(&turn_basis, b)).collect(),
        )
        .unwrap();
        let a = find_bimartingale(&mu, &nu, &pair).unwrap();
        let b = find_bimartingale(&turn(&mu), &turn(&nu), &turned_pair).unwrap();
        prop_assert_eq!(a.is_some(), b.is_some());
        let c = check_convex_order(&mu, &nu).unwrap();
        let d = check_convex_order(&turn(&mu), &turn(&nu)).unwrap();
        prop_assert_eq!(c.is_some(), d.is_some());
    }
}
