//! Random instance generators over exact rationals.

use beckmann_core::linalg::SubspacePair;
use beckmann_core::measure::barycenter;
use beckmann_core::order::Coupling;
use beckmann_core::{DiscreteMeasure, Point};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::{q, Q};

/// Cosine/sine pairs of rational rotations.
const PYTHAGOREAN: [(i64, i64, i64); 3] = [(3, 4, 5), (5, 12, 13), (8, 15, 17)];

/// An instance built together with a bimartingale coupling.
#[derive(Debug, Clone)]
pub struct ForwardInstance {
    pub mu: DiscreteMeasure<Q>,
    pub nu: DiscreteMeasure<Q>,
    /// The complementing pair the coupling is bimartingale for.
    pub pair: SubspacePair<Q>,
    pub coupling: Coupling<Q>,
}

impl ForwardInstance {
    /// `P_{V2} x + P_{V1} y` for every pair of atoms of the coupling.
    pub fn structured_points(&self) -> Vec<Point<Q>> {
        use beckmann_core::linalg::Which;
        self.coupling
            .atoms()
            .iter()
            .map(|((x, y), _)| &self.pair.project(Which::Second, x) + &self.pair.project(Which::First, y))
            .collect()
    }
}

/// Orthonormal rational basis of `R^n`: a permutation of the unit vectors,
/// possibly rotated by Pythagorean angles in random coordinate planes.
pub fn rational_orthonormal_basis<R: Rng>(rng: &mut R, n: usize) -> Vec<Point<Q>> {
    let mut basis: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| q((i == j) as i64, 1)).collect()).collect();
    basis.shuffle(rng);
    if n >= 2 {
        for _ in 0..rng.gen_range(0..=n - 1) {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (a, b, c) = PYTHAGOREAN[rng.gen_range(0..PYTHAGOREAN.len())];
            let (cs, sn) = (q(a, c), q(b, c));
            let (u, v) = (basis[i].clone(), basis[j].clone());
            basis[i] = u.iter().zip(&v).map(|(x, y)| &cs * x + &sn * y).collect();
            basis[j] = u.iter().zip(&v).map(|(x, y)| -(&sn * x) + &cs * y).collect();
        }
    }
    basis.into_iter().map(Point::new).collect()
}

fn combine(n: usize, basis: &[Point<Q>], coords: &[Q]) -> Point<Q> {
    let mut out = Point::zeros(n);
    for (b, c) in basis.iter().zip(coords) {
        out.axpy(c, b);
    }
    out
}

fn random_ints<R: Rng>(rng: &mut R, k: usize, lo: i64, hi: i64) -> Vec<Q> {
    (0..k).map(|_| q(rng.gen_range(lo..=hi), 1)).collect()
}

/// Two-point martingale kernel from `a`: `a + t d` with probability
/// `s / (s + t)` and `a − s d` with probability `t / (s + t)`.
fn split<R: Rng>(rng: &mut R, a: &[Q]) -> Vec<(Vec<Q>, Q)> {
    if a.is_empty() {
        return vec![(Vec::new(), q(1, 1))];
    }
    let d = random_ints(rng, a.len(), -2, 2);
    if d.iter().all(|c| *c == q(0, 1)) {
        return vec![(a.to_vec(), q(1, 1))];
    }
    let t = rng.gen_range(1..=3);
    let s = rng.gen_range(1..=3);
    let up: Vec<Q> = a.iter().zip(&d).map(|(x, y)| x + q(t, 1) * y).collect();
    let down: Vec<Q> = a.iter().zip(&d).map(|(x, y)| x - q(s, 1) * y).collect();
    vec![(up, q(s, s + t)), (down, q(t, s + t))]
}

/// Forward-generated bimartingale instance in `R^n` with at most six atoms
/// per measure.
///
/// A joint law of `(a, b)` (coordinates in `V1` and `V2`) with one to three
/// atoms is drawn; `a` is split by a martingale kernel into the `nu`-side
/// coordinate and `b` into the `mu`-side coordinate, independently.
pub fn forward_bimartingale<R: Rng>(rng: &mut R, n: usize) -> ForwardInstance {
    let basis = rational_orthonormal_basis(rng, n);
    let k = rng.gen_range(0..=n);
    let (g1, g2) = basis.split_at(k);
    let pair = SubspacePair::from_spanning(n, g1.to_vec(), g2.to_vec()).expect("orthonormal basis");
    let support = rng.gen_range(1..=3);
    let weights: Vec<i64> = (0..support).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    let mut atoms = Vec::new();
    for &w in &weights {
        let a = random_ints(rng, k, -3, 3);
        let b = random_ints(rng, n - k, -3, 3);
        let (ays, bxs) = (split(rng, &a), split(rng, &b));
        for (ay, pa) in &ays {
            for (bx, pb) in &bxs {
                let x = &combine(n, g1, &a) + &combine(n, g2, bx);
                let y = &combine(n, g1, ay) + &combine(n, g2, &b);
                atoms.push(((x, y), q(w, total) * pa * pb));
            }
        }
    }
    let coupling = Coupling::new(n, atoms).expect("valid coupling");
    let mu = coupling.first_marginal().expect("positive mass");
    let nu = coupling.second_marginal().expect("positive mass");
    ForwardInstance { mu, nu, pair, coupling }
}

fn random_measure<R: Rng>(rng: &mut R, n: usize, max_atoms: usize, range: i64) -> DiscreteMeasure<Q> {
    let count = rng.gen_range(1..=max_atoms);
    let atoms = (0..count).map(|_| (Point::new(random_ints(rng, n, -range, range)), q(rng.gen_range(1..=4), 1))).collect();
    DiscreteMeasure::new(n, atoms).expect("positive weights")
}

/// `mu`, `nu` with independent random atoms; `nu` is translated so both
/// have the same barycentre.
pub fn random_common_barycenter<R: Rng>(rng: &mut R, n: usize, max_atoms: usize) -> (DiscreteMeasure<Q>, DiscreteMeasure<Q>) {
    let mu = random_measure(rng, n, max_atoms, 3);
    let nu = random_measure(rng, n, max_atoms, 3);
    let shift = &barycenter(&mu).unwrap() - &barycenter(&nu).unwrap();
    let nu = nu.map(n, |p| p + &shift).unwrap();
    (mu, nu)
}

/// Merges the atoms of `m` into at most `groups` barycentres; the result is
/// dominated by `m` in convex order.
pub fn merge_atoms<R: Rng>(rng: &mut R, m: &DiscreteMeasure<Q>, groups: usize) -> DiscreteMeasure<Q> {
    let mut buckets: Vec<Vec<(Point<Q>, Q)>> = vec![Vec::new(); groups.max(1)];
    for (p, w) in m.atoms() {
        let g = rng.gen_range(0..buckets.len());
        buckets[g].push((p.clone(), w.clone()));
    }
    let atoms = buckets
        .into_iter()
        .filter(|b| !b.is_empty())
        .map(|b| {
            let mass = b.iter().fold(q(0, 1), |acc, (_, w)| acc + w);
            let local = DiscreteMeasure::new(m.dim(), b).unwrap();
            (barycenter(&local).unwrap(), mass)
        })
        .collect();
    DiscreteMeasure::new(m.dim(), atoms).unwrap()
}

/// Pairs with at most `max_atoms` atoms each and a common barycentre:
/// a third in convex order by construction, a third reversed, a third random.
pub fn convex_order_candidate<R: Rng>(rng: &mut R, n: usize, max_atoms: usize) -> (DiscreteMeasure<Q>, DiscreteMeasure<Q>) {
    match rng.gen_range(0..3) {
        0 => {
            let nu = random_measure(rng, n, max_atoms, 3);
            let groups = rng.gen_range(1..=max_atoms);
            let mu = merge_atoms(rng, &nu, groups);
            (mu, nu)
        }
        1 => {
            let mu = random_measure(rng, n, max_atoms, 3);
            let groups = rng.gen_range(1..=max_atoms);
            let nu = merge_atoms(rng, &mu, groups);
            (mu, nu)
        }
        _ => random_common_barycenter(rng, n, max_atoms),
    }
}
