//! Convex order and convex-concave order through (bi)martingale couplings.
//!
//! A coupling `π` of `mu` and `nu` is *bimartingale* with respect to
//! orthogonal complementing subspaces `(V1, V2)` when
//!
//! * for every source atom `x`: `Σⱼ π(x, yⱼ) P_{V1}(yⱼ − x) = 0`, and
//! * for every target atom `y`: `Σᵢ π(xᵢ, y) P_{V2}(xᵢ − y) = 0`.
//!
//! With `V1 = R^n` this is the martingale condition, and feasibility of the
//! linear system is the discrete Strassen test for `mu ≺_c nu`. In general
//! it decides the convex-concave order.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{SubspacePair, Which};
use crate::lp::{solve_lp, LinearProgram, Relation};
use crate::measure::{require_common_barycenter, DiscreteMeasure, Point};
use crate::scalar::Scalar;

/// Weighted atoms on pairs `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<S> {
    dim: usize,
    atoms: Vec<((Point<S>, Point<S>), S)>,
}

impl<S: Scalar> Coupling<S> {
    /// Merges repeated pairs and drops zero weights. Weights are taken as given.
    pub fn new(dim: usize, atoms: Vec<((Point<S>, Point<S>), S)>) -> Result<Self> {
        let mut merged: Vec<((Point<S>, Point<S>), S)> = Vec::with_capacity(atoms.len());
        for ((x, y), w) in atoms {
            if x.dim() != dim || y.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: x.dim().max(y.dim()) });
            }
            if w < S::zero() {
                return Err(Error::InvalidMeasure(alloc::format!("negative coupling weight {w}")));
            }
            if w.is_zero() {
                continue;
            }
            match merged.iter_mut().find(|((a, b), _)| a.same_point(&x) && b.same_point(&y)) {
                Some((_, acc)) => *acc = acc.add_ref(&w),
                None => merged.push(((x, y), w)),
            }
        }
        Ok(Coupling { dim, atoms: merged })
    }

    /// `Σ wᵢ δ_(xᵢ, xᵢ)`.
    pub fn identity(m: &DiscreteMeasure<S>) -> Self {
        Coupling { dim: m.dim(), atoms: m.atoms().iter().map(|(p, w)| ((p.clone(), p.clone()), w.clone())).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[((Point<S>, Point<S>), S)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> S {
        self.atoms.iter().fold(S::zero(), |acc, (_, w)| acc.add_ref(w))
    }

    pub fn first_marginal(&self) -> Result<DiscreteMeasure<S>> {
        DiscreteMeasure::new(self.dim, self.atoms.iter().map(|((x, _), w)| (x.clone(), w.clone())).collect())
    }

    pub fn second_marginal(&self) -> Result<DiscreteMeasure<S>> {
        DiscreteMeasure::new(self.dim, self.atoms.iter().map(|((_, y), w)| (y.clone(), w.clone())).collect())
    }

    /// Total mass one and marginals equal to `mu`, `nu` (exactly in rational mode).
    pub fn has_marginals(&self, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> bool {
        if !self.total_mass().approx_eq(&S::one()) {
            return false;
        }
        match (self.first_marginal(), self.second_marginal()) {
            (Ok(a), Ok(b)) => a.same_measure(mu) && b.same_measure(nu),
            _ => false,
        }
    }

    /// `Σ w ‖x − y‖²`.
    pub fn transport_cost(&self) -> S {
        let mut acc = S::zero();
        for ((x, y), w) in &self.atoms {
            acc.add_mul_assign(w, &(x - y).norm_sq());
        }
        acc
    }
}

/// Barycentric residuals of a coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport<S> {
    /// Per distinct source atom `x`: `Σⱼ π(x, yⱼ) P_{V1}(yⱼ − x)`.
    pub source: Vec<(Point<S>, Point<S>)>,
    /// Per distinct target atom `y`: `Σᵢ π(xᵢ, y) P_{V2}(xᵢ − y)`.
    pub target: Vec<(Point<S>, Point<S>)>,
    /// Largest absolute coordinate over all residual vectors.
    pub violation: S,
}

impl<S: Scalar> ResidualReport<S> {
    pub fn is_zero(&self) -> bool {
        self.violation.is_zero_tol()
    }
}

fn group_sums<S: Scalar>(
    keys: impl Iterator<Item = (Point<S>, Point<S>)>,
    dim: usize,
) -> Vec<(Point<S>, Point<S>)> {
    let mut out: Vec<(Point<S>, Point<S>)> = Vec::new();
    for (key, v) in keys {
        match out.iter_mut().find(|(k, _)| k.same_point(&key)) {
            Some((_, acc)) => *acc = &*acc + &v,
            None => {
                let mut acc = Point::zeros(dim);
                acc.axpy(&S::one(), &v);
                out.push((key, acc));
            }
        }
    }
    out
}

fn max_violation<S: Scalar>(groups: &[(Point<S>, Point<S>)]) -> S {
    let mut best = S::zero();
    for (_, r) in groups {
        let a = r.max_abs();
        if a > best {
            best = a;
        }
    }
    best
}

/// Evaluates both bimartingale identities atom by atom.
pub fn verify_bimartingale<S: Scalar>(pi: &Coupling<S>, pair: &SubspacePair<S>) -> ResidualReport<S> {
    let n = pi.dim();
    let source = group_sums(
        pi.atoms().iter().map(|((x, y), w)| (x.clone(), pair.project(Which::First, &(y - x)).scale(w))),
        n,
    );
    let target = group_sums(
        pi.atoms().iter().map(|((x, y), w)| (y.clone(), pair.project(Which::Second, &(x - y)).scale(w))),
        n,
    );
    let violation = {
        let a = max_violation(&source);
        let b = max_violation(&target);
        if a > b { a } else { b }
    };
    ResidualReport { source, target, violation }
}

/// Largest absolute coordinate of `Σⱼ π(x, yⱼ)(yⱼ − x)` over source atoms;
/// zero exactly for martingale couplings.
pub fn martingale_residual<S: Scalar>(pi: &Coupling<S>) -> S {
    let groups = group_sums(pi.atoms().iter().map(|((x, y), w)| (x.clone(), (y - x).scale(w))), pi.dim());
    max_violation(&groups)
}

/// `((P_{V1}, P_{V1})_# π, S(P_{V2}, P_{V2})_# π)`, written in the coordinates
/// of the stored bases of `V1` and `V2`. The second coupling has its two
/// components swapped, so it runs from the `nu`-side to the `mu`-side.
pub fn marginal_martingale_pushforwards<S: Scalar>(
    pi: &Coupling<S>,
    pair: &SubspacePair<S>,
) -> Result<(Coupling<S>, Coupling<S>)> {
    let first = Coupling::new(
        pair.dim1(),
        pi.atoms()
            .iter()
            .map(|((x, y), w)| ((pair.coordinates(Which::First, x), pair.coordinates(Which::First, y)), w.clone()))
            .collect(),
    )?;
    let second = Coupling::new(
        pair.dim2(),
        pi.atoms()
            .iter()
            .map(|((x, y), w)| ((pair.coordinates(Which::Second, y), pair.coordinates(Which::Second, x)), w.clone()))
            .collect(),
    )?;
    Ok((first, second))
}

/// Solves the feasibility LP for bimartingale couplings, selecting the
/// witness of least `Σ π ‖x − y‖²`.
fn coupling_lp<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    pair: &SubspacePair<S>,
) -> Result<Option<Coupling<S>>> {
    let (nm, nn) = (mu.len(), nu.len());
    let var = |i: usize, j: usize| i * nn + j;
    let mut objective = Vec::with_capacity(nm * nn);
    for (x, _) in mu.atoms() {
        for (y, _) in nu.atoms() {
            objective.push((x - y).norm_sq());
        }
    }
    let mut lp = LinearProgram::new(objective);
    for (i, (_, w)) in mu.atoms().iter().enumerate() {
        lp.add_sparse((0..nn).map(|j| (var(i, j), S::one())).collect(), Relation::Eq, w.clone());
    }
    for (j, (_, w)) in nu.atoms().iter().enumerate() {
        lp.add_sparse((0..nm).map(|i| (var(i, j), S::one())).collect(), Relation::Eq, w.clone());
    }
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        for b in pair.basis1() {
            let coeffs = nu.atoms().iter().enumerate().map(|(j, (y, _))| (var(i, j), b.dot(&(y - x)))).collect();
            lp.add_sparse(coeffs, Relation::Eq, S::zero());
        }
    }
    for (j, (y, _)) in nu.atoms().iter().enumerate() {
        for b in pair.basis2() {
            let coeffs = mu.atoms().iter().enumerate().map(|(i, (x, _))| (var(i, j), b.dot(&(x - y)))).collect();
            lp.add_sparse(coeffs, Relation::Eq, S::zero());
        }
    }
    let out = solve_lp(&lp)?;
    if !out.is_optimal() {
        return Ok(None);
    }
    let mut atoms = Vec::new();
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        for (j, (y, _)) in nu.atoms().iter().enumerate() {
            let w = &out.solution[var(i, j)];
            if w.is_pos() {
                atoms.push(((x.clone(), y.clone()), w.clone()));
            }
        }
    }
    Ok(Some(Coupling::new(mu.dim(), atoms)?))
}

/// Discrete Strassen test: a martingale coupling of `mu` and `nu` if
/// `mu ≺_c nu`, `None` otherwise.
pub fn check_convex_order<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Result<Option<Coupling<S>>> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    coupling_lp(mu, nu, &SubspacePair::full(mu.dim()))
}

/// A bimartingale coupling with respect to `(V1, V2)`, or `None`, which
/// certifies that `mu` and `nu` are not in convex-concave order for this pair.
pub fn find_bimartingale<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    pair: &SubspacePair<S>,
) -> Result<Option<Coupling<S>>> {
    require_common_barycenter(mu, nu)?;
    if pair.ambient() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: pair.ambient() });
    }
    if !pair.is_complementing() {
        return Err(Error::SubspacesNotComplementing { dim1: pair.dim1(), dim2: pair.dim2(), ambient: pair.ambient() });
    }
    coupling_lp(mu, nu, pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::Rational;
    use alloc::vec;

    type Q = Rational;

    fn pt(c: &[i64]) -> Point<Q> {
        Point::from_i64(c)
    }

    fn counterexample() -> Coupling<Q> {
        Coupling::new(
            2,
            vec![((pt(&[0, 1]), pt(&[-1, 1])), Q::from_ratio(1, 2)), ((pt(&[0, -1]), pt(&[1, -1])), Q::from_ratio(1, 2))],
        )
        .unwrap()
    }

    #[test]
    fn convex_order_examples() {
        let delta = DiscreteMeasure::<Q>::dirac(pt(&[0]));
        let spread = DiscreteMeasure::<Q>::from_int_atoms(1, &[(&[-1], 1, 2), (&[1], 1, 2)]).unwrap();
        let w = check_convex_order(&delta, &spread).unwrap().unwrap();
        assert_eq!(w.atoms().len(), 2);
        assert_eq!(w.atoms()[0], ((pt(&[0]), pt(&[-1])), Q::from_ratio(1, 2)));
        assert_eq!(w.atoms()[1], ((pt(&[0]), pt(&[1])), Q::from_ratio(1, 2)));
        assert!(check_convex_order(&spread, &delta).unwrap().is_none());

        let mu1 = DiscreteMeasure::<Q>::dirac(pt(&[0, 1]));
        let nu1 = DiscreteMeasure::<Q>::from_int_atoms(2, &[(&[-1, 1], 1, 2), (&[1, 1], 1, 2)]).unwrap();
        let w = check_convex_order(&mu1, &nu1).unwrap().unwrap();
        assert!(w.has_marginals(&mu1, &nu1));
        assert!(martingale_residual(&w).is_zero());
    }

    #[test]
    fn identity_is_bimartingale_for_any_pair() {
        let mu = DiscreteMeasure::<Q>::from_int_atoms(2, &[(&[1, 2], 1, 3), (&[-2, -1], 2, 3)]).unwrap();
        let pair = SubspacePair::coordinate(2, &[1], &[0]).unwrap();
        let w = find_bimartingale(&mu, &mu, &pair).unwrap().unwrap();
        assert_eq!(w, Coupling::identity(&mu));
        assert!(verify_bimartingale(&w, &pair).is_zero());
    }

    #[test]
    fn counterexample_marginals_admit_no_bimartingale() {
        let pi = counterexample();
        let mu = pi.first_marginal().unwrap();
        let nu = pi.second_marginal().unwrap();
        let pair = SubspacePair::coordinate(2, &[0], &[1]).unwrap();
        assert!(find_bimartingale(&mu, &nu, &pair).unwrap().is_none());
    }

    #[test]
    fn counterexample_residual_and_pushforwards() {
        let pi = counterexample();
        let pair = SubspacePair::coordinate(2, &[0], &[1]).unwrap();
        let report = verify_bimartingale(&pi, &pair);
        assert_eq!(report.source[0].0, pt(&[0, 1]));
        assert_eq!(report.source[0].1, Point::new(vec![Q::from_ratio(-1, 2), Q::from_i64(0)]));
        assert_eq!(report.violation, Q::from_ratio(1, 2));

        let (p1, p2) = marginal_martingale_pushforwards(&pi, &pair).unwrap();
        let half = Q::from_ratio(1, 2);
        assert_eq!(
            p1,
            Coupling::new(1, vec![((pt(&[0]), pt(&[-1])), half.clone()), ((pt(&[0]), pt(&[1])), half.clone())]).unwrap()
        );
        assert_eq!(
            p2,
            Coupling::new(1, vec![((pt(&[1]), pt(&[1])), half.clone()), ((pt(&[-1]), pt(&[-1])), half)]).unwrap()
        );
        assert!(martingale_residual(&p1).is_zero());
        assert!(martingale_residual(&p2).is_zero());
    }

    #[test]
    fn preconditions() {
        let mu = DiscreteMeasure::<Q>::dirac(pt(&[0, 0]));
        let nu = DiscreteMeasure::<Q>::dirac(pt(&[1, 0]));
        let pair = SubspacePair::coordinate(2, &[0], &[1]).unwrap();
        assert!(matches!(find_bimartingale(&mu, &nu, &pair), Err(Error::BarycenterMismatch { .. })));
        let partial = SubspacePair::coordinate(2, &[0], &[]).unwrap();
        assert!(matches!(find_bimartingale(&mu, &mu, &partial), Err(Error::SubspacesNotComplementing { .. })));
        let line = DiscreteMeasure::<Q>::dirac(pt(&[0]));
        assert!(matches!(check_convex_order(&mu, &line), Err(Error::DimensionMismatch { .. })));
    }
}
