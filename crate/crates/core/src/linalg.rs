//! Symmetric eigendecomposition, spectral subspace splitting and projections.
//!
//! The eigensolver always runs in `f64` (cyclic Jacobi). In rational mode the
//! resulting subspaces are rebuilt from rationalised projectors and then
//! certified exactly: `C` must leave `V1`, `V2` invariant, vanish on the
//! kernel, and be definite on `V1` and `V2`. When that certification fails
//! the bases are still exactly orthogonal but only approximate the spectral
//! subspaces, and [`SpectralSplit::certified`] is `false`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::measure::{Point, SymmetricMatrix};
use crate::scalar::{NumericMode, Scalar};

/// Off-diagonal Frobenius mass at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Default splitting tolerance, relative to the Schatten-1 norm.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Denominator bounds tried when rebuilding exact projectors.
const RATIONALIZE_DENOMINATORS: [u64; 4] = [1_000, 100_000, 10_000_000, 1_000_000_000];
const FALLBACK_DENOMINATOR: u64 = 1 << 20;

/// Eigenvalues in descending order with orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Point<f64>>,
}

impl EigenDecomposition {
    /// `max |Qᵀ Q − Id|`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.vectors.len();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max(libm::fabs(self.vectors[i].dot(&self.vectors[j]) - target));
            }
        }
        err
    }

    /// `max |M − Q Λ Qᵀ|`.
    pub fn reconstruction_error(&self, m: &SymmetricMatrix<f64>) -> f64 {
        let n = m.dim();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for (l, q) in self.values.iter().zip(&self.vectors) {
                    acc += l * q.coords()[i] * q.coords()[j];
                }
                err = err.max(libm::fabs(acc - m.get(i, j)));
            }
        }
        err
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Eigenvectors belonging to a cluster of equal eigenvalues are replaced by a
/// Gram-Schmidt basis of the cluster projector, so the output does not depend
/// on the rotation order.
pub fn eigendecompose<S: Scalar>(m: &SymmetricMatrix<S>) -> Result<EigenDecomposition> {
    let n = m.dim();
    let a0 = m.to_f64();
    for i in 0..n {
        for j in (i + 1)..n {
            if libm::fabs(a0.get(i, j) - a0.get(j, i)) > 1e-12 {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let mut a: Vec<Vec<f64>> = a0.to_f64_rows();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let frob: f64 = libm::sqrt(a.iter().flatten().map(|x| x * x).sum::<f64>());
    let threshold = JACOBI_TOL * frob.max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = libm::sqrt(
            (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum::<f64>(),
        );
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal eigenvalues keep index order.
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap_or(core::cmp::Ordering::Equal));
    let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let mut vectors: Vec<Point<f64>> = order.iter().map(|&i| Point::new((0..n).map(|k| v[k][i]).collect())).collect();

    let scale = values.iter().fold(0.0f64, |acc, l| acc.max(libm::fabs(*l))).max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && libm::fabs(values[start] - values[end]) <= 1e-12 * scale {
            end += 1;
        }
        let proj = projector_of(&vectors[start..end], n);
        let basis = pivoted_basis(&proj, end - start, true);
        for (k, b) in basis.into_iter().enumerate() {
            vectors[start + k] = b;
        }
        start = end;
    }
    Ok(EigenDecomposition { values, vectors })
}

/// `Σ |λᵢ|`, computed from the float spectrum.
pub fn schatten1<S: Scalar>(m: &SymmetricMatrix<S>) -> Result<f64> {
    Ok(eigendecompose(m)?.values.iter().map(|l| libm::fabs(*l)).sum())
}

/// The default absolute splitting tolerance for `m`.
pub fn default_tol<S: Scalar>(m: &SymmetricMatrix<S>) -> Result<f64> {
    let s = schatten1(m)?;
    Ok(if s > 0.0 { DEFAULT_REL_TOL * s } else { 1e-12 })
}

/// Orthogonal subspaces `V1 ⟂ V2` of `R^n`, stored as orthogonal bases.
///
/// Bases are orthonormal in float mode; in rational mode they are exactly
/// orthogonal but unnormalised (normalisation would need square roots).
/// Projections use `Σ ⟨w, x⟩ / ⟨w, w⟩ · w`, which is correct in both cases.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePair<S> {
    ambient: usize,
    basis1: Vec<Point<S>>,
    basis2: Vec<Point<S>>,
}

/// Selects `V1` or `V2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    First,
    Second,
}

impl<S: Scalar> SubspacePair<S> {
    /// Builds a pair from arbitrary spanning sets; each set is orthogonalised
    /// and the two subspaces must be orthogonal to each other.
    pub fn from_spanning(ambient: usize, span1: Vec<Point<S>>, span2: Vec<Point<S>>) -> Result<Self> {
        for p in span1.iter().chain(&span2) {
            if p.dim() != ambient {
                return Err(Error::DimensionMismatch { expected: ambient, found: p.dim() });
            }
        }
        let basis1 = gram_schmidt(&span1, &[]);
        let basis2 = gram_schmidt(&span2, &[]);
        for a in &basis1 {
            for b in &basis2 {
                if !a.dot(b).is_zero_tol() {
                    return Err(Error::InvalidMeasure("subspaces V1 and V2 are not orthogonal".into()));
                }
            }
        }
        Ok(SubspacePair { ambient, basis1, basis2 })
    }

    /// `V1 = R^n`, `V2 = {0}` (plain martingale constraints).
    pub fn full(ambient: usize) -> Self {
        SubspacePair { ambient, basis1: (0..ambient).map(|i| Point::unit(ambient, i)).collect(), basis2: Vec::new() }
    }

    /// Coordinate subspaces spanned by the listed standard basis vectors.
    pub fn coordinate(ambient: usize, first: &[usize], second: &[usize]) -> Result<Self> {
        Self::from_spanning(
            ambient,
            first.iter().map(|&i| Point::unit(ambient, i)).collect(),
            second.iter().map(|&i| Point::unit(ambient, i)).collect(),
        )
    }

    pub(crate) fn from_orthogonal_unchecked(ambient: usize, basis1: Vec<Point<S>>, basis2: Vec<Point<S>>) -> Self {
        SubspacePair { ambient, basis1, basis2 }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self, which: Which) -> &[Point<S>] {
        match which {
            Which::First => &self.basis1,
            Which::Second => &self.basis2,
        }
    }

    pub fn basis1(&self) -> &[Point<S>] {
        &self.basis1
    }

    pub fn basis2(&self) -> &[Point<S>] {
        &self.basis2
    }

    pub fn dim1(&self) -> usize {
        self.basis1.len()
    }

    pub fn dim2(&self) -> usize {
        self.basis2.len()
    }

    /// `dim V1 + dim V2 = n`.
    pub fn is_complementing(&self) -> bool {
        self.dim1() + self.dim2() == self.ambient
    }

    /// Orthogonal projection onto the selected subspace.
    pub fn project(&self, which: Which, x: &Point<S>) -> Point<S> {
        project_onto(self.basis(which), x)
    }

    /// Projection onto `(V1 ⊕ V2)^⟂`.
    pub fn project_kernel(&self, x: &Point<S>) -> Point<S> {
        let p1 = self.project(Which::First, x);
        let p2 = self.project(Which::Second, x);
        &(x - &p1) - &p2
    }

    /// Coordinates of `P_{V_i} x` in the stored basis of `V_i`.
    pub fn coordinates(&self, which: Which, x: &Point<S>) -> Point<S> {
        Point::new(self.basis(which).iter().map(|w| w.dot(x).div_ref(&w.norm_sq())).collect())
    }

    pub fn projector(&self, which: Which) -> SymmetricMatrix<S> {
        projector_of(self.basis(which), self.ambient)
    }

    /// `T = P_{V1} − P_{V2}`.
    pub fn isometry(&self) -> SymmetricMatrix<S> {
        self.projector(Which::First).sub(&self.projector(Which::Second))
    }

    /// Applies `T = P_{V1} − P_{V2}` to `x`.
    pub fn apply_isometry(&self, x: &Point<S>) -> Point<S> {
        &self.project(Which::First, x) - &self.project(Which::Second, x)
    }

    /// Extends `V1` by `extra` (orthogonal to both subspaces), e.g. the
    /// normal directions of a leaf, along which the measures do not vary.
    pub fn with_first_extended(&self, extra: &[Point<S>]) -> Self {
        let mut basis1 = self.basis1.clone();
        let existing: Vec<Point<S>> = self.basis1.iter().chain(&self.basis2).cloned().collect();
        basis1.extend(gram_schmidt(extra, &existing));
        SubspacePair { ambient: self.ambient, basis1, basis2: self.basis2.clone() }
    }

    /// Orthogonal basis of `(V1 ⊕ V2)^⟂`.
    pub fn kernel_basis(&self) -> Vec<Point<S>> {
        let existing: Vec<Point<S>> = self.basis1.iter().chain(&self.basis2).cloned().collect();
        let units: Vec<Point<S>> = (0..self.ambient).map(|i| Point::unit(self.ambient, i)).collect();
        gram_schmidt(&units, &existing)
    }
}

/// `Σ ⟨w, x⟩/⟨w, w⟩ · w` over an orthogonal basis.
pub fn project_onto<S: Scalar>(basis: &[Point<S>], x: &Point<S>) -> Point<S> {
    let mut out = Point::zeros(x.dim());
    for w in basis {
        let c = w.dot(x).div_ref(&w.norm_sq());
        out.axpy(&c, w);
    }
    out
}

/// `Σ w wᵀ / ⟨w, w⟩`.
pub fn projector_of<S: Scalar>(basis: &[Point<S>], n: usize) -> SymmetricMatrix<S> {
    let mut p = SymmetricMatrix::zeros(n);
    for w in basis {
        let s = S::one().div_ref(&w.norm_sq());
        p.add_outer(&s, w);
    }
    p
}

/// Gram-Schmidt of `vectors` against `against` and each other, in order.
/// Exact (unnormalised) in rational mode, normalised in float mode.
/// Vectors that become (numerically) zero are dropped.
pub fn gram_schmidt<S: Scalar>(vectors: &[Point<S>], against: &[Point<S>]) -> Vec<Point<S>> {
    let mut basis: Vec<Point<S>> = against.to_vec();
    let keep_from = basis.len();
    for v in vectors {
        let w = orthogonalize(v, &basis);
        if keep_vector(&w, v) {
            basis.push(normalize(w));
        }
    }
    basis.split_off(keep_from)
}

fn orthogonalize<S: Scalar>(v: &Point<S>, basis: &[Point<S>]) -> Point<S> {
    let mut w = v.clone();
    for b in basis {
        let c = b.dot(&w).div_ref(&b.norm_sq());
        if !c.is_zero() {
            w.axpy(&-c, b);
        }
    }
    w
}

fn keep_vector<S: Scalar>(w: &Point<S>, original: &Point<S>) -> bool {
    match S::MODE {
        NumericMode::Rational => !w.norm_sq().is_zero(),
        NumericMode::Float => {
            let n = w.norm_sq().to_f64();
            n > 1e-20 && n > 1e-18 * original.norm_sq().to_f64()
        }
    }
}

fn normalize<S: Scalar>(w: Point<S>) -> Point<S> {
    match w.norm_sq().try_sqrt() {
        Some(norm) if S::MODE == NumericMode::Float => w.scale(&(S::one() / norm)),
        _ => w,
    }
}

/// Greedy pivoted Gram-Schmidt over the columns of `m`: repeatedly takes the
/// column with the largest residual (lowest index on ties) until `rank`
/// vectors are chosen.
fn pivoted_basis<S: Scalar>(m: &SymmetricMatrix<S>, rank: usize, normalize_out: bool) -> Vec<Point<S>> {
    let n = m.dim();
    let columns: Vec<Point<S>> = (0..n).map(|j| Point::new((0..n).map(|i| m.get(i, j).clone()).collect())).collect();
    let mut basis: Vec<Point<S>> = Vec::new();
    let mut used = alloc::vec![false; n];
    while basis.len() < rank {
        let mut best: Option<(usize, Point<S>, S)> = None;
        for j in 0..n {
            if used[j] {
                continue;
            }
            let r = orthogonalize(&columns[j], &basis);
            let nr = r.norm_sq();
            if best.as_ref().is_none_or(|(_, _, b)| nr > *b) {
                best = Some((j, r, nr));
            }
        }
        match best {
            Some((j, r, nr)) if !nr.is_zero() && keep_vector(&r, &columns[j]) => {
                used[j] = true;
                basis.push(r);
            }
            _ => break,
        }
    }
    if normalize_out {
        basis.into_iter().map(normalize).collect()
    } else {
        basis
    }
}

/// Result of splitting a symmetric matrix by the sign of its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit<S> {
    /// `V1` = positive eigenspace, `V2` = negative eigenspace.
    pub pair: SubspacePair<S>,
    pub kernel_basis: Vec<Point<S>>,
    /// Float spectrum, descending.
    pub eigenvalues: Vec<f64>,
    /// Absolute threshold separating the kernel.
    pub tol: f64,
    /// Smallest |λ| among non-kernel eigenvalues minus the largest |λ| in the
    /// kernel; `+∞` when one of the groups is empty.
    pub spectral_gap: f64,
    /// The subspaces are exactly the sign eigenspaces of the input (always
    /// checked exactly in rational mode, up to tolerance in float mode).
    pub certified: bool,
}

/// Splits `R^n` into the positive eigenspace (`λ > tol`), negative eigenspace
/// (`λ < −tol`) and kernel of `m`.
pub fn split_subspaces<S: Scalar>(m: &SymmetricMatrix<S>, tol: f64) -> Result<SpectralSplit<S>> {
    let n = m.dim();
    let eig = eigendecompose(m)?;
    let pos: Vec<usize> = (0..n).filter(|&i| eig.values[i] > tol).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| eig.values[i] < -tol).collect();
    let ker: Vec<usize> = (0..n).filter(|&i| libm::fabs(eig.values[i]) <= tol).collect();

    let min_active = pos.iter().chain(&neg).map(|&i| libm::fabs(eig.values[i])).fold(f64::INFINITY, f64::min);
    let max_kernel = ker.iter().map(|&i| libm::fabs(eig.values[i])).fold(f64::NEG_INFINITY, f64::max);
    let spectral_gap = if min_active.is_finite() && max_kernel.is_finite() { min_active - max_kernel } else { f64::INFINITY };

    let float_p1 = projector_of(&pos.iter().map(|&i| eig.vectors[i].clone()).collect::<Vec<_>>(), n);
    let float_p2 = projector_of(&neg.iter().map(|&i| eig.vectors[i].clone()).collect::<Vec<_>>(), n);

    let attempts: &[u64] = match S::MODE {
        NumericMode::Rational => &RATIONALIZE_DENOMINATORS,
        NumericMode::Float => &RATIONALIZE_DENOMINATORS[..1],
    };
    for &den in attempts {
        let p1 = rationalize_matrix::<S>(&float_p1, den);
        let p2 = rationalize_matrix::<S>(&float_p2, den);
        let b1 = pivoted_basis(&p1, pos.len(), true);
        let b2 = pivoted_basis(&p2, neg.len(), true);
        if b1.len() != pos.len() || b2.len() != neg.len() {
            continue;
        }
        // In rational mode V2 is re-orthogonalised against V1 so the pair is exactly orthogonal.
        let b2 = gram_schmidt(&b2, &b1);
        if b2.len() != neg.len() {
            continue;
        }
        let pair = SubspacePair::from_orthogonal_unchecked(n, b1, b2);
        let kernel_basis = pair.kernel_basis();
        if certify(m, &pair, &kernel_basis) {
            return Ok(SpectralSplit { pair, kernel_basis, eigenvalues: eig.values, tol, spectral_gap, certified: true });
        }
    }

    // Fallback: exactly orthogonal, approximately spectral.
    let ordered: Vec<Point<S>> = pos
        .iter()
        .chain(&neg)
        .chain(&ker)
        .map(|&i| Point::new(eig.vectors[i].coords().iter().map(|&c| S::rationalize(c, FALLBACK_DENOMINATOR)).collect()))
        .collect();
    let all = gram_schmidt(&ordered, &[]);
    let (b1, rest) = all.split_at(pos.len().min(all.len()));
    let (b2, _) = rest.split_at(neg.len().min(rest.len()));
    let pair = SubspacePair::from_orthogonal_unchecked(n, b1.to_vec(), b2.to_vec());
    let kernel_basis = pair.kernel_basis();
    let certified = certify(m, &pair, &kernel_basis);
    Ok(SpectralSplit { pair, kernel_basis, eigenvalues: eig.values, tol, spectral_gap, certified })
}

/// `split_subspaces` with [`default_tol`].
pub fn split_subspaces_default<S: Scalar>(m: &SymmetricMatrix<S>) -> Result<SpectralSplit<S>> {
    split_subspaces(m, default_tol(m)?)
}

fn rationalize_matrix<S: Scalar>(m: &SymmetricMatrix<f64>, den: u64) -> SymmetricMatrix<S> {
    let n = m.dim();
    let mut out = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            out.set(i, j, S::rationalize(*m.get(i, j), den));
        }
    }
    out
}

/// Exact (rational) or tolerance-based (float) check that the pair and kernel
/// are the sign eigenspaces of `m`.
fn certify<S: Scalar>(m: &SymmetricMatrix<S>, pair: &SubspacePair<S>, kernel: &[Point<S>]) -> bool {
    for w in kernel {
        if !m.mul_vec(w).is_zero_tol() {
            return false;
        }
    }
    for (which, basis) in [(Which::First, pair.basis1()), (Which::Second, pair.basis2())] {
        for w in basis {
            let mw = m.mul_vec(w);
            let back = pair.project(which, &mw);
            if !(&mw - &back).is_zero_tol() {
                return false;
            }
        }
        // Gram matrix of the quadratic form on the subspace must be definite with the right sign.
        let sign = if which == Which::First { S::one() } else { -S::one() };
        let gram: Vec<Vec<S>> = basis
            .iter()
            .map(|a| basis.iter().map(|b| sign.mul_ref(&m.mul_vec(b).dot(a))).collect())
            .collect();
        if !is_positive_definite(gram) {
            return false;
        }
    }
    true
}

/// Positive definiteness through unpivoted LDLᵀ (all pivots must be positive).
pub fn is_positive_definite<S: Scalar>(mut g: Vec<Vec<S>>) -> bool {
    let n = g.len();
    for k in 0..n {
        let pivot = g[k][k].clone();
        if !pivot.is_pos() {
            return false;
        }
        for i in (k + 1)..n {
            let f = g[i][k].div_ref(&pivot);
            if f.is_zero() {
                continue;
            }
            for j in (k + 1)..n {
                let gkj = g[k][j].clone();
                g[i][j].sub_mul_assign(&f, &gkj);
            }
        }
    }
    true
}

/// Positive semidefiniteness through diagonally pivoted elimination: once no
/// positive pivot is left, the remaining block must vanish.
pub fn is_positive_semidefinite<S: Scalar>(mut g: Vec<Vec<S>>) -> bool {
    let n = g.len();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let Some(pos) = active.iter().position(|&k| g[k][k].is_pos()) else {
            return active.iter().all(|&i| active.iter().all(|&j| g[i][j].is_zero_tol()));
        };
        let k = active.remove(pos);
        let pivot = g[k][k].clone();
        for &i in &active {
            let f = g[i][k].div_ref(&pivot);
            if f.is_zero() {
                continue;
            }
            for &j in &active {
                let gkj = g[k][j].clone();
                g[i][j].sub_mul_assign(&f, &gkj);
            }
        }
    }
    true
}
