//! Finitely supported measures on `R^n` and their moments.

use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Distance below which two float atoms are considered the same point.
pub const FLOAT_MERGE_TOL: f64 = 1e-12;

/// A point (or vector) of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<S>(Vec<S>);

impl<S: Scalar> Point<S> {
    pub fn new(coords: Vec<S>) -> Self {
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point((0..dim).map(|_| S::zero()).collect())
    }

    /// The `i`-th standard basis vector of `R^dim`.
    pub fn unit(dim: usize, i: usize) -> Self {
        Point((0..dim).map(|k| if k == i { S::one() } else { S::zero() }).collect())
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        Point(coords.iter().map(|&c| S::from_i64(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[S] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<S> {
        self.0
    }

    pub fn dot(&self, other: &Self) -> S {
        let mut acc = S::zero();
        for (a, b) in self.0.iter().zip(&other.0) {
            acc.add_mul_assign(a, b);
        }
        acc
    }

    pub fn norm_sq(&self) -> S {
        self.dot(self)
    }

    pub fn scale(&self, s: &S) -> Self {
        Point(self.0.iter().map(|c| c.mul_ref(s)).collect())
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: &S, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.add_mul_assign(s, b);
        }
    }

    pub fn is_zero_tol(&self) -> bool {
        self.0.iter().all(Scalar::is_zero_tol)
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> S {
        let mut best = S::zero();
        for c in &self.0 {
            let a = c.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    /// Exact equality in rational mode, distance at most [`FLOAT_MERGE_TOL`] in float mode.
    pub fn same_point(&self, other: &Self) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        match S::MODE {
            crate::NumericMode::Rational => self == other,
            crate::NumericMode::Float => {
                let d = (self - other).norm_sq().to_f64();
                d <= FLOAT_MERGE_TOL * FLOAT_MERGE_TOL
            }
        }
    }

    /// Equality up to the mode tolerance (exact in rational mode).
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a.approx_eq(b))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Scalar::to_f64).collect()
    }

    /// Lexicographic comparison of the float images, used for deterministic ordering.
    pub fn lex_cmp(&self, other: &Self) -> core::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.partial_cmp(b) {
                Some(core::cmp::Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        self.dim().cmp(&other.dim())
    }
}

impl<S: Scalar> Add for &Point<S> {
    type Output = Point<S>;
    fn add(self, rhs: &Point<S>) -> Point<S> {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a.add_ref(b)).collect())
    }
}

impl<S: Scalar> Sub for &Point<S> {
    type Output = Point<S>;
    fn sub(self, rhs: &Point<S>) -> Point<S> {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a.sub_ref(b)).collect())
    }
}

impl<S: Scalar> fmt::Display for Point<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Finitely many weighted atoms, normalised to a probability on construction.
///
/// Duplicate points are merged and zero-weight atoms dropped. The mass the
/// atoms had before normalisation is kept in [`DiscreteMeasure::original_mass`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<S> {
    dim: usize,
    atoms: Vec<(Point<S>, S)>,
    original_mass: S,
}

impl<S: Scalar> DiscreteMeasure<S> {
    pub fn new(dim: usize, atoms: Vec<(Point<S>, S)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be at least 1".into()));
        }
        let mut merged: Vec<(Point<S>, S)> = Vec::with_capacity(atoms.len());
        let mut total = S::zero();
        for (p, w) in atoms {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            if w < S::zero() {
                return Err(Error::InvalidMeasure(alloc::format!("negative weight {w} at {p}")));
            }
            if w.is_zero() {
                continue;
            }
            total = total.add_ref(&w);
            match merged.iter_mut().find(|(q, _)| q.same_point(&p)) {
                Some((_, acc)) => *acc = acc.add_ref(&w),
                None => merged.push((p, w)),
            }
        }
        if merged.is_empty() || total <= S::zero() {
            return Err(Error::InvalidMeasure("total mass must be positive".into()));
        }
        for (_, w) in merged.iter_mut() {
            *w = w.div_ref(&total);
        }
        Ok(DiscreteMeasure { dim, atoms: merged, original_mass: total })
    }

    pub fn dirac(p: Point<S>) -> Self {
        DiscreteMeasure { dim: p.dim(), atoms: alloc::vec![(p, S::one())], original_mass: S::one() }
    }

    /// Builds a measure from integer coordinates and `(num, den)` weights.
    pub fn from_int_atoms(dim: usize, atoms: &[(&[i64], i64, i64)]) -> Result<Self> {
        Self::new(
            dim,
            atoms
                .iter()
                .map(|(x, n, d)| (Point::from_i64(x), S::from_ratio(*n, *d)))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(Point<S>, S)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn original_mass(&self) -> &S {
        &self.original_mass
    }

    pub fn points(&self) -> impl Iterator<Item = &Point<S>> {
        self.atoms.iter().map(|(p, _)| p)
    }

    /// Weight of the atom at `p` (zero when absent).
    pub fn weight_at(&self, p: &Point<S>) -> S {
        self.atoms
            .iter()
            .find(|(q, _)| q.same_point(p))
            .map(|(_, w)| w.clone())
            .unwrap_or_else(S::zero)
    }

    /// `∫ f dm`.
    pub fn integrate(&self, mut f: impl FnMut(&Point<S>) -> S) -> S {
        let mut acc = S::zero();
        for (p, w) in &self.atoms {
            acc.add_mul_assign(w, &f(p));
        }
        acc
    }

    /// Same atoms and weights, up to ordering (and the mode tolerance).
    pub fn same_measure(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self.atoms.iter().all(|(p, w)| other.weight_at(p).approx_eq(w))
    }

    /// Pushes the measure forward under `f`, merging coinciding images.
    pub fn map(&self, dim: usize, mut f: impl FnMut(&Point<S>) -> Point<S>) -> Result<Self> {
        Self::new(dim, self.atoms.iter().map(|(p, w)| (f(p), w.clone())).collect())
    }

    pub fn to_f64(&self) -> DiscreteMeasure<f64> {
        DiscreteMeasure {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|(p, w)| (Point::new(p.to_f64()), w.to_f64()))
                .collect(),
            original_mass: self.original_mass.to_f64(),
        }
    }
}

/// `(Σ wᵢ xᵢ) / (Σ wᵢ)`.
pub fn barycenter<S: Scalar>(m: &DiscreteMeasure<S>) -> Result<Point<S>> {
    let mut acc = Point::zeros(m.dim());
    let mut mass = S::zero();
    for (p, w) in m.atoms() {
        acc.axpy(w, p);
        mass = mass.add_ref(w);
    }
    if mass <= S::zero() {
        return Err(Error::InvalidMeasure("zero total mass".into()));
    }
    Ok(acc.scale(&(S::one() / mass)))
}

/// `Σ wᵢ ‖xᵢ − b‖²` with `b` the barycentre.
pub fn variance<S: Scalar>(m: &DiscreteMeasure<S>) -> Result<S> {
    let b = barycenter(m)?;
    Ok(m.integrate(|p| (p - &b).norm_sq()))
}

/// `∫ x xᵀ dm`.
pub fn second_moment<S: Scalar>(m: &DiscreteMeasure<S>) -> SymmetricMatrix<S> {
    let mut out = SymmetricMatrix::zeros(m.dim());
    for (p, w) in m.atoms() {
        out.add_outer(w, p);
    }
    out
}

/// `C = Σ_ν wⱼ yⱼyⱼᵀ − Σ_μ wᵢ xᵢxᵢᵀ`.
pub fn covariance_difference<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Result<SymmetricMatrix<S>> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    let mut c = second_moment(nu);
    for (p, w) in mu.atoms() {
        c.add_outer(&-w.clone(), p);
    }
    Ok(c)
}

/// Checks that both measures have the same barycentre (exactly, or within the float tolerance).
pub fn require_common_barycenter<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Result<Point<S>> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    let bm = barycenter(mu)?;
    let bn = barycenter(nu)?;
    if !bm.approx_eq(&bn) {
        return Err(Error::BarycenterMismatch { mu: alloc::format!("{bm}"), nu: alloc::format!("{bn}") });
    }
    Ok(bm)
}

/// Dense symmetric `n × n` matrix (row-major storage of the full square).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<S> {
    n: usize,
    entries: Vec<S>,
}

impl<S: Scalar> SymmetricMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix { n, entries: (0..n * n).map(|_| S::zero()).collect() }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.entries[i * n + i] = S::one();
        }
        m
    }

    pub fn diag(values: Vec<S>) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, v) in values.into_iter().enumerate() {
            m.entries[i * n + i] = v;
        }
        m
    }

    /// Validates symmetry: exact in rational mode, `max |M − Mᵀ| ≤ 1e-12` in float mode.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            entries.extend(row);
        }
        let m = SymmetricMatrix { n, entries };
        for i in 0..n {
            for j in (i + 1)..n {
                let d = m.get(i, j).sub_ref(m.get(j, i));
                let ok = match S::MODE {
                    crate::NumericMode::Rational => d.is_zero(),
                    crate::NumericMode::Float => d.to_f64().abs() <= 1e-12,
                };
                if !ok {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(m)
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| S::from_i64(v)).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.entries[j * self.n + i] = v.clone();
        self.entries[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// `self += w · p pᵀ`
    pub fn add_outer(&mut self, w: &S, p: &Point<S>) {
        let n = self.n;
        let c = p.coords();
        for i in 0..n {
            if c[i].is_zero() {
                continue;
            }
            let wi = w.mul_ref(&c[i]);
            for j in 0..n {
                self.entries[i * n + j].add_mul_assign(&wi, &c[j]);
            }
        }
    }

    pub fn trace(&self) -> S {
        let mut t = S::zero();
        for i in 0..self.n {
            t = t.add_ref(self.get(i, i));
        }
        t
    }

    pub fn mul_vec(&self, x: &Point<S>) -> Point<S> {
        Point::new((0..self.n).map(|i| {
            let mut acc = S::zero();
            for (a, b) in self.row(i).iter().zip(x.coords()) {
                acc.add_mul_assign(a, b);
            }
            acc
        }).collect())
    }

    /// `xᵀ M x`
    pub fn quadratic_form(&self, x: &Point<S>) -> S {
        self.mul_vec(x).dot(x)
    }

    pub fn neg(&self) -> Self {
        SymmetricMatrix { n: self.n, entries: self.entries.iter().map(|v| -v.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        SymmetricMatrix {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.add_ref(b)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        SymmetricMatrix {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub_ref(b)).collect(),
        }
    }

    pub fn is_zero_tol(&self) -> bool {
        self.entries.iter().all(Scalar::is_zero_tol)
    }

    pub fn max_abs(&self) -> S {
        let mut best = S::zero();
        for v in &self.entries {
            let a = v.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    /// `trace(self · other)` for two symmetric matrices.
    pub fn trace_product(&self, other: &Self) -> S {
        let mut acc = S::zero();
        for (a, b) in self.entries.iter().zip(&other.entries) {
            acc.add_mul_assign(a, b);
        }
        acc
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).iter().map(Scalar::to_f64).collect()).collect()
    }

    pub fn to_f64(&self) -> SymmetricMatrix<f64> {
        SymmetricMatrix { n: self.n, entries: self.entries.iter().map(Scalar::to_f64).collect() }
    }

    /// Raw square entries, row-major.
    pub fn entries(&self) -> &[S] {
        &self.entries
    }
}

impl<S: Scalar> fmt::Display for SymmetricMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.n {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}
