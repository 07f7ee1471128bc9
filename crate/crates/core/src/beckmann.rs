//! The three-marginal problem `J(mu, nu)`, its quadratic dual bound and the
//! variance problem.
//!
//! A plan `σ` on triples `(x, y, z)` has first marginal `mu`, second marginal
//! `nu`, and both `(x, z)` and `(y, z)` marginals are martingale couplings. It
//! is charged `c(x, y, z) = ½(‖z − x‖² + ‖z − y‖²)`. The third coordinate is
//! restricted to a finite grid, so [`solve_primal`] returns an upper bound on
//! `J`; [`quadratic_dual_bound`] evaluates the dual at the quadratic potential
//! `u(v) = ½⟨(P_{V1} − P_{V2}) v, v⟩` built from the spectral splitting of
//! the covariance difference, which gives a lower bound.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{is_positive_semidefinite, split_subspaces, split_subspaces_default, SpectralSplit, SubspacePair, Which};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::measure::{barycenter, covariance_difference, require_common_barycenter, variance, DiscreteMeasure, Point, SymmetricMatrix};
use crate::order::{verify_bimartingale, Coupling};
use crate::scalar::Scalar;

/// `½(‖z − x‖² + ‖z − y‖²)`.
pub fn cost<S: Scalar>(x: &Point<S>, y: &Point<S>, z: &Point<S>) -> S {
    debug_assert!(x.dim() == y.dim() && y.dim() == z.dim());
    (z - x).norm_sq().add_ref(&(z - y).norm_sq()).mul_ref(&S::half())
}

/// One support point of a three-marginal plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple<S> {
    pub x: Point<S>,
    pub y: Point<S>,
    pub z: Point<S>,
}

impl<S: Scalar> Triple<S> {
    pub fn new(x: Point<S>, y: Point<S>, z: Point<S>) -> Self {
        Triple { x, y, z }
    }

    pub fn cost(&self) -> S {
        cost(&self.x, &self.y, &self.z)
    }

    fn same(&self, other: &Self) -> bool {
        self.x.same_point(&other.x) && self.y.same_point(&other.y) && self.z.same_point(&other.z)
    }
}

/// Finitely supported measure on triples `(x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreePlan<S> {
    dim: usize,
    atoms: Vec<(Triple<S>, S)>,
}

impl<S: Scalar> ThreePlan<S> {
    /// Merges repeated triples and drops zero weights; weights are not renormalised.
    pub fn new(dim: usize, atoms: Vec<(Triple<S>, S)>) -> Result<Self> {
        let mut merged: Vec<(Triple<S>, S)> = Vec::with_capacity(atoms.len());
        for (t, w) in atoms {
            for p in [&t.x, &t.y, &t.z] {
                if p.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
                }
            }
            if w < S::zero() {
                return Err(Error::InvalidMeasure(format!("negative plan weight {w}")));
            }
            if w.is_zero() {
                continue;
            }
            match merged.iter_mut().find(|(s, _)| s.same(&t)) {
                Some((_, acc)) => *acc = acc.add_ref(&w),
                None => merged.push((t, w)),
            }
        }
        Ok(ThreePlan { dim, atoms: merged })
    }

    /// `Σ wᵢ δ_(xᵢ, xᵢ, xᵢ)`, the optimal plan when `mu = nu`.
    pub fn diagonal(m: &DiscreteMeasure<S>) -> Self {
        ThreePlan {
            dim: m.dim(),
            atoms: m.atoms().iter().map(|(p, w)| (Triple::new(p.clone(), p.clone(), p.clone()), w.clone())).collect(),
        }
    }

    /// `Σ θₖ σₖ` for plans of equal dimension.
    pub fn mixture(dim: usize, parts: Vec<(S, ThreePlan<S>)>) -> Result<Self> {
        let mut atoms = Vec::new();
        for (theta, plan) in parts {
            if plan.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: plan.dim });
            }
            atoms.extend(plan.atoms.into_iter().map(|(t, w)| (t, w.mul_ref(&theta))));
        }
        ThreePlan::new(dim, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(Triple<S>, S)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> S {
        self.atoms.iter().fold(S::zero(), |acc, (_, w)| acc.add_ref(w))
    }

    /// `Σ w · c(x, y, z)`.
    pub fn cost(&self) -> S {
        let mut acc = S::zero();
        for (t, w) in &self.atoms {
            acc.add_mul_assign(w, &t.cost());
        }
        acc
    }

    fn marginal(&self, pick: impl Fn(&Triple<S>) -> &Point<S>) -> Result<DiscreteMeasure<S>> {
        DiscreteMeasure::new(self.dim, self.atoms.iter().map(|(t, w)| (pick(t).clone(), w.clone())).collect())
    }

    pub fn first_marginal(&self) -> Result<DiscreteMeasure<S>> {
        self.marginal(|t| &t.x)
    }

    pub fn second_marginal(&self) -> Result<DiscreteMeasure<S>> {
        self.marginal(|t| &t.y)
    }

    /// The third marginal `ρ = P₃σ`.
    pub fn third_marginal(&self) -> Result<DiscreteMeasure<S>> {
        self.marginal(|t| &t.z)
    }

    /// Equality as measures, ignoring atom order.
    pub fn same_plan(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.atoms.len() == other.atoms.len()
            && self.atoms.iter().all(|(t, w)| other.atoms.iter().any(|(s, v)| s.same(t) && w.approx_eq(v)))
    }

    /// Total mass one and first two marginals equal to `mu`, `nu`.
    pub fn has_marginals(&self, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> bool {
        if !self.total_mass().approx_eq(&S::one()) {
            return false;
        }
        match (self.first_marginal(), self.second_marginal()) {
            (Ok(a), Ok(b)) => a.same_measure(mu) && b.same_measure(nu),
            _ => false,
        }
    }

    /// Largest absolute coordinate of `Σ w (z − x)` over distinct `x` and of
    /// `Σ w (z − y)` over distinct `y`.
    pub fn martingale_residual(&self) -> S {
        let xz = Coupling::new(
            self.dim,
            self.atoms.iter().map(|(t, w)| ((t.x.clone(), t.z.clone()), w.clone())).collect(),
        );
        let yz = Coupling::new(
            self.dim,
            self.atoms.iter().map(|(t, w)| ((t.y.clone(), t.z.clone()), w.clone())).collect(),
        );
        match (xz, yz) {
            (Ok(a), Ok(b)) => {
                let ra = crate::order::martingale_residual(&a);
                let rb = crate::order::martingale_residual(&b);
                if ra > rb {
                    ra
                } else {
                    rb
                }
            }
            // Unreachable for a plan built through `new`.
            _ => S::zero(),
        }
    }
}

/// `u(v) = ½⟨A v, v⟩ + ⟨b, v⟩ + c`, admissible when `−Id ⪯ A ⪯ Id`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPotential<S> {
    pub a: SymmetricMatrix<S>,
    pub linear: Point<S>,
    pub constant: S,
}

impl<S: Scalar> QuadraticPotential<S> {
    pub fn zero(n: usize) -> Self {
        QuadraticPotential { a: SymmetricMatrix::zeros(n), linear: Point::zeros(n), constant: S::zero() }
    }

    /// `u_{V1,V2}(v) = ½‖P_{V1} v‖² − ½‖P_{V2} v‖²`.
    pub fn isometric(pair: &SubspacePair<S>) -> Self {
        let n = pair.ambient();
        QuadraticPotential { a: pair.isometry(), linear: Point::zeros(n), constant: S::zero() }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn value(&self, v: &Point<S>) -> S {
        self.a.quadratic_form(v).mul_ref(&S::half()).add_ref(&self.linear.dot(v)).add_ref(&self.constant)
    }

    /// `Du(v) = A v + b`.
    pub fn gradient(&self, v: &Point<S>) -> Point<S> {
        &self.a.mul_vec(v) + &self.linear
    }

    /// `Du` is 1-Lipschitz, i.e. both `Id − A` and `Id + A` are positive
    /// semidefinite (exactly in rational mode).
    pub fn is_admissible(&self) -> bool {
        let n = self.dim();
        let id = SymmetricMatrix::<S>::identity(n);
        let rows = |m: SymmetricMatrix<S>| (0..n).map(|i| m.row(i).to_vec()).collect::<Vec<_>>();
        is_positive_semidefinite(rows(id.sub(&self.a))) && is_positive_semidefinite(rows(id.add(&self.a)))
    }

    /// `∫ u d(nu − mu)`.
    pub fn dual_value(&self, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> S {
        nu.integrate(|p| self.value(p)).sub_ref(&mu.integrate(|p| self.value(p)))
    }
}

/// Lower bound on `J(mu, nu)` from the isometric quadratic potential.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBound<S> {
    /// `½ tr((P_{V1} − P_{V2}) C)`, a genuine dual value.
    pub value: S,
    /// `½ ‖C‖₁` from the float spectrum; equal to `value` when the split is certified.
    pub half_schatten1: f64,
    pub potential: QuadraticPotential<S>,
    pub split: SpectralSplit<S>,
}

/// Optimality residuals of a plan against a potential.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport<S> {
    /// `max |u(y) + Du(y)(z − y) − u(x) − Du(x)(z − x) − c(x, y, z)|`.
    pub max_residual: S,
    /// Largest deviation in the two split identities
    /// `u(y) + Du(y)(z − y) − u(z) = ½‖y − z‖²` and
    /// `u(z) − u(x) − Du(x)(z − x) = ½‖x − z‖²`.
    pub split_residual: S,
    /// Largest `|‖Du(y) − Du(z)‖² − ‖y − z‖²|` or `|‖Du(x) − Du(z)‖² − ‖x − z‖²|`.
    pub isometry_gap: S,
    /// Index of the plan atom attaining `max_residual`.
    pub worst_atom: Option<usize>,
}

impl<S: Scalar> OptimalityReport<S> {
    pub fn is_zero(&self) -> bool {
        self.max_residual.is_zero_tol()
    }
}

/// Result of [`solve_primal`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<S> {
    /// `Ĵ`, the optimum over plans with third coordinate on the grid.
    pub primal_cost: S,
    pub dual: DualBound<S>,
    /// `primal_cost − dual.value`.
    pub gap: S,
    pub plan: ThreePlan<S>,
    /// Residuals of `plan` against `dual.potential`.
    pub optimality: OptimalityReport<S>,
    pub z_grid_size: usize,
    pub lp_iterations: usize,
    pub safeguard_triggered: bool,
    /// The exact solve started from a float basis.
    pub warm_started: bool,
    /// `mu = nu` was detected and the LP skipped.
    pub short_circuit: bool,
}

impl<S: Scalar> SolveReport<S> {
    pub fn is_tight(&self) -> bool {
        self.gap.is_zero_tol()
    }

    pub fn regime(&self) -> &'static str {
        if self.is_tight() {
            "isometric"
        } else {
            "non-isometric regime: decompose first"
        }
    }
}

/// Result of [`solve_variance`].
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport<S> {
    /// `V̂ = Σ ρₖ ‖zₖ − b‖²`.
    pub value: S,
    pub rho: DiscreteMeasure<S>,
    /// Martingale couplings `mu → rho` and `nu → rho`.
    pub from_mu: Coupling<S>,
    pub from_nu: Coupling<S>,
    pub lp_iterations: usize,
}

fn push_unique<S: Scalar>(out: &mut Vec<Point<S>>, p: Point<S>) {
    if !out.iter().any(|q| q.same_point(&p)) {
        out.push(p);
    }
}

/// Candidate third coordinates: the structured points `P_{V2} x + (Id − P_{V2}) y`
/// for every pair of atoms (when `pair` is given), then the atoms of `mu`
/// and `nu`, then `extra`, without duplicates.
///
/// For a complementing pair the structured point is `P_{V2} x + P_{V1} y`;
/// otherwise the kernel component is taken from `y`.
pub fn build_z_grid<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    pair: Option<&SubspacePair<S>>,
    extra: &[Point<S>],
) -> Vec<Point<S>> {
    let mut out = Vec::new();
    if let Some(pair) = pair {
        for (x, _) in mu.atoms() {
            let px = pair.project(Which::Second, x);
            for (y, _) in nu.atoms() {
                let py = pair.project(Which::Second, y);
                push_unique(&mut out, &px + &(y - &py));
            }
        }
    }
    for p in mu.points().chain(nu.points()).chain(extra) {
        push_unique(&mut out, p.clone());
    }
    out
}

/// Vertices `m` and `m + R eᵢ` of a simplex containing every atom of `mu`
/// and `nu` in its interior.
///
/// A measure on the vertices of a simplex is determined by its barycentre, so
/// both `mu` and `nu` are dominated in convex order by the same measure on
/// these vertices; a grid that contains them is always feasible.
pub fn bounding_simplex<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Vec<Point<S>> {
    let n = mu.dim();
    let points: Vec<&Point<S>> = mu.points().chain(nu.points()).collect();
    let low: Vec<S> = (0..n)
        .map(|i| {
            let mut m = points[0].coords()[i].clone();
            for p in &points {
                if p.coords()[i] < m {
                    m = p.coords()[i].clone();
                }
            }
            m - S::one()
        })
        .collect();
    let low = Point::new(low);
    let mut radius = S::zero();
    for p in &points {
        let r = (*p - &low).coords().iter().fold(S::zero(), |acc, c| acc.add_ref(c));
        if r > radius {
            radius = r;
        }
    }
    radius = radius + S::one();
    let mut out = alloc::vec![low.clone()];
    for i in 0..n {
        let mut v = low.clone();
        v.axpy(&radius, &Point::unit(n, i));
        out.push(v);
    }
    out
}

fn check_grid<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, grid: &[Point<S>]) -> Result<()> {
    require_common_barycenter(mu, nu)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for z in grid {
        if z.dim() != mu.dim() {
            return Err(Error::DimensionMismatch { expected: mu.dim(), found: z.dim() });
        }
    }
    Ok(())
}

/// The primal LP over `σᵢⱼₖ ≥ 0` (variable index `(i · |nu| + j) · |grid| + k`):
/// marginal rows for `mu` and `nu`, then one martingale row per `x`-atom and
/// coordinate, then one per `y`-atom and coordinate.
pub fn primal_program<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    grid: &[Point<S>],
) -> Result<LinearProgram<S>> {
    check_grid(mu, nu, grid)?;
    let (nm, nn, ng, n) = (mu.len(), nu.len(), grid.len(), mu.dim());
    let var = |i: usize, j: usize, k: usize| (i * nn + j) * ng + k;
    let mut objective = Vec::with_capacity(nm * nn * ng);
    for (x, _) in mu.atoms() {
        for (y, _) in nu.atoms() {
            for z in grid {
                objective.push(cost(x, y, z));
            }
        }
    }
    let mut lp = LinearProgram::new(objective);
    for (i, (_, w)) in mu.atoms().iter().enumerate() {
        let coeffs = (0..nn).flat_map(|j| (0..ng).map(move |k| (var(i, j, k), S::one()))).collect();
        lp.add_sparse(coeffs, Relation::Eq, w.clone());
    }
    for (j, (_, w)) in nu.atoms().iter().enumerate() {
        let coeffs = (0..nm).flat_map(|i| (0..ng).map(move |k| (var(i, j, k), S::one()))).collect();
        lp.add_sparse(coeffs, Relation::Eq, w.clone());
    }
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        for d in 0..n {
            let mut coeffs = Vec::new();
            for j in 0..nn {
                for (k, z) in grid.iter().enumerate() {
                    let c = z.coords()[d].sub_ref(&x.coords()[d]);
                    if !c.is_zero() {
                        coeffs.push((var(i, j, k), c));
                    }
                }
            }
            lp.add_sparse(coeffs, Relation::Eq, S::zero());
        }
    }
    for (j, (y, _)) in nu.atoms().iter().enumerate() {
        for d in 0..n {
            let mut coeffs = Vec::new();
            for i in 0..nm {
                for (k, z) in grid.iter().enumerate() {
                    let c = z.coords()[d].sub_ref(&y.coords()[d]);
                    if !c.is_zero() {
                        coeffs.push((var(i, j, k), c));
                    }
                }
            }
            lp.add_sparse(coeffs, Relation::Eq, S::zero());
        }
    }
    Ok(lp)
}

/// Minimises the plan cost over plans whose third coordinate lies on `grid`.
pub fn solve_primal<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, grid: &[Point<S>]) -> Result<SolveReport<S>> {
    check_grid(mu, nu, grid)?;
    let dual = quadratic_dual_bound(mu, nu)?;
    let finish = |plan: ThreePlan<S>, iterations: usize, safeguard: bool, warm: bool, short_circuit: bool| {
        let primal_cost = plan.cost();
        let optimality = check_optimality(&plan, &dual.potential);
        let gap = primal_cost.sub_ref(&dual.value);
        SolveReport {
            primal_cost,
            gap,
            plan,
            optimality,
            z_grid_size: grid.len(),
            lp_iterations: iterations,
            safeguard_triggered: safeguard,
            warm_started: warm,
            short_circuit,
            dual: dual.clone(),
        }
    };
    if mu.same_measure(nu) {
        return Ok(finish(ThreePlan::diagonal(mu), 0, false, false, true));
    }
    let lp = primal_program(mu, nu, grid)?;
    let out = solve_lp(&lp)?;
    match out.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::GridInfeasible { grid_size: grid.len() }),
        LpStatus::Unbounded => return Err(Error::MalformedProgram("primal reported unbounded with nonnegative costs".into())),
    }
    let (nn, ng) = (nu.len(), grid.len());
    let mut atoms = Vec::new();
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        for (j, (y, _)) in nu.atoms().iter().enumerate() {
            for (k, z) in grid.iter().enumerate() {
                let w = &out.solution[(i * nn + j) * ng + k];
                if w.is_pos() {
                    atoms.push((Triple::new(x.clone(), y.clone(), z.clone()), w.clone()));
                }
            }
        }
    }
    let plan = ThreePlan::new(mu.dim(), atoms)?;
    Ok(finish(plan, out.iterations, out.safeguard_triggered, out.warm_started, false))
}

/// Dual bound from `u_{V1,V2}` with `(V1, V2)` the sign eigenspaces of
/// `C = covariance_difference(mu, nu)`, at the default splitting tolerance.
pub fn quadratic_dual_bound<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Result<DualBound<S>> {
    require_common_barycenter(mu, nu)?;
    let c = covariance_difference(mu, nu)?;
    let split = split_subspaces_default(&c)?;
    Ok(dual_from_split(&c, split))
}

/// [`quadratic_dual_bound`] with an explicit absolute splitting tolerance.
pub fn quadratic_dual_bound_with_tol<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    tol: f64,
) -> Result<DualBound<S>> {
    require_common_barycenter(mu, nu)?;
    let c = covariance_difference(mu, nu)?;
    let split = split_subspaces(&c, tol)?;
    Ok(dual_from_split(&c, split))
}

fn dual_from_split<S: Scalar>(c: &SymmetricMatrix<S>, split: SpectralSplit<S>) -> DualBound<S> {
    let potential = QuadraticPotential::isometric(&split.pair);
    let value = potential.a.trace_product(c).mul_ref(&S::half());
    let half_schatten1 = 0.5 * split.eigenvalues.iter().map(|l| libm::fabs(*l)).sum::<f64>();
    DualBound { value, half_schatten1, potential, split }
}

/// `σ = R_# π` with `R(x, y) = (x, y, P_{V2} x + P_{V1} y)`.
pub fn assemble_from_bimartingale<S: Scalar>(pi: &Coupling<S>, pair: &SubspacePair<S>) -> Result<ThreePlan<S>> {
    if pair.ambient() != pi.dim() {
        return Err(Error::DimensionMismatch { expected: pi.dim(), found: pair.ambient() });
    }
    if !pair.is_complementing() {
        return Err(Error::SubspacesNotComplementing { dim1: pair.dim1(), dim2: pair.dim2(), ambient: pair.ambient() });
    }
    let report = verify_bimartingale(pi, pair);
    let offending = report
        .source
        .iter()
        .map(|(x, r)| ("source", x, r))
        .chain(report.target.iter().map(|(y, r)| ("target", y, r)))
        .find(|(_, _, r)| !r.is_zero_tol());
    if let Some((side, p, r)) = offending {
        return Err(Error::ResidualViolation { atom: format!("{side} {p}"), residual: format!("{r}") });
    }
    let atoms = pi
        .atoms()
        .iter()
        .map(|((x, y), w)| {
            let z = &pair.project(Which::Second, x) + &pair.project(Which::First, y);
            (Triple::new(x.clone(), y.clone(), z), w.clone())
        })
        .collect();
    ThreePlan::new(pi.dim(), atoms)
}

/// Pointwise optimality residuals of `plan` against `potential`.
pub fn check_optimality<S: Scalar>(plan: &ThreePlan<S>, potential: &QuadraticPotential<S>) -> OptimalityReport<S> {
    let mut max_residual = S::zero();
    let mut split_residual = S::zero();
    let mut isometry_gap = S::zero();
    let mut worst_atom = None;
    let bump = |acc: &mut S, v: S| {
        let a = v.abs();
        if a > *acc {
            *acc = a;
            true
        } else {
            false
        }
    };
    for (idx, (t, _)) in plan.atoms().iter().enumerate() {
        let (ux, uy, uz) = (potential.value(&t.x), potential.value(&t.y), potential.value(&t.z));
        let (gx, gy, gz) = (potential.gradient(&t.x), potential.gradient(&t.y), potential.gradient(&t.z));
        let upper = uy.add_ref(&gy.dot(&(&t.z - &t.y)));
        let lower = ux.add_ref(&gx.dot(&(&t.z - &t.x)));
        let c = t.cost();
        if bump(&mut max_residual, upper.sub_ref(&lower).sub_ref(&c)) {
            worst_atom = Some(idx);
        }
        let half_yz = (&t.y - &t.z).norm_sq().mul_ref(&S::half());
        let half_xz = (&t.x - &t.z).norm_sq().mul_ref(&S::half());
        bump(&mut split_residual, upper.sub_ref(&uz).sub_ref(&half_yz));
        bump(&mut split_residual, uz.sub_ref(&lower).sub_ref(&half_xz));
        bump(&mut isometry_gap, (&gy - &gz).norm_sq().sub_ref(&(&t.y - &t.z).norm_sq()));
        bump(&mut isometry_gap, (&gx - &gz).norm_sq().sub_ref(&(&t.x - &t.z).norm_sq()));
    }
    OptimalityReport { max_residual, split_residual, isometry_gap, worst_atom }
}

/// The variance problem: minimise `Σ ρₖ ‖zₖ − b‖²` over `ρ` on `grid` such
/// that martingale couplings `mu → ρ` and `nu → ρ` exist.
///
/// Variables are `aᵢₖ` (index `i · |grid| + k`) followed by `bⱼₖ`; the two
/// blocks are linked by `Σᵢ aᵢₖ = Σⱼ bⱼₖ`.
pub fn variance_program<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    grid: &[Point<S>],
) -> Result<LinearProgram<S>> {
    check_grid(mu, nu, grid)?;
    let b = barycenter(mu)?;
    let (nm, nn, ng, n) = (mu.len(), nu.len(), grid.len(), mu.dim());
    let a_var = |i: usize, k: usize| i * ng + k;
    let b_var = |j: usize, k: usize| nm * ng + j * ng + k;
    let mut objective: Vec<S> = Vec::with_capacity((nm + nn) * ng);
    for _ in 0..nm {
        objective.extend(grid.iter().map(|z| (z - &b).norm_sq()));
    }
    objective.extend((0..nn * ng).map(|_| S::zero()));
    let mut lp = LinearProgram::new(objective);
    for (i, (_, w)) in mu.atoms().iter().enumerate() {
        lp.add_sparse((0..ng).map(|k| (a_var(i, k), S::one())).collect(), Relation::Eq, w.clone());
    }
    for (j, (_, w)) in nu.atoms().iter().enumerate() {
        lp.add_sparse((0..ng).map(|k| (b_var(j, k), S::one())).collect(), Relation::Eq, w.clone());
    }
    let blocks: [(&DiscreteMeasure<S>, &dyn Fn(usize, usize) -> usize); 2] = [(mu, &a_var), (nu, &b_var)];
    for (m, var) in blocks {
        for (i, (x, _)) in m.atoms().iter().enumerate() {
            for d in 0..n {
                let coeffs = grid
                    .iter()
                    .enumerate()
                    .map(|(k, z)| (var(i, k), z.coords()[d].sub_ref(&x.coords()[d])))
                    .filter(|(_, c)| !c.is_zero())
                    .collect();
                lp.add_sparse(coeffs, Relation::Eq, S::zero());
            }
        }
    }
    for k in 0..ng {
        let mut coeffs: Vec<(usize, S)> = (0..nm).map(|i| (a_var(i, k), S::one())).collect();
        coeffs.extend((0..nn).map(|j| (b_var(j, k), -S::one())));
        lp.add_sparse(coeffs, Relation::Eq, S::zero());
    }
    Ok(lp)
}

/// Solves [`variance_program`]. The optimal `ρ` is the third marginal of an
/// optimal plan of the primal problem on the same grid.
pub fn solve_variance<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    grid: &[Point<S>],
) -> Result<VarianceReport<S>> {
    let lp = variance_program(mu, nu, grid)?;
    let out = solve_lp(&lp)?;
    match out.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::GridInfeasible { grid_size: grid.len() }),
        LpStatus::Unbounded => return Err(Error::MalformedProgram("variance program reported unbounded".into())),
    }
    let (nm, ng) = (mu.len(), grid.len());
    let collect = |m: &DiscreteMeasure<S>, offset: usize| {
        let mut atoms = Vec::new();
        for (i, (x, _)) in m.atoms().iter().enumerate() {
            for (k, z) in grid.iter().enumerate() {
                let w = &out.solution[offset + i * ng + k];
                if w.is_pos() {
                    atoms.push(((x.clone(), z.clone()), w.clone()));
                }
            }
        }
        Coupling::new(m.dim(), atoms)
    };
    let from_mu = collect(mu, 0)?;
    let from_nu = collect(nu, nm * ng)?;
    let rho = from_mu.second_marginal()?;
    Ok(VarianceReport { value: out.value, rho, from_mu, from_nu, lp_iterations: out.iterations })
}

/// `|mu(A) − nu(A)|` and `∫_A x dmu − ∫_A y dnu`, with `mu`, `nu` read off
/// the plan's first two marginals and `A = {p : in_set(p)}`.
pub fn balance_check<S: Scalar>(plan: &ThreePlan<S>, in_set: impl Fn(&Point<S>) -> bool) -> (S, Point<S>) {
    let mut mass = S::zero();
    let mut moment = Point::zeros(plan.dim());
    for (t, w) in plan.atoms() {
        if in_set(&t.x) {
            mass = mass.add_ref(w);
            moment.axpy(w, &t.x);
        }
        if in_set(&t.y) {
            mass = mass.sub_ref(w);
            moment.axpy(&-w.clone(), &t.y);
        }
    }
    (mass.abs(), moment)
}

/// `½ (var mu + var nu)`, the offset between the primal and variance problems.
pub fn variance_offset<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Result<S> {
    Ok(variance(mu)?.add_ref(&variance(nu)?).mul_ref(&S::half()))
}
