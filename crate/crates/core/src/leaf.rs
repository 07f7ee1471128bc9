//! Leaf decomposition of a pair `(mu, nu)` and the plan it induces.
//!
//! Every node `S` of the tree carries normalised conditionals `mu_S`,
//! `nu_S` supported in an affine leaf `anchor + T(S)`, and the covariance
//! difference `C_S` of those conditionals. Its non-degenerate part
//! `V(S) = V1(S) ⊕ V2(S)` (positive and negative eigenspaces of `C_S` inside
//! `T(S)`) becomes the tangent space of the children, which are obtained by
//! grouping atoms by their projection onto the kernel of `C_S` in `T(S)`.
//! A node is terminal when that kernel is trivial, or when `mu_S = nu_S`
//! below the root.
//!
//! On each terminal leaf a bimartingale coupling for `(V1(S), V2(S))` is
//! lifted to a three-marginal plan, and the mixture over leaves is the
//! global plan returned by [`solve_decomposed`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::beckmann::{assemble_from_bimartingale, check_optimality, OptimalityReport, QuadraticPotential, ThreePlan};
use crate::error::{Error, Result};
use crate::linalg::{default_tol, gram_schmidt, project_onto, projector_of, split_subspaces, SpectralSplit, SubspacePair};
use crate::measure::{barycenter, covariance_difference, require_common_barycenter, DiscreteMeasure, Point, SymmetricMatrix};
use crate::order::{find_bimartingale, Coupling};
use crate::scalar::{NumericMode, Scalar};

/// Key distance below which float atoms are assigned to the same leaf.
pub const FLOAT_KEY_TOL: f64 = 1e-9;

/// Role of a node in the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// Created by a partition and not yet refined.
    Pending,
    /// Split further; see `children`.
    Refined,
    /// `C_S` is non-degenerate on `T(S)`.
    Terminal,
    /// `mu_S = nu_S`; the leaf costs nothing and needs no subspaces.
    Identical,
}

impl LeafKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LeafKind::Pending => "pending",
            LeafKind::Refined => "refined",
            LeafKind::Terminal => "terminal",
            LeafKind::Identical => "identical",
        }
    }
}

/// One node of the leaf tree.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafNode<S> {
    /// Child indices from the root.
    pub path: Vec<usize>,
    pub depth: usize,
    /// A point of the leaf (its first `mu` atom).
    pub anchor: Point<S>,
    /// Projection of the leaf onto the directions the parent split along
    /// (the parent's kernel inside its tangent space).
    pub key: Point<S>,
    /// Orthogonal basis of the tangent space `T(S)`.
    pub tangent: Vec<Point<S>>,
    /// Absolute weight `θ(S)`; siblings sum to their parent's weight.
    pub theta: S,
    pub mu: DiscreteMeasure<S>,
    pub nu: DiscreteMeasure<S>,
    /// `C_S` compressed to `T(S)`.
    pub covariance: SymmetricMatrix<S>,
    /// Spectral split of `covariance`; `None` for pending and identical nodes.
    pub split: Option<SpectralSplit<S>>,
    /// Orthogonal basis of the kernel of `C_S` inside `T(S)`.
    pub kernel: Vec<Point<S>>,
    pub kind: LeafKind,
    pub children: Vec<LeafNode<S>>,
}

impl<S: Scalar> LeafNode<S> {
    /// `"root"`, `"root/0"`, `"root/0/1"`, …
    pub fn label(&self) -> String {
        path_label(&self.path)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, LeafKind::Terminal | LeafKind::Identical)
    }

    /// `(V1(S), V2(S))`, empty for identical leaves.
    pub fn pair(&self) -> SubspacePair<S> {
        match &self.split {
            Some(s) => s.pair.clone(),
            None => empty_pair(self.anchor.dim()),
        }
    }

    /// Terminal and identical leaves below (and including) this node, depth first.
    pub fn leaves(&self) -> Vec<&LeafNode<S>> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a LeafNode<S>>) {
        if self.is_leaf() {
            out.push(self);
        }
        for c in &self.children {
            c.collect_leaves(out);
        }
    }

    /// All nodes, depth first.
    pub fn nodes(&self) -> Vec<&LeafNode<S>> {
        let mut out = alloc::vec![self];
        for c in &self.children {
            out.extend(c.nodes());
        }
        out
    }

    /// Largest depth in the subtree.
    pub fn height(&self) -> usize {
        self.children.iter().map(LeafNode::height).max().unwrap_or(self.depth)
    }
}

fn path_label(path: &[usize]) -> String {
    let mut s = String::from("root");
    for i in path {
        s.push_str(&format!("/{i}"));
    }
    s
}

fn empty_pair<S: Scalar>(n: usize) -> SubspacePair<S> {
    SubspacePair::from_spanning(n, Vec::new(), Vec::new()).expect("empty subspaces are orthogonal")
}

/// `C_S` of centred conditionals, compressed to `span(tangent)`.
fn leaf_covariance<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    tangent: &[Point<S>],
) -> Result<SymmetricMatrix<S>> {
    let b = barycenter(mu)?;
    let centred = |m: &DiscreteMeasure<S>| m.map(m.dim(), |p| p - &b);
    let c = covariance_difference(&centred(mu)?, &centred(nu)?)?;
    let n = mu.dim();
    if tangent.len() == n {
        return Ok(c);
    }
    let p = projector_of(tangent, n);
    let mut out = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = S::zero();
            for k in 0..n {
                if p.get(i, k).is_zero() {
                    continue;
                }
                for l in 0..n {
                    acc.add_mul_assign(&p.get(i, k).mul_ref(c.get(k, l)), p.get(l, j));
                }
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

fn keys_match<S: Scalar>(a: &Point<S>, b: &Point<S>) -> bool {
    match S::MODE {
        NumericMode::Rational => a == b,
        NumericMode::Float => (a - b).max_abs().to_f64() <= FLOAT_KEY_TOL,
    }
}

struct Group<S> {
    key: Point<S>,
    mu: Vec<(Point<S>, S)>,
    nu: Vec<(Point<S>, S)>,
}

/// Groups the atoms of `mu` and `nu` by their projection onto `span(kernel)`
/// and checks mass and barycentre balance in each group.
#[allow(clippy::too_many_arguments)]
fn partition<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    kernel: &[Point<S>],
    child_tangent: &[Point<S>],
    parent_path: &[usize],
    parent_theta: &S,
) -> Result<Vec<LeafNode<S>>> {
    let n = mu.dim();
    let mut groups: Vec<Group<S>> = Vec::new();
    for (side, m) in [(0, mu), (1, nu)] {
        for (p, w) in m.atoms() {
            let key = project_onto(kernel, p);
            let idx = match groups.iter().position(|g| keys_match(&g.key, &key)) {
                Some(i) => i,
                None => {
                    groups.push(Group { key, mu: Vec::new(), nu: Vec::new() });
                    groups.len() - 1
                }
            };
            let target = if side == 0 { &mut groups[idx].mu } else { &mut groups[idx].nu };
            target.push((p.clone(), w.clone()));
        }
    }
    groups.sort_by(|a, b| a.key.lex_cmp(&b.key));

    let mut out = Vec::with_capacity(groups.len());
    for (i, g) in groups.into_iter().enumerate() {
        let mut path = parent_path.to_vec();
        path.push(i);
        let label = path_label(&path);
        let key_label = format!("{}", g.key);
        let imbalance = |kind| Error::LeafImbalance { path: label.clone(), key: key_label.clone(), kind };
        let mass = |atoms: &[(Point<S>, S)]| atoms.iter().fold(S::zero(), |acc, (_, w)| acc.add_ref(w));
        let (mass_mu, mass_nu) = (mass(&g.mu), mass(&g.nu));
        if g.mu.is_empty() || g.nu.is_empty() || !mass_mu.approx_eq(&mass_nu) {
            return Err(imbalance("mass"));
        }
        let mu_s = DiscreteMeasure::new(n, g.mu)?;
        let nu_s = DiscreteMeasure::new(n, g.nu)?;
        if !barycenter(&mu_s)?.approx_eq(&barycenter(&nu_s)?) {
            return Err(imbalance("barycentre"));
        }
        let anchor = mu_s.atoms()[0].0.clone();
        out.push(LeafNode {
            depth: path.len(),
            path,
            anchor,
            key: g.key,
            tangent: child_tangent.to_vec(),
            theta: parent_theta.mul_ref(&mass_mu),
            covariance: SymmetricMatrix::zeros(n),
            mu: mu_s,
            nu: nu_s,
            split: None,
            kernel: Vec::new(),
            kind: LeafKind::Pending,
            children: Vec::new(),
        });
    }
    Ok(out)
}

/// Partitions `mu`, `nu` into leaves parallel to `V = V1 ⊕ V2`, keyed by
/// the projection onto `V^⟂`. Each leaf gets tangent space `V`.
pub fn partition_by_leaf<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    pair: &SubspacePair<S>,
) -> Result<Vec<LeafNode<S>>> {
    require_common_barycenter(mu, nu)?;
    if pair.ambient() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: pair.ambient() });
    }
    let tangent: Vec<Point<S>> = pair.basis1().iter().chain(pair.basis2()).cloned().collect();
    partition(mu, nu, &pair.kernel_basis(), &tangent, &[], &S::one())
}

/// Splits `C_S` on the node's tangent space and recursively refines the node.
///
/// `tol` is the absolute splitting tolerance; `None` uses the default
/// relative tolerance of each node's own `C_S`. The root (depth 0) is always
/// partitioned, even when it is already non-degenerate.
pub fn refine<S: Scalar>(mut node: LeafNode<S>, tol: Option<f64>) -> Result<LeafNode<S>> {
    node.children.clear();
    if node.depth > 0 && node.mu.same_measure(&node.nu) {
        node.kind = LeafKind::Identical;
        node.split = None;
        node.kernel = Vec::new();
        node.covariance = SymmetricMatrix::zeros(node.anchor.dim());
        return Ok(node);
    }
    let c = leaf_covariance(&node.mu, &node.nu, &node.tangent)?;
    let node_tol = match tol {
        Some(t) => t,
        None => default_tol(&c)?,
    };
    let split = split_subspaces(&c, node_tol)?;
    let active: Vec<Point<S>> = split.pair.basis1().iter().chain(split.pair.basis2()).cloned().collect();
    node.kernel = gram_schmidt(&node.tangent, &active);
    node.covariance = c;
    node.split = Some(split);
    if node.depth > 0 && node.kernel.is_empty() {
        node.kind = LeafKind::Terminal;
        return Ok(node);
    }
    let children = partition(&node.mu, &node.nu, &node.kernel, &active, &node.path, &node.theta)?;
    node.children = children.into_iter().map(|c| refine(c, tol)).collect::<Result<_>>()?;
    node.kind = LeafKind::Refined;
    Ok(node)
}

/// Builds the full leaf tree from the root (tangent `R^n`, weight 1).
pub fn decompose<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, tol: Option<f64>) -> Result<LeafNode<S>> {
    require_common_barycenter(mu, nu)?;
    let n = mu.dim();
    let root = LeafNode {
        path: Vec::new(),
        depth: 0,
        anchor: mu.atoms()[0].0.clone(),
        key: Point::zeros(n),
        tangent: (0..n).map(|i| Point::unit(n, i)).collect(),
        theta: S::one(),
        mu: mu.clone(),
        nu: nu.clone(),
        covariance: SymmetricMatrix::zeros(n),
        split: None,
        kernel: Vec::new(),
        kind: LeafKind::Pending,
        children: Vec::new(),
    };
    refine(root, tol)
}

/// Cost ledger entry for one leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafCost<S> {
    pub path: Vec<usize>,
    pub kind: LeafKind,
    pub theta: S,
    /// Cost of the leaf plan (for the normalised conditionals).
    pub cost: S,
    /// `½ tr((P_{V1(S)} − P_{V2(S)}) C_S)`; equals `½ ‖C_S‖₁` when the split is certified.
    pub dual_value: S,
    /// Residuals of the leaf plan against `u_{V1(S),V2(S)}`.
    pub optimality: OptimalityReport<S>,
    pub plan: ThreePlan<S>,
    pub coupling: Coupling<S>,
}

/// Result of [`solve_decomposed`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedSolution<S> {
    pub tree: LeafNode<S>,
    /// `σ = Σ_S θ(S) σ_S`.
    pub plan: ThreePlan<S>,
    pub leaves: Vec<LeafCost<S>>,
    /// `Σ_S θ(S) · cost_S`, equal to the cost of `plan`.
    pub total_cost: S,
    /// `Σ_S θ(S) · dual_S`.
    pub total_dual: S,
}

/// Solves the leaf problems and glues their plans.
pub fn solve_decomposed<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    tol: Option<f64>,
) -> Result<DecomposedSolution<S>> {
    let tree = decompose(mu, nu, tol)?;
    let n = mu.dim();
    let mut leaves = Vec::new();
    let mut parts = Vec::new();
    let mut total_cost = S::zero();
    let mut total_dual = S::zero();
    for leaf in tree.leaves() {
        let (coupling, plan, potential, dual_value) = match leaf.kind {
            LeafKind::Identical => {
                let coupling = Coupling::identity(&leaf.mu);
                let plan = ThreePlan::diagonal(&leaf.mu);
                (coupling, plan, QuadraticPotential::zero(n), S::zero())
            }
            _ => {
                let split = leaf.split.as_ref().expect("terminal leaves carry a split");
                // Normal directions of the leaf join V1; both conditionals are constant along them.
                let lifted = split.pair.with_first_extended(&split.pair.kernel_basis());
                let coupling = find_bimartingale(&leaf.mu, &leaf.nu, &lifted)?
                    .ok_or_else(|| Error::LeafInfeasible { path: leaf.label(), key: format!("{}", leaf.key) })?;
                let plan = assemble_from_bimartingale(&coupling, &lifted)?;
                let potential = QuadraticPotential::isometric(&split.pair);
                let dual_value = potential.a.trace_product(&leaf.covariance).mul_ref(&S::half());
                (coupling, plan, potential, dual_value)
            }
        };
        let optimality = check_optimality(&plan, &potential);
        let cost = plan.cost();
        total_cost.add_mul_assign(&leaf.theta, &cost);
        total_dual.add_mul_assign(&leaf.theta, &dual_value);
        parts.push((leaf.theta.clone(), plan.clone()));
        leaves.push(LeafCost {
            path: leaf.path.clone(),
            kind: leaf.kind,
            theta: leaf.theta.clone(),
            cost,
            dual_value,
            optimality,
            plan,
            coupling,
        });
    }
    let plan = ThreePlan::mixture(n, parts)?;
    Ok(DecomposedSolution { tree, plan, leaves, total_cost, total_dual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    type Q = Rational;

    fn q(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn reduction_pair() -> (DiscreteMeasure<Q>, DiscreteMeasure<Q>) {
        let mu = DiscreteMeasure::from_int_atoms(2, &[(&[-1, -1], 1, 4), (&[1, -1], 1, 4), (&[0, 1], 1, 2)]).unwrap();
        let nu = DiscreteMeasure::from_int_atoms(
            2,
            &[(&[-1, -1], 1, 4), (&[1, -1], 1, 4), (&[-1, 1], 1, 4), (&[1, 1], 1, 4)],
        )
        .unwrap();
        (mu, nu)
    }

    #[test]
    fn full_space_partition_is_trivial() {
        let (mu, nu) = reduction_pair();
        let leaves = partition_by_leaf(&mu, &nu, &SubspacePair::full(2)).unwrap();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].theta, q(1, 1));
        assert!(leaves[0].mu.same_measure(&mu));
        assert!(leaves[0].nu.same_measure(&nu));
    }

    #[test]
    fn reduction_example_has_two_leaves() {
        let (mu, nu) = reduction_pair();
        let pair = SubspacePair::coordinate(2, &[0], &[]).unwrap();
        let leaves = partition_by_leaf(&mu, &nu, &pair).unwrap();
        assert_eq!(leaves.len(), 2);
        assert_eq!(leaves[0].key, Point::from_i64(&[0, -1]));
        assert!(leaves[0].mu.same_measure(&leaves[0].nu));
        assert_eq!(leaves[0].theta, q(1, 2));
        assert_eq!(leaves[1].theta, q(1, 2));

        let tree = decompose(&mu, &nu, None).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 2);
        assert!(leaves.iter().all(|l| l.depth == 1));
        assert_eq!(leaves[0].kind, LeafKind::Identical);
        assert_eq!(leaves[1].kind, LeafKind::Terminal);
        let pair = leaves[1].pair();
        assert_eq!(pair.dim1(), 1);
        assert_eq!(pair.dim2(), 0);

        let sol = solve_decomposed(&mu, &nu, None).unwrap();
        assert_eq!(sol.total_cost, q(1, 4));
        assert_eq!(sol.plan.cost(), q(1, 4));
        assert_eq!(sol.total_dual, q(1, 4));
        assert!(sol.plan.has_marginals(&mu, &nu));
        assert!(sol.leaves.iter().all(|l| l.optimality.is_zero()));
    }

    #[test]
    fn identical_measures_split_into_points() {
        let (mu, _) = reduction_pair();
        let tree = decompose(&mu, &mu, None).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 3);
        assert!(leaves.iter().all(|l| l.kind == LeafKind::Identical && l.mu.len() == 1));
        let sol = solve_decomposed(&mu, &mu, None).unwrap();
        assert_eq!(sol.total_cost, q(0, 1));
        assert!(sol.plan.same_plan(&ThreePlan::diagonal(&mu)));
    }

    #[test]
    fn convex_order_pair_is_a_single_leaf() {
        let mu = DiscreteMeasure::<Q>::from_int_atoms(1, &[(&[0], 1, 1)]).unwrap();
        let nu = DiscreteMeasure::from_int_atoms(1, &[(&[-1], 1, 2), (&[1], 1, 2)]).unwrap();
        let tree = decompose(&mu, &nu, None).unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].kind, LeafKind::Terminal);
        assert_eq!((leaves[0].pair().dim1(), leaves[0].pair().dim2()), (1, 0));
        assert_eq!(solve_decomposed(&mu, &nu, None).unwrap().total_cost, q(1, 2));
    }

    #[test]
    fn imbalanced_leaves_are_reported() {
        // C = diag(0, 4): the split runs along x₁, where the atoms of mu and nu do not line up.
        let mu = DiscreteMeasure::<Q>::from_int_atoms(2, &[(&[2, 0], 1, 2), (&[-2, 0], 1, 2)]).unwrap();
        let nu = DiscreteMeasure::from_int_atoms(
            2,
            &[(&[4, 2], 1, 10), (&[4, -2], 1, 10), (&[-1, 2], 2, 5), (&[-1, -2], 2, 5)],
        )
        .unwrap();
        let err = decompose(&mu, &nu, None).unwrap_err();
        assert!(matches!(err, Error::LeafImbalance { kind: "mass", .. }), "{err:?}");
    }
}
