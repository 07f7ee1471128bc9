//! Two-phase primal simplex over any [`Scalar`].
//!
//! Programs are `minimize cᵀx` subject to sparse rows `aᵢᵀx {=,≤,≥} bᵢ`,
//! `x ≥ 0` and optional finite upper bounds. The solver keeps an explicit
//! basis inverse (revised simplex), which is cheap at the sizes this crate
//! produces and keeps rational pivots exact.
//!
//! Both modes price with Dantzig's rule. Rational mode breaks ratio ties
//! lexicographically on the rows of `B⁻¹`; float mode takes the lowest basic
//! index. A long run of degenerate pivots switches either mode to Bland's
//! rule and sets [`LpOutcome::safeguard_triggered`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::scalar::{NumericMode, Scalar};

/// Rational mode refuses programs above this many nonzero coefficients.
pub const RATIONAL_NONZERO_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S> {
    /// Sparse coefficients `(column, value)`.
    pub coeffs: Vec<(usize, S)>,
    pub relation: Relation,
    pub rhs: S,
}

/// `minimize objective·x` subject to the constraints, `0 ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S> {
    objective: Vec<S>,
    constraints: Vec<Constraint<S>>,
    upper: Vec<Option<S>>,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(objective: Vec<S>) -> Self {
        let n = objective.len();
        LinearProgram { objective, constraints: Vec::new(), upper: (0..n).map(|_| None).collect() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[S] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint<S>] {
        &self.constraints
    }

    /// Adds a sparse row. Zero coefficients are dropped.
    pub fn add_sparse(&mut self, coeffs: Vec<(usize, S)>, relation: Relation, rhs: S) {
        let coeffs = coeffs.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Adds a dense row; it must have exactly one coefficient per variable.
    pub fn add_dense(&mut self, coeffs: Vec<S>, relation: Relation, rhs: S) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::MalformedProgram(alloc::format!(
                "row {} has {} columns, objective has {}",
                self.constraints.len(),
                coeffs.len(),
                self.num_vars()
            )));
        }
        self.add_sparse(coeffs.into_iter().enumerate().collect(), relation, rhs);
        Ok(())
    }

    pub fn set_upper(&mut self, var: usize, bound: S) {
        self.upper[var] = Some(bound);
    }

    pub fn nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.coeffs.len()).sum::<usize>()
            + self.upper.iter().filter(|u| u.is_some()).count()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for (i, c) in self.constraints.iter().enumerate() {
            let mut seen = alloc::vec![false; n];
            for (j, _) in &c.coeffs {
                if *j >= n {
                    return Err(Error::MalformedProgram(alloc::format!("row {i} references column {j} of {n}")));
                }
                if seen[*j] {
                    return Err(Error::MalformedProgram(alloc::format!("row {i} lists column {j} twice")));
                }
                seen[*j] = true;
            }
        }
        Ok(())
    }
}

/// Plain-text LP-style rendering, used by the CLI debug dump.
impl<S: Scalar> fmt::Display for LinearProgram<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn term<S: Scalar>(f: &mut fmt::Formatter<'_>, first: bool, c: &S, j: usize) -> fmt::Result {
            if c.is_neg() {
                write!(f, "{}{} x{}", if first { "-" } else { " - " }, -c.clone(), j)
            } else {
                write!(f, "{}{} x{}", if first { "" } else { " + " }, c, j)
            }
        }
        writeln!(f, "minimize")?;
        f.write_str("  obj:")?;
        let mut first = true;
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_zero() {
                if first {
                    f.write_str(" ")?;
                }
                term(f, first, c, j)?;
                first = false;
            }
        }
        if first {
            f.write_str(" 0")?;
        }
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for (i, c) in self.constraints.iter().enumerate() {
            write!(f, "  c{i}:")?;
            let mut first = true;
            for (j, v) in &c.coeffs {
                if first {
                    f.write_str(" ")?;
                }
                term(f, first, v, *j)?;
                first = false;
            }
            if first {
                f.write_str(" 0")?;
            }
            writeln!(f, " {} {}", c.relation.symbol(), c.rhs)?;
        }
        writeln!(f, "bounds")?;
        for (j, u) in self.upper.iter().enumerate() {
            match u {
                Some(u) => writeln!(f, "  0 <= x{j} <= {u}")?,
                None => writeln!(f, "  x{j} >= 0")?,
            }
        }
        writeln!(f, "end")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome<S> {
    pub status: LpStatus,
    /// Primal solution (empty unless optimal).
    pub solution: Vec<S>,
    /// Objective value (zero unless optimal).
    pub value: S,
    /// One dual value per user constraint, in the original row orientation (empty unless optimal).
    pub duals: Vec<S>,
    pub iterations: usize,
    /// Pricing switched from Dantzig to Bland's rule after a degenerate stall.
    pub safeguard_triggered: bool,
    /// Phase 2 started from an exactly refactorised float basis; `iterations`
    /// then counts the float pivots plus the exact ones.
    pub warm_started: bool,
}

impl<S: Scalar> LpOutcome<S> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pricing {
    Bland,
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpOptions {
    pub pricing: Pricing,
    /// Enforce [`RATIONAL_NONZERO_LIMIT`] in rational mode.
    pub size_guard: bool,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub stall_limit: usize,
    /// Rational mode: start phase 2 from the optimal basis of a float solve,
    /// refactorised exactly. Falls back to a cold start when that basis is
    /// singular or infeasible in exact arithmetic.
    pub warm_start: bool,
}

impl LpOptions {
    pub fn for_mode(mode: NumericMode) -> Self {
        LpOptions {
            pricing: Pricing::Dantzig,
            size_guard: true,
            stall_limit: match mode {
                NumericMode::Rational => 1000,
                NumericMode::Float => 200,
            },
            warm_start: mode == NumericMode::Rational,
        }
    }
}

/// Solves with the default options of the scalar's mode.
pub fn solve_lp<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpOutcome<S>> {
    solve_lp_with(lp, LpOptions::for_mode(S::MODE))
}

pub fn solve_lp_with<S: Scalar>(lp: &LinearProgram<S>, options: LpOptions) -> Result<LpOutcome<S>> {
    lp.validate()?;
    if S::MODE == NumericMode::Rational && options.size_guard && lp.nonzeros() > RATIONAL_NONZERO_LIMIT {
        return Err(Error::ProblemTooLarge { nonzeros: lp.nonzeros(), limit: RATIONAL_NONZERO_LIMIT });
    }
    let mut tableau = Tableau::build(lp);
    let mut warm = None;
    if S::MODE == NumericMode::Rational && options.warm_start {
        if let Some((basis, float_iterations)) = float_basis(lp, options) {
            tableau.iterations = float_iterations;
            warm = tableau.install_basis(&basis, options);
            if warm.is_none() {
                tableau = Tableau::build(lp);
            }
        }
    }
    let (status, safeguard) = if let Some(phase1) = warm {
        let mut rule = options.pricing;
        let mut safeguard = false;
        let status = if phase1 == LpStatus::Optimal {
            tableau.drive_out_artificials();
            tableau.phase2(lp, &mut rule, &mut safeguard, options.stall_limit)
        } else {
            phase1
        };
        (status, safeguard)
    } else {
        tableau.two_phase(lp, options)
    };
    let iterations = tableau.iterations;
    let empty = |status| LpOutcome {
        status,
        solution: Vec::new(),
        value: S::zero(),
        duals: Vec::new(),
        iterations,
        safeguard_triggered: safeguard,
        warm_started: warm.is_some(),
    };
    if status != LpStatus::Optimal {
        return Ok(empty(status));
    }

    let mut solution: Vec<S> = (0..lp.num_vars()).map(|_| S::zero()).collect();
    for (row, &col) in tableau.basis.iter().enumerate() {
        if col < lp.num_vars() {
            let v = tableau.xb[row].clone();
            // Float round-off can leave tiny negatives.
            solution[col] = if S::MODE == NumericMode::Float && v < S::zero() { S::zero() } else { v };
        }
    }
    let mut value = S::zero();
    for (c, x) in lp.objective.iter().zip(&solution) {
        value.add_mul_assign(c, x);
    }
    let y = tableau.simplex_multipliers(&tableau.phase2_cost(lp));
    let duals = (0..lp.constraints.len()).map(|i| tableau.row_sign[i].mul_ref(&y[i])).collect();
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        solution,
        value,
        duals,
        iterations,
        safeguard_triggered: safeguard,
        warm_started: warm.is_some(),
    })
}

/// Final basis of the same program solved in `f64`, if that solve is optimal.
fn float_basis<S: Scalar>(lp: &LinearProgram<S>, options: LpOptions) -> Option<(Vec<usize>, usize)> {
    let conv = |v: &S| v.to_f64();
    let float = LinearProgram::<f64> {
        objective: lp.objective.iter().map(conv).collect(),
        constraints: lp
            .constraints
            .iter()
            .map(|c| Constraint {
                coeffs: c.coeffs.iter().map(|(j, v)| (*j, conv(v))).collect(),
                relation: c.relation,
                rhs: conv(&c.rhs),
            })
            .collect(),
        upper: lp.upper.iter().map(|u| u.as_ref().map(conv)).collect(),
    };
    let mut tableau = Tableau::build(&float);
    let opts = LpOptions { stall_limit: LpOptions::for_mode(NumericMode::Float).stall_limit, ..options };
    match tableau.two_phase(&float, opts).0 {
        LpStatus::Optimal => Some((tableau.basis, tableau.iterations)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Optimal,
    Unbounded,
}

/// Revised simplex state: sparse columns, explicit dense `B⁻¹`.
struct Tableau<S> {
    m: usize,
    columns: Vec<Vec<(usize, S)>>,
    first_artificial: usize,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<Vec<S>>,
    xb: Vec<S>,
    /// `±1` per row: rows with negative right-hand side were negated.
    row_sign: Vec<S>,
    /// Right-hand side after row negation.
    rhs: Vec<S>,
    iterations: usize,
}

impl<S: Scalar> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let n = lp.num_vars();
        let mut rows: Vec<(Vec<(usize, S)>, Relation, S)> =
            lp.constraints.iter().map(|c| (c.coeffs.clone(), c.relation, c.rhs.clone())).collect();
        for (j, u) in lp.upper.iter().enumerate() {
            if let Some(u) = u {
                rows.push((alloc::vec![(j, S::one())], Relation::Le, u.clone()));
            }
        }
        let m = rows.len();
        let mut columns: Vec<Vec<(usize, S)>> = (0..n).map(|_| Vec::new()).collect();
        let mut row_sign = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut identity_slack: Vec<Option<usize>> = alloc::vec![None; m];

        for (i, (coeffs, rel, b)) in rows.into_iter().enumerate() {
            let negate = b < S::zero();
            let sign = if negate { -S::one() } else { S::one() };
            for (j, v) in coeffs {
                columns[j].push((i, sign.mul_ref(&v)));
            }
            let slack = match rel {
                Relation::Eq => None,
                Relation::Le => Some(sign.clone()),
                Relation::Ge => Some(-sign.clone()),
            };
            if let Some(s) = slack {
                let col = columns.len();
                let positive = s.is_pos();
                columns.push(alloc::vec![(i, s)]);
                if positive {
                    identity_slack[i] = Some(col);
                }
            }
            rhs.push(if negate { -b } else { b });
            row_sign.push(sign);
        }
        let first_artificial = columns.len();
        let mut basis = Vec::with_capacity(m);
        for (i, slack) in identity_slack.iter().enumerate() {
            match slack {
                Some(col) => basis.push(*col),
                None => {
                    basis.push(columns.len());
                    columns.push(alloc::vec![(i, S::one())]);
                }
            }
        }
        let mut in_basis = alloc::vec![false; columns.len()];
        for &b in &basis {
            in_basis[b] = true;
        }
        let binv = (0..m)
            .map(|i| (0..m).map(|j| if i == j { S::one() } else { S::zero() }).collect())
            .collect();
        Tableau { m, columns, first_artificial, basis, in_basis, binv, xb: rhs.clone(), row_sign, rhs, iterations: 0 }
    }

    fn phase2_cost(&self, lp: &LinearProgram<S>) -> Vec<S> {
        (0..self.num_cols()).map(|j| if j < lp.num_vars() { lp.objective[j].clone() } else { S::zero() }).collect()
    }

    /// Cold start: phase 1 on the artificials, then phase 2.
    fn two_phase(&mut self, lp: &LinearProgram<S>, options: LpOptions) -> (LpStatus, bool) {
        let mut rule = options.pricing;
        let mut safeguard = false;
        let phase1_cost: Vec<S> =
            (0..self.num_cols()).map(|j| if self.is_artificial(j) { S::one() } else { S::zero() }).collect();
        match self.run(&phase1_cost, &mut rule, &mut safeguard, options.stall_limit, false) {
            Phase::Optimal => {}
            Phase::Unbounded => unreachable!("phase 1 objective is bounded below by zero"),
        }
        if !self.objective(&phase1_cost).is_zero_tol() {
            return (LpStatus::Infeasible, safeguard);
        }
        self.drive_out_artificials();
        rule = if safeguard { Pricing::Bland } else { options.pricing };
        let status = self.phase2(lp, &mut rule, &mut safeguard, options.stall_limit);
        (status, safeguard)
    }

    fn phase2(&mut self, lp: &LinearProgram<S>, rule: &mut Pricing, safeguard: &mut bool, stall_limit: usize) -> LpStatus {
        let cost = self.phase2_cost(lp);
        match self.run(&cost, rule, safeguard, stall_limit, true) {
            Phase::Optimal => LpStatus::Optimal,
            Phase::Unbounded => LpStatus::Unbounded,
        }
    }

    /// Replaces the basis by `basis`, factorising it exactly, and restores
    /// primal feasibility. Returns `false` (tableau untouched) if the basis is
    /// singular.
    ///
    /// Rows where the exact basic solution is negative are repaired with one
    /// extra artificial column `−Σ B eᵢ` over those rows, pivoted in on the
    /// most negative row; a phase 1 over all artificials then runs from there.
    /// Returns the phase 1 status when one was needed.
    fn install_basis(&mut self, basis: &[usize], options: LpOptions) -> Option<LpStatus> {
        let m = self.m;
        if basis.len() != m || basis.iter().any(|&c| c >= self.num_cols()) {
            return None;
        }
        // Gauss-Jordan on [B | I].
        let mut a: Vec<Vec<S>> = (0..m)
            .map(|i| (0..2 * m).map(|j| if j == m + i { S::one() } else { S::zero() }).collect())
            .collect();
        for (k, &col) in basis.iter().enumerate() {
            for (r, v) in &self.columns[col] {
                a[*r][k] = v.clone();
            }
        }
        for col in 0..m {
            let p = (col..m).find(|&r| !a[r][col].is_zero_tol())?;
            a.swap(col, p);
            let inv = S::one().div_ref(&a[col][col]);
            for v in a[col].iter_mut() {
                *v = v.mul_ref(&inv);
            }
            let prow = a[col].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r == col || row[col].is_zero() {
                    continue;
                }
                let f = row[col].clone();
                for (v, pv) in row.iter_mut().zip(&prow) {
                    v.sub_mul_assign(&f, pv);
                }
            }
        }
        self.binv = a.into_iter().map(|row| row[m..].to_vec()).collect();
        self.xb = self
            .binv
            .iter()
            .map(|row| {
                row.iter().zip(&self.rhs).fold(S::zero(), |mut acc, (b, r)| {
                    acc.add_mul_assign(b, r);
                    acc
                })
            })
            .collect();
        self.in_basis = alloc::vec![false; self.num_cols()];
        for &c in basis {
            self.in_basis[c] = true;
        }
        self.basis = basis.to_vec();

        let negative: Vec<usize> = (0..m).filter(|&i| self.xb[i].is_neg()).collect();
        if let Some(&worst) = negative.iter().min_by(|&&i, &&k| self.xb[i].partial_cmp(&self.xb[k]).unwrap()) {
            let mut dense: Vec<S> = (0..m).map(|_| S::zero()).collect();
            for &i in &negative {
                for (r, v) in &self.columns[self.basis[i]] {
                    dense[*r] = dense[*r].sub_ref(v);
                }
            }
            let col = self.columns.len();
            self.columns.push(dense.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect());
            self.in_basis.push(false);
            let u = self.direction(col);
            self.pivot(worst, col, &u);
        }
        let artificial_level = self
            .basis
            .iter()
            .zip(&self.xb)
            .any(|(&c, v)| self.is_artificial(c) && !v.is_zero_tol());
        if !artificial_level {
            return Some(LpStatus::Optimal);
        }
        let phase1_cost: Vec<S> =
            (0..self.num_cols()).map(|j| if self.is_artificial(j) { S::one() } else { S::zero() }).collect();
        let mut rule = options.pricing;
        let mut safeguard = false;
        self.run(&phase1_cost, &mut rule, &mut safeguard, options.stall_limit, false);
        if self.objective(&phase1_cost).is_zero_tol() {
            Some(LpStatus::Optimal)
        } else {
            Some(LpStatus::Infeasible)
        }
    }

    fn num_cols(&self) -> usize {
        self.columns.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.first_artificial
    }

    fn objective(&self, cost: &[S]) -> S {
        let mut v = S::zero();
        for (row, &col) in self.basis.iter().enumerate() {
            v.add_mul_assign(&cost[col], &self.xb[row]);
        }
        v
    }

    /// `y = c_Bᵀ B⁻¹`.
    fn simplex_multipliers(&self, cost: &[S]) -> Vec<S> {
        let mut y: Vec<S> = (0..self.m).map(|_| S::zero()).collect();
        for (row, &col) in self.basis.iter().enumerate() {
            let c = &cost[col];
            if c.is_zero() {
                continue;
            }
            for (yj, b) in y.iter_mut().zip(&self.binv[row]) {
                yj.add_mul_assign(c, b);
            }
        }
        y
    }

    fn reduced_cost(&self, cost: &[S], y: &[S], j: usize) -> S {
        let mut d = cost[j].clone();
        for (r, a) in &self.columns[j] {
            d.sub_mul_assign(&y[*r], a);
        }
        d
    }

    /// `B⁻¹ A_j`.
    fn direction(&self, j: usize) -> Vec<S> {
        (0..self.m)
            .map(|i| {
                let mut acc = S::zero();
                for (r, a) in &self.columns[j] {
                    acc.add_mul_assign(&self.binv[i][*r], a);
                }
                acc
            })
            .collect()
    }

    /// Lexicographic ratio test on the rows of `B⁻¹`: `B⁻¹ᵢ / uᵢ < B⁻¹ₖ / uₖ`.
    /// Ties between equal ratios broken this way cannot cycle.
    fn lex_less(&self, i: usize, k: usize, u: &[S]) -> bool {
        for (a, b) in self.binv[i].iter().zip(&self.binv[k]) {
            let (x, y) = (a.mul_ref(&u[k]), b.mul_ref(&u[i]));
            if x != y {
                return x < y;
            }
        }
        false
    }

    fn pivot(&mut self, row: usize, col: usize, u: &[S]) {
        let pivot = u[row].clone();
        let inv = S::one().div_ref(&pivot);
        for v in self.binv[row].iter_mut() {
            *v = v.mul_ref(&inv);
        }
        self.xb[row] = self.xb[row].mul_ref(&inv);
        let prow = self.binv[row].clone();
        let px = self.xb[row].clone();
        for i in 0..self.m {
            if i == row || u[i].is_zero() {
                continue;
            }
            let f = u[i].clone();
            for (v, p) in self.binv[i].iter_mut().zip(&prow) {
                v.sub_mul_assign(&f, p);
            }
            self.xb[i].sub_mul_assign(&f, &px);
        }
        self.in_basis[self.basis[row]] = false;
        self.in_basis[col] = true;
        self.basis[row] = col;
        self.iterations += 1;
    }

    fn run(&mut self, cost: &[S], rule: &mut Pricing, safeguard: &mut bool, stall_limit: usize, bar_artificials: bool) -> Phase {
        let mut stall = 0usize;
        loop {
            let y = self.simplex_multipliers(cost);
            let mut entering: Option<(usize, S)> = None;
            for j in 0..self.num_cols() {
                if self.in_basis[j] || (bar_artificials && self.is_artificial(j)) {
                    continue;
                }
                let d = self.reduced_cost(cost, &y, j);
                if !d.is_neg() {
                    continue;
                }
                match rule {
                    Pricing::Bland => {
                        entering = Some((j, d));
                        break;
                    }
                    Pricing::Dantzig => {
                        if entering.as_ref().is_none_or(|(_, best)| d < *best) {
                            entering = Some((j, d));
                        }
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Phase::Optimal;
            };
            let u = self.direction(q);
            let mut leave: Option<(usize, S)> = None;
            for i in 0..self.m {
                if !u[i].is_pos() {
                    continue;
                }
                let ratio = self.xb[i].div_ref(&u[i]);
                let better = match &leave {
                    None => true,
                    Some((r, best)) => {
                        if !ratio.approx_eq(best) {
                            ratio < *best
                        } else if S::MODE == NumericMode::Rational && *rule == Pricing::Dantzig {
                            self.lex_less(i, *r, &u)
                        } else {
                            self.basis[i] < self.basis[*r]
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((p, step)) = leave else {
                return Phase::Unbounded;
            };
            if step.is_zero_tol() {
                stall += 1;
                if *rule == Pricing::Dantzig && stall > stall_limit {
                    *rule = Pricing::Bland;
                    *safeguard = true;
                }
            } else {
                stall = 0;
            }
            self.pivot(p, q, &u);
            if S::MODE == NumericMode::Float {
                for v in self.xb.iter_mut() {
                    if v.is_zero_tol() && *v < S::zero() {
                        *v = S::zero();
                    }
                }
            }
        }
    }

    /// Pivots zero-level artificials out of the basis where possible; rows
    /// where that is impossible are redundant and keep their artificial at zero.
    fn drive_out_artificials(&mut self) {
        for row in 0..self.m {
            if !self.is_artificial(self.basis[row]) {
                continue;
            }
            let candidate = (0..self.first_artificial).find(|&j| {
                if self.in_basis[j] {
                    return false;
                }
                let mut acc = S::zero();
                for (r, a) in &self.columns[j] {
                    acc.add_mul_assign(&self.binv[row][*r], a);
                }
                !acc.is_zero_tol()
            });
            if let Some(j) = candidate {
                let u = self.direction(j);
                self.pivot(row, j, &u);
            }
        }
    }
}

/// Short human-readable summary, e.g. for logs.
pub fn describe<S: Scalar>(outcome: &LpOutcome<S>) -> String {
    match outcome.status {
        LpStatus::Optimal => alloc::format!("optimal value {} after {} pivots", outcome.value, outcome.iterations),
        s => alloc::format!("{} after {} pivots", s.as_str(), outcome.iterations),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use alloc::vec;

    type Q = Rational;

    fn q(v: i64) -> Q {
        Q::from_i64(v)
    }

    #[test]
    fn minimize_x_above_three() {
        let mut lp = LinearProgram::new(vec![q(1)]);
        lp.add_dense(vec![q(1)], Relation::Ge, q(3)).unwrap();
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.solution, vec![q(3)]);
        assert_eq!(out.value, q(3));
        assert_eq!(out.duals, vec![q(1)]);
    }

    #[test]
    fn negative_upper_bound_is_infeasible() {
        let mut lp = LinearProgram::new(vec![q(0)]);
        lp.add_dense(vec![q(1)], Relation::Le, q(-1)).unwrap();
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_descent() {
        let mut lp = LinearProgram::new(vec![q(-1)]);
        lp.add_dense(vec![q(1)], Relation::Ge, q(0)).unwrap();
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
        let lp = LinearProgram::new(vec![-1.0f64]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let mut lp = LinearProgram::new(vec![q(1), q(1)]);
        assert!(matches!(lp.add_dense(vec![q(1)], Relation::Eq, q(1)), Err(Error::MalformedProgram(_))));
        lp.add_sparse(vec![(5, q(1))], Relation::Eq, q(1));
        assert!(matches!(solve_lp(&lp), Err(Error::MalformedProgram(_))));
    }

    #[test]
    fn size_guard_applies_to_rational_only() {
        let n = 150;
        let mut lp = LinearProgram::new((0..n).map(|_| q(1)).collect());
        for _ in 0..140 {
            lp.add_dense((0..n).map(|_| q(1)).collect(), Relation::Ge, q(1)).unwrap();
        }
        assert!(matches!(solve_lp(&lp), Err(Error::ProblemTooLarge { .. })));
        let mut lpf = LinearProgram::new((0..n).map(|_| 1.0f64).collect());
        lpf.add_dense((0..n).map(|_| 1.0).collect(), Relation::Ge, 1.0).unwrap();
        assert!(solve_lp(&lpf).unwrap().is_optimal());
    }

    #[test]
    fn redundant_equalities_and_upper_bounds() {
        // x + y = 1 twice, x <= 1/2, minimize -x  -> x = 1/2.
        let mut lp = LinearProgram::new(vec![q(-1), q(0)]);
        lp.add_dense(vec![q(1), q(1)], Relation::Eq, q(1)).unwrap();
        lp.add_dense(vec![q(2), q(2)], Relation::Eq, q(2)).unwrap();
        lp.set_upper(0, Q::from_ratio(1, 2));
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.value, Q::from_ratio(-1, 2));
        assert_eq!(out.solution, vec![Q::from_ratio(1, 2), Q::from_ratio(1, 2)]);
    }

    #[test]
    fn dump_is_lp_style() {
        let mut lp = LinearProgram::new(vec![q(1), q(-2)]);
        lp.add_dense(vec![q(1), q(1)], Relation::Ge, q(3)).unwrap();
        let text = alloc::format!("{lp}");
        assert!(text.contains("obj: 1 x0 - 2 x1"));
        assert!(text.contains("c0: 1 x0 + 1 x1 >= 3"));
        assert!(text.ends_with("end\n"));
    }

    #[test]
    fn warm_and_cold_starts_agree() {
        // Degenerate 3x3 transportation problem with a rational optimum.
        let cost = [[4, 1, 3], [2, 5, 1], [3, 2, 6]];
        let supply = [Q::from_ratio(1, 3), Q::from_ratio(1, 3), Q::from_ratio(1, 3)];
        let demand = [Q::from_ratio(1, 2), Q::from_ratio(1, 6), Q::from_ratio(1, 3)];
        let mut lp = LinearProgram::new(cost.iter().flatten().map(|c| q(*c)).collect());
        for i in 0..3 {
            lp.add_sparse((0..3).map(|j| (3 * i + j, q(1))).collect(), Relation::Eq, supply[i].clone());
        }
        for j in 0..3 {
            lp.add_sparse((0..3).map(|i| (3 * i + j, q(1))).collect(), Relation::Eq, demand[j].clone());
        }
        let warm = solve_lp(&lp).unwrap();
        let cold = solve_lp_with(&lp, LpOptions { warm_start: false, ..LpOptions::for_mode(NumericMode::Rational) }).unwrap();
        assert!(warm.warm_started);
        assert!(!cold.warm_started);
        assert_eq!(warm.value, cold.value);
        assert_eq!(warm.value, Q::from_ratio(13, 6));
    }
}
