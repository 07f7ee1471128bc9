//! Brute-force and third-party LP oracles.

use beckmann_core::{DiscreteMeasure, Point, Scalar};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_traits::{Signed, Zero};

use crate::Q;

/// Equality-form program `A x = b, x ≥ 0` with dense rows.
#[derive(Debug, Clone, Default)]
pub struct DenseProgram {
    pub rows: Vec<Vec<Q>>,
    pub rhs: Vec<Q>,
    pub objective: Vec<Q>,
}

impl DenseProgram {
    pub fn new(num_vars: usize) -> Self {
        DenseProgram { rows: Vec::new(), rhs: Vec::new(), objective: vec![Q::zero(); num_vars] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, row: Vec<Q>, rhs: Q) {
        assert_eq!(row.len(), self.num_vars());
        self.rows.push(row);
        self.rhs.push(rhs);
    }
}

/// Unique solution of `A_S x_S = b` when the columns in `support` are
/// independent and the system is consistent.
fn solve_on_support(prog: &DenseProgram, support: &[usize]) -> Option<Vec<Q>> {
    let m = prog.rows.len();
    let k = support.len();
    let mut a: Vec<Vec<Q>> = (0..m)
        .map(|i| {
            let mut row: Vec<Q> = support.iter().map(|&j| prog.rows[i][j].clone()).collect();
            row.push(prog.rhs[i].clone());
            row
        })
        .collect();
    let mut pivot_row = 0;
    for col in 0..k {
        let found = (pivot_row..m).find(|&r| !a[r][col].is_zero())?;
        a.swap(pivot_row, found);
        let pv = a[pivot_row][col].clone();
        for c in col..=k {
            a[pivot_row][c] = &a[pivot_row][c] / &pv;
        }
        for r in 0..m {
            if r != pivot_row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=k {
                    let v = &f * &a[pivot_row][c];
                    a[r][c] -= v;
                }
            }
        }
        pivot_row += 1;
    }
    if a[pivot_row..].iter().any(|row| !row[k].is_zero()) {
        return None;
    }
    Some((0..k).map(|i| a[i][k].clone()).collect())
}

fn for_each_subset(n: usize, max_size: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, max_size: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        f(cur);
        if cur.len() == max_size {
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, max_size, cur, f);
            cur.pop();
        }
    }
    rec(0, n, max_size, &mut Vec::new(), f);
}

/// Exact minimum of a bounded program by enumerating every basic solution.
/// `None` when infeasible. Exponential; intended for at most ~12 variables.
pub fn enumerate_min(prog: &DenseProgram) -> Option<(Q, Vec<Q>)> {
    let n = prog.num_vars();
    let max_size = prog.rows.len().min(n);
    let mut best: Option<(Q, Vec<Q>)> = None;
    for_each_subset(n, max_size, &mut |support| {
        let Some(xs) = solve_on_support(prog, support) else { return };
        if xs.iter().any(Signed::is_negative) {
            return;
        }
        let mut x = vec![Q::zero(); n];
        for (&j, v) in support.iter().zip(xs) {
            x[j] = v;
        }
        let val = x.iter().zip(&prog.objective).fold(Q::zero(), |acc, (a, c)| acc + a * c);
        if best.as_ref().map_or(true, |(b, _)| val < *b) {
            best = Some((val, x));
        }
    });
    best
}

/// Feasibility of `A x = b, x ≥ 0` by support enumeration.
pub fn enumerate_feasible(prog: &DenseProgram) -> bool {
    let mut zero = prog.clone();
    zero.objective = vec![Q::zero(); prog.num_vars()];
    enumerate_min(&zero).is_some()
}

/// Martingale coupling constraints `π ≥ 0` with marginals `mu`, `nu` and
/// `Σⱼ πᵢⱼ (yⱼ − xᵢ) = 0`, variable index `i · |nu| + j`.
pub fn martingale_program(mu: &DiscreteMeasure<Q>, nu: &DiscreteMeasure<Q>) -> DenseProgram {
    let (nm, nn, d) = (mu.len(), nu.len(), mu.dim());
    let mut prog = DenseProgram::new(nm * nn);
    for (i, (_, w)) in mu.atoms().iter().enumerate() {
        let mut row = vec![Q::zero(); nm * nn];
        for j in 0..nn {
            row[i * nn + j] = Q::from_i64(1);
        }
        prog.push(row, w.clone());
    }
    for (j, (_, w)) in nu.atoms().iter().enumerate() {
        let mut row = vec![Q::zero(); nm * nn];
        for i in 0..nm {
            row[i * nn + j] = Q::from_i64(1);
        }
        prog.push(row, w.clone());
    }
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        for c in 0..d {
            let mut row = vec![Q::zero(); nm * nn];
            for (j, (y, _)) in nu.atoms().iter().enumerate() {
                row[i * nn + j] = &y.coords()[c] - &x.coords()[c];
            }
            prog.push(row, Q::zero());
        }
    }
    prog
}

/// Bimartingale constraints for `V1 = span(v1)`, `V2 = span(v2)`: the
/// marginal rows, `Σⱼ πᵢⱼ ⟨b, yⱼ − xᵢ⟩ = 0` for `b ∈ v1` and
/// `Σᵢ πᵢⱼ ⟨b, xᵢ − yⱼ⟩ = 0` for `b ∈ v2`.
pub fn bimartingale_program(mu: &DiscreteMeasure<Q>, nu: &DiscreteMeasure<Q>, v1: &[Point<Q>], v2: &[Point<Q>]) -> DenseProgram {
    let mut prog = martingale_program(mu, nu);
    let (nm, nn) = (mu.len(), nu.len());
    prog.rows.truncate(nm + nn);
    prog.rhs.truncate(nm + nn);
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        for b in v1 {
            let mut row = vec![Q::zero(); nm * nn];
            for (j, (y, _)) in nu.atoms().iter().enumerate() {
                row[i * nn + j] = b.dot(&(y - x));
            }
            prog.push(row, Q::zero());
        }
    }
    for (j, (y, _)) in nu.atoms().iter().enumerate() {
        for b in v2 {
            let mut row = vec![Q::zero(); nm * nn];
            for (i, (x, _)) in mu.atoms().iter().enumerate() {
                row[i * nn + j] = b.dot(&(x - y));
            }
            prog.push(row, Q::zero());
        }
    }
    prog
}

/// Strassen's criterion decided by vertex enumeration.
pub fn strassen_oracle(mu: &DiscreteMeasure<Q>, nu: &DiscreteMeasure<Q>) -> bool {
    enumerate_feasible(&martingale_program(mu, nu))
}

/// Three-marginal primal written out densely, variable `(i · |nu| + j) · |grid| + k`.
pub fn primal_dense(mu: &DiscreteMeasure<Q>, nu: &DiscreteMeasure<Q>, grid: &[Point<Q>]) -> DenseProgram {
    let (nm, nn, ng, d) = (mu.len(), nu.len(), grid.len(), mu.dim());
    let nv = nm * nn * ng;
    let var = |i: usize, j: usize, k: usize| (i * nn + j) * ng + k;
    let mut prog = DenseProgram::new(nv);
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        for (j, (y, _)) in nu.atoms().iter().enumerate() {
            for (k, z) in grid.iter().enumerate() {
                let dx = (z - x).norm_sq();
                let dy = (z - y).norm_sq();
                prog.objective[var(i, j, k)] = (dx + dy) / Q::from_i64(2);
            }
        }
    }
    for (i, (_, w)) in mu.atoms().iter().enumerate() {
        let mut row = vec![Q::zero(); nv];
        for j in 0..nn {
            for k in 0..ng {
                row[var(i, j, k)] = Q::from_i64(1);
            }
        }
        prog.push(row, w.clone());
    }
    for (j, (_, w)) in nu.atoms().iter().enumerate() {
        let mut row = vec![Q::zero(); nv];
        for i in 0..nm {
            for k in 0..ng {
                row[var(i, j, k)] = Q::from_i64(1);
            }
        }
        prog.push(row, w.clone());
    }
    for (i, (x, _)) in mu.atoms().iter().enumerate() {
        for c in 0..d {
            let mut row = vec![Q::zero(); nv];
            for j in 0..nn {
                for (k, z) in grid.iter().enumerate() {
                    row[var(i, j, k)] = &z.coords()[c] - &x.coords()[c];
                }
            }
            prog.push(row, Q::zero());
        }
    }
    for (j, (y, _)) in nu.atoms().iter().enumerate() {
        for c in 0..d {
            let mut row = vec![Q::zero(); nv];
            for i in 0..nm {
                for (k, z) in grid.iter().enumerate() {
                    row[var(i, j, k)] = &z.coords()[c] - &y.coords()[c];
                }
            }
            prog.push(row, Q::zero());
        }
    }
    prog
}

/// Minimum of a dense program computed by `minilp` in `f64`; `None` when
/// `minilp` reports infeasibility or unboundedness.
pub fn minilp_min(prog: &DenseProgram) -> Option<f64> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = prog.objective.iter().map(|c| problem.add_var(c.to_f64(), (0.0, f64::INFINITY))).collect();
    for (row, rhs) in prog.rows.iter().zip(&prog.rhs) {
        let expr: Vec<_> = row.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(j, v)| (vars[j], v.to_f64())).collect();
        problem.add_constraint(expr.as_slice(), ComparisonOp::Eq, rhs.to_f64());
    }
    problem.solve().ok().map(|s| s.objective())
}

/// `½ Σ |λᵢ|` of a symmetric matrix with `n ≤ 3`, from the closed-form roots
/// of its characteristic polynomial.
pub fn half_nuclear_norm(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    match n {
        0 => 0.0,
        1 => 0.5 * rows[0][0].abs(),
        2 => {
            let (a, b, d) = (rows[0][0], rows[0][1], rows[1][1]);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            0.5 * ((mean + rad).abs() + (mean - rad).abs())
        }
        3 => {
            let m = rows;
            let tr = m[0][0] + m[1][1] + m[2][2];
            let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2]
                - m[1][2] * m[2][1];
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            // Roots of λ³ − tr λ² + minors λ − det via trigonometric form.
            let p = minors - tr * tr / 3.0;
            let qq = -2.0 * tr.powi(3) / 27.0 + tr * minors / 3.0 - det;
            let shift = tr / 3.0;
            if p.abs() < 1e-300 {
                let r = (-qq).cbrt();
                return 1.5 * (r + shift).abs();
            }
            let amp = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * qq / (p * amp)).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            let roots = [0.0, 1.0, 2.0].map(|k| amp * (phi - 2.0 * std::f64::consts::PI * k / 3.0).cos() + shift);
            0.5 * roots.iter().map(|r| f64::abs(*r)).sum::<f64>()
        }
        _ => panic!("half_nuclear_norm supports n ≤ 3"),
    }
}
