//! Planar grillages: the matrix-valued measure carried by the segments of a plan.
//!
//! A triple `(x, y, z)` of weight `w` contributes two bars: `[z, x]` with
//! sign `+1` and `[z, y]` with sign `−1`. A bar from `z` to `e` has density
//! `w ‖ξ − z‖ (e − z)(e − z)ᵀ / ‖e − z‖²` with respect to arclength, so its
//! Schatten-1 mass is `w ½ ‖e − z‖²`.
//!
//! For a plan whose `(x, z)` and `(y, z)` marginals are martingales the
//! grillage `ρ` satisfies `∫ φ d(nu − mu) = ∫ ⟨D²φ, dρ⟩` for every smooth
//! `φ`; [`verify_div2`] checks this exactly on monomials.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::beckmann::ThreePlan;
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, Point, SymmetricMatrix};
use crate::scalar::Scalar;

/// One signed segment of a grillage.
#[derive(Debug, Clone, PartialEq)]
pub struct GrillageBar<S> {
    /// The plan's `z`.
    pub from: Point<S>,
    /// The plan's `x` (sign `+1`) or `y` (sign `−1`).
    pub to: Point<S>,
    pub sign: i8,
    /// Weight of the plan atom.
    pub weight: S,
}

impl<S: Scalar> GrillageBar<S> {
    pub fn direction(&self) -> Point<S> {
        &self.to - &self.from
    }

    /// `(e − z)(e − z)ᵀ / ‖e − z‖²`.
    pub fn direction_tensor(&self) -> SymmetricMatrix<S> {
        let d = self.direction();
        let mut m = SymmetricMatrix::zeros(d.dim());
        m.add_outer(&S::one().div_ref(&d.norm_sq()), &d);
        m
    }

    /// `w ½ ‖e − z‖²`.
    pub fn mass(&self) -> S {
        self.weight.mul_ref(&self.direction().norm_sq()).mul_ref(&S::half())
    }

    fn signed_weight(&self) -> S {
        if self.sign < 0 {
            -self.weight.clone()
        } else {
            self.weight.clone()
        }
    }
}

/// The grillage of a planar plan.
#[derive(Debug, Clone, PartialEq)]
pub struct GrillageMeasure<S> {
    pub bars: Vec<GrillageBar<S>>,
}

impl<S: Scalar> GrillageMeasure<S> {
    pub fn dim(&self) -> usize {
        2
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// `Σ` bar masses, the total variation without cancellation.
    pub fn total_mass(&self) -> S {
        self.bars.iter().fold(S::zero(), |acc, b| acc.add_ref(&b.mass()))
    }
}

/// Two bars per triple, zero-length segments dropped.
pub fn bars_from_plan<S: Scalar>(plan: &ThreePlan<S>) -> Result<GrillageMeasure<S>> {
    if plan.dim() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, found: plan.dim() });
    }
    let mut bars = Vec::new();
    for (t, w) in plan.atoms() {
        for (end, sign) in [(&t.x, 1i8), (&t.y, -1i8)] {
            if !end.same_point(&t.z) {
                bars.push(GrillageBar { from: t.z.clone(), to: end.clone(), sign, weight: w.clone() });
            }
        }
    }
    Ok(GrillageMeasure { bars })
}

/// A bar restricted to its carrying line `{c + s d}`: density `w |s − s_z|`
/// on `[lo, hi]`.
struct LineBar<S> {
    s_z: S,
    lo: S,
    hi: S,
    signed_weight: S,
}

struct Line<S> {
    direction: Point<S>,
    offset: Point<S>,
    bars: Vec<LineBar<S>>,
}

/// Direction scaled so that its first nonzero coordinate is 1.
fn canonical_direction<S: Scalar>(d: &Point<S>) -> Point<S> {
    let lead = d.coords().iter().find(|c| !c.is_zero_tol()).cloned().unwrap_or_else(S::one);
    d.scale(&S::one().div_ref(&lead))
}

/// Schatten-1 total variation, with exact cancellation between bars on the
/// same carrying line (which share their direction tensor).
pub fn total_variation<S: Scalar>(g: &GrillageMeasure<S>) -> S {
    let mut lines: Vec<Line<S>> = Vec::new();
    for bar in &g.bars {
        let d = canonical_direction(&bar.direction());
        let dd = d.norm_sq();
        let param = |p: &Point<S>| p.dot(&d).div_ref(&dd);
        let s_z = param(&bar.from);
        let s_e = param(&bar.to);
        let offset = &bar.from - &d.scale(&s_z);
        let (lo, hi) = if s_z < s_e { (s_z.clone(), s_e) } else { (s_e, s_z.clone()) };
        let lb = LineBar { s_z, lo, hi, signed_weight: bar.signed_weight() };
        match lines.iter_mut().find(|l| l.direction.same_point(&d) && l.offset.same_point(&offset)) {
            Some(l) => l.bars.push(lb),
            None => lines.push(Line { direction: d, offset, bars: alloc::vec![lb] }),
        }
    }
    let mut total = S::zero();
    for line in &lines {
        total.add_mul_assign(&line.direction.norm_sq(), &line_integral(&line.bars));
    }
    total
}

/// `∫ |Σ_b w_b |s − s_b| 1_{[lo_b, hi_b]}(s)| ds`, exactly.
fn line_integral<S: Scalar>(bars: &[LineBar<S>]) -> S {
    let mut breaks: Vec<S> = bars.iter().flat_map(|b| [b.lo.clone(), b.hi.clone()]).collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    breaks.dedup_by(|a, b| a.approx_eq(b));
    let density = |s: &S, mid: &S| {
        let mut acc = S::zero();
        for b in bars {
            if b.lo <= *mid && *mid <= b.hi {
                acc.add_mul_assign(&b.signed_weight, &s.sub_ref(&b.s_z).abs());
            }
        }
        acc
    };
    let mut total = S::zero();
    for w in breaks.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let mid = a.add_ref(b).mul_ref(&S::half());
        // Linear on [a, b]; evaluate the active set at the midpoint.
        let fa = density(a, &mid);
        let fb = density(b, &mid);
        let len = b.sub_ref(a);
        let opposite = (fa.is_pos() && fb.is_neg()) || (fa.is_neg() && fb.is_pos());
        let piece = if opposite {
            // Root r with (r − a) / (b − a) = fa / (fa − fb).
            let ra = len.mul_ref(&fa.div_ref(&fa.sub_ref(&fb)));
            let rb = len.sub_ref(&ra);
            fa.abs().mul_ref(&ra).add_ref(&fb.abs().mul_ref(&rb)).mul_ref(&S::half())
        } else {
            fa.abs().add_ref(&fb.abs()).mul_ref(&len).mul_ref(&S::half())
        };
        total = total.add_ref(&piece);
    }
    total
}

/// Outcome of [`verify_div2`] for one monomial `ξ₁^a ξ₂^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialCheck<S> {
    pub exponents: (usize, usize),
    /// `∫ ⟨D²φ, dρ⟩`.
    pub pairing: S,
    /// `∫ φ dnu − ∫ φ dmu`.
    pub target: S,
    pub residual: S,
}

/// Result of [`verify_div2`].
#[derive(Debug, Clone, PartialEq)]
pub struct Div2Report<S> {
    pub degree: usize,
    pub checks: Vec<MonomialCheck<S>>,
    pub max_residual: S,
}

impl<S: Scalar> Div2Report<S> {
    pub fn is_zero(&self) -> bool {
        self.max_residual.is_zero_tol()
    }
}

fn binomial<S: Scalar>(n: usize, k: usize) -> S {
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    S::from_i64(acc)
}

/// Coefficients of `(c + t v)^k` in `t`.
fn linear_power<S: Scalar>(c: &S, v: &S, k: usize) -> Vec<S> {
    let mut cpow = alloc::vec![S::one()];
    let mut vpow = alloc::vec![S::one()];
    for i in 1..=k {
        cpow.push(cpow[i - 1].mul_ref(c));
        vpow.push(vpow[i - 1].mul_ref(v));
    }
    (0..=k).map(|j| binomial::<S>(k, j).mul_ref(&cpow[k - j]).mul_ref(&vpow[j])).collect()
}

fn poly_mul<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut out: Vec<S> = (0..a.len() + b.len() - 1).map(|_| S::zero()).collect();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j].add_mul_assign(x, y);
        }
    }
    out
}

/// `∫₀¹ t g''(t) dt` for `g(t) = φ(z + t (e − z))`, `φ = ξ₁^a ξ₂^b`.
fn segment_pairing<S: Scalar>(z: &Point<S>, e: &Point<S>, a: usize, b: usize) -> S {
    let v = e - z;
    let g = poly_mul(
        &linear_power(&z.coords()[0], &v.coords()[0], a),
        &linear_power(&z.coords()[1], &v.coords()[1], b),
    );
    let mut acc = S::zero();
    for (k, c) in g.iter().enumerate().skip(2) {
        acc.add_mul_assign(c, &S::from_i64(k as i64 - 1));
    }
    acc
}

fn monomial<S: Scalar>(p: &Point<S>, a: usize, b: usize) -> S {
    let mut acc = S::one();
    for _ in 0..a {
        acc = acc.mul_ref(&p.coords()[0]);
    }
    for _ in 0..b {
        acc = acc.mul_ref(&p.coords()[1]);
    }
    acc
}

/// Compares `∫ ⟨D²φ, dρ⟩` with `∫ φ d(nu − mu)` for every monomial of total
/// degree at most `degree`.
pub fn verify_div2<S: Scalar>(
    g: &GrillageMeasure<S>,
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    degree: usize,
) -> Result<Div2Report<S>> {
    for m in [mu, nu] {
        if m.dim() != 2 {
            return Err(Error::UnsupportedDimension { expected: 2, found: m.dim() });
        }
    }
    let mut checks = Vec::new();
    let mut max_residual = S::zero();
    for total in 0..=degree {
        for a in (0..=total).rev() {
            let b = total - a;
            let mut pairing = S::zero();
            for bar in &g.bars {
                pairing.add_mul_assign(&bar.signed_weight(), &segment_pairing(&bar.from, &bar.to, a, b));
            }
            let target = nu.integrate(|p| monomial(p, a, b)).sub_ref(&mu.integrate(|p| monomial(p, a, b)));
            let residual = pairing.sub_ref(&target).abs();
            if residual > max_residual {
                max_residual = residual.clone();
            }
            checks.push(MonomialCheck { exponents: (a, b), pairing, target, residual });
        }
    }
    Ok(Div2Report { degree, checks, max_residual })
}

/// One row per bar: `x1,y1,x2,y2,sign,weight,mass`, from `z` to the endpoint.
pub fn to_csv<S: Scalar>(g: &GrillageMeasure<S>) -> String {
    let mut out = String::from("x1,y1,x2,y2,sign,weight,mass\n");
    for b in &g.bars {
        let (z, e) = (b.from.coords(), b.to.coords());
        let _ = writeln!(out, "{},{},{},{},{},{},{}", z[0], z[1], e[0], e[1], b.sign, b.weight, b.mass());
    }
    out
}

const SVG_SIZE: f64 = 480.0;
const SVG_MARGIN: f64 = 24.0;
const SVG_MAX_STROKE: f64 = 8.0;

/// SVG drawing: `+` bars in red, `−` bars in blue, stroke width proportional
/// to the largest density `w ‖e − z‖` reached on the bar.
pub fn to_svg<S: Scalar>(g: &GrillageMeasure<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" viewBox=\"0 0 {SVG_SIZE} {SVG_SIZE}\">"
    );
    let pts: Vec<[f64; 2]> = g
        .bars
        .iter()
        .flat_map(|b| [&b.from, &b.to])
        .map(|p| [p.coords()[0].to_f64(), p.coords()[1].to_f64()])
        .collect();
    if !pts.is_empty() {
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &pts {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
            ymin = ymin.min(p[1]);
            ymax = ymax.max(p[1]);
        }
        let span = (xmax - xmin).max(ymax - ymin).max(1e-12);
        let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
        let map = |p: [f64; 2]| [SVG_MARGIN + (p[0] - xmin) * scale, SVG_SIZE - SVG_MARGIN - (p[1] - ymin) * scale];
        let peak = |b: &GrillageBar<S>| b.weight.to_f64() * libm::sqrt(b.direction().norm_sq().to_f64());
        let max_peak = g.bars.iter().map(peak).fold(0.0f64, f64::max).max(1e-300);
        for b in &g.bars {
            let p = map([b.from.coords()[0].to_f64(), b.from.coords()[1].to_f64()]);
            let q = map([b.to.coords()[0].to_f64(), b.to.coords()[1].to_f64()]);
            let color = if b.sign > 0 { "#c0392b" } else { "#2c6fbb" };
            let width = (SVG_MAX_STROKE * peak(b) / max_peak).max(0.5);
            let _ = writeln!(
                out,
                "  <line x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"{}\" stroke-width=\"{:.4}\" stroke-linecap=\"round\"/>",
                p[0], p[1], q[0], q[1], color, width
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Human-readable one-line description of a report.
pub fn describe<S: Scalar>(r: &Div2Report<S>) -> String {
    format!("{} monomials up to degree {}, max residual {}", r.checks.len(), r.degree, r.max_residual)
}
