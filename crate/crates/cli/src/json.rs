//! JSON encodings of library values.
//!
//! Rationals are written as `"p/q"` strings, floats as JSON numbers. Object
//! keys come out sorted because `serde_json::Map` is a `BTreeMap`.

use beckmann_core::beckmann::{OptimalityReport, ThreePlan};
use beckmann_core::linalg::SpectralSplit;
use beckmann_core::order::{Coupling, ResidualReport};
use beckmann_core::{DiscreteMeasure, Point, Rational, Scalar};
use serde_json::{json, Value};

/// Scalars the CLI can read from exact input and write back out.
pub trait CliScalar: Scalar {
    fn from_rational(r: &Rational) -> Self;
    fn json(&self) -> Value;
}

impl CliScalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn json(&self) -> Value {
        Value::String(self.to_string())
    }
}

impl CliScalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        r.to_f64()
    }

    fn json(&self) -> Value {
        Value::from(*self)
    }
}

pub fn point<S: CliScalar>(p: &Point<S>) -> Value {
    Value::Array(p.coords().iter().map(CliScalar::json).collect())
}

pub fn points<S: CliScalar>(ps: &[Point<S>]) -> Value {
    Value::Array(ps.iter().map(point).collect())
}

pub fn measure<S: CliScalar>(m: &DiscreteMeasure<S>) -> Value {
    Value::Array(m.atoms().iter().map(|(x, w)| json!({"x": point(x), "w": w.json()})).collect())
}

pub fn coupling<S: CliScalar>(pi: &Coupling<S>) -> Value {
    Value::Array(
        pi.atoms()
            .iter()
            .map(|((x, y), w)| json!({"x": point(x), "y": point(y), "w": w.json()}))
            .collect(),
    )
}

pub fn plan<S: CliScalar>(p: &ThreePlan<S>) -> Value {
    Value::Array(
        p.atoms()
            .iter()
            .map(|(t, w)| json!({"x": point(&t.x), "y": point(&t.y), "z": point(&t.z), "w": w.json(), "cost": t.cost().json()}))
            .collect(),
    )
}

pub fn split<S: CliScalar>(s: &SpectralSplit<S>) -> Value {
    json!({
        "v1": points(s.pair.basis1()),
        "v2": points(s.pair.basis2()),
        "kernel": points(&s.kernel_basis),
        "eigenvalues": s.eigenvalues,
        "tol": s.tol,
        "spectral_gap": s.spectral_gap,
        "certified": s.certified,
    })
}

pub fn optimality<S: CliScalar>(o: &OptimalityReport<S>) -> Value {
    json!({
        "max_residual": o.max_residual.json(),
        "split_residual": o.split_residual.json(),
        "isometry_gap": o.isometry_gap.json(),
        "worst_atom": o.worst_atom,
        "zero": o.is_zero(),
    })
}

pub fn residuals<S: CliScalar>(r: &ResidualReport<S>) -> Value {
    let groups = |g: &[(Point<S>, Point<S>)], key: &str| {
        Value::Array(g.iter().map(|(p, v)| json!({key: point(p), "residual": point(v)})).collect())
    };
    json!({
        "source": groups(&r.source, "x"),
        "target": groups(&r.target, "y"),
        "violation": r.violation.json(),
        "zero": r.is_zero(),
    })
}

/// Comparison tolerances in force for `S`.
pub fn tolerances<S: CliScalar>() -> Value {
    json!({
        "comparison": S::tolerance(),
        "float": beckmann_core::scalar::FLOAT_TOL,
        "exact": S::tolerance() == 0.0,
    })
}

/// Serialises with sorted keys and a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_strings_and_keys_sorted() {
        let v = json!({"b": Rational::from_ratio(1, 4).json(), "a": 0.5f64.json()});
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"a":0.5,"b":"1/4"}"#);
    }
}
