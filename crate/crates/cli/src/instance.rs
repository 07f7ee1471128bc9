//! Instance files: parsing, validation and numeric mode selection.
//!
//! ```json
//! {"dim": 2,
//!  "mu": [{"x": [0, 1], "w": "1/2"}, {"x": [0, -1], "w": 0.5}],
//!  "nu": [{"x": [-1, 1], "w": "0.5"}, {"x": [1, -1], "w": 1}],
//!  "grid": [[0, 0]], "v1": [[1, 0]], "v2": [[0, 1]], "mode": "rational"}
//! ```
//!
//! Every number (coordinates and weights) is read as an exact rational:
//! JSON numbers through their decimal text, strings as integers, decimals
//! (with optional exponent) or `p/q` fractions.

use std::str::FromStr;

use beckmann_core::{DiscreteMeasure, NumericMode, Point, Rational, Scalar};
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::json::CliScalar;

/// Above this many atoms (both measures together) the default mode is float.
pub const RATIONAL_ATOM_LIMIT: usize = 200;

const FIELDS: [&str; 7] = ["dim", "mu", "nu", "grid", "v1", "v2", "mode"];

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: Vec<Rational>,
    pub w: Rational,
}

/// A parsed instance, still in exact arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub dim: usize,
    pub mu: Vec<Atom>,
    pub nu: Vec<Atom>,
    pub grid: Option<Vec<Vec<Rational>>>,
    pub v1: Option<Vec<Vec<Rational>>>,
    pub v2: Option<Vec<Vec<Rational>>>,
    pub mode: Option<NumericMode>,
}

/// The measures of an instance in one arithmetic.
pub struct Loaded<S> {
    pub mu: DiscreteMeasure<S>,
    pub nu: DiscreteMeasure<S>,
    pub grid: Option<Vec<Point<S>>>,
    pub v1: Option<Vec<Point<S>>>,
    pub v2: Option<Vec<Point<S>>>,
}

/// Parses `12`, `-0.25`, `1.5e-3` or `3/8`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if t.contains('/') {
        let r = Rational::from_str(t).ok()?;
        return Some(r);
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let scale = exp - frac.len() as i32;
    if scale.unsigned_abs() > 4096 {
        return None;
    }
    let mut num = format!("{sign}{int}{frac}");
    if num.trim_start_matches('-').is_empty() {
        num.push('0');
    }
    let den = if scale >= 0 {
        num.push_str(&"0".repeat(scale as usize));
        "1".to_string()
    } else {
        format!("1{}", "0".repeat((-scale) as usize))
    };
    Rational::from_str(&format!("{num}/{den}")).ok()
}

fn number(v: &Value, field: &str) -> Result<Rational, CliError> {
    let parsed = match v {
        Value::Number(n) => parse_rational(&n.to_string()),
        Value::String(s) => parse_rational(s),
        _ => None,
    };
    parsed.ok_or_else(|| CliError::field(field, format!("expected a number or numeric string, found {v}")))
}

fn vector(v: &Value, field: &str, dim: usize) -> Result<Vec<Rational>, CliError> {
    let items = v
        .as_array()
        .ok_or_else(|| CliError::field(field, "expected an array of coordinates"))?;
    if items.len() != dim {
        return Err(CliError::field(field, format!("expected {dim} coordinates, found {}", items.len())));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, c)| number(c, &format!("{field}[{i}]")))
        .collect()
}

fn vectors(v: &Value, field: &str, dim: usize) -> Result<Vec<Vec<Rational>>, CliError> {
    let items = v.as_array().ok_or_else(|| CliError::field(field, "expected an array of points"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, p)| vector(p, &format!("{field}[{i}]"), dim))
        .collect()
}

fn atoms(v: Option<&Value>, field: &str, dim: usize) -> Result<Vec<Atom>, CliError> {
    let items = v
        .ok_or_else(|| CliError::field(field, "missing"))?
        .as_array()
        .ok_or_else(|| CliError::field(field, "expected an array of atoms"))?;
    if items.is_empty() {
        return Err(CliError::field(field, "needs at least one atom"));
    }
    let mut out = Vec::with_capacity(items.len());
    for (i, a) in items.iter().enumerate() {
        let name = format!("{field}[{i}]");
        let obj = a
            .as_object()
            .ok_or_else(|| CliError::field(&name, "expected an object with keys \"x\" and \"w\""))?;
        if let Some(k) = obj.keys().find(|k| *k != "x" && *k != "w") {
            return Err(CliError::field(&format!("{name}.{k}"), "unknown field"));
        }
        let x = vector(obj.get("x").ok_or_else(|| CliError::field(&format!("{name}.x"), "missing"))?, &format!("{name}.x"), dim)?;
        let w = number(obj.get("w").ok_or_else(|| CliError::field(&format!("{name}.w"), "missing"))?, &format!("{name}.w"))?;
        if w < Rational::from_i64(0) {
            return Err(CliError::field(&format!("{name}.w"), format!("negative weight {w}")));
        }
        out.push(Atom { x, w });
    }
    if out.iter().all(|a| a.w == Rational::from_i64(0)) {
        return Err(CliError::field(field, "total mass must be positive"));
    }
    Ok(out)
}

pub fn parse_mode(text: &str, field: &str) -> Result<NumericMode, CliError> {
    match text {
        "rational" => Ok(NumericMode::Rational),
        "float" => Ok(NumericMode::Float),
        other => Err(CliError::field(field, format!("expected \"rational\" or \"float\", found {other:?}"))),
    }
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::field("instance", format!("malformed JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CliError::field("instance", "expected a JSON object"))?;
        Self::from_object(obj)
    }

    fn from_object(obj: &Map<String, Value>) -> Result<Self, CliError> {
        if let Some(k) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
            return Err(CliError::field(k, "unknown field"));
        }
        let dim = obj
            .get("dim")
            .ok_or_else(|| CliError::field("dim", "missing"))?
            .as_u64()
            .filter(|d| *d >= 1)
            .ok_or_else(|| CliError::field("dim", "expected a positive integer"))? as usize;
        let mu = atoms(obj.get("mu"), "mu", dim)?;
        let nu = atoms(obj.get("nu"), "nu", dim)?;
        let grid = obj.get("grid").map(|g| vectors(g, "grid", dim)).transpose()?;
        let v1 = obj.get("v1").map(|g| vectors(g, "v1", dim)).transpose()?;
        let v2 = obj.get("v2").map(|g| vectors(g, "v2", dim)).transpose()?;
        if v1.is_some() != v2.is_some() {
            let missing = if v1.is_none() { "v1" } else { "v2" };
            return Err(CliError::field(missing, "v1 and v2 must be given together"));
        }
        let mode = match obj.get("mode") {
            None => None,
            Some(Value::String(s)) => Some(parse_mode(s, "mode")?),
            Some(v) => return Err(CliError::field("mode", format!("expected a string, found {v}"))),
        };
        Ok(InstanceFile { dim, mu, nu, grid, v1, v2, mode })
    }

    pub fn atom_count(&self) -> usize {
        self.mu.len() + self.nu.len()
    }

    /// Flag, then the file's `mode`, then rational up to [`RATIONAL_ATOM_LIMIT`] atoms.
    pub fn resolve_mode(&self, flag: Option<NumericMode>) -> NumericMode {
        flag.or(self.mode).unwrap_or(if self.atom_count() <= RATIONAL_ATOM_LIMIT {
            NumericMode::Rational
        } else {
            NumericMode::Float
        })
    }

    /// Converts to `S` and builds (normalised) measures.
    pub fn load<S: CliScalar>(&self) -> Result<Loaded<S>, CliError> {
        let conv = |r: &Rational| S::from_rational(r);
        let point = |v: &[Rational]| Point::new(v.iter().map(conv).collect());
        let measure = |atoms: &[Atom], field: &str| {
            DiscreteMeasure::new(self.dim, atoms.iter().map(|a| (point(&a.x), conv(&a.w))).collect())
                .map_err(|e| CliError::field(field, e.to_string()))
        };
        let points = |v: &Option<Vec<Vec<Rational>>>| v.as_ref().map(|ps| ps.iter().map(|p| point(p)).collect::<Vec<_>>());
        Ok(Loaded {
            mu: measure(&self.mu, "mu")?,
            nu: measure(&self.nu, "nu")?,
            grid: points(&self.grid),
            v1: points(&self.v1),
            v2: points(&self.v2),
        })
    }
}

/// Reads a grid file: either a bare array of points or `{"grid": [...]}`.
pub fn parse_grid(text: &str, dim: usize) -> Result<Vec<Vec<Rational>>, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::field("grid", format!("malformed JSON: {e}")))?;
    match &value {
        Value::Array(_) => vectors(&value, "grid", dim),
        Value::Object(obj) => match obj.get("grid") {
            Some(g) => vectors(g, "grid", dim),
            None => Err(CliError::field("grid", "expected an array of points or an object with key \"grid\"")),
        },
        _ => Err(CliError::field("grid", "expected an array of points")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn decimal_forms_parse_exactly() {
        assert_eq!(parse_rational("0.1"), Some(q(1, 10)));
        assert_eq!(parse_rational("-2.50"), Some(q(-5, 2)));
        assert_eq!(parse_rational("1e-3"), Some(q(1, 1000)));
        assert_eq!(parse_rational("2.5E2"), Some(q(250, 1)));
        assert_eq!(parse_rational("3/8"), Some(q(3, 8)));
        assert_eq!(parse_rational(".5"), Some(q(1, 2)));
        assert_eq!(parse_rational("7"), Some(q(7, 1)));
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational(""), None);
        assert_eq!(parse_rational("-"), None);
    }

    #[test]
    fn json_floats_keep_their_decimal_value() {
        let inst = InstanceFile::from_json(r#"{"dim":1,"mu":[{"x":[0.1],"w":0.3}],"nu":[{"x":["1/10"],"w":"0.7"}]}"#).unwrap();
        assert_eq!(inst.mu[0].x[0], q(1, 10));
        assert_eq!(inst.mu[0].w, q(3, 10));
        assert_eq!(inst.nu[0].w, q(7, 10));
        let loaded = inst.load::<Rational>().unwrap();
        assert_eq!(*loaded.mu.original_mass(), q(3, 10));
        assert_eq!(loaded.mu.atoms()[0].1, q(1, 1));
    }

    #[test]
    fn errors_name_the_field() {
        let bad = InstanceFile::from_json(r#"{"dim":2,"mu":[{"x":[0],"w":1}],"nu":[{"x":[0,0],"w":1}]}"#).unwrap_err();
        assert!(bad.to_string().contains("mu[0].x"), "{bad}");
        let bad = InstanceFile::from_json(r#"{"dim":1,"mu":[{"x":[0],"w":"x"}],"nu":[{"x":[0],"w":1}]}"#).unwrap_err();
        assert!(bad.to_string().contains("mu[0].w"), "{bad}");
        let bad = InstanceFile::from_json(r#"{"dim":1,"mu":[],"nu":[]}"#).unwrap_err();
        assert!(bad.to_string().contains("mu"), "{bad}");
        let bad = InstanceFile::from_json(r#"{"dim":1,"mu":[{"x":[0],"w":1}],"nu":[{"x":[0],"w":1}],"extra":1}"#).unwrap_err();
        assert!(bad.to_string().contains("extra"), "{bad}");
        let bad = InstanceFile::from_json("{").unwrap_err();
        assert!(bad.to_string().contains("malformed JSON"), "{bad}");
    }

    #[test]
    fn mode_defaults_by_size() {
        let inst = InstanceFile::from_json(r#"{"dim":1,"mu":[{"x":[0],"w":1}],"nu":[{"x":[0],"w":1}]}"#).unwrap();
        assert_eq!(inst.resolve_mode(None), NumericMode::Rational);
        assert_eq!(inst.resolve_mode(Some(NumericMode::Float)), NumericMode::Float);
        let many: Vec<String> = (0..201).map(|i| format!(r#"{{"x":[{i}],"w":1}}"#)).collect();
        let text = format!(r#"{{"dim":1,"mu":[{}],"nu":[{{"x":[0],"w":1}}]}}"#, many.join(","));
        assert_eq!(InstanceFile::from_json(&text).unwrap().resolve_mode(None), NumericMode::Float);
    }

    #[test]
    fn big_integers_convert() {
        let r = parse_rational("123456789012345678901234567890/7").unwrap();
        assert_eq!(Rational::from_rational(&r), r);
        assert!((f64::from_rational(&q(1, 3)) - 1.0 / 3.0).abs() < 1e-15);
    }
}
