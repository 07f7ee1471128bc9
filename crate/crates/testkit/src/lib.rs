//! Independent oracles and instance generators for the test suites.
//!
//! Nothing here calls the simplex solver of `beckmann-core`: LP values are
//! recomputed either by exhaustive basic-solution enumeration (exact, small
//! programs only) or by `minilp` (floating point).

pub mod gen;
pub mod oracle;

use beckmann_core::{Point, Rational, Scalar};

pub type Q = Rational;

pub fn q(n: i64, d: i64) -> Q {
    Q::from_ratio(n, d)
}

pub fn p(c: &[i64]) -> Point<Q> {
    Point::from_i64(c)
}
