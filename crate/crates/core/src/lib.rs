//! Exact and floating-point solvers for the discrete second-order Beckmann
//! problem.
//!
//! The crate covers the whole pipeline for finitely supported measures
//! `mu`, `nu` with a common barycentre:
//!
//! * [`measure`]: discrete measures, moments and the covariance difference
//!   `C = ∫ x xᵀ d(nu - mu)`;
//! * [`linalg`]: Jacobi eigendecomposition, spectral splitting into
//!   `(V1, V2)`, projections and Schatten-1 norms;
//! * [`lp`]: a two-phase primal simplex over rationals or floats;
//! * [`order`]: convex order and convex-concave order checks through
//!   (bi)martingale couplings;
//! * [`beckmann`]: the three-marginal primal, quadratic dual bounds, the
//!   variance problem and optimality certificates;
//! * [`leaf`]: recursive leaf decomposition driven by covariance differences;
//! * [`grillage`]: the planar tensor measure induced by a plan and its
//!   weak second-divergence check.
//!
//! Every algorithm is generic over [`Scalar`], implemented for [`Rational`]
//! (exact) and `f64`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod beckmann;
pub mod error;
pub mod grillage;
pub mod leaf;
pub mod linalg;
pub mod lp;
pub mod measure;
pub mod order;
pub mod scalar;

pub use error::{Error, Result};
pub use measure::{DiscreteMeasure, Point, SymmetricMatrix};
pub use scalar::{NumericMode, Rational, Scalar};
