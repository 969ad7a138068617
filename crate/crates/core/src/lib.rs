//! Constant-step mini-batch SGD for interpolated empirical risk minimization
//! under the Polyak-Lojasiewicz condition.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: SVD, pseudo-inverse projection, finite differences;
//! * [`objective`]: sample losses, the averaged risk, batch sampling;
//! * [`constants`]: PL and smoothness constants, analytic and probed;
//! * [`sgd`]: step-size rules, contraction factors, SGD and GD runners;
//! * [`transform`]: objectives composed with a smooth reparametrization;
//! * [`linmap`]: strongly convex losses composed with a linear map;
//! * [`problems`]: synthetic instances with exact constants;
//! * [`oracle`]: brute-force references used by the tests.

pub mod constants;
pub mod error;
pub mod linmap;
pub mod numerics;
pub mod objective;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod sgd;
pub mod transform;

pub use error::{Error, Result};
pub use numerics::{LinearFactorization, Matrix, ScalarField, Vector};
pub use objective::{BatchIndices, ErmObjective, SampleLoss};
