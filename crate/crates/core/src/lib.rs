//! Pitman location estimators and the variance inequalities they satisfy.
//!
//! The crate evaluates the minimum-variance equivariant estimator of a
//! location parameter by quadrature, closed forms and lattice enumeration,
//! computes its variance exactly or by reproducible Monte Carlo, and checks
//! the associated superadditivity and monotonicity inequalities.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anova;
pub mod bench;
pub mod dist;
pub mod error;
pub mod moment_algebra;
pub mod pitman;
pub mod poly_pitman;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod verdict;

pub use error::{Error, Result};
