//! φ-entropies, φ-divergences and φ-Fisher informations of analytic density
//! families, with numerical verification of generalized de Bruijn identities.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod error;
pub mod functionals;
pub mod identities;
pub mod linalg;
pub mod measures;
pub mod numerics;
pub mod report;

pub use error::{Error, Result};
