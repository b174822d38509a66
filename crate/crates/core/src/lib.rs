//! Chern–Simons and extended transgression forms on principal bundles with a
//! reductive subgroup, evaluated numerically in local trivialisations.

pub mod bundle_geometry;
pub mod bundle_zoo;
pub mod error;
pub mod exact_coefficients;
pub mod exterior_calculus;
pub mod invariant_polynomials;
pub mod lie_algebras;

pub use error::{Error, Result};
