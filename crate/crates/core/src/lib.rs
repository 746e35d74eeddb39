//! Epigraph-of-perspective cones for trace functions `φ(W) = tr g(W)`.

pub mod cone;
pub mod error;
mod linalg;
pub mod matrix_calculus;
pub mod solver;
pub mod spectral;
pub mod verifier;

pub use error::{Error, Result};
pub use spectral::{FamilyKind, FunctionFamily};
