//! Uniform staggered grid, Neumann stencils, cosine-transform solves and the
//! discrete Leray projection.

mod grid;
pub(crate) mod ops;
mod spectral;

pub use grid::{Grid, ScalarField, VectorField};
pub use ops::{divergence, gradient, laplacian_neumann, Strain};
pub use spectral::{CosineTransform, Spectral, TOL_COMPAT};

pub(crate) use grid::{dot, max_abs};

/// Default relative tolerance for the linear solves.
pub const TOL_LIN: f64 = 1e-10;
/// Default divergence tolerance relative to `||v||`.
pub const TOL_DIV: f64 = 1e-8;
