//! Spectral operator learning on the flat 2-torus.
//!
//! The crate provides exact Fourier oracles for the shifted resolvent and the
//! regularized Helmholtz–Hodge decomposition, a gauge-equivariant spectral
//! operator ([`gino::GinoModel`]), a coordinate CNN baseline, an AdamW
//! training loop, and the experiment drivers in [`diagnostics`].
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the experiments use.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cnn;
pub mod diagnostics;
pub mod error;
pub mod gino;
pub mod grid;
pub mod oracle;
pub mod sampler;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GridField = grid::GridField<f64>;
pub type SpectralField = grid::SpectralField<f64>;
pub type MetricSpec = grid::MetricSpec<f64>;
