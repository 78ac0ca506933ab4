//! Pseudospectral solver for the forced, fractionally dissipative surface
//! quasi-geostrophic equation on the periodic square, with numerical audits
//! of its energy balance and a-priori estimates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod operators;
pub mod persistence;
pub mod presets;
pub mod quadrature;
pub mod verify;

pub use error::{Result, SqgError};
pub use field::{PhysicalField, SpectralField, VectorField};
pub use grid::Grid;
