//! Entropy solutions of scalar conservation laws with almost-periodic
//! (trigonometric polynomial) initial data.
//!
//! The crate is organised bottom-up:
//!
//! - [`apfunc`]: exact frequencies over a declared irrational basis,
//!   trigonometric polynomials, frequency modules and the Besicovitch
//!   seminorm.
//! - [`flux`]: continuous piecewise-polynomial fluxes with exact affinity
//!   and non-degeneracy queries.
//! - [`solver`]: first-order monotone finite-volume schemes on periodic
//!   torus grids.
//! - [`lifting`]: the quasi-periodic to torus correspondence.
//! - [`asymptotics`]: decay series, traveling-wave extraction and the
//!   profile operator.

pub mod apfunc;
pub mod asymptotics;
mod error;
pub mod flux;
pub mod lifting;
pub mod solver;

pub use error::{Error, Result};
