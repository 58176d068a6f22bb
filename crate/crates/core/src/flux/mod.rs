//! Continuous piecewise-polynomial fluxes with exact affine-interval and
//! non-degeneracy queries.

mod affine;
mod nondeg;
mod piecewise;
mod poly;

pub use affine::{affine_residual, maximal_affine_interval, AffineInterval, AffineVicinity};
pub use nondeg::{lift_flux, nondegeneracy_check, nullspace, NondegReport, NondegVerdict};
pub use piecewise::{ComponentDoc, FluxDoc, PiecewiseFlux, PiecewisePoly};
pub use poly::{Polynomial, MAX_DEGREE};

use crate::Result;

pub fn eval_flux(f: &PiecewiseFlux, u: f64) -> Result<Vec<f64>> {
    f.eval(u)
}

pub fn lipschitz_bound(f: &PiecewiseFlux, lo: f64, hi: f64) -> Result<f64> {
    f.lipschitz_bound(lo, hi)
}

#[cfg(test)]
mod tests;
