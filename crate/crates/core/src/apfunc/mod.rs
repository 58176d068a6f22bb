//! Almost-periodic functions with finite spectrum.
//!
//! Frequencies are exact rational vectors over a user-declared irrational
//! basis, so the additive group generated by a spectrum is computed exactly.

mod basis;
mod frequency;
mod module;
pub mod rational;
mod seminorm;
mod trig;

pub use basis::{IrrationalBasis, IrrationalBasisDoc};
pub use frequency::Frequency;
pub use module::{hermite_normal_form, module_basis, module_basis_with_shape, FreqModule, IntLattice};
pub use rational::Rational;
pub use seminorm::{
    n1_seminorm, LiftedPolynomial, LiftedQuadrature, SeminormEstimate, SeminormMethod, WindowSchedule,
};
pub(crate) use seminorm::ordered_sum;
pub use trig::{
    eval_trig, mean_and_coefficients, CoordsDoc, TermDoc, TrigBuilder, TrigDoc, TrigEvaluator,
    TrigPolynomial,
};

use crate::{Error, Result};

/// The cut-off `s_{a,b}(u) = min(b, max(a, u))`. Infinite bounds are no-ops.
pub fn cutoff(u: f64, a: f64, b: f64) -> Result<f64> {
    if a > b || a.is_nan() || b.is_nan() {
        return Err(Error::InvalidInterval { a, b });
    }
    Ok(u.max(a).min(b))
}

#[cfg(test)]
mod tests;
