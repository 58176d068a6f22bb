use std::fmt::Write as _;

use serde::Serialize;

use crate::lifting::LiftedProblem;
use crate::solver::{l1_deviation, GridState, SchemeConfig};
use crate::{Error, Result};

/// Deviation `∫ |v(t) − I|` over the torus at increasing times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecaySeries {
    pub level: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DecaySeries {
    /// Largest increase between consecutive values.
    pub fn max_increase(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.max_increase() <= slack
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}").expect("writing to a String");
        }
        out
    }
}

/// Evolves the lifted problem through `times`, returning the series and
/// the final state.
pub fn decay_series(problem: &LiftedProblem, cfg: &SchemeConfig, times: &[f64]) -> Result<(DecaySeries, GridState)> {
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Precondition("times must be nonnegative and strictly increasing".into()));
    }
    let level = problem.mean;
    let mut state = problem.v0.clone();
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        state = problem.advance(&state, cfg, t)?;
        values.push(l1_deviation(&state, level));
    }
    Ok((
        DecaySeries {
            level,
            times: times.to_vec(),
            values,
        },
        state,
    ))
}

/// `I + δ sin(2π(ξx − τt))`, an exact solution whenever `ξφ(u) = τu + const`
/// on `[I − δ, I + δ]`.
pub fn exact_affine_wave(level: f64, delta: f64, xi: f64, tau: f64, t: f64, x: f64) -> f64 {
    level + delta * (std::f64::consts::TAU * (xi * x - tau * t)).sin()
}
