//! The Besicovitch seminorm `N1(u) = limsup R^{-n} ∫_{C_R} |u|` for
//! trigonometric polynomials, computed two independent ways.

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::basis::IrrationalBasis;
use super::module::FreqModule;
use super::trig::TrigPolynomial;
use crate::{Error, Result};

/// Fixed chunk length for reductions; partial sums are combined in order,
/// so results do not depend on the number of worker threads.
pub(crate) const REDUCTION_CHUNK: usize = 4096;

pub(crate) fn ordered_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values
        .par_chunks(REDUCTION_CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// The periodic function `P(y) = Σ a_k e^{2πi k·y}` on T^m obtained by
/// writing every frequency in integer coordinates of a module basis.
#[derive(Clone, Debug)]
pub struct LiftedPolynomial {
    rank: usize,
    terms: Vec<(Vec<i64>, Complex64)>,
}

impl LiftedPolynomial {
    pub fn new(p: &TrigPolynomial, module: &FreqModule) -> Result<Self> {
        let rank = module.rank();
        let mut terms = Vec::with_capacity(p.len());
        for (freq, a) in p.terms() {
            let k = if freq.is_zero() {
                vec![0; rank]
            } else {
                module
                    .coordinates(freq)
                    .ok_or_else(|| {
                        Error::InvalidFrequency(format!("{freq} is not in the frequency module"))
                    })?
                    .iter()
                    .map(|x| {
                        x.to_i64()
                            .ok_or_else(|| Error::Capability(format!("coordinate {x} too large")))
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            terms.push((k, *a));
        }
        Ok(Self { rank, terms })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> &[(Vec<i64>, Complex64)] {
        &self.terms
    }

    /// Exact evaluation at a torus point.
    pub fn eval(&self, y: &[f64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in &self.terms {
            let s: f64 = k.iter().zip(y).map(|(&kj, yj)| kj as f64 * yj).sum();
            let s = s - s.floor();
            acc += a * Complex64::from_polar(1.0, TAU * s);
        }
        acc.re
    }

    /// Values at the cell midpoints of a tensor grid, last axis fastest.
    pub fn sample_midpoints(&self, cells: &[usize]) -> Vec<f64> {
        assert_eq!(cells.len(), self.rank.max(1));
        let total: usize = cells.iter().product();
        if self.rank == 0 {
            let c = self.terms.iter().map(|(_, a)| a.re).sum::<f64>();
            return vec![c; total];
        }
        // Per-axis tables of e^{2πi k y} at the midpoints, one row per term.
        let tables: Vec<Vec<Vec<Complex64>>> = (0..self.rank)
            .map(|axis| {
                let n = cells[axis];
                self.terms
                    .iter()
                    .map(|(k, _)| {
                        (0..n)
                            .map(|i| {
                                let y = (i as f64 + 0.5) / n as f64;
                                let s = k[axis] as f64 * y;
                                Complex64::from_polar(1.0, TAU * (s - s.floor()))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let last = *cells.last().unwrap();
        let mut out = vec![0.0; total];
        out.par_chunks_mut(last)
            .enumerate()
            .for_each(|(row, chunk)| {
                // Decompose the row index into the leading axes.
                let mut idx = vec![0usize; self.rank];
                let mut r = row;
                for axis in (0..self.rank - 1).rev() {
                    idx[axis] = r % cells[axis];
                    r /= cells[axis];
                }
                let prefix: Vec<Complex64> = self
                    .terms
                    .iter()
                    .enumerate()
                    .map(|(t, (_, a))| {
                        let mut z = *a;
                        for axis in 0..self.rank - 1 {
                            z *= tables[axis][t][idx[axis]];
                        }
                        z
                    })
                    .collect();
                let lt = &tables[self.rank - 1];
                for (j, v) in chunk.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (t, z) in prefix.iter().enumerate() {
                        acc += (z * lt[t][j]).re;
                    }
                    *v = acc;
                }
            });
        out
    }
}

#[derive(Clone, Debug)]
pub struct LiftedQuadrature {
    /// Stop once two successive refinements differ by less than this.
    pub tol: f64,
    pub start_cells: usize,
    pub max_cells: usize,
}

impl LiftedQuadrature {
    pub fn for_rank(rank: usize, tol: f64) -> Self {
        let max_cells = match rank {
            0 | 1 => 1 << 20,
            2 => 4096,
            _ => 256,
        };
        Self {
            tol,
            start_cells: 64.min(max_cells),
            max_cells,
        }
    }

    /// A single grid, no refinement.
    pub fn fixed(cells: usize) -> Self {
        Self {
            tol: f64::INFINITY,
            start_cells: cells,
            max_cells: cells,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WindowSchedule {
    /// Increasing window lengths R_1 < R_2 < ...
    pub windows: Vec<f64>,
    /// Midpoint samples per unit length along each axis.
    pub samples_per_unit: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum SeminormMethod<'a> {
    Lifted {
        module: &'a FreqModule,
        quadrature: LiftedQuadrature,
    },
    Windowed(WindowSchedule),
}

#[derive(Clone, Debug, Serialize)]
pub struct SeminormEstimate {
    pub value: f64,
    /// Lifted: difference of the last two refinements. Windowed: difference
    /// between the last two windows.
    pub increment: f64,
    /// Cells per axis (lifted) or the last window length (windowed).
    pub resolution: f64,
    pub warning: Option<String>,
}

/// `N1(p)`, either as the torus integral of the lifted function or as a
/// spatial average over a growing window.
pub fn n1_seminorm(
    p: &TrigPolynomial,
    basis: &IrrationalBasis,
    method: &SeminormMethod<'_>,
) -> Result<SeminormEstimate> {
    match method {
        SeminormMethod::Lifted { module, quadrature } => n1_lifted(p, module, quadrature),
        SeminormMethod::Windowed(schedule) => n1_windowed(p, basis, schedule),
    }
}

fn n1_lifted(p: &TrigPolynomial, module: &FreqModule, q: &LiftedQuadrature) -> Result<SeminormEstimate> {
    if module.rank() > 3 {
        return Err(Error::Capability(format!(
            "lifted seminorm needs rank <= 3, module has rank {}",
            module.rank()
        )));
    }
    let lifted = LiftedPolynomial::new(p, module)?;
    if lifted.rank() == 0 {
        let c = lifted.terms().iter().map(|(_, a)| a.re).sum::<f64>();
        return Ok(SeminormEstimate {
            value: c.abs(),
            increment: 0.0,
            resolution: 1.0,
            warning: None,
        });
    }
    let torus_mean_abs = |n: usize| {
        let cells = vec![n; lifted.rank()];
        let values = lifted.sample_midpoints(&cells);
        let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        ordered_sum(&abs) / values.len() as f64
    };
    let mut n = q.start_cells.max(4);
    let mut value = torus_mean_abs(n);
    let mut increment = f64::INFINITY;
    while n * 2 <= q.max_cells {
        let finer = torus_mean_abs(n * 2);
        increment = (finer - value).abs();
        value = finer;
        n *= 2;
        if increment < q.tol {
            break;
        }
    }
    let warning = (increment >= q.tol && q.tol.is_finite()).then(|| {
        format!(
            "lifted quadrature not converged: last refinement changed by {increment:e} at {n} cells per axis"
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(SeminormEstimate {
        value,
        increment: if increment.is_finite() { increment } else { 0.0 },
        resolution: n as f64,
        warning,
    })
}

fn n1_windowed(p: &TrigPolynomial, basis: &IrrationalBasis, s: &WindowSchedule) -> Result<SeminormEstimate> {
    if s.windows.is_empty() || s.windows.windows(2).any(|w| w[1] <= w[0]) || s.windows[0] <= 0.0 {
        return Err(Error::Precondition("window schedule must be positive and increasing".into()));
    }
    let eval = p.evaluator(basis)?;
    let density = s
        .samples_per_unit
        .unwrap_or_else(|| 32.0 * eval.max_frequency().max(1.0));
    let n = p.dim();
    let averages = s
        .windows
        .iter()
        .map(|&r| window_average_abs(&eval, n, r, density))
        .collect::<Result<Vec<_>>>()?;
    let value = *averages.last().unwrap();
    let increment = if averages.len() >= 2 {
        (value - averages[averages.len() - 2]).abs()
    } else {
        f64::NAN
    };
    Ok(SeminormEstimate {
        value,
        increment,
        resolution: *s.windows.last().unwrap(),
        warning: None,
    })
}

/// Midpoint average of |p| over the cube [-R/2, R/2]^n.
fn window_average_abs(
    eval: &super::trig::TrigEvaluator,
    n: usize,
    r: f64,
    density: f64,
) -> Result<f64> {
    let per_axis = ((r * density).ceil() as usize).max(1);
    let total = per_axis
        .checked_pow(n as u32)
        .filter(|&t| t <= 1 << 28)
        .ok_or_else(|| Error::Capability(format!("window {r} in {n} dimensions is too large")))?;
    let h = r / per_axis as f64;
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .with_min_len(1024)
        .map(|flat| {
            let mut x = vec![0.0; n];
            let mut c = flat;
            for xi in x.iter_mut().rev() {
                *xi = -r / 2.0 + ((c % per_axis) as f64 + 0.5) * h;
                c /= per_axis;
            }
            eval.eval(&x).map(f64::abs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ordered_sum(&values) / total as f64)
}
