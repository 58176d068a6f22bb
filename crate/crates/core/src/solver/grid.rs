use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MEM_CAP_ENV: &str = "APWAVE_MEM_CAP_MB";
const DEFAULT_MEM_CAP_MB: usize = 4096;
/// Working arrays per cell during a step: state, update, cell fluxes,
/// interface fluxes.
const BYTES_PER_CELL: usize = 4 * std::mem::size_of::<f64>();

/// Uniform grid on the unit torus `[0,1)^d`, `1 ≤ d ≤ 3`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    shape: Vec<usize>,
}

pub fn memory_cap_mb() -> usize {
    std::env::var(MEM_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MEM_CAP_MB)
}

impl TorusGrid {
    pub fn new(shape: Vec<usize>) -> Result<Self> {
        Self::with_cap(shape, memory_cap_mb())
    }

    pub fn with_cap(shape: Vec<usize>, cap_mb: usize) -> Result<Self> {
        if shape.is_empty() || shape.len() > 3 {
            return Err(Error::InvalidGrid(format!("dimension {} not in 1..=3", shape.len())));
        }
        if let Some(n) = shape.iter().find(|&&n| n < 4) {
            return Err(Error::InvalidGrid(format!("{n} cells per axis, need at least 4")));
        }
        let cells = shape
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidGrid("cell count overflows".into()))?;
        let needed = cells.saturating_mul(BYTES_PER_CELL) / (1 << 20);
        if needed > cap_mb {
            return Err(Error::InvalidGrid(format!(
                "{cells} cells need about {needed} MB, above the {cap_mb} MB cap ({MEM_CAP_ENV})"
            )));
        }
        Ok(Self { shape })
    }

    pub fn uniform(dim: usize, n: usize) -> Result<Self> {
        Self::new(vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn h(&self, axis: usize) -> f64 {
        1.0 / self.shape[axis] as f64
    }

    pub fn min_h(&self) -> f64 {
        (0..self.dim()).map(|j| self.h(j)).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    /// Distance in the flat array between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    /// Multi-index of flat cell `i`, last axis fastest.
    pub fn unravel(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for j in (0..self.dim()).rev() {
            idx[j] = i % self.shape[j];
            i /= self.shape[j];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&k, &n)| acc * n + k % n)
    }

    /// Midpoint of flat cell `i` in `[0,1)^d`.
    pub fn center(&self, i: usize) -> Vec<f64> {
        self.unravel(i)
            .iter()
            .zip(&self.shape)
            .map(|(&k, &n)| (k as f64 + 0.5) / n as f64)
            .collect()
    }
}
