use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::TorusGrid;
use crate::apfunc::ordered_sum;
use crate::{Error, Result};

/// Conservation and range bookkeeping carried along a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub reference_mean: f64,
    pub reference_min: f64,
    pub reference_max: f64,
    pub steps: u64,
    /// Largest `|mean - reference_mean|` relative to the data scale.
    pub max_mean_drift: f64,
    /// Largest overshoot of the reference range, in units of `u`.
    pub max_range_excess: f64,
}

impl RunDiagnostics {
    fn start(mean: f64, min: f64, max: f64) -> Self {
        Self {
            reference_mean: mean,
            reference_min: min,
            reference_max: max,
            steps: 0,
            max_mean_drift: 0.0,
            max_range_excess: 0.0,
        }
    }

    /// Magnitude used to make the mean drift relative.
    pub fn scale(&self) -> f64 {
        self.reference_mean
            .abs()
            .max(self.reference_min.abs())
            .max(self.reference_max.abs())
            .max(f64::MIN_POSITIVE)
    }

    pub(crate) fn record(&mut self, mean: f64, min: f64, max: f64) {
        self.steps += 1;
        let drift = (mean - self.reference_mean).abs() / self.scale();
        self.max_mean_drift = self.max_mean_drift.max(drift);
        let excess = (min - self.reference_min).min(0.0).abs().max((max - self.reference_max).max(0.0));
        self.max_range_excess = self.max_range_excess.max(excess);
    }
}

/// Cell averages on a torus grid at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    grid: TorusGrid,
    values: Vec<f64>,
    time: f64,
    diagnostics: RunDiagnostics,
}

impl GridState {
    pub fn new(grid: TorusGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::Shape(format!(
                "{} values for {} cells",
                values.len(),
                grid.cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at cell {i}")));
        }
        let (min, max) = min_max(&values);
        let mean = ordered_sum(&values) / values.len() as f64;
        Ok(Self {
            grid,
            values,
            time,
            diagnostics: RunDiagnostics::start(mean, min, max),
        })
    }

    /// Samples `f` at cell midpoints.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        let values = (0..grid.cells()).into_par_iter().map(|i| f(&grid.center(i))).collect();
        Self::new(grid, values, 0.0)
    }

    pub fn constant(grid: TorusGrid, k: f64) -> Result<Self> {
        let n = grid.cells();
        Self::new(grid, vec![k; n], 0.0)
    }

    pub(crate) fn evolved(&self, values: Vec<f64>, time: f64, diagnostics: RunDiagnostics) -> Self {
        Self {
            grid: self.grid.clone(),
            values,
            time,
            diagnostics,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn diagnostics(&self) -> &RunDiagnostics {
        &self.diagnostics
    }

    pub fn range(&self) -> (f64, f64) {
        min_max(&self.values)
    }

    /// Same values with a different time stamp and fresh diagnostics.
    pub fn restarted(&self, time: f64) -> Self {
        let mut s = self.clone();
        s.time = time;
        let (min, max) = s.range();
        s.diagnostics = RunDiagnostics::start(mean_mass(&s), min, max);
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        let axes: Vec<String> = (0..self.grid.dim()).map(|j| format!("i{j}")).collect();
        writeln!(w, "{},value", axes.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let idx: Vec<String> = self.grid.unravel(i).iter().map(|k| k.to_string()).collect();
            writeln!(w, "{},{v:e}", idx.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn sidecar(&self, format: &str) -> SnapshotMeta {
        let (min, max) = self.range();
        SnapshotMeta {
            shape: self.grid.shape().to_vec(),
            time: self.time,
            format: format.to_string(),
            order: "last-axis-fastest".into(),
            mean: mean_mass(self),
            min,
            max,
        }
    }

    /// Writes `<stem>.csv` or `<stem>.bin` plus `<stem>.json`.
    pub fn write_snapshot(&self, dir: &Path, stem: &str, binary: bool) -> Result<()> {
        let (ext, format) = if binary { ("bin", "f64-le") } else { ("csv", "csv") };
        let data = dir.join(format!("{stem}.{ext}"));
        if binary {
            self.write_binary(&data)?;
        } else {
            self.write_csv(&data)?;
        }
        let meta = serde_json::to_string_pretty(&self.sidecar(format))?;
        std::fs::write(dir.join(format!("{stem}.json")), meta)?;
        Ok(())
    }

    pub fn read_snapshot(dir: &Path, stem: &str) -> Result<Self> {
        let meta: SnapshotMeta = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let grid = TorusGrid::new(meta.shape.clone())?;
        let values = if meta.format == "csv" {
            let file = std::io::BufReader::new(std::fs::File::open(dir.join(format!("{stem}.csv")))?);
            file.lines()
                .skip(1)
                .map(|line| {
                    let line = line?;
                    let v = line.rsplit(',').next().unwrap_or_default();
                    v.parse::<f64>().map_err(|e| Error::Parse(format!("{v}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            let mut bytes = Vec::new();
            std::fs::File::open(dir.join(format!("{stem}.bin")))?.read_to_end(&mut bytes)?;
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect()
        };
        Self::new(grid, values, meta.time)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub shape: Vec<usize>,
    pub time: f64,
    pub format: String,
    pub order: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Torus-normalized L1 distance `Σ |v1 - v2| · cell volume`.
pub fn l1_distance(s1: &GridState, s2: &GridState) -> Result<f64> {
    if s1.grid != s2.grid {
        return Err(Error::Shape(format!(
            "grids {:?} and {:?} differ",
            s1.grid.shape(),
            s2.grid.shape()
        )));
    }
    let diff: Vec<f64> = s1.values.iter().zip(&s2.values).map(|(a, b)| (a - b).abs()).collect();
    Ok(ordered_sum(&diff) / diff.len() as f64)
}

/// Volume-weighted mean of the cell values.
pub fn mean_mass(state: &GridState) -> f64 {
    ordered_sum(&state.values) / state.values.len() as f64
}

/// `∫ |v - level|` over the torus.
pub fn l1_deviation(state: &GridState, level: f64) -> f64 {
    let diff: Vec<f64> = state.values.iter().map(|v| (v - level).abs()).collect();
    ordered_sum(&diff) / diff.len() as f64
}
