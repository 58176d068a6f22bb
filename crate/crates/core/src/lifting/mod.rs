//! Quasi-periodic problems on the line as periodic problems on a torus:
//! `u0(x) = v0(z + y(x))` with `y_j = λ_j·x`, and lifted flux `λ_j·φ`.

use serde::Serialize;

use crate::apfunc::{
    mean_and_coefficients, module_basis_with_shape, FreqModule, IrrationalBasis, LiftedPolynomial,
    TrigPolynomial,
};
use crate::flux::{lift_flux, PiecewiseFlux};
use crate::solver::{advance, mean_mass, GridState, RunDiagnostics, SchemeConfig, TorusGrid};
use crate::{Error, Result};

/// Linear embedding `x ↦ z + (λ_1·x, ..., λ_m·x) mod 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMap {
    module: FreqModule,
    rows: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl EmbeddingMap {
    pub fn new(module: FreqModule, basis: &IrrationalBasis, offset: Vec<f64>) -> Result<Self> {
        let rows = module.basis_values(basis);
        if offset.len() != rows.len() {
            return Err(Error::Shape(format!(
                "offset of length {} for a rank-{} module",
                offset.len(),
                rows.len()
            )));
        }
        if offset.iter().any(|z| !(0.0..1.0).contains(z)) {
            return Err(Error::Precondition("offset coordinates must lie in [0, 1)".into()));
        }
        Ok(Self { module, rows, offset })
    }

    pub fn module(&self) -> &FreqModule {
        &self.module
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Same directions with the offset moved by `-λ_j·s·t`, which follows a
    /// frame travelling at speed `s` for time `t` (one spatial dimension).
    pub fn comoving(&self, s: f64, t: f64) -> Self {
        let offset = self
            .rows
            .iter()
            .zip(&self.offset)
            .map(|(lam, z)| (z - lam[0] * s * t).rem_euclid(1.0) % 1.0)
            .collect();
        Self {
            offset,
            ..self.clone()
        }
    }

    pub fn with_offset(&self, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != self.rank() || offset.iter().any(|z| !(0.0..1.0).contains(z)) {
            return Err(Error::Precondition("offset must have rank entries in [0, 1)".into()));
        }
        Ok(Self {
            offset,
            ..self.clone()
        })
    }

    /// Torus point `z + y(x)` reduced to `[0,1)^m`.
    pub fn point(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.offset)
            .map(|(lam, z)| {
                let y: f64 = lam.iter().zip(x).map(|(l, xi)| l * xi).sum::<f64>() + z;
                y - y.floor()
            })
            .collect()
    }
}

/// Torus problem equivalent to a quasi-periodic Cauchy problem.
#[derive(Clone, Debug)]
pub struct LiftedProblem {
    pub v0: GridState,
    pub flux: PiecewiseFlux,
    pub map: EmbeddingMap,
    /// Speed of the frame the lifted flux is written in.
    pub frame_speed: f64,
    pub mean: f64,
}

impl LiftedProblem {
    /// Embedding that reads the lab-frame solution at time `t` off the
    /// torus state of this problem.
    pub fn map_at(&self, t: f64) -> EmbeddingMap {
        if self.frame_speed == 0.0 {
            self.map.clone()
        } else {
            self.map.comoving(self.frame_speed, t)
        }
    }

    pub fn advance(&self, state: &GridState, cfg: &SchemeConfig, t: f64) -> Result<GridState> {
        advance(state, &self.flux, cfg, t)
    }
}

/// Module generated by the spectrum, or the unit module for constant data.
pub fn spectrum_module(u0: &TrigPolynomial) -> FreqModule {
    let (_, sp) = mean_and_coefficients(u0);
    let m = module_basis_with_shape(&sp.into_iter().collect::<Vec<_>>(), u0.dim(), u0.basis_len());
    if m.rank() == 0 {
        FreqModule::unit(u0.dim(), u0.basis_len())
    } else {
        m
    }
}

pub fn build_torus_problem(
    u0: &TrigPolynomial,
    basis: &IrrationalBasis,
    f: &PiecewiseFlux,
    grid: TorusGrid,
) -> Result<LiftedProblem> {
    build_torus_problem_in_frame(u0, basis, f, grid, &spectrum_module(u0), 0.0)
}

/// Lifts `u0` over a given module containing its spectrum, with the flux
/// written in a frame moving at speed `frame_speed` (`φ - s u`).
pub fn build_torus_problem_in_frame(
    u0: &TrigPolynomial,
    basis: &IrrationalBasis,
    f: &PiecewiseFlux,
    grid: TorusGrid,
    module: &FreqModule,
    frame_speed: f64,
) -> Result<LiftedProblem> {
    if module.rank() > 3 {
        return Err(Error::Capability(format!(
            "frequency module of rank {} needs a torus of dimension above 3",
            module.rank()
        )));
    }
    if module.rank() != grid.dim() {
        return Err(Error::Shape(format!(
            "rank-{} module on a {}-dimensional grid",
            module.rank(),
            grid.dim()
        )));
    }
    let lifted = LiftedPolynomial::new(u0, module)?;
    let values = lifted.sample_midpoints(grid.shape());
    let v0 = GridState::new(grid, values, 0.0)?;
    let frame_flux = if frame_speed == 0.0 {
        f.clone()
    } else {
        f.minus_linear(&vec![frame_speed; f.dim()])?
    };
    let flux = lift_flux(&frame_flux, module, basis)?;
    let map = EmbeddingMap::new(module.clone(), basis, vec![0.0; module.rank()])?;
    let (mean, _) = mean_and_coefficients(u0);
    Ok(LiftedProblem {
        v0,
        flux,
        map,
        frame_speed,
        mean,
    })
}

/// Multilinear interpolation of cell averages, with nodes at cell centres.
pub fn interpolate(state: &GridState, y: &[f64]) -> f64 {
    let shape = state.grid().shape();
    let dim = shape.len();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for j in 0..dim {
        let pos = y[j] * shape[j] as f64 - 0.5;
        let k = pos.floor();
        frac[j] = pos - k;
        base[j] = (k as i64).rem_euclid(shape[j] as i64) as usize;
    }
    let values = state.values();
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for j in 0..dim {
            let up = (corner >> j) & 1 == 1;
            w *= if up { frac[j] } else { 1.0 - frac[j] };
            let k = if up { (base[j] + 1) % shape[j] } else { base[j] };
            flat = flat * shape[j] + k;
        }
        if w != 0.0 {
            acc += w * values[flat];
        }
    }
    acc
}

/// The state `y ↦ v(y + d)`, interpolated at cell centres.
pub fn shifted_state(state: &GridState, d: &[f64]) -> Result<GridState> {
    use rayon::prelude::*;
    let grid = state.grid().clone();
    if d.len() != grid.dim() {
        return Err(Error::Shape("shift length differs from grid dimension".into()));
    }
    if d.iter().all(|&x| x == 0.0) {
        return Ok(state.clone());
    }
    let values = (0..grid.cells())
        .into_par_iter()
        .map(|i| {
            let y: Vec<f64> = grid
                .center(i)
                .iter()
                .zip(d)
                .map(|(c, s)| {
                    let v = c + s;
                    v - v.floor()
                })
                .collect();
            interpolate(state, &y)
        })
        .collect();
    GridState::new(grid, values, state.time())
}

/// Values of the line solution `v(z + y(x))` at each `x`.
pub fn sample_along_line(state: &GridState, map: &EmbeddingMap, xs: &[f64]) -> Result<Vec<f64>> {
    if state.grid().dim() != map.rank() {
        return Err(Error::Shape(format!(
            "rank-{} map on a {}-dimensional state",
            map.rank(),
            state.grid().dim()
        )));
    }
    Ok(xs.iter().map(|&x| interpolate(state, &map.point(&[x]))).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErgodicGap {
    pub line_mean: f64,
    pub torus_mean: f64,
    pub gap: f64,
}

/// Compares the average of `w` along the line over `[0, window]` with its
/// torus mean.
pub fn ergodic_mean_check(w: &GridState, map: &EmbeddingMap, window: f64) -> Result<ErgodicGap> {
    if !(window > 0.0) {
        return Err(Error::Precondition("window must be positive".into()));
    }
    let speed = map
        .rows()
        .iter()
        .zip(w.grid().shape())
        .map(|(lam, &n)| lam[0].abs() * n as f64)
        .fold(1.0, f64::max);
    // About four samples per cell crossed.
    let samples = (window * speed * 4.0).ceil() as usize;
    let xs: Vec<f64> = (0..samples).map(|i| (i as f64 + 0.5) * window / samples as f64).collect();
    let values = sample_along_line(w, map, &xs)?;
    let line_mean = crate::apfunc::ordered_sum(&values) / samples as f64;
    let torus_mean = mean_mass(w);
    Ok(ErgodicGap {
        line_mean,
        torus_mean,
        gap: (line_mean - torus_mean).abs(),
    })
}

/// Continued-fraction convergents `p/q` of a positive real.
pub fn convergents(r: f64, max_denominator: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut x = r;
    for _ in 0..64 {
        let a = x.floor();
        if a > u64::MAX as f64 / 4.0 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_denominator {
            break;
        }
        out.push((p2, q2));
        let rest = x - a as f64;
        if rest < 1e-12 {
            break;
        }
        x = 1.0 / rest;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    out
}

/// Super-cell length on which `u0` nearly repeats, from the last convergent
/// of `λ_2/λ_1` with denominator at most `max_denominator`.
pub fn near_period(module: &FreqModule, basis: &IrrationalBasis, max_denominator: u64) -> Result<f64> {
    let lam: Vec<f64> = module.basis_values(basis).iter().map(|v| v[0]).collect();
    match lam.as_slice() {
        [l1] => Ok(max_denominator as f64 / l1.abs()),
        [l1, l2] => {
            let r = (l2 / l1).abs();
            let (_, q) = *convergents(r, max_denominator)
                .last()
                .ok_or_else(|| Error::Precondition("no convergent below the denominator cap".into()))?;
            Ok(q as f64 / l1.abs())
        }
        _ => Err(Error::Capability(format!(
            "direct runs support rank 1 or 2, got rank {}",
            lam.len()
        ))),
    }
}

/// `max |u0(x + L) − u0(x)|` on a uniform sample of `[0, L)`.
pub fn near_period_defect(u0: &TrigPolynomial, basis: &IrrationalBasis, l: f64, samples: usize) -> Result<f64> {
    let eval = u0.evaluator(basis)?;
    (0..samples).try_fold(0.0f64, |m, i| {
        let x = l * i as f64 / samples as f64;
        Ok(m.max((eval.eval_1d(x + l)? - eval.eval_1d(x)?).abs()))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolutions {
    /// Cells per axis of the lifted torus.
    pub torus_cells: usize,
    /// Cells per unit length of the direct super-cell run.
    pub direct_cells_per_unit: usize,
    pub max_denominator: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResolutions {
    pub torus: Vec<usize>,
    pub direct_cells: usize,
    pub direct_cells_per_unit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    #[serde(rename = "L")]
    pub l: f64,
    pub near_period_defect: f64,
    pub trusted_window: [f64; 2],
    pub t: f64,
    pub l1_discrepancy: f64,
    pub grid_resolutions: GridResolutions,
    pub lipschitz: f64,
    /// Direct run, then lifted run.
    pub run_diagnostics: [RunDiagnostics; 2],
}

/// Solves the same quasi-periodic problem twice, directly on a near-period
/// super-cell and on the lifted torus, and compares them on the inner
/// window `[L/4, 3L/4]`, which boundary effects cannot reach by time `t`.
pub fn compare_direct_vs_lifted(
    u0: &TrigPolynomial,
    basis: &IrrationalBasis,
    f: &PiecewiseFlux,
    cfg: &SchemeConfig,
    t: f64,
    res: &Resolutions,
) -> Result<DiscrepancyReport> {
    if u0.dim() != 1 || f.dim() != 1 {
        return Err(Error::Precondition("direct comparison is one-dimensional".into()));
    }
    let module = spectrum_module(u0);
    if module.rank() > 2 {
        return Err(Error::Capability(format!("rank {} above 2", module.rank())));
    }
    let l = near_period(&module, basis, res.max_denominator)?;
    let amp = u0.coefficient_l1();
    let (wlo, whi) = f.working_interval();
    let lip = f.lipschitz_bound((-amp).max(wlo), amp.min(whi))?;
    if 2.0 * t * lip >= l / 4.0 {
        return Err(Error::Precondition(format!(
            "t = {t} too large for the trusted window; the largest admissible t is {}",
            l / (8.0 * lip)
        )));
    }
    let defect = near_period_defect(u0, basis, l, 8192)?;

    let direct_cells = (l * res.direct_cells_per_unit as f64).round() as usize;
    let direct_grid = TorusGrid::new(vec![direct_cells])?;
    let torus_grid = TorusGrid::new(vec![res.torus_cells; module.rank()])?;
    let eval = u0.evaluator(basis)?;
    let dx = l / direct_cells as f64;
    let initial = (0..direct_cells)
        .map(|i| eval.eval_1d((i as f64 + 0.5) * dx))
        .collect::<Result<Vec<_>>>()?;
    let direct0 = GridState::new(direct_grid, initial, 0.0)?;
    let scaled = f.scaled(1.0 / l);
    let problem = build_torus_problem_in_frame(u0, basis, f, torus_grid.clone(), &module, 0.0)?;

    let direct_cfg = *cfg;
    let lifted_cfg = SchemeConfig {
        cfl: cfg.cfl.min(0.5),
        ..*cfg
    };
    let (direct, lifted) = rayon::join(
        || advance(&direct0, &scaled, &direct_cfg, t),
        || problem.advance(&problem.v0, &lifted_cfg, t),
    );
    let (direct, lifted) = (direct?, lifted?);

    let (a, b) = (l / 4.0, 3.0 * l / 4.0);
    let first = (a / dx).ceil() as usize;
    let last = ((b / dx).floor() as usize).min(direct_cells);
    let xs: Vec<f64> = (first..last).map(|i| (i as f64 + 0.5) * dx).collect();
    let line = sample_along_line(&lifted, &problem.map_at(t), &xs)?;
    let diffs: Vec<f64> = line
        .iter()
        .zip(&direct.values()[first..last])
        .map(|(p, q)| (p - q).abs())
        .collect();
    let l1 = crate::apfunc::ordered_sum(&diffs) / diffs.len() as f64;
    Ok(DiscrepancyReport {
        l,
        near_period_defect: defect,
        trusted_window: [a, b],
        t,
        l1_discrepancy: l1,
        grid_resolutions: GridResolutions {
            torus: torus_grid.shape().to_vec(),
            direct_cells,
            direct_cells_per_unit: res.direct_cells_per_unit,
        },
        lipschitz: lip,
        run_diagnostics: [*direct.diagnostics(), *lifted.diagnostics()],
    })
}

/// `u0(x)` sampled at the centres of `n` cells of `[0, l)`.
pub fn sample_line(u0: &TrigPolynomial, basis: &IrrationalBasis, l: f64, n: usize) -> Result<Vec<f64>> {
    let eval = u0.evaluator(basis)?;
    (0..n).map(|i| eval.eval_1d((i as f64 + 0.5) * l / n as f64)).collect()
}
