use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{llf, ScalarKernel};
use super::state::{min_max, GridState};
use crate::apfunc::ordered_sum;
use crate::flux::PiecewiseFlux;
use crate::{Error, Result};

/// Cells handled per parallel task in a sweep.
const PAR_BLOCK: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxRule {
    Godunov,
    Llf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub rule: FluxRule,
    pub cfl: f64,
    /// Step used when the flux is locally constant.
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
}

fn default_dt_max() -> f64 {
    1.0
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            rule: FluxRule::Godunov,
            cfl: 0.45,
            dt_max: default_dt_max(),
        }
    }
}

impl SchemeConfig {
    pub fn godunov(cfl: f64) -> Self {
        Self {
            cfl,
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let max = if dim == 1 && self.rule == FluxRule::Godunov { 1.0 } else { 0.5 };
        if !(self.cfl > 0.0 && self.cfl <= max) {
            return Err(Error::InvalidScheme(format!(
                "cfl {} outside (0, {max}] for dimension {dim}",
                self.cfl
            )));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::InvalidScheme(format!("dt_max {} must be positive", self.dt_max)));
        }
        Ok(())
    }
}

fn check_shapes(state: &GridState, f: &PiecewiseFlux, cfg: &SchemeConfig) -> Result<()> {
    cfg.validate(state.grid().dim())?;
    if f.dim() != state.grid().dim() {
        return Err(Error::Shape(format!(
            "{}-component flux on a {}-dimensional grid",
            f.dim(),
            state.grid().dim()
        )));
    }
    Ok(())
}

/// Stable step `cfl · min h / (dim · L)` with `L` the flux Lipschitz bound
/// over the current range of the state.
pub fn cfl_dt(state: &GridState, f: &PiecewiseFlux, cfg: &SchemeConfig) -> Result<f64> {
    check_shapes(state, f, cfg)?;
    let (lo, hi) = state.range();
    dt_for_range(state, f, cfg, lo, hi)
}

fn dt_for_range(state: &GridState, f: &PiecewiseFlux, cfg: &SchemeConfig, lo: f64, hi: f64) -> Result<f64> {
    let lip = f.lipschitz_bound(lo, hi)?;
    let dim = state.grid().dim() as f64;
    if lip == 0.0 {
        return Ok(cfg.dt_max);
    }
    Ok((cfg.cfl * state.grid().min_h() / (dim * lip)).min(cfg.dt_max))
}

/// Working buffers for repeated split steps.
struct Stepper<'a> {
    kernels: Vec<ScalarKernel>,
    flux: &'a PiecewiseFlux,
    rule: FluxRule,
    shape: Vec<usize>,
    cell_flux: Vec<f64>,
    face_flux: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(state: &GridState, flux: &'a PiecewiseFlux, cfg: &SchemeConfig) -> Self {
        let n = state.grid().cells();
        Self {
            kernels: flux.components().iter().map(ScalarKernel::new).collect(),
            flux,
            rule: cfg.rule,
            shape: state.grid().shape().to_vec(),
            cell_flux: vec![0.0; n],
            face_flux: vec![0.0; n],
            next: vec![0.0; n],
        }
    }

    /// One step of Lie splitting over all axes, in place.
    fn step(&mut self, u: &mut Vec<f64>, dt: f64, range: (f64, f64)) -> Result<()> {
        for axis in 0..self.shape.len() {
            let alpha = match self.rule {
                FluxRule::Godunov => 0.0,
                FluxRule::Llf => self.flux.component(axis).lipschitz_bound(range.0, range.1)?,
            };
            self.sweep(u, axis, dt, alpha);
            std::mem::swap(u, &mut self.next);
        }
        Ok(())
    }

    fn sweep(&mut self, u: &[f64], axis: usize, dt: f64, alpha: f64) {
        let n = self.shape[axis];
        let stride: usize = self.shape[axis + 1..].iter().product();
        let block = n * stride;
        let r = dt * n as f64;
        let kernel = &self.kernels[axis];
        let rule = self.rule;

        let chunk = PAR_BLOCK.max(1);
        self.cell_flux
            .par_chunks_mut(chunk)
            .zip(u.par_chunks(chunk))
            .for_each(|(fv, uc)| {
                for (f, &x) in fv.iter_mut().zip(uc) {
                    *f = kernel.eval(x);
                }
            });

        let blocks_per_task = (PAR_BLOCK / block).max(1) * block;
        let fv = &self.cell_flux;
        self.face_flux
            .par_chunks_mut(blocks_per_task)
            .zip(u.par_chunks(blocks_per_task))
            .zip(fv.par_chunks(blocks_per_task))
            .for_each(|((ff, uc), fc)| {
                for ((fb, ub), fvb) in ff.chunks_mut(block).zip(uc.chunks(block)).zip(fc.chunks(block)) {
                    for k in 0..n {
                        let kr = if k + 1 == n { 0 } else { k + 1 };
                        for s in 0..stride {
                            let (i, j) = (k * stride + s, kr * stride + s);
                            fb[i] = match rule {
                                FluxRule::Godunov => kernel.godunov(ub[i], ub[j], fvb[i], fvb[j]),
                                FluxRule::Llf => llf(fvb[i], fvb[j], ub[i], ub[j], alpha),
                            };
                        }
                    }
                }
            });

        let face = &self.face_flux;
        self.next
            .par_chunks_mut(blocks_per_task)
            .zip(u.par_chunks(blocks_per_task))
            .zip(face.par_chunks(blocks_per_task))
            .for_each(|((out, uc), ff)| {
                for ((ob, ub), fb) in out.chunks_mut(block).zip(uc.chunks(block)).zip(ff.chunks(block)) {
                    for k in 0..n {
                        let kl = if k == 0 { n - 1 } else { k - 1 };
                        for s in 0..stride {
                            let i = k * stride + s;
                            ob[i] = ub[i] - r * (fb[i] - fb[kl * stride + s]);
                        }
                    }
                }
            });
    }
}

fn finish_step(
    u: &[f64],
    diag: &mut super::state::RunDiagnostics,
    step: u64,
    time: f64,
) -> Result<(f64, f64)> {
    let (lo, hi) = min_max(u);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NumericalFailure {
            step,
            time,
            detail: "non-finite cell value after update".into(),
        });
    }
    diag.record(ordered_sum(u) / u.len() as f64, lo, hi);
    Ok((lo, hi))
}

/// Evolves `state` to `t_target`; the final step is shortened to land on
/// it exactly.
pub fn advance(state: &GridState, f: &PiecewiseFlux, cfg: &SchemeConfig, t_target: f64) -> Result<GridState> {
    check_shapes(state, f, cfg)?;
    if !(t_target >= state.time()) {
        return Err(Error::Precondition(format!(
            "target time {t_target} precedes state time {}",
            state.time()
        )));
    }
    let mut stepper = Stepper::new(state, f, cfg);
    let mut u = state.values().to_vec();
    let mut diag = *state.diagnostics();
    let mut time = state.time();
    let mut range = state.range();
    let mut steps = 0u64;
    while time < t_target {
        let mut dt = dt_for_range(state, f, cfg, range.0, range.1)?;
        let last = time + dt >= t_target;
        if last {
            dt = t_target - time;
        }
        stepper.step(&mut u, dt, range)?;
        steps += 1;
        time = if last { t_target } else { time + dt };
        range = finish_step(&u, &mut diag, steps, time)?;
    }
    log::debug!("advanced to t = {t_target} in {steps} steps");
    Ok(state.evolved(u, t_target, diag))
}

/// One full split step of size `dt`, which must respect the CFL bound.
pub fn step_with_dt(state: &GridState, f: &PiecewiseFlux, cfg: &SchemeConfig, dt: f64) -> Result<GridState> {
    check_shapes(state, f, cfg)?;
    let limit = cfl_dt(state, f, cfg)?;
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!("dt {dt} outside (0, {limit}]")));
    }
    let mut stepper = Stepper::new(state, f, cfg);
    let mut u = state.values().to_vec();
    let mut diag = *state.diagnostics();
    stepper.step(&mut u, dt, state.range())?;
    let time = state.time() + dt;
    let step = diag.steps + 1;
    finish_step(&u, &mut diag, step, time)?;
    Ok(state.evolved(u, time, diag))
}

/// Largest discrete Kruzhkov entropy production over one Godunov split
/// step along each axis, for every level in `ladder`. Monotone schemes keep
/// it at round-off:
/// `|u'_i - k| - |u_i - k| + r (Q_{i+1/2} - Q_{i-1/2}) ≤ 0` with
/// `Q = G(u ∨ k, u_+ ∨ k) - G(u ∧ k, u_+ ∧ k)`.
pub fn entropy_residual(state: &GridState, f: &PiecewiseFlux, cfg: &SchemeConfig, dt: f64, ladder: &[f64]) -> Result<f64> {
    check_shapes(state, f, cfg)?;
    if cfg.rule != FluxRule::Godunov {
        return Err(Error::InvalidScheme("entropy residual is defined for the Godunov flux".into()));
    }
    let grid = state.grid().clone();
    let mut u = state.values().to_vec();
    let mut worst = f64::NEG_INFINITY;
    for axis in 0..grid.dim() {
        let single = {
            let mut s = Stepper::new(state, f, cfg);
            s.sweep(&u, axis, dt, 0.0);
            s.next
        };
        let kernel = ScalarKernel::new(f.component(axis));
        let g = |a: f64, b: f64| kernel.godunov(a, b, kernel.eval(a), kernel.eval(b));
        let n = grid.shape()[axis];
        let r = dt * n as f64;
        for &k in ladder {
            for i in 0..u.len() {
                let idx = grid.unravel(i);
                let mut right = idx.clone();
                right[axis] = (idx[axis] + 1) % n;
                let mut left = idx.clone();
                left[axis] = (idx[axis] + n - 1) % n;
                let (ul, uc, ur) = (u[grid.ravel(&left)], u[i], u[grid.ravel(&right)]);
                let q = |a: f64, b: f64| g(a.max(k), b.max(k)) - g(a.min(k), b.min(k));
                let res = (single[i] - k).abs() - (uc - k).abs() + r * (q(uc, ur) - q(ul, uc));
                worst = worst.max(res);
            }
        }
        u = single;
    }
    Ok(worst)
}
