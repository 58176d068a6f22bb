use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::speed::{default_search, estimate_speed, SpeedEstimate};
use crate::apfunc::{
    module_basis_with_shape, mean_and_coefficients, n1_seminorm, FreqModule, IntLattice, IrrationalBasis,
    LiftedQuadrature, SeminormMethod, TrigPolynomial,
};
use crate::flux::{affine_residual, maximal_affine_interval, AffineVicinity, PiecewiseFlux};
use crate::lifting::{build_torus_problem_in_frame, sample_along_line, shifted_state, LiftedProblem};
use crate::solver::{l1_distance, mean_mass, GridState, RunDiagnostics, SchemeConfig, TorusGrid};
use crate::{Error, Result};

const CONVERGED_INCREMENT: f64 = 1e-12;
const MAX_COEFFICIENTS: usize = 16;

/// `t_k = t0·r^k` for `k = 0..count`.
pub fn geometric_schedule(t0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * ratio.powi(k as i32)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WaveTolerances {
    pub affine: f64,
    pub mean: f64,
    pub leakage: f64,
    /// Allowed spread of speed estimates, in grid-shift quanta.
    pub speed_quanta: f64,
}

impl Default for WaveTolerances {
    fn default() -> Self {
        Self {
            affine: 1e-10,
            mean: 1e-3,
            leakage: 1e-6,
            speed_quanta: 3.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    pub quantile: f64,
    pub tolerances: WaveTolerances,
    /// Points sampled along the line for the reported profile.
    pub line_samples: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            quantile: 1e-3,
            tolerances: WaveTolerances::default(),
            line_samples: 256,
        }
    }
}

/// Settings for the profile operator.
#[derive(Clone, Debug)]
pub struct WaveConfig {
    /// Cells per torus axis.
    pub cells: usize,
    pub scheme: SchemeConfig,
    pub schedule: Vec<f64>,
    pub options: ProfileOptions,
    /// Torus module; defaults to the module of the spectrum.
    pub module: Option<FreqModule>,
}

impl WaveConfig {
    pub fn new(cells: usize) -> Self {
        Self {
            cells,
            scheme: SchemeConfig::default(),
            schedule: geometric_schedule(1.0, 2.0, 6),
            options: ProfileOptions::default(),
            module: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedConsistency {
    pub pass: bool,
    pub spread: f64,
    pub quantum: f64,
    pub estimates: Vec<SpeedEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdicts {
    pub affine_on_range: Verdict,
    pub mean_matches_i: Verdict,
    pub spectrum_in_m0: Verdict,
    pub speed_consistency: SpeedConsistency,
    pub maximum_principle: Verdict,
}

impl Verdicts {
    pub fn all_pass(&self) -> bool {
        self.affine_on_range.pass
            && self.mean_matches_i.pass
            && self.spectrum_in_m0.pass
            && self.speed_consistency.pass
            && self.maximum_principle.pass
    }
}

/// Fourier coefficient of the profile at integer torus mode `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeCoefficient {
    pub k: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveReport {
    pub level: f64,
    pub vicinity: AffineVicinity,
    pub speed: f64,
    /// `affine_slope`, `estimate` or `degenerate`.
    pub speed_source: String,
    pub times: Vec<f64>,
    pub cauchy_increments: Vec<f64>,
    pub increments_decreasing: bool,
    pub nonconvergence: bool,
    /// `‖u(t_k, ·+ct_k) − w_k‖` for each time.
    pub squeeze_residuals: Vec<f64>,
    /// Quantile-guarded range of the profile.
    pub segment: [f64; 2],
    /// Quantile-guarded range of the shifted solution at the last time.
    pub solution_segment: [f64; 2],
    pub profile_mean: f64,
    pub profile_line_span: f64,
    pub profile_line: Vec<f64>,
    pub coefficients: Vec<ModeCoefficient>,
    pub verdicts: Verdicts,
    pub torus_shape: Vec<usize>,
    pub run_diagnostics: RunDiagnostics,
    #[serde(skip)]
    pub profile: GridState,
}

/// `[a, b]` between the `q` and `1 − q` quantiles of the values.
pub fn guarded_range(values: &[f64], q: f64) -> [f64; 2] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let skip = ((q * n as f64).floor() as usize).min(n.saturating_sub(1) / 2);
    [v[skip], v[n - 1 - skip]]
}

/// Normalised discrete Fourier transform over all axes of a grid state.
pub fn torus_dft(state: &GridState) -> Vec<Complex64> {
    let grid = state.grid();
    let mut data: Vec<Complex64> = state.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    for axis in 0..grid.dim() {
        let n = grid.shape()[axis];
        let stride = grid.stride(axis);
        let fft = planner.plan_fft_forward(n);
        let mut line = vec![Complex64::default(); n];
        for start in 0..data.len() {
            if (start / stride) % n != 0 {
                continue;
            }
            for (i, z) in line.iter_mut().enumerate() {
                *z = data[start + i * stride];
            }
            fft.process(&mut line);
            for (i, z) in line.iter().enumerate() {
                data[start + i * stride] = *z;
            }
        }
    }
    let scale = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    data
}

fn signed_mode(grid: &TorusGrid, i: usize) -> Vec<i64> {
    grid.unravel(i)
        .iter()
        .zip(grid.shape())
        .map(|(&k, &n)| if 2 * k > n { k as i64 - n as i64 } else { k as i64 })
        .collect()
}

/// Fourier mass off the lattice, and the largest coefficients on it.
fn spectral_split(state: &GridState, lattice: &IntLattice) -> (f64, Vec<ModeCoefficient>) {
    let grid = state.grid();
    let dft = torus_dft(state);
    let mut off = Vec::new();
    let mut on = Vec::new();
    for (i, z) in dft.iter().enumerate() {
        let k = signed_mode(grid, i);
        if lattice.contains(&k) {
            on.push((k, *z));
        } else {
            off.push(z.norm());
        }
    }
    off.sort_by(f64::total_cmp);
    let leakage = if off.is_empty() { 0.0 } else { crate::apfunc::ordered_sum(&off) };
    on.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()).then_with(|| a.0.cmp(&b.0)));
    let coefficients = on
        .into_iter()
        .filter(|(_, z)| z.norm() > 1e-12)
        .take(MAX_COEFFICIENTS)
        .map(|(k, z)| ModeCoefficient { k, re: z.re, im: z.im })
        .collect();
    (leakage, coefficients)
}

fn cut_state(state: &GridState, a: f64, b: f64) -> Result<GridState> {
    let values = state.values().iter().map(|&u| u.max(a).min(b)).collect();
    GridState::new(state.grid().clone(), values, state.time())
}

fn spectrum_lattice(problem: &LiftedProblem, u0: &TrigPolynomial) -> Result<IntLattice> {
    let (_, sp) = mean_and_coefficients(u0);
    let m0 = module_basis_with_shape(&sp.into_iter().collect::<Vec<_>>(), u0.dim(), u0.basis_len());
    problem
        .map
        .module()
        .sublattice(&m0)
        .ok_or_else(|| Error::Precondition("torus module does not contain the spectrum".into()))
}

/// Cut-off profiles `w_k = s_{a,b}(u(t_k, · + c t_k))` of an evolved lifted
/// problem, with every verdict filled in. `states` are the torus states at
/// increasing times.
pub fn extract_profile(
    problem: &LiftedProblem,
    u0: &TrigPolynomial,
    f: &PiecewiseFlux,
    states: &[GridState],
    speed: f64,
    vicinity: &AffineVicinity,
    opts: &ProfileOptions,
) -> Result<WaveReport> {
    if states.len() < 3 {
        return Err(Error::Precondition("profile extraction needs at least three times".into()));
    }
    if states.windows(2).any(|w| !(w[1].time() > w[0].time())) {
        return Err(Error::Precondition("states must have increasing times".into()));
    }
    if f.dim() != 1 {
        return Err(Error::Capability("traveling profiles are one-dimensional".into()));
    }
    let directions: Vec<f64> = problem.map.rows().iter().map(|r| r[0]).collect();
    let (a, b) = vicinity.levels();
    let mut shifted = Vec::with_capacity(states.len());
    let mut profiles = Vec::with_capacity(states.len());
    let mut squeeze = Vec::with_capacity(states.len());
    for s in states {
        let d: Vec<f64> = directions
            .iter()
            .map(|l| {
                let v = l * (speed - problem.frame_speed) * s.time();
                v - v.floor()
            })
            .collect();
        let moved = shifted_state(s, &d)?;
        let w = cut_state(&moved, a, b)?;
        squeeze.push(l1_distance(&moved, &w)?);
        shifted.push(moved);
        profiles.push(w);
    }
    let increments: Vec<f64> = profiles
        .windows(2)
        .map(|w| l1_distance(&w[1], &w[0]))
        .collect::<Result<_>>()?;
    let increments_decreasing = increments
        .windows(2)
        .all(|w| w[1] < w[0] || w[1] <= CONVERGED_INCREMENT);
    let last_inc = *increments.last().expect("at least two increments");
    let nonconvergence =
        last_inc > CONVERGED_INCREMENT && increments.windows(2).all(|w| w[1] >= w[0]);
    if nonconvergence {
        log::warn!("cauchy increments of the shifted profiles do not decrease: {increments:?}");
    }

    let profile = profiles.last().expect("nonempty").clone();
    let segment = guarded_range(profile.values(), opts.quantile);
    let solution_segment = guarded_range(shifted.last().expect("nonempty").values(), opts.quantile);
    let tol = &opts.tolerances;

    let phi = f.component(0);
    let (slope, offset) = match vicinity {
        AffineVicinity::Interval(iv) => (iv.slope, iv.offset),
        AffineVicinity::Point { level } => (speed, phi.eval(*level)? - speed * level),
    };
    let affine = affine_residual(phi, segment[0], segment[1], slope, offset);
    let profile_mean = mean_mass(&profile);
    let mean_gap = (profile_mean - problem.mean).abs();
    let lattice = spectrum_lattice(problem, u0)?;
    let (leakage, coefficients) = spectral_split(&profile, &lattice);
    let sup0 = problem.v0.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sup = profile.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let speed_consistency = speed_spread(&profiles, &directions, speed, tol.speed_quanta)?;
    let degenerate = speed_consistency.estimates.iter().all(|e| e.degenerate);
    let speed_source = match vicinity {
        AffineVicinity::Interval(_) if !degenerate => "affine_slope",
        _ if degenerate => "degenerate",
        _ => "estimate",
    };

    let span = 1.0 / directions.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let xs: Vec<f64> = (0..opts.line_samples)
        .map(|i| span * i as f64 / opts.line_samples as f64)
        .collect();
    let profile_line = sample_along_line(&profile, &problem.map, &xs)?;

    Ok(WaveReport {
        level: problem.mean,
        vicinity: *vicinity,
        speed,
        speed_source: speed_source.into(),
        times: states.iter().map(|s| s.time()).collect(),
        cauchy_increments: increments,
        increments_decreasing,
        nonconvergence,
        squeeze_residuals: squeeze,
        segment,
        solution_segment,
        profile_mean,
        profile_line_span: span,
        profile_line,
        coefficients,
        verdicts: Verdicts {
            affine_on_range: Verdict {
                pass: affine <= tol.affine,
                residual: affine,
            },
            mean_matches_i: Verdict {
                pass: mean_gap <= tol.mean,
                residual: mean_gap,
            },
            spectrum_in_m0: Verdict {
                pass: leakage <= tol.leakage,
                residual: leakage,
            },
            speed_consistency,
            maximum_principle: Verdict {
                pass: sup <= sup0 * (1.0 + 1e-12),
                residual: (sup - sup0).max(0.0),
            },
        },
        torus_shape: profile.grid().shape().to_vec(),
        run_diagnostics: *states.last().expect("nonempty").diagnostics(),
        profile,
    })
}

/// Speed estimates on up to three disjoint pairs of late profiles. The
/// profiles are already written in the frame moving at `speed`.
fn speed_spread(profiles: &[GridState], directions: &[f64], speed: f64, quanta: f64) -> Result<SpeedConsistency> {
    let k = profiles.len();
    let pairs: Vec<(usize, usize)> = if k >= 6 {
        vec![(k - 6, k - 5), (k - 4, k - 3), (k - 2, k - 1)]
    } else {
        (0..k - 1).map(|i| (i, i + 1)).collect()
    };
    let estimates: Vec<SpeedEstimate> = pairs
        .iter()
        .map(|&(i, j)| {
            let dt = profiles[j].time() - profiles[i].time();
            estimate_speed(
                &profiles[i],
                &profiles[j],
                directions,
                speed,
                dt,
                default_search(speed, directions, dt),
            )
        })
        .collect::<Result<_>>()?;
    let live: Vec<&SpeedEstimate> = estimates.iter().filter(|e| !e.degenerate).collect();
    let quantum = estimates.iter().fold(0.0f64, |m, e| m.max(e.quantum));
    let spread = if live.is_empty() {
        0.0
    } else {
        let (lo, hi) = live
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e.speed), b.max(e.speed)));
        hi - lo
    };
    Ok(SpeedConsistency {
        pass: spread <= quanta * quantum,
        spread,
        quantum,
        estimates,
    })
}

/// Evolves the lifted problem and records its state at each time.
pub fn evolve_schedule(problem: &LiftedProblem, cfg: &SchemeConfig, times: &[f64]) -> Result<Vec<GridState>> {
    let mut state = problem.v0.clone();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        state = problem.advance(&state, cfg, t)?;
        out.push(state.clone());
    }
    Ok(out)
}

/// The profile operator: traveling-wave profile reached by the entropy
/// solution from `u0`.
#[allow(non_snake_case)]
pub fn profile_operator_T(
    u0: &TrigPolynomial,
    basis: &IrrationalBasis,
    f: &PiecewiseFlux,
    cfg: &WaveConfig,
) -> Result<WaveReport> {
    if u0.dim() != 1 || f.dim() != 1 {
        return Err(Error::Capability("the profile operator is defined in one space dimension".into()));
    }
    let module = match &cfg.module {
        Some(m) => m.clone(),
        None => crate::lifting::spectrum_module(u0),
    };
    if module.rank() > 2 {
        return Err(Error::Capability(format!(
            "profile operator supports rank <= 2, module has rank {}",
            module.rank()
        )));
    }
    let (level, _) = mean_and_coefficients(u0);
    let vicinity = maximal_affine_interval(f.component(0), level)?;
    let speed = vicinity.slope();
    let grid = TorusGrid::uniform(module.rank(), cfg.cells)?;
    let problem = build_torus_problem_in_frame(u0, basis, f, grid, &module, speed)?;
    let states = evolve_schedule(&problem, &cfg.scheme, &cfg.schedule)?;
    extract_profile(&problem, u0, f, &states, speed, &vicinity, &cfg.options)
}

#[derive(Clone, Debug, Serialize)]
pub struct NonexpansiveReport {
    pub d_profiles: f64,
    pub d_initial: f64,
    pub allowance: f64,
    /// `d_initial − d_profiles + allowance`; nonnegative when the check passes.
    pub slack: f64,
    pub pass: bool,
    pub speeds: [f64; 2],
    pub run_diagnostics: [RunDiagnostics; 2],
}

/// Compares `N1(T u01 − T u02)` with `N1(u01 − u02)` on a common torus.
pub fn nonexpansiveness_check(
    u01: &TrigPolynomial,
    u02: &TrigPolynomial,
    basis: &IrrationalBasis,
    f: &PiecewiseFlux,
    cfg: &WaveConfig,
    allowance: f64,
) -> Result<NonexpansiveReport> {
    let module = match &cfg.module {
        Some(m) => m.clone(),
        None => common_module(u01, u02),
    };
    let cfg = WaveConfig {
        module: Some(module.clone()),
        ..cfg.clone()
    };
    let (r1, r2) = rayon::join(
        || profile_operator_T(u01, basis, f, &cfg),
        || profile_operator_T(u02, basis, f, &cfg),
    );
    let (r1, r2) = (r1?, r2?);
    let d_profiles = l1_distance(&r1.profile, &r2.profile)?;
    let diff = u01.sub(u02)?;
    let d_initial = n1_seminorm(
        &diff,
        basis,
        &SeminormMethod::Lifted {
            module: &module,
            quadrature: LiftedQuadrature::for_rank(module.rank(), 1e-10),
        },
    )?
    .value;
    let slack = d_initial - d_profiles + allowance;
    Ok(NonexpansiveReport {
        d_profiles,
        d_initial,
        allowance,
        slack,
        pass: slack >= 0.0,
        speeds: [r1.speed, r2.speed],
        run_diagnostics: [r1.run_diagnostics, r2.run_diagnostics],
    })
}

/// Module generated by both spectra, or the unit module if both are constant.
pub fn common_module(u01: &TrigPolynomial, u02: &TrigPolynomial) -> FreqModule {
    let (_, s1) = mean_and_coefficients(u01);
    let (_, s2) = mean_and_coefficients(u02);
    let gens: Vec<_> = s1.into_iter().chain(s2).collect();
    let m = module_basis_with_shape(&gens, u01.dim(), u01.basis_len());
    if m.rank() == 0 {
        FreqModule::unit(u01.dim(), u01.basis_len())
    } else {
        m
    }
}
