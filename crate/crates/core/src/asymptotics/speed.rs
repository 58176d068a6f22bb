use serde::Serialize;

use crate::lifting::shifted_state;
use crate::solver::{l1_distance, GridState};
use crate::{Error, Result};

/// Coarse samples of the shift objective before golden-section refinement.
const COARSE_SHIFTS: usize = 201;
const FLAT_OBJECTIVE: f64 = 1e-10;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpeedEstimate {
    pub speed: f64,
    pub degenerate: bool,
    /// Smallest resolvable speed difference: one cell over the time gap.
    pub quantum: f64,
    pub objective: f64,
}

/// Speed `c` minimising `∫ |w2(y + λ(c − frame) dt) − w1(y)|` over the
/// torus, for states written in a frame moving at `frame`.
pub fn estimate_speed(
    w1: &GridState,
    w2: &GridState,
    directions: &[f64],
    frame: f64,
    dt: f64,
    search: (f64, f64),
) -> Result<SpeedEstimate> {
    if !(dt > 0.0) || !(search.0 < search.1) {
        return Err(Error::Precondition("need dt > 0 and a nonempty search interval".into()));
    }
    if directions.len() != w1.grid().dim() {
        return Err(Error::Shape("one direction per torus axis is required".into()));
    }
    let quantum = directions
        .iter()
        .enumerate()
        .map(|(j, l)| w1.grid().h(j) / l.abs())
        .fold(f64::INFINITY, f64::min)
        / dt;
    let constant = |s: &GridState| {
        let (lo, hi) = s.range();
        hi - lo <= FLAT_OBJECTIVE
    };
    if constant(w1) && constant(w2) {
        return Ok(SpeedEstimate {
            speed: 0.0,
            degenerate: true,
            quantum,
            objective: l1_distance(w1, w2)?,
        });
    }
    let objective = |s: f64| -> Result<f64> {
        let d: Vec<f64> = directions.iter().map(|l| l * (s - frame) * dt).collect();
        l1_distance(&shifted_state(w2, &d)?, w1)
    };
    let step = (search.1 - search.0) / (COARSE_SHIFTS - 1) as f64;
    let coarse: Vec<f64> = (0..COARSE_SHIFTS)
        .map(|i| objective(search.0 + step * i as f64))
        .collect::<Result<_>>()?;
    let (lo, hi) = coarse
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo < FLAT_OBJECTIVE {
        return Ok(SpeedEstimate {
            speed: 0.0,
            degenerate: true,
            quantum,
            objective: lo,
        });
    }
    let best = coarse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty coarse grid");
    let centre = search.0 + step * best as f64;
    let (mut a, mut b) = ((centre - step).max(search.0), (centre + step).min(search.1));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (objective(c)?, objective(d)?);
    while b - a > 1e-3 * quantum.min(step) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = objective(d)?;
        }
    }
    let (speed, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    let (speed, value) = if coarse[best] < value { (centre, coarse[best]) } else { (speed, value) };
    Ok(SpeedEstimate {
        speed,
        degenerate: false,
        quantum,
        objective: value,
    })
}

/// Search interval centred on `frame` that keeps the torus shift below half
/// a period, so the objective cannot alias.
pub fn default_search(frame: f64, directions: &[f64], dt: f64) -> (f64, f64) {
    let lam = directions.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(f64::MIN_POSITIVE);
    let half = 0.45 / (lam * dt);
    (frame - half, frame + half)
}
