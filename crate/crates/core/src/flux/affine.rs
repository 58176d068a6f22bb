use serde::Serialize;

use super::piecewise::PiecewisePoly;
use crate::Result;

/// Interval `[a, b]` on which a scalar flux equals `slope·u + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffineInterval {
    pub a: f64,
    pub b: f64,
    pub slope: f64,
    pub offset: f64,
}

impl AffineInterval {
    pub fn contains(&self, u: f64) -> bool {
        u >= self.a && u <= self.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AffineVicinity {
    Interval(AffineInterval),
    /// No neighbourhood of the level is affine.
    Point { level: f64 },
}

impl AffineVicinity {
    pub fn interval(&self) -> Option<&AffineInterval> {
        match self {
            Self::Interval(iv) => Some(iv),
            Self::Point { .. } => None,
        }
    }

    /// Slope of the affine part, zero at a point vicinity.
    pub fn slope(&self) -> f64 {
        self.interval().map_or(0.0, |iv| iv.slope)
    }

    /// Levels `[a, b]` for the cut-off; a point vicinity collapses to `[I, I]`.
    pub fn levels(&self) -> (f64, f64) {
        match self {
            Self::Interval(iv) => (iv.a, iv.b),
            Self::Point { level } => (*level, *level),
        }
    }
}

fn same_line(f: &PiecewisePoly, i: usize, j: usize) -> bool {
    let (p, q) = (&f.pieces()[i], &f.pieces()[j]);
    p.is_affine() && q.is_affine() && p.coeff(1) == q.coeff(1) && p.coeff(0) == q.coeff(0)
}

/// Maximal interval around `level` on which `f` is affine, decided on exact
/// coefficients. Adjacent affine pieces merge when slope and offset agree.
pub fn maximal_affine_interval(f: &PiecewisePoly, level: f64) -> Result<AffineVicinity> {
    f.check_domain(level)?;
    let k = f.piece_index(level);
    if !f.pieces()[k].is_affine() {
        return Ok(AffineVicinity::Point { level });
    }
    // A level sitting on a breakpoint needs the left neighbour too.
    if k > 0 && f.breaks()[k - 1] == level && !same_line(f, k - 1, k) {
        return Ok(AffineVicinity::Point { level });
    }
    let mut first = k;
    while first > 0 && same_line(f, first - 1, k) {
        first -= 1;
    }
    let mut last = k;
    while last + 1 < f.pieces().len() && same_line(f, last + 1, k) {
        last += 1;
    }
    let p = &f.pieces()[k];
    Ok(AffineVicinity::Interval(AffineInterval {
        a: f.piece_bounds(first).0,
        b: f.piece_bounds(last).1,
        slope: p.coeff(1),
        offset: p.coeff(0),
    }))
}

/// Largest deviation of `f` from the line `slope·u + offset` on `[a, b]`,
/// measured on coefficients of the overlapping pieces. Every function is
/// affine on a single point, so a degenerate interval has residual 0.
pub fn affine_residual(f: &PiecewisePoly, a: f64, b: f64, slope: f64, offset: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let mut r: f64 = 0.0;
    for (i, p) in f.pieces().iter().enumerate() {
        let (lo, hi) = f.piece_bounds(i);
        if !(lo < b && hi > a) {
            continue;
        }
        r = r.max((p.coeff(0) - offset).abs()).max((p.coeff(1) - slope).abs());
        for d in 2..=super::poly::MAX_DEGREE {
            r = r.max(p.coeff(d).abs());
        }
    }
    r
}
