use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_DEGREE: usize = 4;

/// Dense real polynomial, coefficients from low to high degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidFlux("non-finite polynomial coefficient".into()));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::InvalidFlux(format!(
                "degree {} exceeds {MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn linear(slope: f64, offset: f64) -> Self {
        Self::new(vec![offset, slope]).expect("finite linear coefficients")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `u^d`, zero past the stored degree.
    pub fn coeff(&self, d: usize) -> f64 {
        self.coeffs.get(d).copied().unwrap_or(0.0)
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_affine(&self) -> bool {
        self.coeffs.len() <= 2
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn derivative(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(d, &c)| c * d as f64)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|d| self.coeff(d) + other.coeff(d)).collect();
        Self::new(coeffs).expect("sum of valid polynomials")
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * alpha).collect()).expect("scaled polynomial")
    }

    /// Real roots in `[a, b]`, ascending. Roots of the derivative split the
    /// interval into monotone pieces, each bisected to full precision.
    pub fn roots_in(&self, a: f64, b: f64) -> Vec<f64> {
        if a > b {
            return Vec::new();
        }
        match self.coeffs.len() {
            0 | 1 => return Vec::new(),
            2 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                return if (a..=b).contains(&r) { vec![r] } else { Vec::new() };
            }
            _ => {}
        }
        let mut knots = vec![a];
        knots.extend(self.derivative().roots_in(a, b));
        knots.push(b);
        let mut roots: Vec<f64> = Vec::new();
        for w in knots.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (flo, fhi) = (self.eval(lo), self.eval(hi));
            let root = if flo == 0.0 {
                Some(lo)
            } else if fhi == 0.0 {
                Some(hi)
            } else if flo.signum() != fhi.signum() {
                Some(bisect(|u| self.eval(u), lo, hi, flo))
            } else {
                None
            };
            if let Some(r) = root {
                if roots.last().is_none_or(|&last| r > last) {
                    roots.push(r);
                }
            }
        }
        roots
    }

    /// Maximum of `|p|` over `[a, b]`, attained at an endpoint or a
    /// critical point.
    pub fn max_abs_on(&self, a: f64, b: f64) -> f64 {
        let mut m = self.eval(a).abs().max(self.eval(b).abs());
        for c in self.derivative().roots_in(a, b) {
            m = m.max(self.eval(c).abs());
        }
        m
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
