use crate::flux::{PiecewisePoly, MAX_DEGREE};
use crate::{Error, Result};

/// Flat lookup form of a scalar flux for the inner loops.
#[derive(Clone, Debug)]
pub struct ScalarKernel {
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
    coeffs: Vec<[f64; MAX_DEGREE + 1]>,
    degrees: Vec<usize>,
    candidates: Vec<f64>,
    candidate_values: Vec<f64>,
}

impl ScalarKernel {
    pub fn new(f: &PiecewisePoly) -> Self {
        let (lo, hi) = f.domain();
        let coeffs = f
            .pieces()
            .iter()
            .map(|p| {
                let mut c = [0.0; MAX_DEGREE + 1];
                c[..p.coeffs().len()].copy_from_slice(p.coeffs());
                c
            })
            .collect();
        let degrees = f.pieces().iter().map(|p| p.degree()).collect();
        let candidates = f.extremum_candidates();
        let candidate_values = candidates.iter().map(|&c| f.eval_unchecked(c)).collect();
        Self {
            lo,
            hi,
            breaks: f.breaks().to_vec(),
            coeffs,
            degrees,
            candidates,
            candidate_values,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let mut k = 0;
        while k < self.breaks.len() && self.breaks[k] <= u {
            k += 1;
        }
        let c = &self.coeffs[k];
        let mut acc = 0.0;
        for d in (0..=self.degrees[k]).rev() {
            acc = acc * u + c[d];
        }
        acc
    }

    /// Godunov flux from precomputed end values: the minimum of `f` over
    /// `[ul, ur]` when `ul ≤ ur`, the maximum over `[ur, ul]` otherwise.
    #[inline]
    pub fn godunov(&self, ul: f64, ur: f64, ful: f64, fur: f64) -> f64 {
        if ul <= ur {
            let mut m = ful.min(fur);
            for (c, v) in self.candidates.iter().zip(&self.candidate_values) {
                if *c > ul && *c < ur {
                    m = m.min(*v);
                }
            }
            m
        } else {
            let mut m = ful.max(fur);
            for (c, v) in self.candidates.iter().zip(&self.candidate_values) {
                if *c > ur && *c < ul {
                    m = m.max(*v);
                }
            }
            m
        }
    }

    fn check(&self, u: f64) -> Result<()> {
        if u >= self.lo && u <= self.hi {
            Ok(())
        } else {
            Err(Error::Domain {
                value: u,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// Godunov numerical flux for a scalar flux.
pub fn godunov_flux(f: &PiecewisePoly, ul: f64, ur: f64) -> Result<f64> {
    let k = ScalarKernel::new(f);
    k.check(ul)?;
    k.check(ur)?;
    Ok(k.godunov(ul, ur, k.eval(ul), k.eval(ur)))
}

/// Local Lax–Friedrichs flux. `alpha` must dominate `|f'|` between the two
/// states, otherwise the flux is not monotone.
pub fn llf_flux(f: &PiecewisePoly, ul: f64, ur: f64, alpha: f64) -> Result<f64> {
    f.check_domain(ul)?;
    f.check_domain(ur)?;
    let bound = f.lipschitz_bound(ul.min(ur), ul.max(ur))?;
    if !(alpha >= bound) {
        return Err(Error::Monotonicity { alpha, bound });
    }
    Ok(llf(f.eval_unchecked(ul), f.eval_unchecked(ur), ul, ur, alpha))
}

#[inline]
pub(crate) fn llf(ful: f64, fur: f64, ul: f64, ur: f64, alpha: f64) -> f64 {
    0.5 * (ful + fur) - 0.5 * alpha * (ur - ul)
}
