use serde::{Deserialize, Serialize};

use super::poly::Polynomial;
use crate::{Error, Result};

const CONTINUITY_TOL: f64 = 1e-12;

/// Continuous scalar function on `[lo, hi]` built from polynomial pieces.
/// Pieces are left-closed; the last one is closed on both sides.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly {
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
    pieces: Vec<Polynomial>,
}

impl PiecewisePoly {
    /// `breaks` are the interior breakpoints; there is one more piece than
    /// breaks.
    pub fn new(lo: f64, hi: f64, breaks: Vec<f64>, pieces: Vec<Polynomial>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidFlux(format!("bad working interval [{lo}, {hi}]")));
        }
        if pieces.len() != breaks.len() + 1 {
            return Err(Error::InvalidFlux(format!(
                "{} pieces need {} interior breakpoints, got {}",
                pieces.len(),
                pieces.len().saturating_sub(1),
                breaks.len()
            )));
        }
        let mut prev = lo;
        for &b in &breaks {
            if !(b > prev && b < hi) {
                return Err(Error::InvalidFlux(format!(
                    "breakpoints must increase strictly inside ({lo}, {hi}); got {b}"
                )));
            }
            prev = b;
        }
        for (i, &b) in breaks.iter().enumerate() {
            let (l, r) = (pieces[i].eval(b), pieces[i + 1].eval(b));
            if (l - r).abs() >= CONTINUITY_TOL * l.abs().max(r.abs()).max(1.0) {
                return Err(Error::InvalidFlux(format!(
                    "discontinuity at u = {b}: {l} vs {r}"
                )));
            }
        }
        Ok(Self {
            lo,
            hi,
            breaks,
            pieces,
        })
    }

    pub fn polynomial(lo: f64, hi: f64, p: Polynomial) -> Result<Self> {
        Self::new(lo, hi, Vec::new(), vec![p])
    }

    /// Accepts either interior breakpoints or a full list whose first and
    /// last entries cover the working interval.
    pub fn from_breakpoints(lo: f64, hi: f64, breakpoints: Vec<f64>, pieces: Vec<Polynomial>) -> Result<Self> {
        if breakpoints.len() == pieces.len() + 1 {
            let (first, last) = (breakpoints[0], breakpoints[breakpoints.len() - 1]);
            if first > lo || last < hi {
                return Err(Error::InvalidFlux(format!(
                    "breakpoints [{first}, {last}] do not cover [{lo}, {hi}]"
                )));
            }
            let interior = breakpoints[1..breakpoints.len() - 1].to_vec();
            return Self::new(lo, hi, interior, pieces);
        }
        Self::new(lo, hi, breakpoints, pieces)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Polynomial] {
        &self.pieces
    }

    /// Closed extent of piece `i`.
    pub fn piece_bounds(&self, i: usize) -> (f64, f64) {
        let a = if i == 0 { self.lo } else { self.breaks[i - 1] };
        let b = if i == self.breaks.len() { self.hi } else { self.breaks[i] };
        (a, b)
    }

    pub fn piece_index(&self, u: f64) -> usize {
        self.breaks.partition_point(|&b| b <= u)
    }

    pub fn check_domain(&self, u: f64) -> Result<()> {
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

    pub fn eval(&self, u: f64) -> Result<f64> {
        self.check_domain(u)?;
        Ok(self.eval_unchecked(u))
    }

    pub fn eval_unchecked(&self, u: f64) -> f64 {
        self.pieces[self.piece_index(u)].eval(u)
    }

    /// Maximum of `|f'|` over `[lo, hi]` from piece derivatives.
    pub fn lipschitz_bound(&self, lo: f64, hi: f64) -> Result<f64> {
        self.check_domain(lo)?;
        self.check_domain(hi)?;
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let mut m: f64 = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            let (a, b) = self.piece_bounds(i);
            let (a, b) = (a.max(lo), b.min(hi));
            if a <= b {
                m = m.max(p.derivative().max_abs_on(a, b));
            }
        }
        Ok(m)
    }

    /// Breakpoints plus interior critical points: together with the
    /// endpoints of any interval they locate its extrema.
    pub fn extremum_candidates(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let (a, b) = self.piece_bounds(i);
            if i > 0 {
                out.push(a);
            }
            out.extend(p.derivative().roots_in(a, b).into_iter().filter(|&c| c > a && c < b));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Restriction to the pieces of `breaks` (a refinement of this
    /// function's breakpoints).
    fn refined(&self, breaks: &[f64]) -> Vec<Polynomial> {
        let mut edges = vec![self.lo];
        edges.extend_from_slice(breaks);
        edges.push(self.hi);
        edges
            .windows(2)
            .map(|w| self.pieces[self.piece_index(0.5 * (w[0] + w[1]))].clone())
            .collect()
    }

    /// Linear combination `Σ w_i f_i` over the union of breakpoints.
    pub fn combine(weights: &[f64], parts: &[&PiecewisePoly]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidFlux("empty combination".into()))?;
        let (lo, hi) = first.domain();
        if parts.iter().any(|p| p.domain() != (lo, hi)) || weights.len() != parts.len() {
            return Err(Error::InvalidFlux("incompatible combination".into()));
        }
        let mut breaks: Vec<f64> = parts.iter().flat_map(|p| p.breaks.iter().copied()).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut pieces = vec![Polynomial::zero(); breaks.len() + 1];
        for (w, part) in weights.iter().zip(parts) {
            for (acc, p) in pieces.iter_mut().zip(part.refined(&breaks)) {
                *acc = acc.add(&p.scale(*w));
            }
        }
        Self::new(lo, hi, breaks, pieces)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            pieces: self.pieces.iter().map(|p| p.scale(alpha)).collect(),
            ..self.clone()
        }
    }

    /// `f(u) - s u`, the flux seen from a frame moving at speed `s`.
    pub fn minus_linear(&self, s: f64) -> Self {
        let lin = Polynomial::linear(-s, 0.0);
        Self {
            pieces: self.pieces.iter().map(|p| p.add(&lin)).collect(),
            ..self.clone()
        }
    }
}

/// Flux vector `(φ_1, ..., φ_n)` on a shared working interval.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseFlux {
    components: Vec<PiecewisePoly>,
}

impl PiecewiseFlux {
    pub fn new(components: Vec<PiecewisePoly>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidFlux("flux needs at least one component".into()))?;
        if components.iter().any(|c| c.domain() != first.domain()) {
            return Err(Error::InvalidFlux("components must share the working interval".into()));
        }
        Ok(Self { components })
    }

    pub fn scalar(f: PiecewisePoly) -> Self {
        Self { components: vec![f] }
    }

    /// Single polynomial component on `[lo, hi]`.
    pub fn polynomial(lo: f64, hi: f64, coeffs: Vec<f64>) -> Result<Self> {
        Ok(Self::scalar(PiecewisePoly::polynomial(lo, hi, Polynomial::new(coeffs)?)?))
    }

    pub fn burgers(lo: f64, hi: f64) -> Self {
        Self::polynomial(lo, hi, vec![0.0, 0.0, 0.5]).expect("valid Burgers flux")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PiecewisePoly] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &PiecewisePoly {
        &self.components[i]
    }

    pub fn working_interval(&self) -> (f64, f64) {
        self.components[0].domain()
    }

    pub fn eval(&self, u: f64) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(u)).collect()
    }

    /// Largest `|φ_i'|` over all components on `[lo, hi]`.
    pub fn lipschitz_bound(&self, lo: f64, hi: f64) -> Result<f64> {
        self.components
            .iter()
            .try_fold(0.0f64, |m, c| Ok(m.max(c.lipschitz_bound(lo, hi)?)))
    }

    /// Scalar flux `ξ·φ`.
    pub fn directional(&self, xi: &[f64]) -> Result<PiecewisePoly> {
        if xi.len() != self.dim() {
            return Err(Error::Shape(format!(
                "direction of length {} for a {}-component flux",
                xi.len(),
                self.dim()
            )));
        }
        let parts: Vec<&PiecewisePoly> = self.components.iter().collect();
        PiecewisePoly::combine(xi, &parts)
    }

    pub fn minus_linear(&self, s: &[f64]) -> Result<Self> {
        if s.len() != self.dim() {
            return Err(Error::Shape("frame velocity length mismatch".into()));
        }
        Ok(Self {
            components: self
                .components
                .iter()
                .zip(s)
                .map(|(c, &sj)| c.minus_linear(sj))
                .collect(),
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            components: self.components.iter().map(|c| c.scaled(alpha)).collect(),
        }
    }

    pub fn to_doc(&self) -> FluxDoc {
        let (lo, hi) = self.working_interval();
        FluxDoc {
            working_interval: [lo, hi],
            components: self
                .components
                .iter()
                .map(|c| ComponentDoc {
                    breakpoints: c.breaks.clone(),
                    coefficients: c.pieces.iter().map(|p| p.coeffs().to_vec()).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
}

/// Serialized flux: a working interval and per-component pieces with
/// coefficients from low to high degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxDoc {
    pub working_interval: [f64; 2],
    pub components: Vec<ComponentDoc>,
}

impl FluxDoc {
    pub fn into_flux(self) -> Result<PiecewiseFlux> {
        let [lo, hi] = self.working_interval;
        let comps = self
            .components
            .into_iter()
            .map(|c| {
                let pieces = c
                    .coefficients
                    .into_iter()
                    .map(Polynomial::new)
                    .collect::<Result<Vec<_>>>()?;
                PiecewisePoly::from_breakpoints(lo, hi, c.breakpoints, pieces)
            })
            .collect::<Result<Vec<_>>>()?;
        PiecewiseFlux::new(comps)
    }

    pub fn parse(json: &str) -> Result<PiecewiseFlux> {
        serde_json::from_str::<FluxDoc>(json)?.into_flux()
    }
}
