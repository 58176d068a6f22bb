use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::{IrrationalBasis, IrrationalBasisDoc};
use super::frequency::Frequency;
use super::rational::parse_rational;
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;

/// A real trigonometric polynomial `Σ a_λ e^{2πi λ·x}` with finitely many
/// frequencies. Real-valuedness is enforced through Hermitian symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    dim: usize,
    basis_len: usize,
    terms: BTreeMap<Frequency, Complex64>,
}

impl TrigPolynomial {
    /// Builds a polynomial from raw terms, merging repeated frequencies and
    /// dropping exact zeros. Fails unless the terms are Hermitian.
    pub fn from_terms(
        dim: usize,
        basis_len: usize,
        terms: impl IntoIterator<Item = (Frequency, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Frequency, Complex64> = BTreeMap::new();
        for (freq, a) in terms {
            if freq.dim() != dim || freq.basis_len() != basis_len {
                return Err(Error::InvalidPolynomial(format!(
                    "frequency {freq} does not match shape {dim}x{basis_len}"
                )));
            }
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::InvalidPolynomial(format!("non-finite coefficient at {freq}")));
            }
            *map.entry(freq).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        map.retain(|_, a| a.re != 0.0 || a.im != 0.0);
        let p = Self {
            dim,
            basis_len,
            terms: map,
        };
        p.check_hermitian()?;
        Ok(p)
    }

    pub fn constant(dim: usize, basis_len: usize, c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(Frequency::zero(dim, basis_len), Complex64::new(c, 0.0));
        }
        Self {
            dim,
            basis_len,
            terms,
        }
    }

    pub fn builder(dim: usize, basis_len: usize) -> TrigBuilder {
        TrigBuilder {
            dim,
            basis_len,
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_len(&self) -> usize {
        self.basis_len
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Frequency, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, freq: &Frequency) -> Complex64 {
        self.terms.get(freq).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_hermitian(&self) -> Result<()> {
        for (freq, a) in &self.terms {
            let partner = self.coefficient(&freq.neg());
            let scale = 1.0 + a.norm();
            if (partner - a.conj()).norm() > HERMITIAN_TOL * scale {
                return Err(Error::InvalidPolynomial(format!(
                    "coefficient {a} at {freq} has conjugate partner {partner}"
                )));
            }
        }
        Ok(())
    }

    /// `Σ |a_λ|`, an upper bound for `sup |p|`.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.values().map(|a| a.norm()).sum()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::from_terms(
            self.dim,
            self.basis_len,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(f, a)| (f.clone(), *a)),
        )
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut terms = self.terms.clone();
        for a in terms.values_mut() {
            *a *= alpha;
        }
        terms.retain(|_, a| a.re != 0.0 || a.im != 0.0);
        Self {
            dim: self.dim,
            basis_len: self.basis_len,
            terms,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// `x ↦ p(x + h)`: each coefficient picks up the phase `e^{2πi λ·h}`.
    pub fn shifted(&self, basis: &IrrationalBasis, h: &[f64]) -> Self {
        let mut terms = self.terms.clone();
        for (freq, a) in terms.iter_mut() {
            let phase = phase_fraction(&freq.value(basis), h);
            *a *= Complex64::from_polar(1.0, TAU * phase);
        }
        Self {
            dim: self.dim,
            basis_len: self.basis_len,
            terms,
        }
    }

    /// Precomputes real frequency values for repeated evaluation.
    pub fn evaluator(&self, basis: &IrrationalBasis) -> Result<TrigEvaluator> {
        if basis.len() != self.basis_len {
            return Err(Error::InvalidPolynomial(format!(
                "polynomial uses {} basis elements, basis has {}",
                self.basis_len,
                basis.len()
            )));
        }
        self.check_hermitian()?;
        Ok(TrigEvaluator {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(f, a)| (f.value(basis), *a))
                .collect(),
            l1: self.coefficient_l1(),
        })
    }
}

/// Fractional part of λ·x, which keeps the phase accurate for large x.
fn phase_fraction(lambda: &[f64], x: &[f64]) -> f64 {
    let s: f64 = lambda.iter().zip(x).map(|(l, xi)| l * xi).sum();
    s - s.floor()
}

#[derive(Clone, Debug)]
pub struct TrigEvaluator {
    dim: usize,
    terms: Vec<(Vec<f64>, Complex64)>,
    l1: f64,
}

impl TrigEvaluator {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::InvalidPolynomial(format!(
                "point has dimension {}, polynomial {}",
                x.len(),
                self.dim
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (lambda, a) in &self.terms {
            acc += a * Complex64::from_polar(1.0, TAU * phase_fraction(lambda, x));
        }
        // Residual imaginary parts are rounding noise from conjugate pairs.
        if acc.im.abs() > 1e-12 * self.l1.max(1.0) * 16.0 {
            return Err(Error::InvalidPolynomial(format!(
                "imaginary residue {} exceeds round-off",
                acc.im
            )));
        }
        Ok(acc.re)
    }

    pub fn eval_1d(&self, x: f64) -> Result<f64> {
        self.eval(&[x])
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|(l, _)| l.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }
}

/// Evaluates `Re Σ a_λ e^{2πi λ·x}`.
pub fn eval_trig(p: &TrigPolynomial, basis: &IrrationalBasis, x: &[f64]) -> Result<f64> {
    p.evaluator(basis)?.eval(x)
}

/// Mean value (the zero-frequency coefficient) and spectrum of `p`.
pub fn mean_and_coefficients(p: &TrigPolynomial) -> (f64, BTreeSet<Frequency>) {
    let zero = Frequency::zero(p.dim, p.basis_len);
    let mean = p.coefficient(&zero).re;
    let spectrum = p
        .terms
        .iter()
        .filter(|(f, a)| !f.is_zero() && (a.re != 0.0 || a.im != 0.0))
        .map(|(f, _)| f.clone())
        .collect();
    (mean, spectrum)
}

pub struct TrigBuilder {
    dim: usize,
    basis_len: usize,
    terms: Vec<(Frequency, Complex64)>,
}

impl TrigBuilder {
    pub fn constant(mut self, c: f64) -> Self {
        self.terms
            .push((Frequency::zero(self.dim, self.basis_len), Complex64::new(c, 0.0)));
        self
    }

    /// Adds `amplitude · sin(2π λ·x)`.
    pub fn sin(mut self, freq: Frequency, amplitude: f64) -> Self {
        let half = Complex64::new(0.0, amplitude / 2.0);
        self.terms.push((freq.neg(), half));
        self.terms.push((freq, -half));
        self
    }

    /// Adds `amplitude · cos(2π λ·x)`.
    pub fn cos(mut self, freq: Frequency, amplitude: f64) -> Self {
        let half = Complex64::new(amplitude / 2.0, 0.0);
        self.terms.push((freq.neg(), half));
        self.terms.push((freq, half));
        self
    }

    /// Adds `amplitude · cos(2π λ·x + phase)`.
    pub fn cos_phase(mut self, freq: Frequency, amplitude: f64, phase: f64) -> Self {
        let a = Complex64::from_polar(amplitude / 2.0, phase);
        self.terms.push((freq.neg(), a.conj()));
        self.terms.push((freq, a));
        self
    }

    pub fn term(mut self, freq: Frequency, a: Complex64) -> Self {
        self.terms.push((freq, a));
        self
    }

    pub fn build(self) -> Result<TrigPolynomial> {
        TrigPolynomial::from_terms(self.dim, self.basis_len, self.terms)
    }
}

/// Coordinates of a term: a flat list of `p/q` strings in one dimension,
/// one list per axis otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordsDoc {
    Flat(Vec<String>),
    Nested(Vec<Vec<String>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermDoc {
    pub coords: CoordsDoc,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// JSON document holding a polynomial together with its irrational basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrigDoc {
    pub irrational_basis: IrrationalBasisDoc,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub terms: Vec<TermDoc>,
}

fn default_dim() -> usize {
    1
}

impl TrigDoc {
    pub fn from_polynomial(p: &TrigPolynomial, basis: &IrrationalBasis) -> Self {
        let terms = p
            .terms
            .iter()
            .map(|(f, a)| {
                let rows = f.to_strings();
                let coords = if rows.len() == 1 {
                    CoordsDoc::Flat(rows.into_iter().next().unwrap())
                } else {
                    CoordsDoc::Nested(rows)
                };
                TermDoc {
                    coords,
                    re: a.re,
                    im: a.im,
                }
            })
            .collect();
        Self {
            irrational_basis: basis.into(),
            dim: p.dim,
            terms,
        }
    }

    pub fn into_polynomial(self) -> Result<(TrigPolynomial, IrrationalBasis)> {
        let basis = IrrationalBasis::try_from(self.irrational_basis)?;
        let dim = self.dim;
        let terms = self
            .terms
            .into_iter()
            .map(|t| {
                let rows = match t.coords {
                    CoordsDoc::Flat(row) => vec![row],
                    CoordsDoc::Nested(rows) => rows,
                };
                let coords = rows
                    .iter()
                    .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                Ok((Frequency::new(coords)?, Complex64::new(t.re, t.im)))
            })
            .collect::<Result<Vec<_>>>()?;
        let p = TrigPolynomial::from_terms(dim, basis.len(), terms)?;
        Ok((p, basis))
    }

    pub fn parse(json: &str) -> Result<(TrigPolynomial, IrrationalBasis)> {
        let doc: TrigDoc = serde_json::from_str(json)?;
        doc.into_polynomial()
    }
}
