use std::fmt;

use num_traits::{Signed, Zero};

use super::basis::IrrationalBasis;
use super::rational::{format_rational, parse_rational, rational_to_f64, Rational};
use crate::{Error, Result};

/// A frequency vector λ ∈ R^n with exact rational coordinates over an
/// [`IrrationalBasis`]: component `d` of λ is `Σ_j coords[d][j] β_j`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frequency {
    coords: Vec<Vec<Rational>>,
}

impl Frequency {
    pub fn new(coords: Vec<Vec<Rational>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidFrequency("spatial dimension must be >= 1".into()));
        }
        let p = coords[0].len();
        if p == 0 || coords.iter().any(|row| row.len() != p) {
            return Err(Error::InvalidFrequency("ragged coordinate rows".into()));
        }
        Ok(Self { coords })
    }

    /// One-dimensional frequency `Σ_j q_j β_j`.
    pub fn scalar(coords: Vec<Rational>) -> Result<Self> {
        Self::new(vec![coords])
    }

    /// Parses one row of `"p/q"` strings per spatial dimension.
    pub fn parse(rows: &[Vec<&str>]) -> Result<Self> {
        let coords = rows
            .iter()
            .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(coords)
    }

    /// Integer multiple of a single basis element in one dimension,
    /// e.g. `Frequency::unit(2, 1, 3)` is 3·β_2.
    pub fn unit(p: usize, j: usize, multiple: i64) -> Self {
        let mut row = vec![Rational::zero(); p];
        row[j] = Rational::from_integer(multiple.into());
        Self { coords: vec![row] }
    }

    pub fn zero(dim: usize, p: usize) -> Self {
        Self {
            coords: vec![vec![Rational::zero(); p]; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Number of irrational basis elements the coordinates refer to.
    pub fn basis_len(&self) -> usize {
        self.coords[0].len()
    }

    pub fn coords(&self) -> &[Vec<Rational>] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().flatten().all(Zero::is_zero)
    }

    pub fn flatten(&self) -> Vec<Rational> {
        self.coords.iter().flatten().cloned().collect()
    }

    pub(crate) fn from_flat(flat: Vec<Rational>, dim: usize) -> Self {
        let p = flat.len() / dim;
        let coords = flat.chunks(p).map(|c| c.to_vec()).collect();
        Self { coords }
    }

    pub fn neg(&self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .map(|row| row.iter().map(|q| -q).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .map(|row| row.iter().map(|q| q * k).collect())
                .collect(),
        }
    }

    /// Real value of each spatial component.
    pub fn value(&self, basis: &IrrationalBasis) -> Vec<f64> {
        self.coords
            .iter()
            .map(|row| {
                row.iter()
                    .zip(basis.values())
                    .map(|(q, b)| rational_to_f64(q) * b)
                    .sum()
            })
            .collect()
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.coords
            .iter()
            .map(|row| row.iter().map(format_rational).collect())
            .collect()
    }

    /// Sign convention used to pick one representative of {λ, −λ}.
    pub fn is_positive(&self) -> bool {
        self.coords
            .iter()
            .flatten()
            .find(|q| !q.is_zero())
            .map(|q| q.is_positive())
            .unwrap_or(false)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .to_strings()
            .into_iter()
            .map(|r| format!("[{}]", r.join(", ")))
            .collect();
        if rows.len() == 1 {
            write!(f, "{}", rows[0])
        } else {
            write!(f, "({})", rows.join(", "))
        }
    }
}
