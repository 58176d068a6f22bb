use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Real numbers β_1 = 1, β_2, ..., β_p that the user declares linearly
/// independent over the rationals. Frequencies are rational vectors over
/// this basis.
#[derive(Clone, Debug, PartialEq)]
pub struct IrrationalBasis {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl IrrationalBasis {
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidBasis("basis must be nonempty".into()));
        }
        if labels.len() != values.len() {
            return Err(Error::InvalidBasis(format!(
                "{} labels for {} values",
                labels.len(),
                values.len()
            )));
        }
        if values[0] != 1.0 {
            return Err(Error::InvalidBasis(format!(
                "first basis element must be exactly 1, got {}",
                values[0]
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v == 0.0 {
                return Err(Error::InvalidBasis(format!("element {i} is {v}")));
            }
            if values[..i].contains(v) {
                return Err(Error::InvalidBasis(format!("element {i} repeats value {v}")));
            }
        }
        let basis = Self { labels, values };
        for warning in basis.near_resonances(6) {
            log::warn!("{warning}");
        }
        Ok(basis)
    }

    /// The basis `{1}`: frequencies are plain rationals.
    pub fn rationals() -> Self {
        Self {
            labels: vec!["1".into()],
            values: vec![1.0],
        }
    }

    /// The basis `{1, sqrt 2}`.
    pub fn sqrt2() -> Self {
        Self {
            labels: vec!["1".into(), "sqrt2".into()],
            values: vec![1.0, std::f64::consts::SQRT_2],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Heuristic check: small nonzero integer vectors q with |Σ q_j β_j| < 1e-9.
    /// Independence is trusted, so these are only reported.
    pub fn near_resonances(&self, max_coeff: i64) -> Vec<String> {
        let p = self.values.len();
        if p < 2 || p > 4 {
            return Vec::new();
        }
        let span = (2 * max_coeff + 1) as usize;
        let total = span.pow(p as u32);
        let mut out = Vec::new();
        let mut q = vec![0i64; p];
        for code in 0..total {
            let mut c = code;
            for qj in q.iter_mut() {
                *qj = (c % span) as i64 - max_coeff;
                c /= span;
            }
            if q.iter().all(|&x| x == 0) {
                continue;
            }
            // Count each line {q, -q} once.
            if q.iter().find(|&&x| x != 0).copied().unwrap_or(0) < 0 {
                continue;
            }
            let s: f64 = q.iter().zip(&self.values).map(|(&a, &b)| a as f64 * b).sum();
            if s.abs() < 1e-9 {
                out.push(format!(
                    "irrational basis {:?} is nearly resonant: {:?} gives {:e}",
                    self.labels, q, s
                ));
            }
        }
        out
    }
}

/// Serialized form: decimal strings plus labels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IrrationalBasisDoc {
    pub labels: Vec<String>,
    pub values: Vec<String>,
}

impl From<&IrrationalBasis> for IrrationalBasisDoc {
    fn from(b: &IrrationalBasis) -> Self {
        Self {
            labels: b.labels.clone(),
            values: b.values.iter().map(|v| format!("{v:?}")).collect(),
        }
    }
}

impl TryFrom<IrrationalBasisDoc> for IrrationalBasis {
    type Error = Error;

    fn try_from(doc: IrrationalBasisDoc) -> Result<Self> {
        let values = doc
            .values
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad basis value {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        IrrationalBasis::new(doc.labels, values)
    }
}
