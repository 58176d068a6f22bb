use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::piecewise::{PiecewiseFlux, PiecewisePoly};
use super::poly::MAX_DEGREE;
use crate::apfunc::rational::rational_from_f64;
use crate::apfunc::{FreqModule, Frequency, IrrationalBasis, Rational};
use crate::{Error, Result};

/// Outcome of the non-degeneracy test at a level `I`.
#[derive(Clone, Debug, PartialEq)]
pub struct NondegVerdict {
    pub level: f64,
    pub rank: usize,
    /// Lattice coordinates `k` of the witness `ξ = Σ k_j λ_j`.
    pub witness_coords: Option<Vec<BigInt>>,
    pub witness: Option<Frequency>,
}

impl NondegVerdict {
    pub fn pass(&self) -> bool {
        self.witness.is_none()
    }

    pub fn report(&self, basis: &IrrationalBasis) -> NondegReport {
        NondegReport {
            verdict: if self.pass() { "pass" } else { "fail" },
            level: self.level,
            module_rank: self.rank,
            witness_coords: self
                .witness_coords
                .as_ref()
                .map(|k| k.iter().map(|x| x.to_string()).collect()),
            witness: self.witness.as_ref().map(|w| w.to_strings()),
            witness_value: self.witness.as_ref().map(|w| w.value(basis)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NondegReport {
    pub verdict: &'static str,
    pub level: f64,
    pub module_rank: usize,
    pub witness_coords: Option<Vec<String>>,
    pub witness: Option<Vec<Vec<String>>>,
    pub witness_value: Option<Vec<f64>>,
}

/// Pieces of the common refinement of all components that touch `level`:
/// one piece in the interior, two at a breakpoint.
fn adjacent_pieces(f: &PiecewiseFlux, level: f64) -> Vec<(f64, f64)> {
    let (lo, hi) = f.working_interval();
    let mut breaks: Vec<f64> = f
        .components()
        .iter()
        .flat_map(|c| c.breaks().iter().copied())
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let k = breaks.partition_point(|&b| b < level);
    let left = if k == 0 { lo } else { breaks[k - 1] };
    if k < breaks.len() && breaks[k] == level {
        let right = breaks.get(k + 1).copied().unwrap_or(hi);
        let mut out = Vec::new();
        if level > lo {
            out.push((left, level));
        }
        out.push((level, right));
        out
    } else {
        let right = breaks.get(k).copied().unwrap_or(hi);
        vec![(left, right)]
    }
}

fn exact_coeffs(c: &PiecewisePoly, span: (f64, f64)) -> Vec<Rational> {
    let p = &c.pieces()[c.piece_index(0.5 * (span.0 + span.1))];
    (0..=MAX_DEGREE).map(|d| rational_from_f64(p.coeff(d))).collect()
}

/// Decides whether some nonzero `ξ ∈ M0` makes `ξ·φ` affine near `level`.
///
/// Flux coefficients are taken as exact binary rationals. Writing
/// `ξ = Σ_j k_j λ_j` with `λ_j` in rational coordinates over a rationally
/// independent basis, each nonlinear coefficient of `ξ·φ` (and the slope
/// jump at a breakpoint) vanishes iff its coefficient on every basis
/// element does, which is a rational linear system in `k`.
pub fn nondegeneracy_check(f: &PiecewiseFlux, module: &FreqModule, level: f64) -> Result<NondegVerdict> {
    f.component(0).check_domain(level)?;
    let m = module.rank();
    if m > 0 && module.dim() != f.dim() {
        return Err(Error::Shape(format!(
            "module of dimension {} for a {}-component flux",
            module.dim(),
            f.dim()
        )));
    }
    let pieces = adjacent_pieces(f, level);
    let per_piece: Vec<Vec<Vec<Rational>>> = pieces
        .iter()
        .map(|&span| f.components().iter().map(|c| exact_coeffs(c, span)).collect())
        .collect();

    // Rows of A act on the component index i.
    let mut a_rows: Vec<Vec<Rational>> = Vec::new();
    for coeffs in &per_piece {
        for d in 2..=MAX_DEGREE {
            a_rows.push(coeffs.iter().map(|c| c[d].clone()).collect());
        }
    }
    if per_piece.len() == 2 {
        a_rows.push(
            per_piece[1]
                .iter()
                .zip(&per_piece[0])
                .map(|(r, l)| &r[1] - &l[1])
                .collect(),
        );
    }

    let p = module.basis_len();
    let mut b_rows: Vec<Vec<Rational>> = Vec::new();
    for row in &a_rows {
        for l in 0..p {
            b_rows.push(
                module
                    .basis()
                    .iter()
                    .map(|lam| {
                        row.iter()
                            .enumerate()
                            .fold(Rational::zero(), |acc, (i, a)| acc + a * &lam.coords()[i][l])
                    })
                    .collect(),
            );
        }
    }

    let kernel = nullspace(&b_rows, m);
    let witness_coords = kernel.first().map(|v| primitive_integer(v));
    let witness = witness_coords.as_ref().map(|k| module.element(k));
    Ok(NondegVerdict {
        level,
        rank: m,
        witness_coords,
        witness,
    })
}

/// Basis of `{k : rows·k = 0}` from the reduced row echelon form.
pub fn nullspace(rows: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let mut a: Vec<Vec<Rational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(pr) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, pr);
        let inv = Rational::one() / &a[r][c];
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let factor = a[i][c].clone();
                for j in 0..ncols {
                    let delta = &factor * &a[r][j];
                    a[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    (0..ncols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Rational::zero(); ncols];
            v[free] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][free].clone();
            }
            v
        })
        .collect()
}

/// Scales a rational vector to a primitive integer vector whose first
/// nonzero entry is positive.
fn primitive_integer(v: &[Rational]) -> Vec<BigInt> {
    let den = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut k: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(den.clone())).to_integer()).collect();
    let g = k.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() {
        for x in k.iter_mut() {
            *x = &*x / &g;
        }
    }
    if k.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        for x in k.iter_mut() {
            *x = -&*x;
        }
    }
    k
}

/// Lifted flux `φ̃_j = λ_j·φ` for each basis frequency of `M0`.
pub fn lift_flux(f: &PiecewiseFlux, module: &FreqModule, basis: &IrrationalBasis) -> Result<PiecewiseFlux> {
    if module.rank() == 0 {
        return Err(Error::Precondition("lifting needs a module of rank at least 1".into()));
    }
    if module.dim() != f.dim() {
        return Err(Error::Shape(format!(
            "module of dimension {} for a {}-component flux",
            module.dim(),
            f.dim()
        )));
    }
    let comps = module
        .basis_values(basis)
        .iter()
        .map(|lam| f.directional(lam))
        .collect::<Result<Vec<_>>>()?;
    PiecewiseFlux::new(comps)
}
