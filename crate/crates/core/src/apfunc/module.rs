//! Z-modules of frequencies and their canonical (Hermite normal form) bases.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::basis::IrrationalBasis;
use super::frequency::Frequency;
use super::rational::{is_integer, lcm_of_denominators, Rational};

/// Row-style Hermite normal form of an integer matrix.
///
/// Returns the nonzero rows: echelon form with positive pivots, zeros below
/// each pivot and entries above each pivot reduced into `[0, pivot)`. The
/// rows span the same lattice as the input rows.
pub fn hermite_normal_form(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    let n_rows = a.len();
    let n_cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..n_cols {
        if r == n_rows {
            break;
        }
        loop {
            // Smallest nonzero |entry| in this column at or below r.
            let pivot = (r..n_rows)
                .filter(|&i| !a[i][col].is_zero())
                .min_by(|&i, &j| a[i][col].abs().cmp(&a[j][col].abs()));
            let Some(p) = pivot else { break };
            a.swap(r, p);
            let mut done = true;
            for i in r + 1..n_rows {
                if a[i][col].is_zero() {
                    continue;
                }
                let q = a[i][col].div_floor(&a[r][col]);
                let pivot_row = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    *x -= &q * y;
                }
                if !a[i][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[r][col].is_zero() {
            continue;
        }
        if a[r][col].is_negative() {
            for x in a[r].iter_mut() {
                *x = -&*x;
            }
        }
        let pivot_row = a[r].clone();
        for i in 0..r {
            let q = a[i][col].div_floor(&pivot_row[col]);
            if q.is_zero() {
                continue;
            }
            for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                *x -= &q * y;
            }
        }
        r += 1;
    }
    a.truncate(r);
    a
}

fn pivot_columns(rows: &[Vec<Rational>]) -> Vec<usize> {
    rows.iter()
        .map(|row| row.iter().position(|q| !q.is_zero()).expect("HNF rows are nonzero"))
        .collect()
}

/// The Z-module generated by a finite set of frequencies, with its
/// canonical basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqModule {
    dim: usize,
    basis_len: usize,
    basis: Vec<Frequency>,
    generators: Vec<Frequency>,
    flat_rows: Vec<Vec<Rational>>,
    pivots: Vec<usize>,
}

/// Canonical basis of the module generated by `generators`.
///
/// All generators must share one shape. Zero generators are ignored; an
/// empty or all-zero set yields the rank-0 module.
pub fn module_basis(generators: &[Frequency]) -> FreqModule {
    let (dim, basis_len) = generators
        .first()
        .map_or((1, 1), |f| (f.dim(), f.basis_len()));
    module_basis_with_shape(generators, dim, basis_len)
}

pub fn module_basis_with_shape(generators: &[Frequency], dim: usize, basis_len: usize) -> FreqModule {
    let flat: Vec<Vec<Rational>> = generators
        .iter()
        .filter(|g| !g.is_zero())
        .map(Frequency::flatten)
        .collect();
    let denom = lcm_of_denominators(flat.iter().flatten());
    let int_rows: Vec<Vec<BigInt>> = flat
        .iter()
        .map(|row| {
            row.iter()
                .map(|q| (q * Rational::from_integer(denom.clone())).to_integer())
                .collect()
        })
        .collect();
    let hnf = hermite_normal_form(&int_rows);
    let flat_rows: Vec<Vec<Rational>> = hnf
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| Rational::new(x, denom.clone()))
                .collect()
        })
        .collect();
    let pivots = pivot_columns(&flat_rows);
    let basis = flat_rows
        .iter()
        .map(|row| Frequency::from_flat(row.clone(), dim))
        .collect();
    FreqModule {
        dim,
        basis_len,
        basis,
        generators: generators.to_vec(),
        flat_rows,
        pivots,
    }
}

impl FreqModule {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_len(&self) -> usize {
        self.basis_len
    }

    pub fn basis(&self) -> &[Frequency] {
        &self.basis
    }

    pub fn generators(&self) -> &[Frequency] {
        &self.generators
    }

    /// Integer coordinates of `freq` in the module basis, or `None` when
    /// `freq` is not an element of the module.
    pub fn coordinates(&self, freq: &Frequency) -> Option<Vec<BigInt>> {
        if freq.dim() != self.dim || freq.basis_len() != self.basis_len {
            return None;
        }
        let target = freq.flatten();
        let mut x: Vec<Rational> = Vec::with_capacity(self.rank());
        for (i, &col) in self.pivots.iter().enumerate() {
            let partial: Rational = x
                .iter()
                .zip(&self.flat_rows)
                .map(|(xj, row)| xj * &row[col])
                .sum();
            x.push((&target[col] - partial) / &self.flat_rows[i][col]);
        }
        if !x.iter().all(is_integer) {
            return None;
        }
        // Echelon solve only matched pivot columns; check the rest.
        for (c, t) in target.iter().enumerate() {
            let s: Rational = x.iter().zip(&self.flat_rows).map(|(xj, row)| xj * &row[c]).sum();
            if &s != t {
                return None;
            }
        }
        Some(x.into_iter().map(|q| q.to_integer()).collect())
    }

    pub fn contains(&self, freq: &Frequency) -> bool {
        self.coordinates(freq).is_some()
    }

    /// `Σ k_j λ_j`.
    pub fn element(&self, k: &[BigInt]) -> Frequency {
        let mut acc = Frequency::zero(self.dim, self.basis_len);
        for (kj, lambda) in k.iter().zip(&self.basis) {
            acc = acc.add(&lambda.scale(&Rational::from_integer(kj.clone())));
        }
        acc
    }

    /// Real values of the basis: row `j` is λ_j ∈ R^n.
    pub fn basis_values(&self, basis: &IrrationalBasis) -> Vec<Vec<f64>> {
        self.basis.iter().map(|f| f.value(basis)).collect()
    }

    /// The module `Z·β_1 e_1` used when a spectrum is empty, so constant data
    /// still has a one-dimensional torus to live on.
    pub fn unit(dim: usize, basis_len: usize) -> Self {
        let mut coords = vec![vec![Rational::zero(); basis_len]; dim];
        coords[0][0] = Rational::one();
        let f = Frequency::new(coords).expect("valid shape");
        module_basis(&[f])
    }

    /// Integer coordinates (in this module's basis) of a basis of `sub`, as a
    /// lattice in Z^rank. `None` if `sub` is not a submodule.
    pub fn sublattice(&self, sub: &FreqModule) -> Option<IntLattice> {
        let rows = sub
            .basis()
            .iter()
            .map(|f| {
                self.coordinates(f)
                    .map(|k| k.iter().map(|x| x.to_i64()).collect::<Option<Vec<_>>>())
            })
            .collect::<Option<Option<Vec<_>>>>()??;
        Some(IntLattice::new(rows, self.rank()))
    }
}

/// A sublattice of Z^m in Hermite normal form, for fast membership tests.
#[derive(Clone, Debug)]
pub struct IntLattice {
    m: usize,
    rows: Vec<Vec<i64>>,
    pivots: Vec<usize>,
}

impl IntLattice {
    pub fn new(rows: Vec<Vec<i64>>, m: usize) -> Self {
        let big: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let hnf: Vec<Vec<i64>> = hermite_normal_form(&big)
            .into_iter()
            .map(|r| r.into_iter().map(|x| x.to_i64().expect("small lattice")).collect())
            .collect();
        let pivots = hnf
            .iter()
            .map(|r| r.iter().position(|&x| x != 0).unwrap())
            .collect();
        Self {
            m,
            rows: hnf,
            pivots,
        }
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        debug_assert_eq!(k.len(), self.m);
        let mut rest: Vec<i64> = k.to_vec();
        for (row, &col) in self.rows.iter().zip(&self.pivots) {
            if rest[..col].iter().any(|&x| x != 0) {
                return false;
            }
            if rest[col] % row[col] != 0 {
                return false;
            }
            let q = rest[col] / row[col];
            for (x, r) in rest.iter_mut().zip(row) {
                *x -= q * r;
            }
        }
        rest.iter().all(|&x| x == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    #[test]
    fn hnf_of_small_matrix() {
        let h = hermite_normal_form(&big(&[&[0, 1], &[0, 2], &[3, 0]]));
        assert_eq!(h, big(&[&[3, 0], &[0, 1]]));
        let h = hermite_normal_form(&big(&[&[4, 6], &[6, 9]]));
        // Rank-1 lattice generated by (2,3).
        assert_eq!(h, big(&[&[2, 3]]));
        let h = hermite_normal_form(&big(&[&[2, 1], &[0, 3], &[1, 1]]));
        assert_eq!(h, big(&[&[1, 0], &[0, 1]]));
    }

    #[test]
    fn lattice_membership() {
        let l = IntLattice::new(vec![vec![2, 0], vec![1, 3]], 2);
        assert!(l.contains(&[3, 3]));
        assert!(l.contains(&[0, 0]));
        assert!(!l.contains(&[1, 0]));
        assert!(!l.contains(&[0, 1]));
        let l1 = IntLattice::new(vec![vec![1, 0]], 2);
        assert!(l1.contains(&[5, 0]));
        assert!(!l1.contains(&[5, 1]));
    }
}
