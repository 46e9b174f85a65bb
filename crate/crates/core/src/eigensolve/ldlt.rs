//! Envelope (skyline) LDLᵀ factorization of `A - σI` without pivoting.
//!
//! By Sylvester's law of inertia the number of negative entries of `D` equals
//! the number of eigenvalues of `A` below `σ`. A pivot smaller than
//! `PIVOT_TOL * ‖A - σI‖∞` aborts the factorization.

use crate::error::{Error, Result};
use crate::grid::SparseSymMatrix;

use super::ordering::{self, Permutation};

pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    perm: Permutation,
    /// first column of row i (permuted numbering)
    first: Vec<usize>,
    /// offset of row i inside `l`
    start: Vec<usize>,
    l: Vec<f64>,
    d: Vec<f64>,
    shift: f64,
}

impl Ldlt {
    /// Factors `A - shift * I` under a profile-reducing ordering.
    pub fn factor(a: &SparseSymMatrix, shift: f64) -> Result<Ldlt> {
        let perm = ordering::best_profile_ordering(a);
        Self::factor_with(a, shift, perm)
    }

    pub fn factor_with(a: &SparseSymMatrix, shift: f64, perm: Permutation) -> Result<Ldlt> {
        let n = a.dim();
        let inv = ordering::inverse(&perm);
        let mut first = Vec::with_capacity(n);
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for (new, &old) in perm.iter().enumerate() {
            let f = a.row_cols(old).iter().map(|&c| inv[c]).min().unwrap_or(new).min(new);
            first.push(f);
            start.push(start[new] + (new - f));
        }
        let scale = {
            let mut s: f64 = 0.0;
            for i in 0..n {
                let r: f64 = a.row(i).map(|(j, v)| if j == i { (v - shift).abs() } else { v.abs() }).sum();
                s = s.max(r);
            }
            s.max(f64::MIN_POSITIVE)
        };
        let mut l = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        // u[k - f_i] = l_ik d_k for the current row
        let mut u: Vec<f64> = Vec::new();
        for i in 0..n {
            let fi = first[i];
            let width = i - fi;
            u.clear();
            u.resize(width, 0.0);
            let mut aii = 0.0;
            for (c, v) in a.row(perm[i]) {
                let j = inv[c];
                if j < i {
                    u[j - fi] = v;
                } else if j == i {
                    aii = v - shift;
                }
            }
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = &l[start[j]..start[j + 1]];
                let s: f64 = u[lo - fi..j - fi]
                    .iter()
                    .zip(&row_j[lo - fj..j - fj])
                    .map(|(a, b)| a * b)
                    .sum();
                u[j - fi] -= s;
            }
            let mut dii = aii;
            let row_i = &mut l[start[i]..start[i + 1]];
            for k in 0..width {
                let lik = u[k] / d[fi + k];
                row_i[k] = lik;
                dii -= lik * u[k];
            }
            if !(dii.abs() >= PIVOT_TOL * scale) {
                return Err(Error::NearSingular { shift, pivot: dii, row: i });
            }
            d[i] = dii;
        }
        Ok(Ldlt { n, perm, first, start, l, d, shift })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored off-diagonal factor entries.
    pub fn envelope(&self) -> usize {
        self.l.len()
    }

    /// Number of negative pivots, i.e. eigenvalues of `A` below the shift.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&p| p < 0.0).count()
    }

    /// Solves `(A - σI) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut Vec<f64>) {
        let n = self.n;
        work.clear();
        work.extend(self.perm.iter().map(|&old| b[old]));
        let y = work.as_mut_slice();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] -= s;
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            for (yk, lk) in y[fi..i].iter_mut().zip(row) {
                *yk -= lk * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, kinetic_on_grid};

    #[test]
    fn solves_and_counts() {
        let g = build_grid(&[(0.0, 1.0, 6), (0.0, 1.0, 5)]).unwrap();
        let a = kinetic_on_grid(&g, &[1.0, 0.3]).unwrap();
        let shift = 123.4;
        let f = Ldlt::factor(&a, shift).unwrap();
        let x0: Vec<f64> = (0..a.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; a.dim()];
        a.matvec(&x0, &mut b);
        for (bi, xi) in b.iter_mut().zip(&x0) {
            *bi -= shift * xi;
        }
        let mut w = Vec::new();
        f.solve_in_place(&mut b, &mut w);
        for (x, y) in b.iter().zip(&x0) {
            assert!((x - y).abs() < 1e-10);
        }
        let dense = a.to_dense().symmetric_eigenvalues();
        let expected = dense.iter().filter(|&&v| v < shift).count();
        assert_eq!(f.negative_count(), expected);
    }

    #[test]
    fn exact_eigenvalue_is_rejected() {
        let a = SparseSymMatrix::diagonal_matrix(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(Ldlt::factor(&a, 2.0), Err(Error::NearSingular { .. })));
    }
}
