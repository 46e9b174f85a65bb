//! Symmetric Krylov-Schur iteration on the shift-inverted operator `(A - σI)^{-1}`.
//!
//! Ritz values `θ` of the inverted operator map back to `λ = σ + 1/θ`; the
//! iteration keeps the Ritz pairs of largest `|θ|`, i.e. the eigenvalues of `A`
//! nearest the shift. Vectors in `locked` are projected out of every Krylov
//! vector, which deflates eigenpairs found earlier.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::SparseSymMatrix;

use super::ldlt::Ldlt;

pub(crate) struct KrylovOutput {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub applications: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthogonalizes `w` against `basis` twice (classical Gram-Schmidt with
/// reorthogonalization) and returns the accumulated coefficients.
fn cgs2(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut h = vec![0.0; basis.len()];
    for _ in 0..2 {
        let c: Vec<f64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, &ci) in basis.iter().zip(&c) {
            axpy(-ci, v, w);
        }
        for (hi, ci) in h.iter_mut().zip(c) {
            *hi += ci;
        }
    }
    h
}

fn project_out(locked: &[Vec<f64>], w: &mut [f64]) {
    if !locked.is_empty() {
        cgs2(locked, w);
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, locked: &[Vec<f64>], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..5 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        project_out(locked, &mut v);
        cgs2(basis, &mut v);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

pub(crate) struct KrylovParams {
    pub want: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

pub(crate) fn shift_invert(
    a: &SparseSymMatrix,
    factor: &Ldlt,
    locked: &[Vec<f64>],
    params: &KrylovParams,
) -> KrylovOutput {
    let n = a.dim();
    let free = n - locked.len().min(n);
    let want = params.want.min(free);
    let m = free.min((2 * want + 10).max(want + 20));
    let keep = (want + (m - want) / 2).min(m.saturating_sub(1)).max(want.min(m));
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut work = Vec::with_capacity(n);
    let mut applications = 0usize;

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = DMatrix::<f64>::zeros(m, m);
    let Some(v0) = random_unit(n, &mut rng, locked, &[]) else {
        return KrylovOutput { values: vec![], vectors: vec![], residuals: vec![], applications, converged: false };
    };
    basis.push(v0);
    let mut j0 = 0;
    let mut best: Option<KrylovOutput> = None;

    for _restart in 0..=params.max_restarts {
        let mut size = m;
        let mut beta = 0.0;
        for j in j0..m {
            let mut w = basis[j].clone();
            factor.solve_in_place(&mut w, &mut work);
            applications += 1;
            project_out(locked, &mut w);
            let coef = cgs2(&basis[..=j], &mut w);
            for (i, &c) in coef.iter().enumerate() {
                h[(i, j)] = c;
                h[(j, i)] = c;
            }
            beta = norm(&w);
            let hscale = coef.iter().fold(0.0f64, |s, c| s.max(c.abs()));
            if beta <= 1e-13 * hscale.max(f64::MIN_POSITIVE) {
                // invariant subspace: continue with a fresh direction, or stop when exhausted
                beta = 0.0;
                if j + 1 == m {
                    break;
                }
                match random_unit(n, &mut rng, locked, &basis) {
                    Some(v) => basis.push(v),
                    None => {
                        size = j + 1;
                        break;
                    }
                }
            } else {
                w.iter_mut().for_each(|x| *x /= beta);
                basis.push(w);
            }
        }
        let hm = h.view((0, 0), (size, size)).into_owned();
        let eig = SymmetricEigen::new(hm);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&p, &q| eig.eigenvalues[q].abs().total_cmp(&eig.eigenvalues[p].abs()));

        // Ritz vectors and true residuals for the wanted pairs
        let take = want.min(size);
        let mut values = Vec::with_capacity(take);
        let mut vectors = Vec::with_capacity(take);
        let mut residuals = Vec::with_capacity(take);
        let mut ax = vec![0.0; n];
        for &c in order.iter().take(take) {
            let y = eig.eigenvectors.column(c);
            let mut x = vec![0.0; n];
            for (k, v) in basis.iter().take(size).enumerate() {
                axpy(y[k], v, &mut x);
            }
            let nx = norm(&x);
            x.iter_mut().for_each(|t| *t /= nx);
            a.matvec(&x, &mut ax);
            let rq = dot(&x, &ax);
            axpy(-rq, &x, &mut ax);
            values.push(rq);
            residuals.push(norm(&ax));
            vectors.push(x);
        }
        let converged = take == want && residuals.iter().all(|&r| r < params.tol);
        let out = KrylovOutput { values, vectors, residuals, applications, converged };
        if converged || size < m || beta == 0.0 {
            return out;
        }
        best = Some(out);

        // restart: keep the leading Ritz vectors, reuse the residual direction
        let kept: Vec<usize> = order.iter().take(keep).copied().collect();
        let mut new_basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        for &c in &kept {
            let y = eig.eigenvectors.column(c);
            let mut x = vec![0.0; n];
            for (k, v) in basis.iter().take(size).enumerate() {
                axpy(y[k], v, &mut x);
            }
            new_basis.push(x);
        }
        let residual_dir = basis.pop().expect("expansion adds a trailing vector");
        new_basis.push(residual_dir);
        basis = new_basis;
        h.fill(0.0);
        for (i, &c) in kept.iter().enumerate() {
            h[(i, i)] = eig.eigenvalues[c];
        }
        j0 = kept.len();
    }
    best.unwrap_or(KrylovOutput { values: vec![], vectors: vec![], residuals: vec![], applications, converged: false })
}
