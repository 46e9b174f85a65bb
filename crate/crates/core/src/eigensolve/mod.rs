//! Lowest eigenvalues of sparse symmetric operators and inertia counting.
//!
//! `lowest_k` and `nearest_k` run a shift-invert Krylov-Schur iteration backed by
//! the envelope LDLᵀ factorization in [`ldlt`]. After convergence the result is
//! checked against Sylvester inertia counts; eigenvalues a single Krylov space
//! missed (exact or near multiplicities) are recovered by deflating the found
//! vectors and iterating again.
//!
//! Starting vectors come from a ChaCha8 stream seeded with `SolveOptions::seed`.

pub mod ldlt;
pub mod ordering;

mod krylov;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SparseSymMatrix;
use crate::par::{self, Execution};

pub use ldlt::Ldlt;

/// Dimension cap for the dense oracle.
pub const DENSE_MAX_DIM: usize = 3000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub k: usize,
    pub tol: f64,
    /// Pole of the spectral transformation. For `lowest_k` it must lie below
    /// the spectrum; `None` picks a point just below the Gershgorin bound.
    pub shift: Option<f64>,
    /// Krylov-Schur restarts per pass.
    pub max_iterations: usize,
    pub seed: u64,
    /// Confirm completeness with inertia counts.
    pub verify_inertia: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { k: 6, tol: 1e-8, shift: None, max_iterations: 300, seed: 0x5eed, verify_inertia: true }
    }
}

impl SolveOptions {
    pub fn with_k(k: usize) -> Self {
        SolveOptions { k, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub spectrum: Spectrum,
    pub vectors: Vec<Vec<f64>>,
}

fn validate(a: &SparseSymMatrix, opts: &SolveOptions) -> Result<()> {
    if opts.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if opts.k >= a.dim() {
        return Err(Error::InvalidArgument(format!("k = {} must be below the dimension {}", opts.k, a.dim())));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    Ok(())
}

/// Default pole: a little below the Gershgorin lower bound.
pub fn default_shift(a: &SparseSymMatrix) -> f64 {
    let g = a.gershgorin_lower();
    g - 1e-3 * g.abs().max(1e-3 * a.inf_norm()).max(1e-12)
}

/// Factors at `shift`, nudging it away from the spectrum on a near-zero pivot.
fn factor_near(a: &SparseSymMatrix, shift: f64) -> Result<Ldlt> {
    let mut s = shift;
    let step = 1e-9 * shift.abs().max(1.0);
    for attempt in 0..6 {
        match Ldlt::factor(a, s) {
            Ok(f) => return Ok(f),
            Err(Error::NearSingular { .. }) if attempt < 5 => {
                s = shift - step * (1u64 << (2 * attempt)) as f64;
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

struct Found {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

impl Found {
    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&p, &q| self.values[p].total_cmp(&self.values[q]));
        self.values = idx.iter().map(|&i| self.values[i]).collect();
        self.residuals = idx.iter().map(|&i| self.residuals[i]).collect();
        let mut vecs = std::mem::take(&mut self.vectors);
        self.vectors = idx.iter().map(|&i| std::mem::take(&mut vecs[i])).collect();
    }
}

/// Runs passes of the deflated iteration until `want` new pairs are found.
fn collect_pairs(
    a: &SparseSymMatrix,
    factor: &Ldlt,
    want: usize,
    found: &mut Found,
    opts: &SolveOptions,
    pass: u64,
) -> (usize, bool) {
    let out = krylov::shift_invert(
        a,
        factor,
        &found.vectors,
        &krylov::KrylovParams {
            want,
            tol: opts.tol,
            max_restarts: opts.max_iterations,
            seed: opts.seed.wrapping_add(pass.wrapping_mul(0x9e37_79b9)),
        },
    );
    found.values.extend(out.values);
    found.vectors.extend(out.vectors);
    found.residuals.extend(out.residuals);
    found.sort();
    (out.applications, out.converged)
}

/// Midpoint of the first relative gap at or after position `from`.
fn gap_threshold(values: &[f64], from: usize) -> Option<(usize, f64)> {
    (from..values.len().saturating_sub(1)).find_map(|i| {
        let (lo, hi) = (values[i], values[i + 1]);
        let scale = lo.abs().max(hi.abs()).max(1e-30);
        ((hi - lo) > 1e-7 * scale).then(|| (i + 1, 0.5 * (lo + hi)))
    })
}

/// Smallest `k` eigenpairs of `a`.
pub fn lowest_pairs(a: &SparseSymMatrix, opts: &SolveOptions) -> Result<Eigenpairs> {
    validate(a, opts)?;
    let n = a.dim();
    let shift = match opts.shift {
        Some(s) => {
            let f = Ldlt::factor(a, s)?;
            if f.negative_count() > 0 {
                return Err(Error::InvalidArgument(format!(
                    "shift {s} lies above {} eigenvalue(s); lowest_k needs a pole below the spectrum",
                    f.negative_count()
                )));
            }
            s
        }
        None => default_shift(a),
    };
    let factor = factor_near(a, shift)?;
    let want = (opts.k + 1).min(n - 1).max(opts.k);
    let mut found = Found { values: vec![], vectors: vec![], residuals: vec![] };
    let (mut iterations, mut converged) = collect_pairs(a, &factor, want, &mut found, opts, 0);

    if opts.verify_inertia && converged {
        for pass in 1..8u64 {
            // every eigenvalue below the first gap past position k-1 must have been found
            let Some((below, t)) = gap_threshold(&found.values, opts.k - 1) else { break };
            let count = count_below_nudged(a, t, &found.values)?;
            if count <= below {
                break;
            }
            let missing = count - below;
            let (it, ok) = collect_pairs(a, &factor, missing + 1, &mut found, opts, pass);
            iterations += it;
            converged &= ok;
            if !converged {
                break;
            }
        }
    }
    let k = opts.k.min(found.values.len());
    let converged = converged && k == opts.k;
    found.values.truncate(k);
    found.residuals.truncate(k);
    found.vectors.truncate(k);
    Ok(Eigenpairs {
        spectrum: Spectrum { values: found.values, residual_norms: found.residuals, iterations, converged },
        vectors: found.vectors,
    })
}

/// Smallest `k` eigenvalues of `a`.
pub fn lowest_k(a: &SparseSymMatrix, opts: &SolveOptions) -> Result<Spectrum> {
    lowest_pairs(a, opts).map(|p| p.spectrum)
}

/// The `k` eigenpairs nearest `target`, in ascending order.
pub fn nearest_k(a: &SparseSymMatrix, target: f64, opts: &SolveOptions) -> Result<Eigenpairs> {
    validate(a, opts)?;
    let factor = factor_near(a, target)?;
    let mut found = Found { values: vec![], vectors: vec![], residuals: vec![] };
    let (mut iterations, mut converged) = collect_pairs(a, &factor, opts.k, &mut found, opts, 0);
    if opts.verify_inertia && converged && found.values.len() >= 2 {
        for pass in 1..8u64 {
            // the window strictly inside the outermost found values must be complete
            let v = &found.values;
            let Some((lo_idx, lo)) = gap_threshold(v, 0) else { break };
            let Some((hi_idx, hi)) = (0..v.len() - 1).rev().find_map(|i| {
                let scale = v[i].abs().max(v[i + 1].abs()).max(1e-30);
                ((v[i + 1] - v[i]) > 1e-7 * scale).then(|| (i + 1, 0.5 * (v[i] + v[i + 1])))
            }) else {
                break;
            };
            if hi <= lo {
                break;
            }
            let inside = hi_idx - lo_idx;
            let count = count_below_nudged(a, hi, v)? - count_below_nudged(a, lo, v)?;
            if count <= inside {
                break;
            }
            let (it, ok) = collect_pairs(a, &factor, count - inside, &mut found, opts, pass);
            iterations += it;
            converged &= ok;
            if !converged {
                break;
            }
        }
    }
    // keep the k nearest
    let mut idx: Vec<usize> = (0..found.values.len()).collect();
    idx.sort_by(|&p, &q| (found.values[p] - target).abs().total_cmp(&(found.values[q] - target).abs()));
    idx.truncate(opts.k);
    idx.sort_by(|&p, &q| found.values[p].total_cmp(&found.values[q]));
    let values: Vec<f64> = idx.iter().map(|&i| found.values[i]).collect();
    let residual_norms = idx.iter().map(|&i| found.residuals[i]).collect();
    let vectors = idx.iter().map(|&i| found.vectors[i].clone()).collect();
    let converged = converged && values.len() == opts.k;
    Ok(Eigenpairs { spectrum: Spectrum { values, residual_norms, iterations, converged }, vectors })
}

fn count_below_nudged(a: &SparseSymMatrix, t: f64, known: &[f64]) -> Result<usize> {
    match count_below(a, t) {
        Err(Error::NearSingular { .. }) => {
            // t sits on an eigenvalue the Krylov space missed; move toward the nearest known value
            let nearest = known.iter().copied().min_by(|x, y| (x - t).abs().total_cmp(&(y - t).abs())).unwrap_or(t);
            count_below(a, 0.5 * (t + nearest) + 0.25 * (t - nearest))
        }
        r => r,
    }
}

/// Number of eigenvalues of `a` strictly below `lambda`, from the inertia of `a - λI`.
pub fn count_below(a: &SparseSymMatrix, lambda: f64) -> Result<usize> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold {lambda} is not finite")));
    }
    Ok(Ldlt::factor(a, lambda)?.negative_count())
}

/// Inertia counts for many thresholds; one factorization per threshold.
pub fn count_curve(a: &SparseSymMatrix, lambdas: &[f64], exec: Execution) -> Vec<Result<usize>> {
    par::map(exec, lambdas, |&l| count_below(a, l))
}

/// Full spectrum by dense symmetric eigendecomposition.
///
/// Residual norms are reported as the backward-error bound `ε · n · ‖A‖∞`
/// of the dense algorithm rather than recomputed per eigenvector.
pub fn dense_all(a: &SparseSymMatrix) -> Result<Spectrum> {
    if a.dim() > DENSE_MAX_DIM {
        return Err(Error::DimensionCap { dim: a.dim(), cap: DENSE_MAX_DIM });
    }
    let mut values: Vec<f64> = a.to_dense().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    let bound = f64::EPSILON * a.dim() as f64 * a.inf_norm();
    Ok(Spectrum { residual_norms: vec![bound; values.len()], values, iterations: 1, converged: true })
}

/// `‖A v - λ v‖₂` for each pair.
pub fn residuals(a: &SparseSymMatrix, spectrum: &Spectrum, vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    if spectrum.values.len() != vectors.len() {
        return Err(Error::DimensionMismatch { expected: spectrum.values.len(), got: vectors.len() });
    }
    let mut av = vec![0.0; a.dim()];
    vectors
        .iter()
        .zip(&spectrum.values)
        .map(|(v, &l)| {
            if v.len() != a.dim() {
                return Err(Error::DimensionMismatch { expected: a.dim(), got: v.len() });
            }
            a.matvec(v, &mut av);
            Ok(av.iter().zip(v).map(|(x, y)| (x - l * y).powi(2)).sum::<f64>().sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{add_diagonal_potential, axis_laplacian, build_grid};
    use approx::assert_abs_diff_eq;

    fn harmonic(n: usize, half: f64) -> SparseSymMatrix {
        let g = build_grid(&[(-half, half, n)]).unwrap();
        add_diagonal_potential(&axis_laplacian(&g.axes[0]), &g, |x| x[0] * x[0]).unwrap()
    }

    #[test]
    fn diagonal_example() {
        let a = SparseSymMatrix::diagonal_matrix(&[5.0, 1.0, 3.0]).unwrap();
        let s = lowest_k(&a, &SolveOptions::with_k(2)).unwrap();
        assert!(s.converged);
        assert_abs_diff_eq!(s.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.values[1], 3.0, epsilon = 1e-12);
        assert!(lowest_k(&a, &SolveOptions::with_k(3)).is_err());
    }

    #[test]
    fn harmonic_oscillator_levels() {
        let a = harmonic(1999, 10.0);
        let s = lowest_k(&a, &SolveOptions::with_k(4)).unwrap();
        assert!(s.converged);
        for (j, v) in s.values.iter().enumerate() {
            let exact = 2.0 * j as f64 + 1.0;
            assert!((v - exact).abs() < 1e-4 * exact, "{v}");
        }
        assert!(s.residual_norms.iter().all(|&r| r < 1e-8));
    }

    #[test]
    fn count_examples() {
        let a = SparseSymMatrix::diagonal_matrix(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(count_below(&a, 2.5).unwrap(), 2);
        assert_eq!(count_below(&a, a.gershgorin_lower() - 1.0).unwrap(), 0);
        assert_eq!(count_below(&harmonic(1999, 10.0), 10.0).unwrap(), 5);
    }

    #[test]
    fn dense_examples() {
        let a = SparseSymMatrix::tridiagonal(&[2.0; 3], &[-1.0; 2]).unwrap();
        let s = dense_all(&a).unwrap();
        let r2 = 2f64.sqrt();
        for (v, e) in s.values.iter().zip([2.0 - r2, 2.0, 2.0 + r2]) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-12);
        }
        let big = SparseSymMatrix::diagonal_matrix(&vec![1.0; 3001]).unwrap();
        assert!(matches!(dense_all(&big), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn residual_examples() {
        let a = SparseSymMatrix::diagonal_matrix(&[1.0, 2.0]).unwrap();
        let s = Spectrum { values: vec![1.0], residual_norms: vec![0.0], iterations: 0, converged: true };
        assert_eq!(residuals(&a, &s, &[vec![1.0, 0.0]]).unwrap(), vec![0.0]);
        let eps: f64 = 1e-4;
        let n = (1.0 + eps * eps).sqrt();
        let r = residuals(&a, &s, &[vec![1.0 / n, eps / n]]).unwrap()[0];
        assert!(r > 0.5 * eps && r < 2.0 * eps);
        assert!(residuals(&a, &s, &[]).is_err());
    }

    #[test]
    fn degenerate_cluster_is_recovered() {
        // 2D isotropic oscillator: level n has multiplicity n + 1
        let g = build_grid(&[(-6.0, 6.0, 49), (-6.0, 6.0, 49)]).unwrap();
        let kin = crate::grid::kinetic_on_grid(&g, &[1.0, 1.0]).unwrap();
        let a = add_diagonal_potential(&kin, &g, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let s = lowest_k(&a, &SolveOptions::with_k(10)).unwrap();
        assert!(s.converged);
        let dense = dense_all(&a).unwrap();
        for (v, d) in s.values.iter().zip(&dense.values) {
            assert_abs_diff_eq!(*v, *d, epsilon = 1e-7);
        }
    }

    #[test]
    fn nearest_window_is_complete() {
        let a = harmonic(400, 8.0);
        let dense = dense_all(&a).unwrap();
        let p = nearest_k(&a, 20.2, &SolveOptions::with_k(4)).unwrap();
        assert!(p.spectrum.converged);
        let mut want: Vec<f64> = dense.values.clone();
        want.sort_by(|x, y| (x - 20.2).abs().total_cmp(&(y - 20.2).abs()));
        want.truncate(4);
        want.sort_by(f64::total_cmp);
        for (v, d) in p.spectrum.values.iter().zip(&want) {
            assert_abs_diff_eq!(*v, *d, epsilon = 1e-8);
        }
    }
}
