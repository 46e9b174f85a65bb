//! Born-Oppenheimer reduction of `ℏ²D_y² + D_z² + f(y) g(z)`.
//!
//! The fiber operator `D_z² + f(y) g(z)` has eigenvalues `μ_j f(y)^{2/(2+a)}`,
//! where `μ_j` are the levels of `D_z² + g`. Each band `j` defines the effective
//! operator `ℏ²D_y² + μ_j f^{2/(2+a)}(y)`, whose low levels approximate those
//! of the full operator.
//!
//! Full two-dimensional solves (`n = p = 1`) use parity sectors: for even `f`
//! and `g` the quadrant `y, z ≥ 0` with Neumann or Dirichlet reflection planes
//! carries one symmetry class each. Full eigenvectors are labelled with the
//! band onto which they project most, using discrete fiber eigenvectors at
//! every `y` node.

pub mod report;
pub mod well;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{lowest_k, lowest_pairs, nearest_k, SolveOptions, Spectrum};
use crate::error::{Error, Result};
use crate::grid::{
    add_diagonal_potential, axis_laplacian, kinetic_on_grid, richardson, Axis, Grid, Parity,
    SparseSymMatrix,
};
use crate::par::{self, Execution};
use crate::potential::{check_f_hypotheses, hessian_at, tr_sqrt, Evaluator};
use crate::weyl::wkb_level;

pub use report::{fit_order, BOReport, OrderFit, ReportRow};

/// Tunnelling action at which computational domains are truncated.
pub const DEFAULT_ACTION: f64 = 20.0;

/// A Richardson-extrapolated eigenvalue with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub value: f64,
    /// Size of the last Richardson correction.
    pub error: f64,
}

/// Discretization controls shared by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Grid spacing as a fraction of the local de Broglie length.
    pub resolution: f64,
    /// Tunnelling action at the domain edge.
    pub action: f64,
    /// Eigenpairs computed around each target.
    pub window: usize,
    pub exec: Execution,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics { resolution: 0.1, action: DEFAULT_ACTION, window: 8, exec: Execution::Parallel }
    }
}

/// Distance from 0 along `x ↦ w(x)`, `x ≥ 0`, at which `∫ √(w - E)₊ dx / ℏ`
/// over the last forbidden stretch reaches `action`.
pub fn wkb_extent(w: &dyn Fn(f64) -> f64, energy: f64, hbar: f64, action: f64) -> Result<f64> {
    let mut x = 0.0f64;
    let mut s = 0.0;
    let mut prev = (w(0.0) - energy).max(0.0).sqrt();
    while x < 1e4 {
        let dx = 1e-3 * x.max(1.0) * hbar.min(1.0).max(1e-2);
        let next = x + dx;
        let wn = w(next);
        if !wn.is_finite() {
            return Err(Error::NonFinitePotential { index: 0, coords: vec![next] });
        }
        let cur = (wn - energy).max(0.0).sqrt();
        if wn <= energy {
            s = 0.0;
        } else {
            s += 0.5 * (prev + cur) * dx / hbar;
        }
        prev = cur;
        x = next;
        if s >= action {
            return Ok(x);
        }
    }
    Err(Error::Truncation(format!("potential does not confine energy {energy} within |x| < 1e4")))
}

fn even_check(f: &Evaluator, what: &str) -> Result<()> {
    for i in 1..=40 {
        let y = 0.137 * i as f64;
        let (a, b) = (f.eval(&[y]), f.eval(&[-y]));
        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
            return Err(Error::InvalidArgument(format!("parity sectors require an even {what}; {what}({y}) != {what}(-{y})")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseOptions {
    pub resolution: f64,
    pub action: f64,
}

impl Default for TransverseOptions {
    fn default() -> Self {
        TransverseOptions { resolution: 0.1, action: DEFAULT_ACTION }
    }
}

/// Levels `μ_j` of `D_z² + g(z)` with discretization metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseSpectrum {
    pub mu: Vec<f64>,
    pub errors: Vec<f64>,
    pub g_degree: f64,
    pub half_width: f64,
    /// Coarser spacing of the Richardson pair.
    pub spacing: f64,
}

/// `μ_1..μ_{j_max}` of `D_z² + g(z)` on a Dirichlet box sized by the WKB
/// action, extrapolated from spacings `Δ` and `Δ/2`.
pub fn transverse_mu(g: &Evaluator, a: f64, j_max: usize, opts: &TransverseOptions) -> Result<TransverseSpectrum> {
    if j_max == 0 || !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("transverse_mu needs j_max >= 1 and a > 0, got {j_max}, {a}")));
    }
    let p = g.dim();
    let unit = |i: usize, s: f64| {
        let mut e = vec![0.0; p];
        e[i] = s;
        e
    };
    let (mut cmin, mut cmax) = (f64::INFINITY, 0.0f64);
    for i in 0..p {
        for s in [-1.0, 1.0] {
            let c = g.eval(&unit(i, s));
            cmin = cmin.min(c);
            cmax = cmax.max(c);
        }
    }
    if !(cmin > 0.0) {
        return Err(Error::InvalidArgument(format!("g must be positive away from 0 (min on unit axes {cmin})")));
    }
    // per-axis level estimate; in p dimensions roughly j^(1/p) quanta per axis
    let jj = (j_max as f64).powf(1.0 / p as f64).ceil() + (p as f64 - 1.0) * 0.5;
    let mut energy = 1.2 * p as f64 * cmax.powf(2.0 / (a + 2.0)) * wkb_level(a, jj) + 1.0;
    for _ in 0..4 {
        let mut half = 0.0f64;
        for i in 0..p {
            for s in [-1.0, 1.0] {
                let ray = |t: f64| g.eval(&unit(i, s * t));
                half = half.max(wkb_extent(&ray, energy, 1.0, opts.action)?);
            }
        }
        let spacing = opts.resolution / energy.sqrt();
        let axis = Axis::centered(half, spacing)?;
        let mut values = Vec::new();
        let mut spacings = Vec::new();
        for ax in [axis.clone(), axis.refined()] {
            let grid = Grid::new(vec![ax.clone(); p])?;
            let op = add_diagonal_potential(&kinetic_on_grid(&grid, &vec![1.0; p])?, &grid, |z| g.eval(z))?;
            let spec = lowest_k(&op, &SolveOptions::with_k(j_max))?;
            if !spec.converged {
                return Err(Error::Solver("transverse eigensolve did not converge".into()));
            }
            values.push(spec.values);
            spacings.push(ax.spacing);
        }
        let top = values[1][j_max - 1];
        if top > energy {
            energy = 1.5 * top;
            continue;
        }
        let mut mu = Vec::with_capacity(j_max);
        let mut errors = Vec::with_capacity(j_max);
        for j in 0..j_max {
            let (v, e) = richardson(&[values[0][j], values[1][j]], &spacings, 2)?;
            mu.push(v);
            errors.push(e);
        }
        return Ok(TransverseSpectrum { mu, errors, g_degree: a, half_width: half, spacing: axis.spacing });
    }
    Err(Error::Truncation("transverse domain estimate did not stabilize".into()))
}

/// `λ_j(y) = μ_j f(y)^{2/(2+a)}`.
pub fn fiber_eigenvalue(mu_j: f64, f: &Evaluator, a: f64, y: &[f64]) -> Result<f64> {
    let v = f.eval(y);
    if !(v > 0.0) {
        return Err(Error::InvalidArgument(format!("f must be positive, f({y:?}) = {v}")));
    }
    Ok(mu_j * v.powf(2.0 / (2.0 + a)))
}

/// `ℏ = h^{2/(2+a)}`.
pub fn hbar_of(h: f64, a: f64) -> f64 {
    h.powf(2.0 / (2.0 + a))
}

/// `h = ℏ^{(2+a)/2}`.
pub fn h_of(hbar: f64, a: f64) -> f64 {
    hbar.powf(0.5 * (2.0 + a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledSpectrum {
    pub spectrum: Spectrum,
    pub h: f64,
    pub hbar: f64,
    pub a: f64,
}

/// Maps the spectrum of `-h²Δ + f(y)g(z)` to that of `ℏ²D_y² + D_z² + f(y)g(z)`
/// by dividing by `ℏ^a`.
pub fn rescale_spectrum(h: f64, a: f64, spectrum: &Spectrum) -> Result<RescaledSpectrum> {
    if !(h > 0.0 && h <= 1.0 && a > 0.0) {
        return Err(Error::InvalidArgument(format!("rescaling needs h in (0, 1] and a > 0, got h = {h}, a = {a}")));
    }
    let hbar = hbar_of(h, a);
    let s = hbar.powf(a);
    let mut out = spectrum.clone();
    out.values.iter_mut().for_each(|v| *v /= s);
    out.residual_norms.iter_mut().for_each(|v| *v /= s);
    Ok(RescaledSpectrum { spectrum: out, h, hbar, a })
}

/// `ℏ²D_y² + μ_j f^{2/(2+a)}(y)` on a grid.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub j: usize,
    pub mu: f64,
    pub hbar: f64,
    pub a: f64,
    pub f: Evaluator,
    pub grid: Grid,
    pub operator: SparseSymMatrix,
}

impl EffectiveModel {
    pub fn new(f: &Evaluator, a: f64, j: usize, mu: f64, hbar: f64, grid: Grid) -> Result<Self> {
        if !(hbar > 0.0 && hbar <= 1.0) {
            return Err(Error::InvalidArgument(format!("hbar = {hbar} must lie in (0, 1]")));
        }
        if grid.dim() != f.dim() {
            return Err(Error::DimensionMismatch { expected: f.dim(), got: grid.dim() });
        }
        let e = 2.0 / (2.0 + a);
        let kin = kinetic_on_grid(&grid, &vec![hbar * hbar; grid.dim()])?;
        let operator = add_diagonal_potential(&kin, &grid, |y| {
            let v = f.eval(y);
            if v > 0.0 {
                mu * v.powf(e)
            } else {
                f64::NAN
            }
        })?;
        Ok(EffectiveModel { j, mu, hbar, a, f: f.clone(), grid, operator })
    }
}

/// Lowest `k_max` eigenvalues of the effective operator on its grid.
pub fn effective_spectrum(model: &EffectiveModel, k_max: usize) -> Result<Spectrum> {
    lowest_k(&model.operator, &SolveOptions::with_k(k_max))
}

/// Harmonic model of the band-`j` potential at its minimum `y = 0`:
/// `W(0)` and `W''(0)`.
fn band_curvature(f: &Evaluator, a: f64, mu: f64) -> Result<(f64, f64)> {
    let e = 2.0 / (2.0 + a);
    let w = Evaluator::new("band", 1, {
        let f = f.clone();
        move |y| mu * f.eval(y).powf(e)
    });
    let h = hessian_at(&w, &[0.0], 1e-3)?;
    Ok((w.eval(&[0.0]), h[(0, 0)].max(0.0)))
}

fn solve_sorted(op: &SparseSymMatrix, k: usize) -> Result<Vec<f64>> {
    let s = lowest_k(op, &SolveOptions::with_k(k))?;
    if !s.converged {
        return Err(Error::Solver("eigensolve did not converge".into()));
    }
    Ok(s.values)
}

/// Lowest `k_max` levels of `ℏ²D_y² + μ f^{2/(2+a)}(y)` for even `f` on the
/// line, solved per parity on WKB-sized half lines with a Richardson pair.
pub fn effective_levels(f: &Evaluator, a: f64, mu: f64, hbar: f64, k_max: usize, num: &Numerics) -> Result<Vec<Level>> {
    // levels of an even 1D potential alternate in parity, starting even
    let [even, odd] = effective_parity_levels(f, a, mu, hbar, [k_max.div_ceil(2), k_max / 2], num)?;
    let mut merged: Vec<Level> = even.into_iter().chain(odd).collect();
    merged.sort_by(|x, y| x.value.total_cmp(&y.value));
    Ok(merged)
}

/// The lowest `counts[0]` even and `counts[1]` odd levels of the effective operator.
pub fn effective_parity_levels(
    f: &Evaluator,
    a: f64,
    mu: f64,
    hbar: f64,
    counts: [usize; 2],
    num: &Numerics,
) -> Result<[Vec<Level>; 2]> {
    if f.dim() != 1 {
        return Err(Error::InvalidArgument("effective levels support one longitudinal dimension".into()));
    }
    even_check(f, "f")?;
    let e = 2.0 / (2.0 + a);
    let (w0, w2) = band_curvature(f, a, mu)?;
    let quantum = hbar * (0.5 * w2).sqrt();
    let k_max = counts[0].max(counts[1]);
    let mut energy = w0 + 1.5 * quantum * (2 * k_max) as f64 + hbar;
    for _ in 0..4 {
        let ray = |y: f64| mu * f.eval(&[y]).powf(e);
        let extent = wkb_extent(&ray, energy, hbar, num.action)?;
        let spacing = num.resolution * hbar / (energy - w0).max(quantum).sqrt();
        let mut out: [Vec<Level>; 2] = [Vec::new(), Vec::new()];
        let mut top: f64 = 0.0;
        for (slot, parity) in [Parity::Even, Parity::Odd].into_iter().enumerate() {
            let count = counts[slot];
            if count == 0 {
                continue;
            }
            let axis = Axis::half_line(extent, spacing, parity)?;
            let mut vals = Vec::new();
            let mut sp = Vec::new();
            for ax in [axis.clone(), axis.refined()] {
                let grid = Grid::new(vec![ax.clone()])?;
                let model = EffectiveModel::new(f, a, 0, mu, hbar, grid)?;
                vals.push(solve_sorted(&model.operator, count)?);
                sp.push(ax.spacing);
            }
            top = top.max(vals[1][count - 1]);
            for i in 0..count {
                let (value, error) = richardson(&[vals[0][i], vals[1][i]], &sp, 2)?;
                out[slot].push(Level { value, error });
            }
        }
        if top > energy {
            energy = top + 2.0 * quantum + hbar;
            continue;
        }
        return Ok(out);
    }
    Err(Error::Truncation("effective domain estimate did not stabilize".into()))
}

/// Levels `Σ_i ω_i (2α_i + 1)` of `D_y² + (μ/(2+a)) ⟨H y, y⟩`, `ω_i = √(μ ν_i/(2+a))`.
pub fn harmonic_levels(mu: f64, hess: &DMatrix<f64>, a: f64, k_max: usize) -> Result<Vec<f64>> {
    if !hess.is_square() || hess.nrows() == 0 {
        return Err(Error::InvalidArgument("Hessian must be a nonempty square matrix".into()));
    }
    let nu = ((hess + hess.transpose()) * 0.5).symmetric_eigenvalues();
    if let Some(v) = nu.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!("Hessian is not positive definite (eigenvalue {v})")));
    }
    let omega: Vec<f64> = nu.iter().map(|&v| (mu * v / (2.0 + a)).sqrt()).collect();
    let energy = |alpha: &[usize]| alpha.iter().zip(&omega).map(|(&k, w)| w * (2 * k + 1) as f64).sum::<f64>();
    let n = omega.len();
    let mut heap = BinaryHeap::new();
    let mut seen = BTreeSet::new();
    let start = vec![0usize; n];
    heap.push(Reverse((OrdF64(energy(&start)), start.clone())));
    seen.insert(start);
    let mut out = Vec::with_capacity(k_max);
    while out.len() < k_max {
        let Some(Reverse((OrdF64(e), alpha))) = heap.pop() else { break };
        out.push(e);
        for i in 0..n {
            let mut next = alpha.clone();
            next[i] += 1;
            if seen.insert(next.clone()) {
                heap.push(Reverse((OrdF64(energy(&next)), next)));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// `μ_j + ℏ √μ_j tr(√Hess f(0)) / √(2+a)`.
pub fn expansion_value(mu_j: f64, hbar: f64, trsqrt: f64, a: f64) -> f64 {
    mu_j + hbar * mu_j.sqrt() * trsqrt / (2.0 + a).sqrt()
}

/// `μ_1 f(∞)^{2/(2+a)}`; `None` stands for `f(∞) = ∞`.
pub fn ess_bound(mu1: f64, f_inf: Option<f64>, a: f64) -> f64 {
    match f_inf {
        None => f64::INFINITY,
        Some(v) if v.is_infinite() => f64::INFINITY,
        Some(v) => mu1 * v.powf(2.0 / (2.0 + a)),
    }
}

/// `ℏ²D_y² + D_z² + f(y) g(z)` on `grid`, whose first `n` axes carry `y`.
pub fn full_model(f: &Evaluator, g: &Evaluator, hbar: f64, grid: &Grid) -> Result<SparseSymMatrix> {
    let (n, p) = (f.dim(), g.dim());
    if grid.dim() != n + p {
        return Err(Error::DimensionMismatch { expected: n + p, got: grid.dim() });
    }
    let mut coef = vec![hbar * hbar; n];
    coef.extend(std::iter::repeat_n(1.0, p));
    let kin = kinetic_on_grid(grid, &coef)?;
    add_diagonal_potential(&kin, grid, |x| f.eval(&x[..n]) * g.eval(&x[n..]))
}

/// A symmetry sector of the quadrant `y, z ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub y: Parity,
    pub z: Parity,
}

/// Fiber band `j` lives in the `z` sector of parity `(j - 1) mod 2`.
pub fn band_parity(j: usize) -> Parity {
    Parity::of_index(j - 1)
}

/// A full eigenvalue with its dominant fiber band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelledLevel {
    pub value: f64,
    /// Band index `j` (1-based, over both `z` parities).
    pub band: usize,
    /// Squared projection onto that band.
    pub weight: f64,
}

/// Quadrant lattice for a sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorLattice {
    pub y: Axis,
    pub z: Axis,
}

impl SectorLattice {
    pub fn new(sector: Sector, y_extent: f64, dy: f64, z_extent: f64, dz: f64) -> Result<Self> {
        Ok(SectorLattice { y: Axis::half_line(y_extent, dy, sector.y)?, z: Axis::half_line(z_extent, dz, sector.z)? })
    }

    pub fn refined(&self) -> Self {
        SectorLattice { y: self.y.refined(), z: self.z.refined() }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(vec![self.y.clone(), self.z.clone()])
    }
}

/// Discrete fiber eigenvectors at every `y` node, `bands` per node.
fn fiber_basis(f: &Evaluator, g: &Evaluator, lat: &SectorLattice, bands: usize, exec: Execution) -> Result<Vec<Vec<Vec<f64>>>> {
    let lap = axis_laplacian(&lat.z);
    let gz: Vec<f64> = lat.z.nodes().iter().map(|&z| g.eval(&[z])).collect();
    let ys = lat.y.nodes();
    let bands = bands.min(lat.z.points - 1);
    par::map(exec, &ys, |&y| {
        let fy = f.eval(&[y]);
        let d: Vec<f64> = gz.iter().map(|v| fy * v).collect();
        let op = lap.add_diagonal(&d);
        lowest_pairs(&op, &SolveOptions::with_k(bands)).map(|p| p.vectors)
    })
    .into_iter()
    .collect()
}

fn label(psi: &[f64], basis: &[Vec<Vec<f64>>], nz: usize, z_parity: Parity) -> (usize, f64) {
    let bands = basis[0].len();
    let mut w = vec![0.0; bands];
    for (i, fib) in basis.iter().enumerate() {
        let col = &psi[i * nz..(i + 1) * nz];
        for (b, phi) in fib.iter().enumerate() {
            let c: f64 = col.iter().zip(phi).map(|(x, y)| x * y).sum();
            w[b] += c * c;
        }
    }
    let norm: f64 = psi.iter().map(|x| x * x).sum();
    let (b, wb) = w.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let j = match z_parity {
        Parity::Even => 2 * b + 1,
        Parity::Odd => 2 * b + 2,
    };
    (j, wb / norm)
}

/// The `window` eigenvalues of the sector operator nearest `target`, labelled by band.
pub fn sector_window(
    f: &Evaluator,
    g: &Evaluator,
    hbar: f64,
    sector: Sector,
    lat: &SectorLattice,
    target: f64,
    window: usize,
    bands: usize,
    exec: Execution,
) -> Result<Vec<LabelledLevel>> {
    let grid = lat.grid()?;
    let op = full_model(f, g, hbar, &grid)?;
    let pairs = nearest_k(&op, target, &SolveOptions::with_k(window))?;
    if !pairs.spectrum.converged {
        return Err(Error::Solver(format!("sector eigensolve near {target} did not converge")));
    }
    let basis = fiber_basis(f, g, lat, bands, exec)?;
    let nz = lat.z.points;
    Ok(pairs
        .spectrum
        .values
        .iter()
        .zip(&pairs.vectors)
        .map(|(&value, v)| {
            let (band, weight) = label(v, &basis, nz, sector.z);
            LabelledLevel { value, band, weight }
        })
        .collect())
}

/// Full eigenvalue attached to band `j` nearest `reference`, on a Richardson pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLevel {
    pub level: Level,
    pub weight: f64,
    pub flags: Vec<String>,
}

/// Finds the full eigenvalue of band `j` and `y` parity `y_parity` nearest
/// `reference` (typically the effective level it should approximate).
pub fn full_cell(
    f: &Evaluator,
    g: &Evaluator,
    a: f64,
    hbar: f64,
    mu_j: f64,
    j: usize,
    y_parity: Parity,
    reference: f64,
    num: &Numerics,
) -> Result<CellLevel> {
    let sector = Sector { y: y_parity, z: band_parity(j) };
    let f0 = f.eval(&[0.0]);
    let e_ext = reference + 2.0 * hbar * mu_j.sqrt() + hbar;
    let band_w = |y: f64| fiber_level(mu_j, f, a, y);
    let y_ext = wkb_extent(&band_w, e_ext, hbar, num.action)?;
    let z_ext = wkb_extent(&|z: f64| f0 * g.eval(&[z]), e_ext, 1.0, num.action)?;
    let floor = fiber_level(mu_j, f, a, 0.0);
    let dy = num.resolution * hbar / (e_ext - floor).sqrt();
    let dz = num.resolution / e_ext.sqrt();
    let lat = SectorLattice::new(sector, y_ext, dy, z_ext, dz)?;
    let bands = (j - 1) / 2 + 2;
    let mut values = Vec::new();
    let mut spacings = Vec::new();
    let mut weight: f64 = 1.0;
    let mut flags = Vec::new();
    for l in [lat.clone(), lat.refined()] {
        let states = sector_window(f, g, hbar, sector, &l, reference, num.window, bands, num.exec)?;
        let mut cands: Vec<&LabelledLevel> = states.iter().filter(|s| s.band == j).collect();
        cands.sort_by(|x, y| (x.value - reference).abs().total_cmp(&(y.value - reference).abs()));
        let Some(best) = cands.first() else {
            return Err(Error::Solver(format!("no eigenvalue of band {j} found near {reference}")));
        };
        if let Some(second) = cands.get(1) {
            if (second.value - reference).abs() < 2.0 * (best.value - reference).abs() {
                flags.push("ambiguous".to_string());
            }
        }
        weight = weight.min(best.weight);
        values.push(best.value);
        spacings.push(l.y.spacing);
    }
    if weight < 0.5 {
        flags.push("weak-label".to_string());
    }
    flags.dedup();
    let (value, error) = richardson(&values, &spacings, 2)?;
    Ok(CellLevel { level: Level { value, error }, weight, flags })
}

fn fiber_level(mu_j: f64, f: &Evaluator, a: f64, y: f64) -> f64 {
    mu_j * f.eval(&[y]).powf(2.0 / (2.0 + a))
}

/// Validity domain of a comparison sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Bands below the essential-spectrum bound, `μ_j < μ_1 f(∞)^{2/(2+a)}`.
    LowEnergy,
    /// `a ≥ 2`, `f(∞) = ∞` and `μ_j ≤ ℏ^-2`, with errors growing like `μ_j ℏ²`.
    MiddleEnergy,
}

#[derive(Debug, Clone)]
pub struct BOConfig {
    pub f: Evaluator,
    pub g: Evaluator,
    pub a: f64,
    /// `liminf f` at infinity; `None` for `+∞`.
    pub f_inf: Option<f64>,
    pub hbars: Vec<f64>,
    pub j_max: usize,
    pub k_max: usize,
    pub regime: Regime,
    /// Report failed hypothesis checks instead of refusing.
    pub warn_only: bool,
    pub numerics: Numerics,
}

/// `f / f(0)` and the factor `f(0)`.
pub fn normalize_f(f: &Evaluator) -> Result<(Evaluator, f64)> {
    let f0 = f.eval(&vec![0.0; f.dim()]);
    if !(f0 > 0.0) {
        return Err(Error::InvalidArgument(format!("f(0) = {f0} must be positive")));
    }
    if f0 == 1.0 {
        return Ok((f.clone(), 1.0));
    }
    Ok((f.scaled(1.0 / f0), f0))
}

/// Admissible bands of a sweep at `hbar`, or the reason a band is refused.
pub fn gate(regime: Regime, mu: &[f64], f_inf: Option<f64>, a: f64, hbar: f64) -> Result<Vec<std::result::Result<usize, String>>> {
    match regime {
        Regime::LowEnergy => {
            let bound = ess_bound(mu[0], f_inf, a);
            Ok(mu
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    if m < bound {
                        Ok(i + 1)
                    } else {
                        Err(format!("band {}: mu = {m} is not below the essential bound {bound}", i + 1))
                    }
                })
                .collect())
        }
        Regime::MiddleEnergy => {
            if a < 2.0 {
                return Err(Error::Gate(format!("middle-energy regime requires a >= 2, got a = {a}")));
            }
            if f_inf.is_some_and(|v| v.is_finite()) {
                return Err(Error::Gate("middle-energy regime requires f(inf) = inf".into()));
            }
            let cap = hbar.powi(-2);
            Ok(mu
                .iter()
                .enumerate()
                .map(|(i, &m)| if m <= cap { Ok(i + 1) } else { Err(format!("band {}: mu = {m} exceeds hbar^-2 = {cap}", i + 1)) })
                .collect())
        }
    }
}

/// Compares full, effective and expansion values over an `ℏ` sweep.
///
/// Each cell `(ℏ, j, k)` pairs the `k`-th effective level of band `j` with the
/// full eigenvalue of band `j` nearest to it in the matching parity sector.
/// `k`-th levels alternate in `y` parity, so `k` odd is even in `y`.
pub fn bo_compare(cfg: &BOConfig) -> Result<BOReport> {
    if cfg.f.dim() != 1 || cfg.g.dim() != 1 {
        return Err(Error::InvalidArgument("bo_compare supports n = p = 1".into()));
    }
    if cfg.hbars.is_empty() || cfg.j_max == 0 || cfg.k_max == 0 {
        return Err(Error::InvalidArgument("sweep needs hbars, j_max and k_max".into()));
    }
    if let Some(h) = cfg.hbars.iter().find(|&&h| !(h > 0.0 && h <= 1.0)) {
        return Err(Error::InvalidArgument(format!("hbar = {h} must lie in (0, 1]")));
    }
    even_check(&cfg.f, "f")?;
    even_check(&cfg.g, "g")?;
    let (f, f_scale) = normalize_f(&cfg.f)?;
    let f_inf = cfg.f_inf.map(|v| v / f_scale);
    let hyp = check_f_hypotheses(&f, 3.0, Some(f_inf.unwrap_or(f64::INFINITY)))?;
    let mut report = BOReport::new("bo", cfg.a);
    report.f_scale = f_scale;
    report.hypotheses = Some(hyp.clone());
    if !hyp.overall {
        let failed: Vec<&str> = hyp.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        if !cfg.warn_only {
            return Err(Error::Gate(format!("hypotheses on f fail: {}", failed.join("; "))));
        }
        report.skipped.push(format!("warning: hypotheses on f fail: {}", failed.join("; ")));
    }
    let ts = transverse_mu(&cfg.g, cfg.a, cfg.j_max, &TransverseOptions::default())?;
    let hess = hessian_at(&f, &[0.0], 1e-3)?;
    let trs = tr_sqrt(&hess)?;
    report.extra.insert("tr_sqrt_hess".into(), trs);

    let mut cells = Vec::new();
    for &hbar in &cfg.hbars {
        for adm in gate(cfg.regime, &ts.mu, f_inf, cfg.a, hbar)? {
            match adm {
                Ok(j) => cells.push((hbar, j)),
                Err(reason) => report.skipped.push(format!("hbar {hbar}: {reason}")),
            }
        }
    }
    let results = par::map(cfg.numerics.exec, &cells, |&(hbar, j)| -> Result<Vec<ReportRow>> {
        let mu_j = ts.mu[j - 1];
        let eff = effective_levels(&f, cfg.a, mu_j, hbar, cfg.k_max, &cfg.numerics)?;
        let harm = harmonic_levels(mu_j, &hess, cfg.a, cfg.k_max)?;
        let mut rows = Vec::new();
        for k in 1..=cfg.k_max {
            let e = eff[k - 1];
            let parity = Parity::of_index(k - 1);
            let cell = full_cell(&f, &cfg.g, cfg.a, hbar, mu_j, j, parity, e.value, &cfg.numerics)?;
            let prediction = if k == 1 { expansion_value(mu_j, hbar, trs, cfg.a) } else { mu_j + hbar * harm[k - 1] };
            rows.push(ReportRow {
                hbar: Some(hbar),
                h: h_of(hbar, cfg.a),
                j,
                k: Some(k),
                l: None,
                alpha: None,
                mu_j,
                full: cell.level.value,
                full_error: cell.level.error,
                effective: Some(e.value),
                effective_error: Some(e.error),
                prediction,
                err_effective: Some((cell.level.value - e.value).abs()),
                err_prediction: (cell.level.value - prediction).abs(),
                flags: cell.flags,
            });
        }
        Ok(rows)
    });
    for r in results {
        report.rows.extend(r?);
    }
    report.rows.sort_by(|x, y| (x.j, x.k, x.hbar.map(|h| -h)).partial_cmp(&(y.j, y.k, y.hbar.map(|h| -h))).unwrap());
    report.fit_orders();
    for j in 1..=cfg.j_max {
        let pts: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r.j == j && r.k == Some(1))
            .map(|r| (r.hbar.unwrap(), r.full - r.prediction))
            .collect();
        if let Some((c32, c2)) = half_power_fit(&pts) {
            report.extra.insert(format!("coef_hbar3_2_j{j}"), c32);
            report.extra.insert(format!("coef_hbar2_j{j}"), c2);
        }
    }
    if cfg.regime == Regime::MiddleEnergy {
        for j in 1..=cfg.j_max {
            let c = report
                .rows
                .iter()
                .filter(|r| r.j == j && r.k == Some(1))
                .map(|r| r.err_prediction / (r.mu_j * r.hbar.unwrap().powi(2)))
                .fold(f64::NAN, f64::max);
            if c.is_finite() {
                report.extra.insert(format!("C_mu_hbar2_j{j}"), c);
            }
        }
    }
    Ok(report)
}

/// Least-squares `r ≈ c₁ ℏ^{3/2} + c₂ ℏ²` over at least three distinct `ℏ`.
fn half_power_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let mut hs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    if hs.len() < 3 {
        return None;
    }
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(h, r) in pts {
        let (u, v) = (h.powf(1.5), h * h);
        s11 += u * u;
        s12 += u * v;
        s22 += v * v;
        b1 += u * r;
        b2 += v * r;
    }
    let det = s11 * s22 - s12 * s12;
    (det.abs() > 0.0).then(|| ((b1 * s22 - b2 * s12) / det, (s11 * b2 - s12 * b1) / det))
}

/// Lowest `k` eigenvalues of the full operator in one parity sector, from a
/// Richardson pair on a lattice sized for energies up to `energy`.
pub fn sector_levels(
    f: &Evaluator,
    g: &Evaluator,
    a: f64,
    hbar: f64,
    sector: Sector,
    mu_floor: f64,
    energy: f64,
    k: usize,
    num: &Numerics,
) -> Result<Vec<Level>> {
    let f0 = f.eval(&[0.0]);
    let y_ext = wkb_extent(&|y| fiber_level(mu_floor, f, a, y), energy, hbar, num.action)?;
    let z_ext = wkb_extent(&|z| f0 * g.eval(&[z]), energy, 1.0, num.action)?;
    let floor = fiber_level(mu_floor, f, a, 0.0);
    let dy = num.resolution * hbar / (energy - floor).max(hbar).sqrt();
    let dz = num.resolution / energy.sqrt();
    let lat = SectorLattice::new(sector, y_ext, dy, z_ext, dz)?;
    let mut vals = Vec::new();
    let mut sp = Vec::new();
    for l in [lat.clone(), lat.refined()] {
        vals.push(solve_sorted(&full_model(f, g, hbar, &l.grid()?)?, k)?);
        sp.push(l.y.spacing);
    }
    (0..k)
        .map(|i| richardson(&[vals[0][i], vals[1][i]], &sp, 2).map(|(value, error)| Level { value, error }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub hbar: f64,
    pub sector: Sector,
    pub k: usize,
    pub full: Level,
    pub effective: Level,
    /// `full < effective - (full.error + effective.error)`.
    pub violation: bool,
}

/// Checks `λ_k(Ĥ) ≥ λ_k(ℏ²D_y² + μ f^{2/(2+a)})` sector by sector.
///
/// Restricted to `z`-even functions the fiber operator is at least `μ_1 f^{2/(2+a)}`,
/// and to `z`-odd ones at least `μ_2 f^{2/(2+a)}`; `y` parity is shared by both
/// sides. Each sector thus carries its own min-max lower bound.
pub fn lower_bound_check(f: &Evaluator, g: &Evaluator, a: f64, hbars: &[f64], k: usize, num: &Numerics) -> Result<Vec<LowerBoundRow>> {
    if f.dim() != 1 || g.dim() != 1 {
        return Err(Error::InvalidArgument("lower_bound_check supports n = p = 1".into()));
    }
    even_check(g, "g")?;
    let (f, _) = normalize_f(f)?;
    let ts = transverse_mu(g, a, 2, &TransverseOptions::default())?;
    let mut cells = Vec::new();
    for &hbar in hbars {
        for y in [Parity::Even, Parity::Odd] {
            for z in [Parity::Even, Parity::Odd] {
                cells.push((hbar, Sector { y, z }));
            }
        }
    }
    let rows = par::map(num.exec, &cells, |&(hbar, sector)| -> Result<Vec<LowerBoundRow>> {
        let mu = ts.mu[if sector.z == Parity::Even { 0 } else { 1 }];
        let counts = if sector.y == Parity::Even { [k, 0] } else { [0, k] };
        let eff = effective_parity_levels(&f, a, mu, hbar, counts, num)?;
        let eff = &eff[if sector.y == Parity::Even { 0 } else { 1 }];
        let energy = eff[k - 1].value + 2.0 * hbar * mu.sqrt() + hbar;
        let full = sector_levels(&f, g, a, hbar, sector, mu, energy, k, num)?;
        Ok((0..k)
            .map(|i| LowerBoundRow {
                hbar,
                sector,
                k: i + 1,
                full: full[i],
                effective: eff[i],
                violation: full[i].value < eff[i].value - (full[i].error + eff[i].error),
            })
            .collect())
    });
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// `ℏ²D_y² + f^{2/(2+a)}(y)(D_z² + g(z))` on a sector lattice.
pub fn fibered_operator(f: &Evaluator, g: &Evaluator, a: f64, hbar: f64, lat: &SectorLattice) -> Result<SparseSymMatrix> {
    let e = 2.0 / (2.0 + a);
    let fy: Vec<f64> = lat.y.nodes().iter().map(|&y| f.eval(&[y]).powf(e)).collect();
    let gz: Vec<f64> = lat.z.nodes().iter().map(|&z| g.eval(&[z])).collect();
    let tz = axis_laplacian(&lat.z).add_diagonal(&gz);
    let ly = axis_laplacian(&lat.y).scaled(hbar * hbar);
    let iz = SparseSymMatrix::diagonal_matrix(&vec![1.0; lat.z.points])?;
    SparseSymMatrix::diagonal_matrix(&fy)?.kron(&tz)?.add(&ly.kron(&iz)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangedVariableRow {
    pub hbar: f64,
    pub k: usize,
    pub full: f64,
    pub fibered: f64,
    pub difference: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangedVariableReport {
    pub rows: Vec<ChangedVariableRow>,
    /// Fitted order in `ℏ` of the difference, per `k`.
    pub orders: Vec<(usize, f64)>,
}

/// Compares the lowest levels of the full operator with those of the fibered
/// operator `ℏ²D_y² + f^{2/(2+a)}(D_z² + g)` in the even-even sector.
pub fn changed_variable_check(
    f: &Evaluator,
    g: &Evaluator,
    a: f64,
    hbars: &[f64],
    k_max: usize,
    num: &Numerics,
) -> Result<ChangedVariableReport> {
    if f.dim() != 1 || g.dim() != 1 {
        return Err(Error::InvalidArgument("changed_variable_check supports n = p = 1".into()));
    }
    even_check(f, "f")?;
    even_check(g, "g")?;
    let (f, _) = normalize_f(f)?;
    let ts = transverse_mu(g, a, 1, &TransverseOptions::default())?;
    let mut rows = Vec::new();
    for &hbar in hbars {
        let eff = effective_levels(&f, a, ts.mu[0], hbar, 2 * k_max, num)?;
        let e_ext = eff[2 * k_max - 1].value + 2.0 * hbar + hbar;
        let floor = ts.mu[0];
        let y_ext = wkb_extent(&|y| fiber_level(ts.mu[0], &f, a, y), e_ext, hbar, num.action)?;
        let z_ext = wkb_extent(&|z| g.eval(&[z]), e_ext, 1.0, num.action)?;
        let dy = num.resolution * hbar / (e_ext - floor).sqrt();
        let dz = num.resolution / e_ext.sqrt();
        let lat = SectorLattice::new(Sector { y: Parity::Even, z: Parity::Even }, y_ext, dy, z_ext, dz)?;
        let mut full = Vec::new();
        let mut fib = Vec::new();
        let mut sp = Vec::new();
        for l in [lat.clone(), lat.refined()] {
            let grid = l.grid()?;
            full.push(solve_sorted(&full_model(&f, g, hbar, &grid)?, k_max)?);
            fib.push(solve_sorted(&fibered_operator(&f, g, a, hbar, &l)?, k_max)?);
            sp.push(l.y.spacing);
        }
        for k in 0..k_max {
            let (x, ex) = richardson(&[full[0][k], full[1][k]], &sp, 2)?;
            let (y, ey) = richardson(&[fib[0][k], fib[1][k]], &sp, 2)?;
            rows.push(ChangedVariableRow { hbar, k: k + 1, full: x, fibered: y, difference: (x - y).abs(), error: ex + ey });
        }
    }
    let mut orders = Vec::new();
    if hbars.len() >= 3 {
        for k in 1..=k_max {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.k == k).map(|r| (r.hbar, r.difference)).collect();
            if let Ok((order, _)) = fit_order(&pts) {
                orders.push((k, order));
            }
        }
    }
    Ok(ChangedVariableReport { rows, orders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ev1(label: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Evaluator {
        Evaluator::new(label, 1, move |x| f(x[0]))
    }

    #[test]
    fn transverse_examples() {
        let ts = transverse_mu(&ev1("z^2", |z| z * z), 2.0, 4, &TransverseOptions::default()).unwrap();
        for (j, m) in ts.mu.iter().enumerate() {
            assert_relative_eq!(*m, 2.0 * j as f64 + 1.0, max_relative = 1e-7);
        }
        let ts = transverse_mu(&ev1("z^4", |z| z.powi(4)), 4.0, 1, &TransverseOptions::default()).unwrap();
        assert!((ts.mu[0] - 1.0603620905).abs() < 1e-6, "{}", ts.mu[0]);
    }

    #[test]
    fn fiber_and_expansion_arithmetic() {
        let f = ev1("f", |y| 1.0 + y * y);
        assert_eq!(fiber_eigenvalue(3.0, &f, 2.0, &[0.0]).unwrap(), 3.0);
        let f16 = ev1("16", |_| 16.0);
        assert_eq!(fiber_eigenvalue(1.0, &f16, 2.0, &[0.0]).unwrap(), 4.0);
        assert!(fiber_eigenvalue(1.0, &ev1("0", |_| 0.0), 2.0, &[0.0]).is_err());
        assert_relative_eq!(expansion_value(1.0, 0.1, 2f64.sqrt(), 2.0), 1.0 + 0.1 * 2f64.sqrt() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(expansion_value(3.0, 0.1, 2f64.sqrt(), 2.0), 3.122474487139159, max_relative = 1e-14);
        assert_relative_eq!(ess_bound(1.0, Some(2.0), 2.0), 2f64.sqrt());
        assert!(ess_bound(1.0, None, 2.0).is_infinite());
        assert_relative_eq!(hbar_of(0.001, 2.0), 0.001f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn harmonic_level_examples() {
        let e = harmonic_levels(1.0, &DMatrix::from_row_slice(1, 1, &[2.0]), 2.0, 3).unwrap();
        assert_relative_eq!(e[0], 1.0 / 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(e[2], 5.0 / 2f64.sqrt(), max_relative = 1e-14);
        let e = harmonic_levels(1.0, &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 8.0]), 2.0, 4).unwrap();
        assert_relative_eq!(e[0], 1.0 / 2f64.sqrt() + 2f64.sqrt(), max_relative = 1e-14);
        assert!(e.windows(2).all(|w| w[0] <= w[1]));
        assert!(harmonic_levels(1.0, &DMatrix::from_row_slice(1, 1, &[-1.0]), 2.0, 1).is_err());
        // identity with the expansion formula at k = 1
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]);
        let e1 = harmonic_levels(3.0, &h, 2.0, 1).unwrap()[0];
        let via = expansion_value(3.0, 0.1, tr_sqrt(&h).unwrap(), 2.0);
        assert_relative_eq!(3.0 + 0.1 * e1, via, max_relative = 1e-14);
    }

    #[test]
    fn effective_ground_level() {
        let f = ev1("1+y^2", |y| 1.0 + y * y);
        let lv = effective_levels(&f, 2.0, 1.0, 0.1, 3, &Numerics::default()).unwrap();
        assert!((lv[0].value - (1.0 + 0.1 / 2f64.sqrt())).abs() < 3e-3, "{:?}", lv);
        assert!(lv.windows(2).all(|w| w[0].value < w[1].value));
    }

    #[test]
    fn half_power_coefficients() {
        let pts: Vec<(f64, f64)> = [0.2f64, 0.1, 0.05].iter().map(|&h| (h, 0.3 * h.powf(1.5) - 2.0 * h * h)).collect();
        let (c32, c2) = half_power_fit(&pts).unwrap();
        assert!((c32 - 0.3).abs() < 1e-10 && (c2 + 2.0).abs() < 1e-10);
        assert!(half_power_fit(&pts[..2]).is_none());
    }

    #[test]
    fn gates() {
        let mu = [1.0, 3.0, 5.0];
        let g = gate(Regime::LowEnergy, &mu, Some(2.0), 2.0, 0.1).unwrap();
        assert!(g[0].is_ok() && g[1].is_err() && g[2].is_err());
        assert!(gate(Regime::MiddleEnergy, &mu, None, 1.0, 0.1).is_err());
        assert!(gate(Regime::MiddleEnergy, &mu, Some(2.0), 2.0, 0.1).is_err());
        assert!(gate(Regime::MiddleEnergy, &mu, None, 2.0, 0.5).unwrap()[2].is_err());
    }
}
