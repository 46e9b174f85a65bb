//! Uniform tensor-product grids and sparse symmetric finite-difference operators.
//!
//! Nodes of an axis sit at `lower + (i + 1) * spacing` for `i in 0..points`, with
//! `spacing = (upper - lower) / (points + 1)`. A Dirichlet side puts the zero
//! boundary value one spacing outside the first/last node. A Neumann side
//! reflects about the plane half a spacing outside the first/last node, which
//! makes the boundary row of the 3-point stencil `(u0 - u1) / spacing^2`.
//!
//! Multi-dimensional nodes are numbered lexicographically in axis order with the
//! first axis varying slowest, so `index = ((i0 * n1 + i1) * n2 + i2) ...`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Default cap on assembled operator dimension.
pub const DEFAULT_MAX_DIM: usize = 4_000_000;

/// Dimension cap, overridable through `DEGENSPEC_MAX_DIM`.
pub fn max_dim() -> usize {
    std::env::var("DEGENSPEC_MAX_DIM")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_DIM)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BoundaryCondition {
    #[default]
    Dirichlet,
    Neumann,
}

/// Reflection parity selecting a symmetry sector on a half line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_index(i: usize) -> Parity {
        if i.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn bc(self) -> BoundaryCondition {
        match self {
            Parity::Even => BoundaryCondition::Neumann,
            Parity::Odd => BoundaryCondition::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    /// Interior node count.
    pub points: usize,
    pub spacing: f64,
    pub lower_bc: BoundaryCondition,
    pub upper_bc: BoundaryCondition,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Axis> {
        if !(lower.is_finite() && upper.is_finite()) || !(lower < upper) {
            return Err(Error::InvalidAxis(format!("degenerate interval [{lower}, {upper}]")));
        }
        if points < 2 {
            return Err(Error::InvalidAxis(format!("need at least 2 points, got {points}")));
        }
        Ok(Axis {
            lower,
            upper,
            points,
            spacing: (upper - lower) / (points as f64 + 1.0),
            lower_bc: BoundaryCondition::Dirichlet,
            upper_bc: BoundaryCondition::Dirichlet,
        })
    }

    /// Axis on `[0, extent]` whose lower end is the reflection plane `0`.
    ///
    /// `Even` places a Neumann plane at 0 (nodes at `spacing/2, 3 spacing/2, ...`),
    /// `Odd` a Dirichlet boundary at 0. The far end is Dirichlet. The spacing is
    /// the largest one not exceeding `target_spacing`.
    pub fn half_line(extent: f64, target_spacing: f64, parity: Parity) -> Result<Axis> {
        if !(extent > 0.0 && target_spacing > 0.0) {
            return Err(Error::InvalidAxis(format!(
                "half line needs positive extent and spacing, got {extent}, {target_spacing}"
            )));
        }
        let (offset, bc) = match parity {
            Parity::Even => (0.5, BoundaryCondition::Neumann),
            Parity::Odd => (1.0, BoundaryCondition::Dirichlet),
        };
        // extent = (points - 1 + offset + 1) * spacing
        let cells = (extent / target_spacing).ceil().max(offset + 2.0);
        let points = (cells - offset).ceil() as usize;
        let spacing = extent / (points as f64 + offset);
        let lower = if bc == BoundaryCondition::Neumann { -0.5 * spacing } else { 0.0 };
        let mut axis = Axis::new(lower, lower + (points as f64 + 1.0) * spacing, points)?;
        axis.lower_bc = bc;
        Ok(axis)
    }

    /// Axis whose boundary planes are exactly `lo` and `hi`, with the given side
    /// conditions and the largest spacing not exceeding `target_spacing`.
    pub fn spanning(lo: f64, hi: f64, target_spacing: f64, lo_bc: BoundaryCondition, hi_bc: BoundaryCondition) -> Result<Axis> {
        if !(lo < hi && target_spacing > 0.0) {
            return Err(Error::InvalidAxis(format!("bad span [{lo}, {hi}] with spacing {target_spacing}")));
        }
        // planes sit one spacing (Dirichlet) or half a spacing (Neumann) outside the end nodes
        let pad = |bc| if bc == BoundaryCondition::Neumann { 0.5 } else { 1.0 };
        let (pl, ph) = (pad(lo_bc), pad(hi_bc));
        let points = (((hi - lo) / target_spacing).ceil() - pl - ph + 1.0).max(2.0) as usize;
        let spacing = (hi - lo) / (points as f64 - 1.0 + pl + ph);
        let lower = lo - (1.0 - pl) * spacing;
        let mut axis = Axis::new(lower, lower + (points as f64 + 1.0) * spacing, points)?;
        axis.lower_bc = lo_bc;
        axis.upper_bc = hi_bc;
        Ok(axis)
    }

    /// Symmetric box `[-half_width, half_width]` with Dirichlet ends.
    pub fn centered(half_width: f64, target_spacing: f64) -> Result<Axis> {
        let points = ((2.0 * half_width / target_spacing).ceil() as usize).max(3) - 1;
        Axis::new(-half_width, half_width, points)
    }

    pub fn with_bc(mut self, lower: BoundaryCondition, upper: BoundaryCondition) -> Axis {
        self.lower_bc = lower;
        self.upper_bc = upper;
        self
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lower + (i as f64 + 1.0) * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    /// Same domain at half the spacing.
    ///
    /// The lower boundary (Dirichlet wall or Neumann reflection plane) is kept
    /// exactly. The upper one is kept exactly when both sides share a condition
    /// and moves by a quarter of the old spacing otherwise.
    pub fn refined(&self) -> Axis {
        let h = 0.5 * self.spacing;
        let lower = match self.lower_bc {
            BoundaryCondition::Dirichlet => self.lower,
            BoundaryCondition::Neumann => self.lower + 0.5 * h,
        };
        let points = match self.upper_bc {
            BoundaryCondition::Dirichlet => 2 * self.points + 1,
            BoundaryCondition::Neumann => 2 * self.points,
        };
        Axis {
            lower,
            upper: lower + (points as f64 + 1.0) * h,
            points,
            spacing: h,
            lower_bc: self.lower_bc,
            upper_bc: self.upper_bc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Grid> {
        if axes.is_empty() {
            return Err(Error::InvalidAxis("grid needs at least one axis".into()));
        }
        Ok(Grid { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    /// Coordinates of node `index` written into `out`.
    pub fn coords_into(&self, mut index: usize, out: &mut [f64]) {
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let i = index % axis.points;
            index /= axis.points;
            out[k] = axis.node(i);
        }
    }

    pub fn coords(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.coords_into(index, &mut out);
        out
    }

    pub fn refined(&self) -> Grid {
        Grid { axes: self.axes.iter().map(Axis::refined).collect() }
    }
}

/// Builds a Dirichlet grid from `(lower, upper, points)` triples.
pub fn build_grid(axes: &[(f64, f64, usize)]) -> Result<Grid> {
    let axes = axes
        .iter()
        .map(|&(l, u, n)| Axis::new(l, u, n))
        .collect::<Result<Vec<_>>>()?;
    Grid::new(axes)
}

/// Symmetric sparse matrix in compressed-row form, both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymMatrix {
    /// Assembles from `(row, col, value)` triplets, summing duplicates.
    /// Both triangles must be supplied and agree exactly.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for &(r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::InvalidArgument(format!("entry ({r}, {c}) outside dimension {dim}")));
            }
            rows[r].push((c, v));
        }
        let m = Self::from_rows(dim, rows);
        m.check_symmetric()?;
        Ok(m)
    }

    fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseSymMatrix { dim, row_ptr, cols, vals }
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Result<Self> {
        let t: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), &t)
    }

    /// Symmetric tridiagonal matrix; `off.len() == diag.len() - 1`.
    pub fn tridiagonal(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || off.len() + 1 != n {
            return Err(Error::InvalidArgument("tridiagonal: need off.len() == diag.len() - 1".into()));
        }
        let mut t = Vec::with_capacity(3 * n);
        for i in 0..n {
            if i > 0 {
                t.push((i, i - 1, off[i - 1]));
            }
            t.push((i, i, diag[i]));
            if i + 1 < n {
                t.push((i, i + 1, off[i]));
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored entries, both triangles and the diagonal.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn check_symmetric(&self) -> Result<()> {
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                if self.get(j, i) != v {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_with(Execution::Parallel, x, y)
    }

    pub fn matvec_with(&self, exec: Execution, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        par::fill(exec, y, |i| {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&c, &v)| v * x[c]).sum()
        });
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut m = self.clone();
        m.vals.iter_mut().for_each(|v| *v *= c);
        m
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let diag: Vec<f64> = vec![shift; self.dim];
        self.add_diagonal(&diag)
    }

    pub fn add_diagonal(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.dim);
        let rows = (0..self.dim)
            .map(|i| {
                let mut r: Vec<(usize, f64)> = self.row(i).collect();
                r.push((i, d[i]));
                r
            })
            .collect();
        Self::from_rows(self.dim, rows)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let rows = (0..self.dim)
            .map(|i| self.row(i).chain(other.row(i)).collect())
            .collect();
        Ok(Self::from_rows(self.dim, rows))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let dim = checked_dim(&[self.dim, other.dim], max_dim())?;
        let mut rows = Vec::with_capacity(dim);
        for i in 0..self.dim {
            for k in 0..other.dim {
                let mut r = Vec::new();
                for (j, a) in self.row(i) {
                    for (l, b) in other.row(k) {
                        r.push((j * other.dim + l, a * b));
                    }
                }
                rows.push(r);
            }
        }
        Ok(Self::from_rows(dim, rows))
    }

    /// Infinity norm (max absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let mut d = 0.0;
                let mut off = 0.0;
                for (j, v) in self.row(i) {
                    if j == i {
                        d += v;
                    } else {
                        off += v.abs();
                    }
                }
                d - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Column indices of row `i` (sorted).
    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }
}

fn checked_dim(dims: &[usize], cap: usize) -> Result<usize> {
    let mut n: usize = 1;
    for &d in dims {
        n = n.checked_mul(d).ok_or(Error::DimensionCap { dim: usize::MAX, cap })?;
    }
    if n > cap {
        return Err(Error::DimensionCap { dim: n, cap });
    }
    Ok(n)
}

/// Three-point stencil for `-d^2/dx^2` with the same condition on both sides.
pub fn laplacian_1d(axis: &Axis, bc: BoundaryCondition) -> SparseSymMatrix {
    let a = axis.clone().with_bc(bc, bc);
    axis_laplacian(&a)
}

/// Three-point stencil for `-d^2/dx^2` using the axis' own side conditions.
pub fn axis_laplacian(axis: &Axis) -> SparseSymMatrix {
    let n = axis.points;
    let inv = 1.0 / (axis.spacing * axis.spacing);
    let mut diag = vec![2.0 * inv; n];
    if axis.lower_bc == BoundaryCondition::Neumann {
        diag[0] -= inv;
    }
    if axis.upper_bc == BoundaryCondition::Neumann {
        diag[n - 1] -= inv;
    }
    let off = vec![-inv; n - 1];
    SparseSymMatrix::tridiagonal(&diag, &off).expect("axis has at least two points")
}

/// `Σ_i c_i (I ⊗ … ⊗ A_i ⊗ … ⊗ I)` with the default dimension cap.
pub fn kron_assemble(parts: &[(SparseSymMatrix, f64)]) -> Result<SparseSymMatrix> {
    kron_assemble_capped(parts, max_dim())
}

pub fn kron_assemble_capped(parts: &[(SparseSymMatrix, f64)], cap: usize) -> Result<SparseSymMatrix> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("kron_assemble needs at least one part".into()));
    }
    for (_, c) in parts {
        if !(*c >= 0.0) {
            return Err(Error::InvalidArgument(format!("coefficient {c} must be nonnegative")));
        }
    }
    let dims: Vec<usize> = parts.iter().map(|(m, _)| m.dim()).collect();
    let n = checked_dim(&dims, cap)?;
    // stride of part i = product of the dims after it
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let rows = par::map_range(Execution::Parallel, n, |row| {
        let mut r: Vec<(usize, f64)> = Vec::with_capacity(1 + 2 * parts.len());
        for (p, (m, c)) in parts.iter().enumerate() {
            let digit = (row / strides[p]) % dims[p];
            let base = row - digit * strides[p];
            for (j, v) in m.row(digit) {
                r.push((base + j * strides[p], c * v));
            }
        }
        r
    });
    Ok(SparseSymMatrix::from_rows(n, rows))
}

/// Kinetic operator `Σ_k c_k (-∂_k^2)` on `grid`, using each axis' side conditions.
pub fn kinetic_on_grid(grid: &Grid, coefficients: &[f64]) -> Result<SparseSymMatrix> {
    if coefficients.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: coefficients.len() });
    }
    let parts: Vec<_> = grid
        .axes
        .iter()
        .zip(coefficients)
        .map(|(a, &c)| (axis_laplacian(a), c))
        .collect();
    kron_assemble(&parts)
}

/// Adds `V(node)` to the diagonal.
pub fn add_diagonal_potential<F>(kinetic: &SparseSymMatrix, grid: &Grid, potential: F) -> Result<SparseSymMatrix>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    if kinetic.dim() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: kinetic.dim() });
    }
    let values = par::map_range(Execution::Parallel, grid.len(), |i| {
        let x = grid.coords(i);
        potential(&x)
    });
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinitePotential { index: i, coords: grid.coords(i) });
    }
    if values.iter().all(|&v| v == 0.0) {
        return Ok(kinetic.clone());
    }
    Ok(kinetic.add_diagonal(&values))
}

/// Richardson extrapolation of `values` computed at decreasing `spacings`.
///
/// The error is modeled as `c1 Δ^p + c2 Δ^{2p} + ...` with `p = order`; each
/// Neville tableau column removes one term. Returns the extrapolated value and the
/// magnitude of the last correction.
pub fn richardson(values: &[f64], spacings: &[f64], order: u32) -> Result<(f64, f64)> {
    if values.len() != spacings.len() {
        return Err(Error::InvalidArgument(format!(
            "richardson: {} values vs {} spacings",
            values.len(),
            spacings.len()
        )));
    }
    if values.len() < 2 {
        return Err(Error::InvalidArgument("richardson needs at least two values".into()));
    }
    if order == 0 {
        return Err(Error::InvalidArgument("richardson order must be positive".into()));
    }
    if spacings.windows(2).any(|w| !(w[1] < w[0])) || spacings.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument("richardson spacings must be positive and strictly decreasing".into()));
    }
    let mut col: Vec<f64> = values.to_vec();
    let mut correction = 0.0;
    for level in 1..values.len() {
        let next: Vec<f64> = (0..col.len() - 1)
            .map(|i| {
                let r = (spacings[i] / spacings[i + level]).powi(order as i32);
                col[i + 1] + (col[i + 1] - col[i]) / (r - 1.0)
            })
            .collect();
        correction = (next[next.len() - 1] - col[col.len() - 1]).abs();
        col = next;
    }
    Ok((col[0], correction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_examples() {
        let g = build_grid(&[(-10.0, 10.0, 999)]).unwrap();
        assert_abs_diff_eq!(g.axes[0].spacing, 0.02, epsilon = 1e-15);
        let g = build_grid(&[(-5.0, 5.0, 99), (-5.0, 5.0, 99)]).unwrap();
        assert_eq!(g.len(), 9801);
        assert!(build_grid(&[(0.0, 0.0, 10)]).is_err());
        assert!(build_grid(&[(0.0, 1.0, 1)]).is_err());
    }

    #[test]
    fn lexicographic_coordinates() {
        let g = build_grid(&[(0.0, 3.0, 2), (0.0, 4.0, 3)]).unwrap();
        assert_eq!(g.coords(0), vec![1.0, 1.0]);
        assert_eq!(g.coords(1), vec![1.0, 2.0]);
        assert_eq!(g.coords(3), vec![2.0, 1.0]);
    }

    #[test]
    fn laplacian_examples() {
        let axis = Axis::new(0.0, 4.0, 3).unwrap();
        let d = laplacian_1d(&axis, BoundaryCondition::Dirichlet);
        assert_eq!(d.diagonal(), vec![2.0, 2.0, 2.0]);
        assert_eq!(d.get(0, 1), -1.0);
        let n = laplacian_1d(&axis, BoundaryCondition::Neumann);
        assert_eq!(n.diagonal(), vec![1.0, 2.0, 1.0]);
        let mut y = vec![0.0; 3];
        n.matvec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![0.0, 0.0, 0.0]);

        let big = laplacian_1d(&Axis::new(-10.0, 10.0, 1999).unwrap(), BoundaryCondition::Dirichlet);
        assert_eq!(big.dim(), 1999);
        assert_eq!(big.nnz(), 5995);
    }

    #[test]
    fn kron_examples() {
        let a = SparseSymMatrix::diagonal_matrix(&[1.0, 2.0]).unwrap();
        let b = SparseSymMatrix::diagonal_matrix(&[10.0, 20.0]).unwrap();
        let k = kron_assemble(&[(a.clone(), 1.0), (b, 1.0)]).unwrap();
        assert_eq!(k.diagonal(), vec![11.0, 21.0, 12.0, 22.0]);
        let single = kron_assemble(&[(a, 3.0)]).unwrap();
        assert_eq!(single.diagonal(), vec![3.0, 6.0]);
    }

    #[test]
    fn kron_dimension_and_cap() {
        let axis = Axis::new(-10.0, 10.0, 1999).unwrap();
        let l = axis_laplacian(&axis);
        let k = kron_assemble(&[(l.clone(), 1.0), (l.clone(), 1.0)]).unwrap();
        assert_eq!(k.dim(), 3_996_001);
        let err = kron_assemble_capped(&[(l.clone(), 1.0), (l, 1.0)], 1_000_000).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { dim: 3_996_001, .. }));
    }

    #[test]
    fn kron_matches_dense_oracle() {
        let a = SparseSymMatrix::tridiagonal(&[2.0, 3.0, 1.0], &[0.5, -1.0]).unwrap();
        let b = SparseSymMatrix::tridiagonal(&[1.0, 4.0, 2.0], &[2.0, 0.25]).unwrap();
        let k = kron_assemble(&[(a.clone(), 2.0), (b.clone(), 0.5)]).unwrap();
        let i3 = nalgebra::DMatrix::<f64>::identity(3, 3);
        let dense = a.to_dense().kronecker(&i3) * 2.0 + i3.kronecker(&b.to_dense()) * 0.5;
        assert_eq!(k.to_dense(), dense);
        let p = a.kron(&b).unwrap();
        assert_eq!(p.to_dense(), a.to_dense().kronecker(&b.to_dense()));
    }

    #[test]
    fn potential_examples() {
        let g = build_grid(&[(0.0, 4.0, 3)]).unwrap();
        let l = axis_laplacian(&g.axes[0]);
        assert_eq!(add_diagonal_potential(&l, &g, |_| 0.0).unwrap(), l);
        let v = add_diagonal_potential(&l, &g, |x| x[0] * x[0]).unwrap();
        assert_eq!(v.diagonal(), vec![3.0, 6.0, 11.0]);
        let err = add_diagonal_potential(&l, &g, |x| if x[0] == 2.0 { f64::NAN } else { 0.0 }).unwrap_err();
        assert_eq!(err, Error::NonFinitePotential { index: 1, coords: vec![2.0] });
    }

    #[test]
    fn richardson_examples() {
        let (x, e) = richardson(&[1.04, 1.01], &[0.2, 0.1], 2).unwrap();
        assert_abs_diff_eq!(x, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e, 0.01, epsilon = 1e-14);
        assert!(richardson(&[1.0], &[0.1], 2).is_err());
        assert!(richardson(&[1.0, 2.0], &[0.1], 2).is_err());
        assert!(richardson(&[1.0, 2.0], &[0.1, 0.2], 2).is_err());
        // two tableau columns remove Δ² and Δ⁴
        let f = |d: f64| 3.0 + 0.7 * d * d - 2.0 * d.powi(4);
        let (x, _) = richardson(&[f(0.4), f(0.2), f(0.1)], &[0.4, 0.2, 0.1], 2).unwrap();
        assert_abs_diff_eq!(x, 3.0, epsilon = 1e-13);
    }

    #[test]
    fn half_line_refinement_keeps_plane() {
        let even = Axis::half_line(5.0, 0.1, Parity::Even).unwrap();
        assert_abs_diff_eq!(even.node(0), 0.5 * even.spacing, epsilon = 1e-14);
        let r = even.refined();
        assert_abs_diff_eq!(r.node(0), 0.5 * r.spacing, epsilon = 1e-14);
        assert_abs_diff_eq!(r.spacing, 0.5 * even.spacing, epsilon = 1e-15);
        let odd = Axis::half_line(5.0, 0.1, Parity::Odd).unwrap();
        assert_eq!(odd.lower, 0.0);
        assert_abs_diff_eq!(odd.upper, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(odd.refined().upper, 5.0, epsilon = 1e-12);
        let d = Axis::new(-1.0, 1.0, 9).unwrap().refined();
        assert_eq!(d.points, 19);
        assert_abs_diff_eq!(d.upper, 1.0, epsilon = 1e-14);
    }
}
