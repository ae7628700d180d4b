//! Uniform grids, complex fields and the boundary classification used by
//! every boundary condition.
//!
//! # Storage order
//!
//! Fields are stored in a flat `Vec` in row-major (C) order over the active
//! axes: the linear index of `(i, j, k)` is `(i * ny + j) * nz + k`, so the
//! last axis is contiguous. Inactive axes of 1D/2D grids have extent 1, which
//! keeps the same formula valid for every dimension. Axis 0 is `x`, axis 1 is
//! `y`, axis 2 is `z`.

use crate::{Error, Result, C64};

/// Minimum number of points along an active axis. The one-sided boundary
/// stencil reaches three cells inward.
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    shape: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl Grid {
    /// Builds a grid from per-axis point counts, spacings and origins. The
    /// number of active axes is `shape.len()`.
    pub fn new(shape: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
        let dim = shape.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if spacing.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} spacings and origins, got {} and {}",
                spacing.len(),
                origin.len()
            )));
        }
        let mut g = Grid {
            dim,
            shape: [1; 3],
            spacing: [1.0; 3],
            origin: [0.0; 3],
        };
        for ax in 0..dim {
            if shape[ax] < MIN_POINTS {
                return Err(Error::InvalidGrid(format!(
                    "axis {ax} has {} points, need at least {MIN_POINTS}",
                    shape[ax]
                )));
            }
            if !(spacing[ax] > 0.0 && spacing[ax].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "axis {ax} spacing {} is not a positive finite number",
                    spacing[ax]
                )));
            }
            g.shape[ax] = shape[ax];
            g.spacing[ax] = spacing[ax];
            g.origin[ax] = origin[ax];
        }
        Ok(g)
    }

    /// Same spacing `h` on every axis.
    pub fn uniform(shape: &[usize], h: f64, origin: &[f64]) -> Result<Self> {
        Self::new(shape, &vec![h; shape.len()], origin)
    }

    /// Uniform grid whose geometric center sits at the coordinate origin.
    pub fn centered(shape: &[usize], h: f64) -> Result<Self> {
        let origin: Vec<f64> = shape
            .iter()
            .map(|&n| -(n.saturating_sub(1) as f64) * h / 2.0)
            .collect();
        Self::uniform(shape, h, &origin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per active axis.
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear strides of the three (possibly inactive) axes.
    pub fn strides(&self) -> [usize; 3] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }

    pub fn index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]
    }

    pub fn multi_index(&self, lin: usize) -> [usize; 3] {
        let k = lin % self.shape[2];
        let rest = lin / self.shape[2];
        [rest / self.shape[1], rest % self.shape[1], k]
    }

    /// Physical coordinate of a multi-index; inactive axes report 0.
    pub fn position(&self, idx: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for ax in 0..self.dim {
            x[ax] = self.origin[ax] + idx[ax] as f64 * self.spacing[ax];
        }
        x
    }

    pub fn coord(&self, lin: usize) -> [f64; 3] {
        self.position(self.multi_index(lin))
    }

    /// Coordinate of the last point along each active axis.
    pub fn upper(&self) -> [f64; 3] {
        let mut x = [0.0; 3];
        for ax in 0..self.dim {
            x[ax] = self.origin[ax] + (self.shape[ax] - 1) as f64 * self.spacing[ax];
        }
        x
    }

    pub fn center(&self) -> [f64; 3] {
        let hi = self.upper();
        let mut c = [0.0; 3];
        for ax in 0..self.dim {
            c[ax] = 0.5 * (self.origin[ax] + hi[ax]);
        }
        c
    }

    pub fn is_boundary(&self, idx: [usize; 3]) -> bool {
        (0..self.dim).any(|ax| idx[ax] == 0 || idx[ax] == self.shape[ax] - 1)
    }

    /// Contiguous runs `start..end` of interior points along the last
    /// active axis. Every interior point belongs to exactly one run.
    pub fn interior_runs(&self) -> Vec<(usize, usize)> {
        let n = self.shape;
        let mut runs = Vec::new();
        match self.dim {
            1 => runs.push((1, n[0] - 1)),
            2 => {
                for i in 1..n[0] - 1 {
                    let base = i * n[1];
                    runs.push((base + 1, base + n[1] - 1));
                }
            }
            _ => {
                for i in 1..n[0] - 1 {
                    for j in 1..n[1] - 1 {
                        let base = (i * n[1] + j) * n[2];
                        runs.push((base + 1, base + n[2] - 1));
                    }
                }
            }
        }
        runs
    }
}

/// Complex field sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<C64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![C64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the physical coordinate of every grid point.
    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 3]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coord(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn at(&self, idx: [usize; 3]) -> C64 {
        self.values[self.grid.index(idx)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest modulus; NaN entries propagate as NaN.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn mod2(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Extracts the plane `axis = index` of a 3D field as a 2D field over the
    /// two remaining axes (in increasing axis order).
    pub fn slice_plane(&self, axis: usize, index: usize) -> Result<ComplexField> {
        if self.grid.dim != 3 {
            return Err(Error::UnsupportedDimension {
                what: "plane slicing",
                expected: 3,
                got: self.grid.dim,
            });
        }
        if axis > 2 || index >= self.grid.shape[axis] {
            return Err(Error::InvalidGrid(format!(
                "plane {axis}={index} outside the grid"
            )));
        }
        let axes: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
        let g = &self.grid;
        let sub = Grid::new(
            &[g.shape[axes[0]], g.shape[axes[1]]],
            &[g.spacing[axes[0]], g.spacing[axes[1]]],
            &[g.origin[axes[0]], g.origin[axes[1]]],
        )?;
        let mut values = Vec::with_capacity(sub.len());
        for p in 0..g.shape[axes[0]] {
            for q in 0..g.shape[axes[1]] {
                let mut idx = [0; 3];
                idx[axis] = index;
                idx[axes[0]] = p;
                idx[axes[1]] = q;
                values.push(self.at(idx));
            }
        }
        ComplexField::from_values(sub, values)
    }
}

pub(crate) fn max_abs(values: &[C64]) -> f64 {
    let mut m: f64 = 0.0;
    let mut nan = false;
    for z in values {
        let a = z.norm_sqr();
        nan |= a.is_nan();
        m = m.max(a);
    }
    if nan {
        f64::NAN
    } else {
        m.sqrt()
    }
}

/// Pairing of every boundary point `b` with its inward neighbour `b-1`,
/// plus the list of interior points. Indices are linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMap {
    pub pairs: Vec<(usize, usize)>,
    pub interior: Vec<usize>,
}

impl BoundaryMap {
    pub fn boundary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().map(|&(b, _)| b)
    }
}

/// Classifies every grid point. The neighbour of a boundary point steps one
/// cell inward along each axis on which the point lies on the surface, so
/// faces step along their normal, 2D corners and 3D edges step diagonally,
/// and 3D corners step along all three axes.
pub fn boundary_map(grid: &Grid) -> BoundaryMap {
    let mut pairs = Vec::new();
    let mut interior = Vec::new();
    for lin in 0..grid.len() {
        let idx = grid.multi_index(lin);
        if !grid.is_boundary(idx) {
            interior.push(lin);
            continue;
        }
        let mut inner = idx;
        for ax in 0..grid.dim {
            if idx[ax] == 0 {
                inner[ax] = 1;
            } else if idx[ax] == grid.shape[ax] - 1 {
                inner[ax] = grid.shape[ax] - 2;
            }
        }
        pairs.push((lin, grid.index(inner)));
    }
    BoundaryMap { pairs, interior }
}

/// Second-order central-difference Laplacian written into `out` at interior
/// points. Boundary entries of `out` are not touched.
pub fn laplacian_cd_into(grid: &Grid, psi: &[C64], out: &mut [C64]) {
    debug_assert_eq!(psi.len(), grid.len());
    debug_assert_eq!(out.len(), grid.len());
    let st = grid.strides();
    let w: Vec<f64> = grid.spacing().iter().map(|h| 1.0 / (h * h)).collect();
    let diag: f64 = -2.0 * w.iter().sum::<f64>();
    for (start, end) in grid.interior_runs() {
        for i in start..end {
            let mut acc = psi[i] * diag;
            for (ax, wa) in w.iter().enumerate() {
                acc += (psi[i + st[ax]] + psi[i - st[ax]]) * *wa;
            }
            out[i] = acc;
        }
    }
}

/// Allocating form of [`laplacian_cd_into`]; boundary entries are zero and
/// carry no meaning.
pub fn laplacian_cd(psi: &ComplexField) -> ComplexField {
    let mut out = ComplexField::zeros(psi.grid);
    laplacian_cd_into(&psi.grid, &psi.values, &mut out.values);
    out
}
