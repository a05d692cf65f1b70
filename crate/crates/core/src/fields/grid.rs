use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Uniform cell-centered rectangle `[0, lx] x [0, ly]`.
///
/// Scalars live at cell centers. Vector fields are staggered: the x-component
/// lives on the `(nx + 1) x ny` vertical faces and the y-component on the
/// `nx x (ny + 1)` horizontal faces. Faces on the boundary carry the normal
/// component and are held at zero for gradients and for no-slip velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 cells per axis, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!("lengths must be positive, got {lx}x{ly}")));
        }
        Ok(Self { nx, ny, lx, ly, dx: lx / nx as f64, dy: ly / ny as f64 })
    }

    /// Unit square with `n x n` cells.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn u_len(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn v_len(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn u_idx(&self, i: usize, j: usize) -> usize {
        i + (self.nx + 1) * j
    }

    #[inline]
    pub fn v_idx(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    /// Center of cell `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy)
    }
}

/// Cell-centered scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, data: vec![0.0; grid.cells()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, data: vec![c; grid.cells()] }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.cells(), "scalar field length mismatch");
        Self { grid, data }
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                data.push(f(x, y));
            }
        }
        Self { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.idx(i, j)]
    }

    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// `sum f g dx dy`.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        dot(&self.data, &other.data) * self.grid.cell_area()
    }

    /// Discrete L2 norm.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|x| a * x).collect() }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &ScalarField, b: f64) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Self { grid: self.grid, data }
    }
}

/// Staggered vector field: `u` on vertical faces, `v` on horizontal faces.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, u: vec![0.0; grid.u_len()], v: vec![0.0; grid.v_len()] }
    }

    pub fn from_parts(grid: Grid, u: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(u.len(), grid.u_len(), "u length mismatch");
        assert_eq!(v.len(), grid.v_len(), "v length mismatch");
        Self { grid, u, v }
    }

    /// Samples `(fu, fv)` at the face midpoints, including boundary faces.
    pub fn from_fn(grid: Grid, mut fu: impl FnMut(f64, f64) -> f64, mut fv: impl FnMut(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                out.u[grid.u_idx(i, j)] = fu(i as f64 * grid.dx, (j as f64 + 0.5) * grid.dy);
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                out.v[grid.v_idx(i, j)] = fv((i as f64 + 0.5) * grid.dx, j as f64 * grid.dy);
            }
        }
        out
    }

    /// Divergence-free field with zero normal flux built from a stream function
    /// sampled at the grid nodes. `psi` must vanish on the boundary nodes for
    /// the normal components to vanish.
    pub fn from_stream_function(grid: Grid, mut psi: impl FnMut(f64, f64) -> f64) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut nodes = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 0..=ny {
            for i in 0..=nx {
                nodes[i + (nx + 1) * j] = psi(i as f64 * grid.dx, j as f64 * grid.dy);
            }
        }
        let node = |i: usize, j: usize| nodes[i + (nx + 1) * j];
        let mut out = Self::zeros(grid);
        for j in 0..ny {
            for i in 0..=nx {
                out.u[grid.u_idx(i, j)] = (node(i, j + 1) - node(i, j)) / grid.dy;
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                out.v[grid.v_idx(i, j)] = -(node(i + 1, j) - node(i, j)) / grid.dx;
            }
        }
        out
    }

    /// `sum over faces of a . b dx dy`.
    pub fn dot(&self, other: &VectorField) -> f64 {
        (dot(&self.u, &other.u) + dot(&self.v, &other.v)) * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.u).max(max_abs(&self.v))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// Largest normal component on the boundary faces.
    pub fn boundary_normal_max(&self) -> f64 {
        let g = self.grid;
        let mut m: f64 = 0.0;
        for j in 0..g.ny {
            m = m.max(self.u[g.u_idx(0, j)].abs()).max(self.u[g.u_idx(g.nx, j)].abs());
        }
        for i in 0..g.nx {
            m = m.max(self.v[g.v_idx(i, 0)].abs()).max(self.v[g.v_idx(i, g.ny)].abs());
        }
        m
    }

    pub fn zero_boundary_normal(&mut self) {
        let g = self.grid;
        for j in 0..g.ny {
            self.u[g.u_idx(0, j)] = 0.0;
            self.u[g.u_idx(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            self.v[g.v_idx(i, 0)] = 0.0;
            self.v[g.v_idx(i, g.ny)] = 0.0;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            u: self.u.iter().map(|x| a * x).collect(),
            v: self.v.iter().map(|x| a * x).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &VectorField, b: f64) -> Self {
        Self {
            grid: self.grid,
            u: self.u.iter().zip(&other.u).map(|(x, y)| a * x + b * y).collect(),
            v: self.v.iter().zip(&other.v).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    /// Packs `[u, v]` into one vector for the Krylov solvers.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.u.len() + self.v.len());
        out.extend_from_slice(&self.u);
        out.extend_from_slice(&self.v);
        out
    }

    pub fn from_flat(grid: Grid, flat: &[f64]) -> Self {
        let nu = grid.u_len();
        Self::from_parts(grid, flat[..nu].to_vec(), flat[nu..].to_vec())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
