//! Second-order staggered stencils.
//!
//! The Neumann condition for scalars is encoded by zero flux through boundary
//! faces, which is what a reflected ghost cell gives. With this convention
//! `divergence(gradient(f))` and `laplacian_neumann(f)` are the same floating
//! point computation, and `gradient` is the exact negative adjoint of
//! `divergence` on fields with vanishing normal component.

use alloc::vec;
use alloc::vec::Vec;

use super::grid::{Grid, ScalarField, VectorField};

pub(crate) fn laplacian_into(g: &Grid, f: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx, g.dy);
    for j in 0..ny {
        for i in 0..nx {
            let c = f[i + nx * j];
            let fr = if i + 1 < nx { (f[i + 1 + nx * j] - c) / dx } else { 0.0 };
            let fl = if i > 0 { (c - f[i - 1 + nx * j]) / dx } else { 0.0 };
            let ft = if j + 1 < ny { (f[i + nx * (j + 1)] - c) / dy } else { 0.0 };
            let fb = if j > 0 { (c - f[i + nx * (j - 1)]) / dy } else { 0.0 };
            out[i + nx * j] = (fr - fl) / dx + (ft - fb) / dy;
        }
    }
}

pub(crate) fn gradient_into(g: &Grid, f: &[f64], u: &mut [f64], v: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    for j in 0..ny {
        u[(nx + 1) * j] = 0.0;
        for i in 1..nx {
            u[i + (nx + 1) * j] = (f[i + nx * j] - f[i - 1 + nx * j]) / g.dx;
        }
        u[nx + (nx + 1) * j] = 0.0;
    }
    for i in 0..nx {
        v[i] = 0.0;
        v[i + nx * ny] = 0.0;
    }
    for j in 1..ny {
        for i in 0..nx {
            v[i + nx * j] = (f[i + nx * j] - f[i + nx * (j - 1)]) / g.dy;
        }
    }
}

pub(crate) fn divergence_into(g: &Grid, u: &[f64], v: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    for j in 0..ny {
        for i in 0..nx {
            let fr = u[i + 1 + (nx + 1) * j];
            let fl = u[i + (nx + 1) * j];
            let ft = v[i + nx * (j + 1)];
            let fb = v[i + nx * j];
            out[i + nx * j] = (fr - fl) / g.dx + (ft - fb) / g.dy;
        }
    }
}

/// Five-point Laplacian with homogeneous Neumann boundary handling.
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(f.grid);
    laplacian_into(&f.grid, &f.data, &mut out.data);
    out
}

/// Face-centered gradient; boundary-normal components are zero.
pub fn gradient(f: &ScalarField) -> VectorField {
    let mut out = VectorField::zeros(f.grid);
    gradient_into(&f.grid, &f.data, &mut out.u, &mut out.v);
    out
}

/// Cell-centered divergence of a staggered field.
pub fn divergence(g: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(g.grid);
    divergence_into(&g.grid, &g.u, &g.v, &mut out.data);
    out
}

/// Cell values averaged onto the vertical faces (one-sided on the boundary).
pub(crate) fn cell_to_u(g: &Grid, f: &[f64], out: &mut [f64]) {
    let nx = g.nx;
    for j in 0..g.ny {
        out[(nx + 1) * j] = f[nx * j];
        for i in 1..nx {
            out[i + (nx + 1) * j] = 0.5 * (f[i - 1 + nx * j] + f[i + nx * j]);
        }
        out[nx + (nx + 1) * j] = f[nx - 1 + nx * j];
    }
}

/// Cell values averaged onto the horizontal faces (one-sided on the boundary).
pub(crate) fn cell_to_v(g: &Grid, f: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    for i in 0..nx {
        out[i] = f[i];
        out[i + nx * ny] = f[i + nx * (ny - 1)];
    }
    for j in 1..ny {
        for i in 0..nx {
            out[i + nx * j] = 0.5 * (f[i + nx * (j - 1)] + f[i + nx * j]);
        }
    }
}

/// Vertical-face values averaged to cell centers; accumulates into `out`.
pub(crate) fn u_to_cell_add(g: &Grid, q: &[f64], out: &mut [f64]) {
    let nx = g.nx;
    for j in 0..g.ny {
        for i in 0..nx {
            out[i + nx * j] += 0.5 * (q[i + (nx + 1) * j] + q[i + 1 + (nx + 1) * j]);
        }
    }
}

/// Horizontal-face values averaged to cell centers; accumulates into `out`.
pub(crate) fn v_to_cell_add(g: &Grid, q: &[f64], out: &mut [f64]) {
    let nx = g.nx;
    for j in 0..g.ny {
        for i in 0..nx {
            out[i + nx * j] += 0.5 * (q[i + nx * j] + q[i + nx * (j + 1)]);
        }
    }
}

/// Cell values averaged onto grid nodes over the adjacent cells.
pub(crate) fn cell_to_node(g: &Grid, f: &[f64]) -> Vec<f64> {
    let (nx, ny) = (g.nx, g.ny);
    let mut out = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            let mut s = 0.0;
            let mut n = 0.0;
            for (ci, cj) in [(i.wrapping_sub(1), j.wrapping_sub(1)), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j)] {
                if ci < nx && cj < ny {
                    s += f[ci + nx * cj];
                    n += 1.0;
                }
            }
            out[i + (nx + 1) * j] = s / n;
        }
    }
    out
}

/// Quadrature weight of node `(i, j)`: 1 inside, 1/2 on edges, 1/4 at corners.
#[inline]
pub(crate) fn node_weight(g: &Grid, i: usize, j: usize) -> f64 {
    let wx = if i == 0 || i == g.nx { 0.5 } else { 1.0 };
    let wy = if j == 0 || j == g.ny { 0.5 } else { 1.0 };
    wx * wy
}

/// Symmetric velocity gradient `Dv` on the staggered grid.
///
/// Normal strains live at cell centers, the shear strain at nodes. Tangential
/// no-slip enters through odd ghost reflection of the velocity across walls.
#[derive(Debug, Clone, PartialEq)]
pub struct Strain {
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub xy: Vec<f64>,
}

impl Strain {
    pub fn of(vel: &VectorField) -> Self {
        let g = vel.grid;
        let (nx, ny) = (g.nx, g.ny);
        let mut xx = vec![0.0; g.cells()];
        let mut yy = vec![0.0; g.cells()];
        for j in 0..ny {
            for i in 0..nx {
                xx[i + nx * j] = (vel.u[g.u_idx(i + 1, j)] - vel.u[g.u_idx(i, j)]) / g.dx;
                yy[i + nx * j] = (vel.v[g.v_idx(i, j + 1)] - vel.v[g.v_idx(i, j)]) / g.dy;
            }
        }
        let mut xy = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 0..=ny {
            for i in 0..=nx {
                let ua = if j < ny { vel.u[g.u_idx(i, j)] } else { -vel.u[g.u_idx(i, ny - 1)] };
                let ub = if j > 0 { vel.u[g.u_idx(i, j - 1)] } else { -vel.u[g.u_idx(i, 0)] };
                let vr = if i < nx { vel.v[g.v_idx(i, j)] } else { -vel.v[g.v_idx(nx - 1, j)] };
                let vl = if i > 0 { vel.v[g.v_idx(i - 1, j)] } else { -vel.v[g.v_idx(0, j)] };
                xy[i + (nx + 1) * j] = 0.5 * ((ua - ub) / g.dy + (vr - vl) / g.dx);
            }
        }
        Self { xx, yy, xy }
    }

    /// `sum nu |D|^2 dx dy` with cell weights `nu_cell` and node weights `nu_node`.
    pub fn weighted_norm_sq(&self, g: &Grid, nu_cell: &[f64], nu_node: &[f64]) -> f64 {
        let mut s = 0.0;
        for c in 0..self.xx.len() {
            s += nu_cell[c] * (self.xx[c] * self.xx[c] + self.yy[c] * self.yy[c]);
        }
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let n = i + (g.nx + 1) * j;
                s += 2.0 * node_weight(g, i, j) * nu_node[n] * self.xy[n] * self.xy[n];
            }
        }
        s * g.cell_area()
    }

    /// `sum |D|^2 dx dy`.
    pub fn norm_sq(&self, g: &Grid) -> f64 {
        let ones_c = vec![1.0; self.xx.len()];
        let ones_n = vec![1.0; self.xy.len()];
        self.weighted_norm_sq(g, &ones_c, &ones_n)
    }

    /// Adjoint of [`Strain::of`] with respect to the face inner product and the
    /// strain inner product used by [`Strain::weighted_norm_sq`]. Accumulates
    /// into `out`; entries on boundary faces are written as well.
    pub(crate) fn adjoint_add(&self, g: &Grid, out: &mut VectorField) {
        let (nx, ny) = (g.nx, g.ny);
        for j in 0..ny {
            for i in 0..nx {
                let sx = self.xx[i + nx * j] / g.dx;
                out.u[g.u_idx(i + 1, j)] += sx;
                out.u[g.u_idx(i, j)] -= sx;
                let sy = self.yy[i + nx * j] / g.dy;
                out.v[g.v_idx(i, j + 1)] += sy;
                out.v[g.v_idx(i, j)] -= sy;
            }
        }
        for j in 0..=ny {
            for i in 0..=nx {
                let t = node_weight(g, i, j) * self.xy[i + (nx + 1) * j];
                let ty = t / g.dy;
                if j < ny {
                    out.u[g.u_idx(i, j)] += ty;
                } else {
                    out.u[g.u_idx(i, ny - 1)] -= ty;
                }
                if j > 0 {
                    out.u[g.u_idx(i, j - 1)] -= ty;
                } else {
                    out.u[g.u_idx(i, 0)] += ty;
                }
                let tx = t / g.dx;
                if i < nx {
                    out.v[g.v_idx(i, j)] += tx;
                } else {
                    out.v[g.v_idx(nx - 1, j)] -= tx;
                }
                if i > 0 {
                    out.v[g.v_idx(i - 1, j)] -= tx;
                } else {
                    out.v[g.v_idx(0, j)] += tx;
                }
            }
        }
    }

    /// Scales the strain pointwise by `2 nu`.
    pub(crate) fn scale(&mut self, cell: &[f64], node: &[f64]) {
        for (s, w) in self.xx.iter_mut().zip(cell) {
            *s *= w;
        }
        for (s, w) in self.yy.iter_mut().zip(cell) {
            *s *= w;
        }
        for (s, w) in self.xy.iter_mut().zip(node) {
            *s *= w;
        }
    }
}
