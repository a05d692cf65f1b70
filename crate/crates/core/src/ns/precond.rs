use alloc::vec;
use alloc::vec::Vec;

use crate::fields::Grid;

/// Orthonormal sine basis for one axis, stored densely (row = mode).
#[derive(Debug, Clone)]
struct SineBasis {
    n: usize,
    mat: Vec<f64>,
    /// Eigenvalues of the negative second difference, non-negative.
    eig: Vec<f64>,
}

impl SineBasis {
    /// Nodes strictly between two Dirichlet walls: `n_cells - 1` unknowns.
    fn dirichlet_nodes(n_cells: usize, h: f64) -> Self {
        let n = n_cells - 1;
        let nf = n_cells as f64;
        let s = libm::sqrt(2.0 / nf);
        let mut mat = vec![0.0; n * n];
        for k in 0..n {
            for i in 0..n {
                mat[k * n + i] = s * libm::sin(core::f64::consts::PI * ((k + 1) * (i + 1)) as f64 / nf);
            }
        }
        let eig = (1..=n).map(|k| 2.0 / (h * h) * (1.0 - libm::cos(core::f64::consts::PI * k as f64 / nf))).collect();
        Self { n, mat, eig }
    }

    /// Cell-centred unknowns with odd reflection across both walls.
    fn dirichlet_cells(n_cells: usize, h: f64) -> Self {
        let n = n_cells;
        let nf = n as f64;
        let mut mat = vec![0.0; n * n];
        for l in 1..=n {
            let s = if l == n { libm::sqrt(1.0 / nf) } else { libm::sqrt(2.0 / nf) };
            for j in 0..n {
                mat[(l - 1) * n + j] = s * libm::sin(core::f64::consts::PI * l as f64 * (j as f64 + 0.5) / nf);
            }
        }
        let eig = (1..=n).map(|l| 2.0 / (h * h) * (1.0 - libm::cos(core::f64::consts::PI * l as f64 / nf))).collect();
        Self { n, mat, eig }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.mat[k * self.n..(k + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn inverse(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, xk) in x.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(&self.mat[k * self.n..(k + 1) * self.n]) {
                *o += xk * m;
            }
        }
    }
}

/// Inverse of `m - c lap` for one staggered component with no-slip walls.
#[derive(Debug, Clone)]
struct Block {
    bx: SineBasis,
    by: SineBasis,
}

impl Block {
    /// Solves on a row-major `bx.n x by.n` array in place.
    fn solve(&self, data: &mut [f64], m: f64, c: f64) {
        let (nx, ny) = (self.bx.n, self.by.n);
        let mut tmp = vec![0.0; nx.max(ny)];
        let mut line = vec![0.0; nx.max(ny)];
        for j in 0..ny {
            self.bx.forward(&data[j * nx..(j + 1) * nx], &mut tmp[..nx]);
            data[j * nx..(j + 1) * nx].copy_from_slice(&tmp[..nx]);
        }
        for i in 0..nx {
            for j in 0..ny {
                line[j] = data[j * nx + i];
            }
            self.by.forward(&line[..ny], &mut tmp[..ny]);
            for j in 0..ny {
                tmp[j] /= m + c * (self.bx.eig[i] + self.by.eig[j]);
            }
            self.by.inverse(&tmp[..ny], &mut line[..ny]);
            for j in 0..ny {
                data[j * nx + i] = line[j];
            }
        }
        for j in 0..ny {
            self.bx.inverse(&data[j * nx..(j + 1) * nx], &mut tmp[..nx]);
            data[j * nx..(j + 1) * nx].copy_from_slice(&tmp[..nx]);
        }
    }
}

/// `(m - c lap)^{-1}` on packed face vectors, acting on interior faces only.
#[derive(Debug, Clone)]
pub(crate) struct VectorHelmholtz {
    g: Grid,
    u: Block,
    v: Block,
}

impl VectorHelmholtz {
    pub(crate) fn new(g: Grid) -> Self {
        Self {
            g,
            u: Block { bx: SineBasis::dirichlet_nodes(g.nx, g.dx), by: SineBasis::dirichlet_cells(g.ny, g.dy) },
            v: Block { bx: SineBasis::dirichlet_cells(g.nx, g.dx), by: SineBasis::dirichlet_nodes(g.ny, g.dy) },
        }
    }

    pub(crate) fn apply(&self, m: f64, c: f64, x: &[f64], out: &mut [f64]) {
        let g = self.g;
        let (nx, ny) = (g.nx, g.ny);
        let nu = g.u_len();
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut bu = vec![0.0; (nx - 1) * ny];
        for j in 0..ny {
            for i in 1..nx {
                bu[j * (nx - 1) + i - 1] = x[g.u_idx(i, j)];
            }
        }
        self.u.solve(&mut bu, m, c);
        for j in 0..ny {
            for i in 1..nx {
                out[g.u_idx(i, j)] = bu[j * (nx - 1) + i - 1];
            }
        }
        let mut bv = vec![0.0; nx * (ny - 1)];
        for j in 1..ny {
            for i in 0..nx {
                bv[(j - 1) * nx + i] = x[nu + g.v_idx(i, j)];
            }
        }
        self.v.solve(&mut bv, m, c);
        for j in 1..ny {
            for i in 0..nx {
                out[nu + g.v_idx(i, j)] = bv[(j - 1) * nx + i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bases_are_orthonormal() {
        for b in [SineBasis::dirichlet_nodes(7, 0.1), SineBasis::dirichlet_cells(6, 0.1)] {
            for a in 0..b.n {
                for c in 0..b.n {
                    let d: f64 = (0..b.n).map(|i| b.mat[a * b.n + i] * b.mat[c * b.n + i]).sum();
                    assert!((d - if a == c { 1.0 } else { 0.0 }).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn cell_basis_diagonalizes_odd_ghost_stencil() {
        let (n, h) = (6, 0.2);
        let b = SineBasis::dirichlet_cells(n, h);
        for l in 0..n {
            let v = &b.mat[l * n..(l + 1) * n];
            for j in 0..n {
                let left = if j == 0 { -v[0] } else { v[j - 1] };
                let right = if j + 1 == n { -v[n - 1] } else { v[j + 1] };
                let lap = -(left - 2.0 * v[j] + right) / (h * h);
                assert!((lap - b.eig[l] * v[j]).abs() < 1e-10);
            }
        }
    }
}
