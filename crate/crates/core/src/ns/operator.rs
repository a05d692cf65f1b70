use alloc::vec;
use alloc::vec::Vec;

use crate::fields::ops::{cell_to_node, cell_to_u, cell_to_v};
use crate::fields::{Grid, ScalarField, Strain, VectorField};
use crate::thermo::{ModelParams, PhaseField};

/// Linear momentum operator on packed `[u, v]` face vectors:
///
/// `L x = (rho + rho_k)_f / (2h) x + D^T (2 nu + alpha / h) D x + K(c) x`
///
/// where `K(c)` is the skew-symmetric flux form of convection by the mass
/// flux `c = rho_k a + J`. Rows of boundary-normal faces are zero.
#[derive(Debug, Clone)]
pub(crate) struct MomentumOperator {
    g: Grid,
    h: f64,
    alpha: f64,
    mass_u: Vec<f64>,
    mass_v: Vec<f64>,
    rho_k_u: Vec<f64>,
    rho_k_v: Vec<f64>,
    nu_cell: Vec<f64>,
    nu_node: Vec<f64>,
    /// Strain weights `2 nu + alpha / h`.
    w_cell: Vec<f64>,
    w_node: Vec<f64>,
    cu: Vec<f64>,
    cv: Vec<f64>,
}

impl MomentumOperator {
    pub(crate) fn new(
        params: &ModelParams,
        phi_k: &PhaseField,
        rho_k: &ScalarField,
        rho_next: &ScalarField,
        a: &VectorField,
        jrho: &VectorField,
        h: f64,
    ) -> Self {
        let g = rho_k.grid;
        let face = |f: &[f64]| {
            let mut u = vec![0.0; g.u_len()];
            let mut v = vec![0.0; g.v_len()];
            cell_to_u(&g, f, &mut u);
            cell_to_v(&g, f, &mut v);
            (u, v)
        };
        let (rho_k_u, rho_k_v) = face(&rho_k.data);
        let (rho_n_u, rho_n_v) = face(&rho_next.data);
        let mass_u = rho_k_u.iter().zip(&rho_n_u).map(|(a, b)| 0.5 * (a + b) / h).collect();
        let mass_v = rho_k_v.iter().zip(&rho_n_v).map(|(a, b)| 0.5 * (a + b) / h).collect();
        let mut buf = vec![0.0; phi_k.n];
        let nu_cell: Vec<f64> = (0..g.cells())
            .map(|c| {
                phi_k.at_cell(c, &mut buf);
                params.viscosity.eval(&buf)
            })
            .collect();
        let nu_node = cell_to_node(&g, &nu_cell);
        let alpha = params.alpha;
        let w_cell = nu_cell.iter().map(|n| 2.0 * n + alpha / h).collect();
        let w_node = nu_node.iter().map(|n| 2.0 * n + alpha / h).collect();
        let mut cu: Vec<f64> = rho_k_u.iter().zip(&a.u).zip(&jrho.u).map(|((r, x), j)| r * x + j).collect();
        let mut cv: Vec<f64> = rho_k_v.iter().zip(&a.v).zip(&jrho.v).map(|((r, x), j)| r * x + j).collect();
        // Walls carry no mass flux.
        for j in 0..g.ny {
            cu[g.u_idx(0, j)] = 0.0;
            cu[g.u_idx(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            cv[g.v_idx(i, 0)] = 0.0;
            cv[g.v_idx(i, g.ny)] = 0.0;
        }
        Self { g, h, alpha, mass_u, mass_v, rho_k_u, rho_k_v, nu_cell, nu_node, w_cell, w_node, cu, cv }
    }

    fn strain_part(&self, x: &[f64], wc: &[f64], wn: &[f64], out: &mut [f64]) {
        let g = self.g;
        let vel = VectorField::from_flat(g, x);
        let mut s = Strain::of(&vel);
        s.scale(wc, wn);
        let mut acc = VectorField::zeros(g);
        s.adjoint_add(&g, &mut acc);
        let nu = g.u_len();
        out[..nu].iter_mut().zip(&acc.u).for_each(|(o, a)| *o += a);
        out[nu..].iter_mut().zip(&acc.v).for_each(|(o, a)| *o += a);
    }

    fn convection_add(&self, x: &[f64], out: &mut [f64]) {
        let g = self.g;
        let (nx, ny) = (g.nx, g.ny);
        let nu = g.u_len();
        let (xu, xv) = x.split_at(nu);
        let (ou, ov) = out.split_at_mut(nu);
        let (cu, cv) = (&self.cu, &self.cv);
        let k = 0.5 / (g.dx * g.dy);
        for j in 0..ny {
            for i in 1..nx {
                let mut s = 0.0;
                s += g.dy * 0.5 * (cu[g.u_idx(i, j)] + cu[g.u_idx(i + 1, j)]) * xu[g.u_idx(i + 1, j)];
                s -= g.dy * 0.5 * (cu[g.u_idx(i - 1, j)] + cu[g.u_idx(i, j)]) * xu[g.u_idx(i - 1, j)];
                if j + 1 < ny {
                    s += g.dx * 0.5 * (cv[g.v_idx(i - 1, j + 1)] + cv[g.v_idx(i, j + 1)]) * xu[g.u_idx(i, j + 1)];
                }
                if j > 0 {
                    s -= g.dx * 0.5 * (cv[g.v_idx(i - 1, j)] + cv[g.v_idx(i, j)]) * xu[g.u_idx(i, j - 1)];
                }
                ou[g.u_idx(i, j)] += k * s;
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let mut s = 0.0;
                s += g.dx * 0.5 * (cv[g.v_idx(i, j)] + cv[g.v_idx(i, j + 1)]) * xv[g.v_idx(i, j + 1)];
                s -= g.dx * 0.5 * (cv[g.v_idx(i, j - 1)] + cv[g.v_idx(i, j)]) * xv[g.v_idx(i, j - 1)];
                if i + 1 < nx {
                    s += g.dy * 0.5 * (cu[g.u_idx(i + 1, j - 1)] + cu[g.u_idx(i + 1, j)]) * xv[g.v_idx(i + 1, j)];
                }
                if i > 0 {
                    s -= g.dy * 0.5 * (cu[g.u_idx(i, j - 1)] + cu[g.u_idx(i, j)]) * xv[g.v_idx(i - 1, j)];
                }
                ov[g.v_idx(i, j)] += k * s;
            }
        }
    }

    fn zero_walls(&self, out: &mut [f64]) {
        let g = self.g;
        let nu = g.u_len();
        for j in 0..g.ny {
            out[g.u_idx(0, j)] = 0.0;
            out[g.u_idx(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            out[nu + g.v_idx(i, 0)] = 0.0;
            out[nu + g.v_idx(i, g.ny)] = 0.0;
        }
    }

    pub(crate) fn apply(&self, x: &[f64], out: &mut [f64]) {
        let nu = self.g.u_len();
        for (o, (m, xi)) in out[..nu].iter_mut().zip(self.mass_u.iter().zip(&x[..nu])) {
            *o = m * xi;
        }
        for (o, (m, xi)) in out[nu..].iter_mut().zip(self.mass_v.iter().zip(&x[nu..])) {
            *o = m * xi;
        }
        self.strain_part(x, &self.w_cell, &self.w_node, out);
        self.convection_add(x, out);
        self.zero_walls(out);
    }

    /// `rho_k v_k / h + (alpha / h) D^T D v_k + force`.
    pub(crate) fn rhs(&self, v_k: &VectorField, force: &VectorField) -> Vec<f64> {
        let g = self.g;
        let mut out: Vec<f64> = self
            .rho_k_u
            .iter()
            .zip(&v_k.u)
            .zip(&force.u)
            .map(|((r, x), f)| r * x / self.h + f)
            .chain(self.rho_k_v.iter().zip(&v_k.v).zip(&force.v).map(|((r, x), f)| r * x / self.h + f))
            .collect();
        if self.alpha > 0.0 {
            let wc = vec![self.alpha / self.h; g.cells()];
            let wn = vec![self.alpha / self.h; self.nu_node.len()];
            self.strain_part(&v_k.to_flat(), &wc, &wn, &mut out);
        }
        self.zero_walls(&mut out);
        out
    }

    /// Spatial means `(m, c)` for the model operator `m - c lap`: the mass
    /// coefficient and half the strain weight.
    pub(crate) fn mean_coefficients(&self) -> (f64, f64) {
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let m = 0.5 * (mean(&self.mass_u) + mean(&self.mass_v));
        (m, 0.5 * mean(&self.w_cell))
    }

    /// `2 sum nu |D v|^2` over the domain.
    pub(crate) fn viscous_dissipation(&self, v: &VectorField) -> f64 {
        2.0 * Strain::of(v).weighted_norm_sq(&self.g, &self.nu_cell, &self.nu_node)
    }
}
