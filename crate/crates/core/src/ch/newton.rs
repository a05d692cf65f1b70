use alloc::vec;
use alloc::vec::Vec;

use super::precond::{tangent_inverse, ModalPreconditioner};
use crate::error::{Error, Result};
use crate::fields::ops::{cell_to_u, cell_to_v, divergence_into, gradient_into, laplacian_into};
use crate::fields::{dot, Grid, Spectral};
use crate::linalg::SmallMat;
use crate::thermo::{ChemicalPotentialField, Entropy, ModelParams, PhaseField};

/// Cell-level operators shared by the step and stationary solvers.
#[derive(Debug, Clone)]
pub(crate) struct CellOps<'a> {
    pub grid: Grid,
    pub params: &'a ModelParams,
    /// Mobility scale on the faces; empty when the mobility is constant.
    su: Vec<f64>,
    sv: Vec<f64>,
}

impl<'a> CellOps<'a> {
    pub(crate) fn new(grid: Grid, params: &'a ModelParams, phi_k: &PhaseField) -> Self {
        let (mut su, mut sv) = (Vec::new(), Vec::new());
        if !params.mobility.is_constant() {
            let nc = grid.cells();
            let mut buf = vec![0.0; phi_k.n];
            let s: Vec<f64> = (0..nc)
                .map(|c| {
                    phi_k.at_cell(c, &mut buf);
                    params.mobility.scale(&buf)
                })
                .collect();
            su = vec![0.0; grid.u_len()];
            sv = vec![0.0; grid.v_len()];
            cell_to_u(&grid, &s, &mut su);
            cell_to_v(&grid, &s, &mut sv);
        }
        Self { grid, params, su, sv }
    }

    /// Spatial mean of the mobility scale, used by the preconditioner.
    pub(crate) fn mean_scale(&self) -> f64 {
        if self.su.is_empty() {
            1.0
        } else {
            (self.su.iter().sum::<f64>() / self.su.len() as f64 + self.sv.iter().sum::<f64>() / self.sv.len() as f64) / 2.0
        }
    }

    pub(crate) fn laplacian_all(&self, x: &[f64], out: &mut [f64]) {
        let nc = self.grid.cells();
        for (xi, oi) in x.chunks(nc).zip(out.chunks_mut(nc)) {
            laplacian_into(&self.grid, xi, oi);
        }
    }

    /// `div(M grad w)` for all components.
    pub(crate) fn div_mobility_grad(&self, w: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let n = self.params.n_phases;
        let nc = g.cells();
        let (nu, nv) = (g.u_len(), g.v_len());
        let mut gu = vec![0.0; n * nu];
        let mut gv = vec![0.0; n * nv];
        for j in 0..n {
            gradient_into(g, &w[j * nc..(j + 1) * nc], &mut gu[j * nu..(j + 1) * nu], &mut gv[j * nv..(j + 1) * nv]);
        }
        let m = &self.params.mobility.base;
        let mut fu = vec![0.0; nu];
        let mut fv = vec![0.0; nv];
        for i in 0..n {
            fu.iter_mut().for_each(|x| *x = 0.0);
            fv.iter_mut().for_each(|x| *x = 0.0);
            for j in 0..n {
                let mij = m.get(i, j);
                if mij == 0.0 {
                    continue;
                }
                for (f, d) in fu.iter_mut().zip(&gu[j * nu..(j + 1) * nu]) {
                    *f += mij * d;
                }
                for (f, d) in fv.iter_mut().zip(&gv[j * nv..(j + 1) * nv]) {
                    *f += mij * d;
                }
            }
            if !self.su.is_empty() {
                fu.iter_mut().zip(&self.su).for_each(|(f, s)| *f *= s);
                fv.iter_mut().zip(&self.sv).for_each(|(f, s)| *f *= s);
            }
            divergence_into(g, &fu, &fv, &mut out[i * nc..(i + 1) * nc]);
        }
    }

    /// `<M grad w, grad w>` integrated over the domain.
    pub(crate) fn mobility_form(&self, w: &[f64]) -> f64 {
        let mut d = vec![0.0; w.len()];
        self.div_mobility_grad(w, &mut d);
        -dot(&d, w) * self.grid.cell_area()
    }
}

/// Per-cell `P (D x - A x / 2)` with the diagonal `D` given component-major;
/// `out` is overwritten.
pub(crate) fn local_linear(n: usize, nc: usize, diag: &[f64], a_half: f64, a: &SmallMat, x: &[f64], out: &mut [f64]) {
    let mut xc = vec![0.0; n];
    let mut yc = vec![0.0; n];
    for c in 0..nc {
        for i in 0..n {
            xc[i] = x[i * nc + c];
        }
        a.mul_vec(&xc, &mut yc);
        let mut mean = 0.0;
        for i in 0..n {
            yc[i] = diag[i * nc + c] * xc[i] - a_half * yc[i];
            mean += yc[i];
        }
        mean /= n as f64;
        for i in 0..n {
            out[i * nc + c] = yc[i] - mean;
        }
    }
}

/// Entropy derivatives at every cell: returns `(psi', psi'')`, component-major.
pub(crate) fn entropy_derivatives(params: &ModelParams, phi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let ent = Entropy::new(params.theta);
    let mut d1 = Vec::with_capacity(phi.len());
    let mut d2 = Vec::with_capacity(phi.len());
    for &s in phi {
        d1.push(ent.psi_prime(s)?);
        d2.push(ent.psi_double_prime(s)?);
    }
    Ok((d1, d2))
}

/// Subtracts the per-component spatial mean.
pub(crate) fn remove_component_means(x: &mut [f64], nc: usize) {
    for chunk in x.chunks_mut(nc) {
        let m = chunk.iter().sum::<f64>() / nc as f64;
        chunk.iter_mut().for_each(|v| *v -= m);
    }
}

/// Subtracts the mean over components at each cell.
pub(crate) fn project_cells(x: &mut [f64], n: usize, nc: usize) {
    for c in 0..nc {
        let m = (0..n).map(|i| x[i * nc + c]).sum::<f64>() / n as f64;
        for i in 0..n {
            x[i * nc + c] -= m;
        }
    }
}

/// Discrete L2 norm of a component-major cell vector.
pub(crate) fn l2(g: &Grid, x: &[f64]) -> f64 {
    libm::sqrt(dot(x, x) * g.cell_area())
}

/// Linearization of one implicit phase step around an iterate.
///
/// The chemical potential is eliminated, so the unknown is `phi` alone and
/// the residual is written in increment form:
/// `R(phi) = phi - phi_k + h T - h div(M grad W(phi))` with
/// `W(phi) = -zeta lap phi + P(psi'(phi) - A phi / 2 - A phi_k / 2)`.
#[derive(Debug, Clone)]
pub struct NewtonSystem<'a> {
    pub(crate) ops: CellOps<'a>,
    pub(crate) phi_k: &'a PhaseField,
    pub(crate) h: f64,
    /// `h T` with its per-component mean removed.
    pub(crate) h_transport: Vec<f64>,
    pub(crate) phi: PhaseField,
    pub(crate) hess: Vec<f64>,
    pub(crate) w: Vec<f64>,
    pub(crate) residual: Vec<f64>,
}

impl<'a> NewtonSystem<'a> {
    pub(crate) fn new(ops: CellOps<'a>, phi_k: &'a PhaseField, transport: &[f64], h: f64, phi: PhaseField) -> Result<Self> {
        let mut h_transport: Vec<f64> = transport.iter().map(|t| h * t).collect();
        remove_component_means(&mut h_transport, phi_k.grid.cells());
        let mut s = Self { ops, phi_k, h, h_transport, phi: phi.clone(), hess: Vec::new(), w: Vec::new(), residual: Vec::new() };
        s.set_iterate(phi)?;
        Ok(s)
    }

    /// Re-linearizes at `phi`.
    pub(crate) fn set_iterate(&mut self, phi: PhaseField) -> Result<()> {
        let p = self.ops.params;
        let n = p.n_phases;
        let nc = self.ops.grid.cells();
        let (d1, d2) = entropy_derivatives(p, &phi.data)?;
        // W = -zeta lap phi + P(psi' - A (phi + phi_k) / 2)
        let mut w = vec![0.0; n * nc];
        let mut lap = vec![0.0; n * nc];
        self.ops.laplacian_all(&phi.data, &mut lap);
        let avg: Vec<f64> = phi.data.iter().zip(&self.phi_k.data).map(|(a, b)| a + b).collect();
        let zeros = vec![0.0; n * nc];
        local_linear(n, nc, &zeros, 0.5, &p.a, &avg, &mut w);
        let mut pd1 = d1;
        project_cells(&mut pd1, n, nc);
        for ((wi, li), di) in w.iter_mut().zip(&lap).zip(&pd1) {
            *wi += di - p.gamma_scale * li;
        }
        let mut flux = vec![0.0; n * nc];
        self.ops.div_mobility_grad(&w, &mut flux);
        let h = self.h;
        let mut r = vec![0.0; n * nc];
        for (k, rk) in r.iter_mut().enumerate() {
            *rk = phi.data[k] - self.phi_k.data[k] + self.h_transport[k] - h * flux[k];
        }
        self.phi = phi;
        self.hess = d2;
        self.w = w;
        self.residual = r;
        Ok(())
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    /// Discrete L2 norm of the residual.
    pub fn residual_norm(&self) -> f64 {
        l2(&self.ops.grid, &self.residual)
    }

    pub fn iterate(&self) -> &PhaseField {
        &self.phi
    }

    /// The chemical potential `W(phi)` at the current iterate.
    pub fn chemical_potential(&self) -> ChemicalPotentialField {
        ChemicalPotentialField::from_flat(self.ops.grid, self.ops.params.n_phases, self.w.clone())
    }

    /// `out = J x` with `J x = x - h div(M grad(-zeta lap x + P(H x - A x / 2)))`.
    pub fn apply_jacobian(&self, x: &[f64], out: &mut [f64]) {
        let p = self.ops.params;
        let n = p.n_phases;
        let nc = self.ops.grid.cells();
        let mut lap = vec![0.0; x.len()];
        self.ops.laplacian_all(x, &mut lap);
        let mut wx = vec![0.0; x.len()];
        local_linear(n, nc, &self.hess, 0.5, &p.a, x, &mut wx);
        for (a, l) in wx.iter_mut().zip(&lap) {
            *a -= p.gamma_scale * l;
        }
        self.ops.div_mobility_grad(&wx, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi - self.h * *o;
        }
    }

    /// Block preconditioner from frozen, spatially averaged coefficients.
    pub(crate) fn preconditioner(&self, spectral: &Spectral) -> ModalPreconditioner {
        let p = self.ops.params;
        let n = p.n_phases;
        let nc = self.ops.grid.cells();
        let hbar: Vec<f64> = self.hess.chunks(nc).map(|c| c.iter().sum::<f64>() / nc as f64).collect();
        let proj = crate::thermo::projector_matrix(n);
        let mut mbar = p.mobility.base.clone();
        let s = self.ops.mean_scale();
        mbar.a.iter_mut().for_each(|x| *x *= s);
        // C = P Hbar P - P A P / 2, shared by every mode.
        let mut hd = SmallMat::zeros(n);
        for i in 0..n {
            hd.set(i, i, hbar[i]);
        }
        let mut c = proj.matmul(&hd).matmul(&proj);
        let pap = proj.matmul(&p.a).matmul(&proj);
        for (ci, ai) in c.a.iter_mut().zip(&pap.a) {
            *ci -= 0.5 * ai;
        }
        let h = self.h;
        let zeta = p.gamma_scale;
        ModalPreconditioner::build(spectral, n, |mu| {
            let block = |with_potential: bool| {
                let mut inner = SmallMat::identity(n);
                inner.a.iter_mut().for_each(|x| *x *= zeta * mu);
                if with_potential {
                    for (a, b) in inner.a.iter_mut().zip(&c.a) {
                        *a += b;
                    }
                }
                let mut b = mbar.matmul(&inner);
                b.a.iter_mut().for_each(|x| *x *= h * mu);
                for i in 0..n {
                    b.a[i * n + i] += 1.0;
                }
                tangent_inverse(&b)
            };
            block(true).or_else(|| block(false))
        })
    }
}

/// Outcome of a damped Newton solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonStats {
    pub iters: usize,
    pub linear_iters: usize,
    pub residual: f64,
}

/// Smallest line-search factor tried before giving up.
const MIN_STEP: f64 = 1e-10;

/// Damped Newton iteration driving `sys` to `tol`.
///
/// Each update is projected onto sum-zero, mean-zero fields so the simplex
/// constraint and the component means are kept exactly. The step is shrunk
/// until the iterate stays above `s_guard` and the residual decreases.
pub(crate) fn solve(
    sys: &mut NewtonSystem<'_>,
    spectral: &Spectral,
    tol: f64,
    max_iter: usize,
    shrink: f64,
    s_guard: f64,
) -> Result<NewtonStats> {
    let g = sys.ops.grid;
    let n = sys.ops.params.n_phases;
    let nc = g.cells();
    let mut linear_iters = 0;
    let mut rnorm = sys.residual_norm();
    let mut iters = 0;
    while rnorm > tol {
        if iters >= max_iter {
            return Err(Error::NewtonDivergence { iters, residual: rnorm });
        }
        iters += 1;
        let pc = sys.preconditioner(spectral);
        let rhs: Vec<f64> = sys.residual.iter().map(|r| -r).collect();
        let mut delta = vec![0.0; rhs.len()];
        let cfg = crate::linalg::GmresConfig {
            restart: 60,
            max_iters: 600,
            rel_tol: 1e-8,
            // `gmres` works in the plain Euclidean norm.
            abs_tol: 1e-2 * tol / libm::sqrt(g.cell_area()),
        };
        let out = crate::linalg::gmres(
            |x, y| sys.apply_jacobian(x, y),
            |x, y| pc.apply(spectral, x, y),
            &rhs,
            &mut delta,
            &cfg,
        );
        linear_iters += out.iters;
        if !out.converged && out.rel_residual > 0.5 {
            return Err(Error::LinearSolveFailure { iters: out.iters, residual: out.rel_residual });
        }
        project_cells(&mut delta, n, nc);
        remove_component_means(&mut delta, nc);

        let mut lambda = 1.0;
        let mut saw_interior = false;
        loop {
            if lambda < MIN_STEP {
                return Err(if saw_interior {
                    Error::NewtonDivergence { iters, residual: rnorm }
                } else {
                    Error::InteriorViolation
                });
            }
            let trial: Vec<f64> = sys.phi.data.iter().zip(&delta).map(|(p, d)| p + lambda * d).collect();
            if trial.iter().all(|x| *x >= s_guard) {
                saw_interior = true;
                let prev = core::mem::replace(&mut sys.phi, PhaseField::zeros(g, n));
                sys.set_iterate(PhaseField::from_flat(g, n, trial))?;
                let new_norm = sys.residual_norm();
                if new_norm <= (1.0 - 1e-4 * lambda) * rnorm || new_norm <= tol {
                    rnorm = new_norm;
                    break;
                }
                sys.set_iterate(prev)?;
            }
            lambda *= shrink;
        }
    }
    Ok(NewtonStats { iters, linear_iters, residual: rnorm })
}
