use alloc::vec;
use alloc::vec::Vec;

use super::newton::{entropy_derivatives, l2, local_linear, project_cells, remove_component_means, CellOps};
use super::precond::{tangent_inverse, ModalPreconditioner};
use super::ChSolver;
use crate::error::{Error, Result};
use crate::linalg::{gmres, GmresConfig, SmallMat};
use crate::thermo::{projector_matrix, ChemicalPotentialField, PhaseField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConfig {
    /// Bound on the largest pointwise residual.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub line_search_shrink: f64,
    pub s_guard: f64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self { newton_tol: 1e-11, newton_max_iter: 100, line_search_shrink: 0.5, s_guard: super::S_GUARD }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub phi: PhaseField,
    /// Constant Lagrange multiplier absorbed into the right-hand side; zero
    /// when the mean was not prescribed.
    pub multiplier: Vec<f64>,
    pub newton_iters: usize,
    /// Largest pointwise residual.
    pub residual: f64,
}

/// Residual of `-zeta lap phi + P psi'(phi) = f + c`, where `c` is the
/// per-component mean of `P psi'(phi) - f` when `mean_constrained` and zero
/// otherwise. Returns the residual field and `c`.
pub fn stationary_residual(
    solver: &ChSolver,
    phi: &PhaseField,
    f: &ChemicalPotentialField,
    mean_constrained: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = &solver.params;
    let (n, nc) = (p.n_phases, solver.grid().cells());
    let (mut r, _) = entropy_derivatives(p, &phi.data)?;
    project_cells(&mut r, n, nc);
    let mut fp = f.data.clone();
    project_cells(&mut fp, n, nc);
    for (ri, fi) in r.iter_mut().zip(&fp) {
        *ri -= fi;
    }
    let mut c = vec![0.0; n];
    if mean_constrained {
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = r[i * nc..(i + 1) * nc].iter().sum::<f64>() / nc as f64;
        }
        for (i, ci) in c.iter().enumerate() {
            r[i * nc..(i + 1) * nc].iter_mut().for_each(|x| *x -= ci);
        }
    }
    let mut lap = vec![0.0; n * nc];
    CellOps::new(solver.grid(), p, phi).laplacian_all(&phi.data, &mut lap);
    for (ri, li) in r.iter_mut().zip(&lap) {
        *ri -= p.gamma_scale * li;
    }
    Ok((r, c))
}

impl ChSolver {
    /// Solves `-zeta lap phi + P psi'(phi) = f` with Neumann data.
    ///
    /// With `mean = Some(m)` the component means are fixed to `m` and a
    /// constant multiplier is absorbed into `f`; with `None` the problem is
    /// solved as stated. The interaction matrix does not enter.
    pub fn stationary_solve(
        &self,
        f: &ChemicalPotentialField,
        mean: Option<&[f64]>,
        cfg: &StationaryConfig,
    ) -> Result<StationaryResult> {
        let p = &self.params;
        let g = self.grid();
        let (n, nc) = (p.n_phases, g.cells());
        if f.grid != g || f.n != n {
            return Err(Error::InvalidParams("forcing does not match the solver".into()));
        }
        let mut phi = match mean {
            Some(m) => {
                let ok = m.len() == n && m.iter().all(|x| *x > 0.0 && *x < 1.0) && (m.iter().sum::<f64>() - 1.0).abs() < 1e-12;
                if !ok {
                    return Err(Error::InvalidParams("prescribed mean must lie in the open simplex".into()));
                }
                PhaseField::uniform(g, m)
            }
            None => softmax(f, p.theta),
        };
        let constrained = mean.is_some();
        let max_abs = |r: &[f64]| crate::fields::max_abs(r);
        let (mut r, mut c) = stationary_residual(self, &phi, f, constrained)?;
        let mut rnorm = l2(&g, &r);
        let mut iters = 0;
        while max_abs(&r) > cfg.newton_tol {
            if iters >= cfg.newton_max_iter {
                return Err(Error::NewtonDivergence { iters, residual: max_abs(&r) });
            }
            iters += 1;
            let (_, hess) = entropy_derivatives(p, &phi.data)?;
            let pc = self.stationary_preconditioner(&hess, constrained);
            let zeta = p.gamma_scale;
            let ops = CellOps::new(g, p, &phi);
            let jac = |x: &[f64], y: &mut [f64]| {
                let mut lap = vec![0.0; x.len()];
                ops.laplacian_all(x, &mut lap);
                local_linear(n, nc, &hess, 0.0, &p.a, x, y);
                if constrained {
                    remove_component_means(y, nc);
                }
                for (yi, li) in y.iter_mut().zip(&lap) {
                    *yi -= zeta * li;
                }
            };
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let mut delta = vec![0.0; rhs.len()];
            let gcfg = GmresConfig { restart: 80, max_iters: 800, rel_tol: 1e-10, abs_tol: 1e-3 * cfg.newton_tol };
            let out = gmres(jac, |x, y| pc.apply(&self.spectral, x, y), &rhs, &mut delta, &gcfg);
            if !out.converged && out.rel_residual > 0.5 {
                return Err(Error::LinearSolveFailure { iters: out.iters, residual: out.rel_residual });
            }
            project_cells(&mut delta, n, nc);
            if constrained {
                remove_component_means(&mut delta, nc);
            }
            let mut lambda = 1.0;
            loop {
                if lambda < 1e-12 {
                    return Err(Error::NewtonDivergence { iters, residual: max_abs(&r) });
                }
                let trial: Vec<f64> = phi.data.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
                if trial.iter().all(|x| *x >= cfg.s_guard) {
                    let cand = PhaseField::from_flat(g, n, trial);
                    let (rt, ct) = stationary_residual(self, &cand, f, constrained)?;
                    let tn = l2(&g, &rt);
                    if tn <= (1.0 - 1e-4 * lambda) * rnorm || max_abs(&rt) <= cfg.newton_tol {
                        phi = cand;
                        r = rt;
                        c = ct;
                        rnorm = tn;
                        break;
                    }
                }
                lambda *= cfg.line_search_shrink;
            }
        }
        Ok(StationaryResult { phi, multiplier: c, newton_iters: iters, residual: max_abs(&r) })
    }

    fn stationary_preconditioner(&self, hess: &[f64], constrained: bool) -> ModalPreconditioner {
        let n = self.params.n_phases;
        let nc = self.grid().cells();
        let proj = projector_matrix(n);
        let mut hd = SmallMat::zeros(n);
        for i in 0..n {
            hd.set(i, i, hess[i * nc..(i + 1) * nc].iter().sum::<f64>() / nc as f64);
        }
        let c = proj.matmul(&hd).matmul(&proj);
        let zeta = self.params.gamma_scale;
        ModalPreconditioner::build(&self.spectral, n, |mu| {
            if mu == 0.0 && constrained {
                return None;
            }
            let mut b = c.clone();
            for i in 0..n {
                b.a[i * n + i] += zeta * mu;
            }
            tangent_inverse(&b)
        })
    }
}

/// Pointwise `exp(f_i / theta) / sum_j exp(f_j / theta)`: the exact solution
/// when `f` is spatially constant.
fn softmax(f: &ChemicalPotentialField, theta: f64) -> PhaseField {
    let (n, nc) = (f.n, f.grid.cells());
    let mut data = vec![0.0; n * nc];
    for c in 0..nc {
        let top = (0..n).map(|i| f.data[i * nc + c]).fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for i in 0..n {
            let e = libm::exp((f.data[i * nc + c] - top) / theta);
            data[i * nc + c] = e;
            s += e;
        }
        for i in 0..n {
            data[i * nc + c] /= s;
        }
    }
    PhaseField::from_flat(f.grid, n, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::thermo::ModelParams;

    fn bisect(a: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 0.5 * libm::log(mid / (1.0 - mid)) < a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn logistic_profile_for_constant_forcing() {
        let g = Grid::unit(8).unwrap();
        let s = ChSolver::new(g, ModelParams::with_defaults(2)).unwrap();
        for a in [-1.3, 0.0, 0.4, 2.5] {
            let mut data = vec![a; g.cells()];
            data.extend(core::iter::repeat(-a).take(g.cells()));
            let f = ChemicalPotentialField::from_flat(g, 2, data);
            let r = s.stationary_solve(&f, None, &StationaryConfig::default()).unwrap();
            let want = bisect(a);
            assert!(r.phi.component(0).iter().all(|p| (p - want).abs() < 1e-12));
        }
    }

    #[test]
    fn constant_forcing_at_the_mean_returns_the_mean() {
        let g = Grid::unit(8).unwrap();
        let s = ChSolver::new(g, ModelParams::with_defaults(3)).unwrap();
        let m = [0.2, 0.5, 0.3];
        let mut fp: Vec<f64> = m.iter().map(|x| libm::log(*x) + 1.0).collect();
        crate::thermo::project_tangent_in_place(&mut fp);
        let mut data = Vec::new();
        for x in &fp {
            data.extend(core::iter::repeat(*x).take(g.cells()));
        }
        let f = ChemicalPotentialField::from_flat(g, 3, data);
        let r = s.stationary_solve(&f, Some(&m), &StationaryConfig::default()).unwrap();
        assert_eq!(r.newton_iters, 0);
        assert!(r.phi.data.iter().zip(&PhaseField::uniform(g, &m).data).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn varying_forcing_with_prescribed_mean() {
        let g = Grid::unit(16).unwrap();
        let s = ChSolver::new(g, ModelParams::with_defaults(3)).unwrap();
        let nc = g.cells();
        let mut data = vec![0.0; 3 * nc];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = g.center(i, j);
                let c = g.idx(i, j);
                data[c] = 2.0 * libm::cos(3.0 * x);
                data[nc + c] = -1.5 * libm::sin(2.0 * y);
                data[2 * nc + c] = -data[c] - data[nc + c];
            }
        }
        let f = ChemicalPotentialField::from_flat(g, 3, data);
        let m = [0.3, 0.3, 0.4];
        let r = s.stationary_solve(&f, Some(&m), &StationaryConfig::default()).unwrap();
        for (a, b) in r.phi.means().iter().zip(&m) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(r.residual <= 1e-11);
        assert!(super::super::separation_margin(&r.phi) > 0.0);
        assert!(r.phi.simplex_error() < 1e-12);
    }
}
