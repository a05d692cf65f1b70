//! Implicit Cahn-Hilliard stepping, the stationary problem and the
//! prescribed-velocity mode.

mod convective;
mod newton;
mod precond;
mod stationary;
mod transport;

use alloc::vec;
use alloc::vec::Vec;

pub use convective::{convective_ch_run, ConvectiveSample, ConvectiveTrajectory};
pub use newton::NewtonSystem;
pub use stationary::{stationary_residual, StationaryConfig, StationaryResult};
pub use transport::{capillary_force, transport};

pub(crate) use newton::{entropy_derivatives, l2, local_linear, project_cells, remove_component_means, CellOps};
pub(crate) use transport::{capillary_force_with, transport_with, FaceGradients};

use crate::error::{Error, Result};
use crate::fields::{Grid, Spectral, VectorField};
use crate::thermo::{ChemicalPotentialField, ModelParams, PhaseField};

/// Lower bound kept by every accepted Newton iterate.
pub const S_GUARD: f64 = 1e-9;
/// Default interior margin for initial data.
pub const EPS0: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChStepConfig {
    pub h: f64,
    /// Bound on the discrete L2 norm of the increment-form residual.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub line_search_shrink: f64,
    pub s_guard: f64,
}

impl Default for ChStepConfig {
    fn default() -> Self {
        Self { h: 1e-3, newton_tol: 1e-10, newton_max_iter: 30, line_search_shrink: 0.5, s_guard: S_GUARD }
    }
}

impl ChStepConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.h > 0.0
            && self.h.is_finite()
            && self.newton_tol > 0.0
            && self.newton_max_iter > 0
            && self.line_search_shrink > 0.0
            && self.line_search_shrink < 1.0
            && self.s_guard > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(alloc::format!("invalid step configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChStepResult {
    pub phi_next: PhaseField,
    pub w_next: ChemicalPotentialField,
    pub newton_iters: usize,
    pub linear_iters: usize,
    pub residual: f64,
}

/// Phase-field solver bound to one grid and parameter set.
#[derive(Debug, Clone)]
pub struct ChSolver {
    pub params: ModelParams,
    pub spectral: Spectral,
    /// Coercivity constant of the mobility on the tangent space.
    pub c0: f64,
}

impl ChSolver {
    pub fn new(grid: Grid, params: ModelParams) -> Result<Self> {
        let c0 = params.validate()?;
        Ok(Self { params, spectral: Spectral::new(grid), c0 })
    }

    pub fn grid(&self) -> Grid {
        self.spectral.grid
    }

    fn check_state(&self, phi: &PhaseField) -> Result<()> {
        if phi.grid != self.grid() || phi.n != self.params.n_phases {
            return Err(Error::InvalidParams("phase field does not match the solver".into()));
        }
        if !phi.is_interior() {
            return Err(Error::InteriorViolation);
        }
        Ok(())
    }

    /// Linearization of the step at `phi_iter`, for inspection and testing.
    pub fn newton_system<'a>(
        &'a self,
        phi_iter: &PhaseField,
        phi_k: &'a PhaseField,
        v: &VectorField,
        h: f64,
    ) -> Result<NewtonSystem<'a>> {
        let t = transport(phi_k, v);
        NewtonSystem::new(CellOps::new(self.grid(), &self.params, phi_k), phi_k, &t, h, phi_iter.clone())
    }

    /// One implicit step with advecting velocity `v`.
    pub fn step(&self, phi_k: &PhaseField, v: &VectorField, cfg: &ChStepConfig) -> Result<ChStepResult> {
        let t = transport(phi_k, v);
        self.step_with_transport(phi_k, &t, cfg)
    }

    pub(crate) fn step_with_transport(&self, phi_k: &PhaseField, t: &[f64], cfg: &ChStepConfig) -> Result<ChStepResult> {
        self.step_with_transport_from(phi_k, t, cfg, phi_k)
    }

    /// Like [`ChSolver::step`] with a precomputed transport term and a Newton
    /// starting point `guess` (same means as `phi_k`).
    pub(crate) fn step_with_transport_from(
        &self,
        phi_k: &PhaseField,
        t: &[f64],
        cfg: &ChStepConfig,
        guess: &PhaseField,
    ) -> Result<ChStepResult> {
        cfg.validate()?;
        self.check_state(phi_k)?;
        let ops = CellOps::new(self.grid(), &self.params, phi_k);
        let mut sys = NewtonSystem::new(ops, phi_k, t, cfg.h, guess.clone())?;
        let stats = newton::solve(&mut sys, &self.spectral, cfg.newton_tol, cfg.newton_max_iter, cfg.line_search_shrink, cfg.s_guard)?;
        let w_next = sys.chemical_potential();
        Ok(ChStepResult {
            phi_next: sys.phi,
            w_next,
            newton_iters: stats.iters,
            linear_iters: stats.linear_iters,
            residual: stats.residual,
        })
    }

    /// `<M(phi_k) grad w, grad w>` over the domain.
    pub fn mobility_dissipation(&self, phi_k: &PhaseField, w: &ChemicalPotentialField) -> f64 {
        CellOps::new(self.grid(), &self.params, phi_k).mobility_form(&w.data)
    }

    /// Chemical potential `-zeta lap phi + P(psi'(phi) - A phi)` of a state.
    pub fn chemical_potential(&self, phi: &PhaseField) -> Result<ChemicalPotentialField> {
        let p = &self.params;
        let (n, nc) = (p.n_phases, self.grid().cells());
        let (d1, _) = entropy_derivatives(p, &phi.data)?;
        let mut w = vec![0.0; n * nc];
        local_linear(n, nc, &vec![0.0; n * nc], 1.0, &p.a, &phi.data, &mut w);
        let mut lap = vec![0.0; n * nc];
        CellOps::new(self.grid(), p, phi).laplacian_all(&phi.data, &mut lap);
        let mut pd1 = d1;
        project_cells(&mut pd1, n, nc);
        for ((wi, li), di) in w.iter_mut().zip(&lap).zip(&pd1) {
            *wi += di - p.gamma_scale * li;
        }
        Ok(ChemicalPotentialField::from_flat(self.grid(), n, w))
    }

    /// Relative distance of `phi` from a stationary state: the RMS of the
    /// chemical potential minus its spatial mean, over `max(1, RMS)`.
    pub fn equilibrium_residual(&self, phi: &PhaseField) -> Result<f64> {
        let w = self.chemical_potential(phi)?;
        let nc = self.grid().cells();
        let rms = |x: &[f64]| libm::sqrt(crate::fields::dot(x, x) / x.len() as f64);
        let full = rms(&w.data);
        let mut centered = w.data;
        remove_component_means(&mut centered, nc);
        Ok(rms(&centered) / full.max(1.0))
    }

    /// Returns `phi` unchanged if every component lies in `[eps0, 1 - eps0]`;
    /// otherwise smooths each component once with `(I - dx dy lap)^{-1}`,
    /// clips to `[eps0, 1 - eps0]`, and rescales cells onto the simplex.
    pub fn mollify(&self, phi: &PhaseField, eps0: f64) -> PhaseField {
        if phi.data.iter().all(|x| *x >= eps0 && *x <= 1.0 - eps0) {
            return phi.clone();
        }
        let g = self.grid();
        let nc = g.cells();
        let mut data = Vec::with_capacity(phi.data.len());
        for i in 0..phi.n {
            let s = crate::fields::ScalarField::from_vec(g, phi.component(i).to_vec());
            data.extend(self.spectral.helmholtz_solve(1.0, g.dx * g.dy, &s).data);
        }
        renormalize(&mut data, phi.n, nc, eps0);
        PhaseField::from_flat(g, phi.n, data)
    }
}

/// Clips into `[eps0, 1 - eps0]` and rescales each cell to sum to one.
pub(crate) fn renormalize(data: &mut [f64], n: usize, nc: usize, eps0: f64) {
    for c in 0..nc {
        let mut s = 0.0;
        for i in 0..n {
            let x = &mut data[i * nc + c];
            *x = x.clamp(eps0, 1.0 - eps0);
            s += *x;
        }
        for i in 0..n {
            data[i * nc + c] /= s;
        }
    }
}

/// One implicit step; builds a throwaway [`ChSolver`].
pub fn ch_step(phi_k: &PhaseField, v: &VectorField, params: &ModelParams, cfg: &ChStepConfig) -> Result<ChStepResult> {
    ChSolver::new(phi_k.grid, params.clone())?.step(phi_k, v, cfg)
}

/// `min_i,x min(phi_i, (1 - phi_i) / (N - 1))`; positive iff strictly
/// separated from the pure phases.
pub fn separation_margin(phi: &PhaseField) -> f64 {
    let k = (phi.n - 1) as f64;
    phi.data.iter().fold(f64::INFINITY, |m, &x| m.min(x.min((1.0 - x) / k)))
}
