use super::{density_from_phase, flux_jrho, momentum_solve, MomentumConfig, MomentumData, MomentumOperator, MomentumState, VectorHelmholtz, MomentumStepResult};
use crate::ch::{capillary_force_with, transport_with, ChSolver, ChStepConfig, ChStepResult, FaceGradients};
use crate::error::{Error, Result};
use crate::fields::ops::divergence_into;
use crate::fields::{Grid, ScalarField, Strain, VectorField};
use crate::thermo::{energy_parts, EnergyParts, ModelParams, PhaseField};
use alloc::vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledConfig {
    pub ch: ChStepConfig,
    pub momentum: MomentumConfig,
    /// Upper bound on the phase/momentum fixed-point sweeps; `1` gives the
    /// plain lagged-velocity splitting.
    pub max_sweeps: usize,
    /// Relative velocity change at which the sweeps stop.
    pub coupling_tol: f64,
    /// Energy tolerance is `tol_energy * (1 + |E|)`.
    pub tol_energy: f64,
}

impl Default for CoupledConfig {
    fn default() -> Self {
        Self {
            ch: ChStepConfig::default(),
            momentum: MomentumConfig { picard_sweeps: 1, ..MomentumConfig::default() },
            max_sweeps: 30,
            coupling_tol: 1e-8,
            tol_energy: 1e-9,
        }
    }
}

/// Every term of the discrete energy balance of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBalance {
    pub before: EnergyParts,
    pub after: EnergyParts,
    /// `alpha / 2 ||D v||^2` before and after.
    pub reg_before: f64,
    pub reg_after: f64,
    /// `2 h sum nu(phi_k) |D v|^2`.
    pub diss_visc: f64,
    /// `h <M grad w, grad w>`.
    pub diss_ch: f64,
    /// `rho_k |v - v_k|^2 / 2 + alpha ||D(v - v_k)||^2 / 2 + zeta ||grad(phi - phi_k)||^2 / 2`.
    pub numerical: f64,
    /// Capillary work left over from the last coupling sweep, `h <F, v - a>`.
    pub coupling_work: f64,
    /// Old energy minus new energy and all dissipated terms; non-negative in
    /// exact arithmetic once the sweeps have converged.
    pub slack: f64,
    pub tol: f64,
}

impl EnergyBalance {
    pub fn holds(&self) -> bool {
        self.slack >= -self.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledStepResult {
    pub ch: ChStepResult,
    pub momentum: MomentumStepResult,
    pub rho_next: ScalarField,
    pub sweeps: usize,
    /// Relative velocity change in the last sweep.
    pub coupling_change: f64,
    pub balance: EnergyBalance,
    /// L2 norm of `(rho - rho_k)/h + rho_tilde . (grad phi_k) a + div J`.
    pub density_residual: f64,
}

/// Coupled stepper bound to one grid and parameter set.
#[derive(Debug, Clone)]
pub struct CoupledSolver {
    pub ch: ChSolver,
    helmholtz: VectorHelmholtz,
}

impl CoupledSolver {
    pub fn new(grid: Grid, params: ModelParams) -> Result<Self> {
        Ok(Self { ch: ChSolver::new(grid, params)?, helmholtz: VectorHelmholtz::new(grid) })
    }

    pub fn params(&self) -> &ModelParams {
        &self.ch.params
    }

    pub fn grid(&self) -> Grid {
        self.ch.grid()
    }

    /// One step from `(phi_k, state_k)`.
    ///
    /// The phase equation is advected by a velocity `a`, starting from
    /// `v_k`, and the momentum equation is convected by the same `a`; `a` is
    /// then replaced by the new velocity until it stops changing. At the
    /// fixed point the capillary work and the transport term cancel in the
    /// energy balance.
    pub fn step(&self, phi_k: &PhaseField, state_k: &MomentumState, cfg: &CoupledConfig) -> Result<CoupledStepResult> {
        let params = &self.ch.params;
        let g = self.grid();
        let h = cfg.ch.h;
        let grads = FaceGradients::of_components(&g, phi_k.n, &phi_k.data);
        let mut a = state_k.v.clone();
        let mut guess = phi_k.clone();
        let mut sweeps = 0;
        let tol_energy = cfg.tol_energy * (1.0 + libm::fabs(energy_parts(&state_k.rho, &state_k.v, phi_k, params)?.total()));
        loop {
            sweeps += 1;
            let t = transport_with(&g, &grads, &a);
            let ch = self.ch.step_with_transport_from(phi_k, &t, &cfg.ch, &guess)?;
            let rho_next = density_from_phase(&ch.phi_next, params);
            let force = capillary_force_with(&grads, &ch.w_next);
            let jrho = flux_jrho(&ch.w_next, phi_k, params);
            let data = MomentumData { v_k: &state_k.v, rho_k: &state_k.rho, rho_next: &rho_next, phi_k, force: &force, jrho: &jrho };
            let mom = momentum_solve(&self.ch.spectral, &self.helmholtz, params, &data, &a, h, &cfg.momentum)?;
            let dv = mom.v_next.lincomb(1.0, &a, -1.0);
            let scale = mom.v_next.norm().max(a.norm());
            let change = if scale > 0.0 { dv.norm() / scale } else { 0.0 };
            let work = h * force.dot(&dv);
            let converged = cfg.max_sweeps == 1 || (change <= cfg.coupling_tol && libm::fabs(work) <= 1e-2 * tol_energy);
            if converged {
                let op = MomentumOperator::new(params, phi_k, &state_k.rho, &rho_next, &a, &jrho, h);
                let balance = self.balance(phi_k, state_k, &ch, &rho_next, &mom.v_next, &op, work, cfg)?;
                let density_residual = density_residual(&g, params, phi_k, &state_k.rho, &rho_next, &grads, &a, &jrho, h);
                return Ok(CoupledStepResult {
                    ch,
                    momentum: mom,
                    rho_next,
                    sweeps,
                    coupling_change: change,
                    balance,
                    density_residual,
                });
            }
            if sweeps >= cfg.max_sweeps {
                return Err(Error::CouplingFailure { change });
            }
            guess = ch.phi_next;
            a = mom.v_next;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn balance(
        &self,
        phi_k: &PhaseField,
        state_k: &MomentumState,
        ch: &ChStepResult,
        rho_next: &ScalarField,
        v: &VectorField,
        op: &MomentumOperator,
        work: f64,
        cfg: &CoupledConfig,
    ) -> Result<EnergyBalance> {
        let params = &self.ch.params;
        let g = self.grid();
        let h = cfg.ch.h;
        let before = energy_parts(&state_k.rho, &state_k.v, phi_k, params)?;
        let after = energy_parts(rho_next, v, &ch.phi_next, params)?;
        let reg = |x: &VectorField| 0.5 * params.alpha * Strain::of(x).norm_sq(&g);
        let dv = v.lincomb(1.0, &state_k.v, -1.0);
        let dphi = PhaseField::from_flat(
            g,
            phi_k.n,
            ch.phi_next.data.iter().zip(&phi_k.data).map(|(a, b)| a - b).collect(),
        );
        let numerical = crate::thermo::kinetic_energy(&state_k.rho, &dv)
            + reg(&dv)
            + crate::thermo::gradient_energy(&dphi, params.gamma_scale);
        let diss_visc = h * op.viscous_dissipation(v);
        let diss_ch = h * self.ch.mobility_dissipation(phi_k, &ch.w_next);
        let (reg_before, reg_after) = (reg(&state_k.v), reg(v));
        let slack = (before.total() + reg_before) - (after.total() + reg_after + diss_visc + diss_ch + numerical);
        Ok(EnergyBalance {
            before,
            after,
            reg_before,
            reg_after,
            diss_visc,
            diss_ch,
            numerical,
            coupling_work: work,
            slack,
            tol: cfg.tol_energy * (1.0 + libm::fabs(before.total())),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn density_residual(
    g: &Grid,
    params: &ModelParams,
    phi_k: &PhaseField,
    rho_k: &ScalarField,
    rho_next: &ScalarField,
    grads: &FaceGradients,
    a: &VectorField,
    jrho: &VectorField,
    h: f64,
) -> f64 {
    let nc = g.cells();
    let t = transport_with(g, grads, a);
    let mut divj = vec![0.0; nc];
    divergence_into(g, &jrho.u, &jrho.v, &mut divj);
    let mut r = vec![0.0; nc];
    for c in 0..nc {
        let rt: f64 = (0..phi_k.n).map(|i| params.rho_tilde[i] * t[i * nc + c]).sum();
        r[c] = (rho_next.data[c] - rho_k.data[c]) / h + rt + divj[c];
    }
    crate::ch::l2(g, &r)
}

/// One coupled step with default settings and time step `h`.
pub fn coupled_step(phi_k: &PhaseField, state_k: &MomentumState, params: &ModelParams, h: f64) -> Result<CoupledStepResult> {
    let cfg = CoupledConfig { ch: ChStepConfig { h, ..ChStepConfig::default() }, ..CoupledConfig::default() };
    CoupledSolver::new(phi_k.grid, params.clone())?.step(phi_k, state_k, &cfg)
}
