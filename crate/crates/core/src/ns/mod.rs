//! Variable-density momentum update and the coupled step.

mod coupled;
mod operator;
mod precond;

use alloc::vec;
use alloc::vec::Vec;

pub use coupled::{coupled_step, CoupledConfig, CoupledSolver, CoupledStepResult, EnergyBalance};
pub(crate) use operator::MomentumOperator;
pub(crate) use precond::VectorHelmholtz;

use crate::ch::{capillary_force_with, FaceGradients};
use crate::error::{Error, Result};
use crate::fields::ops::{cell_to_u, cell_to_v, gradient_into};
use crate::fields::{ScalarField, Spectral, VectorField};
use crate::linalg::{gmres, GmresConfig};
use crate::thermo::{ChemicalPotentialField, ModelParams, PhaseField};

/// Velocity, density and zero-mean pressure at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub v: VectorField,
    pub rho: ScalarField,
    pub p: ScalarField,
}

impl MomentumState {
    pub fn at_rest(phi: &PhaseField, params: &ModelParams) -> Self {
        let g = phi.grid;
        Self { v: VectorField::zeros(g), rho: density_from_phase(phi, params), p: ScalarField::zeros(g) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumConfig {
    /// Linear solves per step, each re-linearizing convection at the last iterate.
    pub picard_sweeps: usize,
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        Self { picard_sweeps: 2, rel_tol: 1e-12, max_iters: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumStepResult {
    pub v_next: VectorField,
    pub p_next: ScalarField,
    pub linear_iters: usize,
    /// Relative residual of the last projected linear solve.
    pub residual: f64,
}

/// `rho = sum_j rho_tilde_j phi_j` at every cell.
pub fn density_from_phase(phi: &PhaseField, params: &ModelParams) -> ScalarField {
    let g = phi.grid;
    let mut rho = vec![0.0; g.cells()];
    for (i, r) in params.rho_tilde.iter().enumerate() {
        for (o, p) in rho.iter_mut().zip(phi.component(i)) {
            *o += r * p;
        }
    }
    ScalarField::from_vec(g, rho)
}

/// Diffusive density flux `J = -(grad w)^T M(phi_k) rho_tilde` on the faces.
pub fn flux_jrho(w: &ChemicalPotentialField, phi_k: &PhaseField, params: &ModelParams) -> VectorField {
    let g = w.grid;
    let n = w.n;
    let mut mr = vec![0.0; n];
    params.mobility.base.mul_vec(&params.rho_tilde, &mut mr);
    let mut out = VectorField::zeros(g);
    if mr.iter().all(|x| *x == 0.0) {
        return out;
    }
    let mut gu = vec![0.0; g.u_len()];
    let mut gv = vec![0.0; g.v_len()];
    for i in 0..n {
        gradient_into(&g, w.component(i), &mut gu, &mut gv);
        for (o, d) in out.u.iter_mut().zip(&gu) {
            *o -= d * mr[i];
        }
        for (o, d) in out.v.iter_mut().zip(&gv) {
            *o -= d * mr[i];
        }
    }
    if !params.mobility.is_constant() {
        let nc = g.cells();
        let mut buf = vec![0.0; n];
        let s: Vec<f64> = (0..nc)
            .map(|c| {
                phi_k.at_cell(c, &mut buf);
                params.mobility.scale(&buf)
            })
            .collect();
        let mut su = vec![0.0; g.u_len()];
        let mut sv = vec![0.0; g.v_len()];
        cell_to_u(&g, &s, &mut su);
        cell_to_v(&g, &s, &mut sv);
        out.u.iter_mut().zip(&su).for_each(|(o, s)| *o *= s);
        out.v.iter_mut().zip(&sv).for_each(|(o, s)| *o *= s);
    }
    out
}

/// Inputs of one linear momentum solve.
pub(crate) struct MomentumData<'a> {
    pub v_k: &'a VectorField,
    pub rho_k: &'a ScalarField,
    pub rho_next: &'a ScalarField,
    pub phi_k: &'a PhaseField,
    pub force: &'a VectorField,
    pub jrho: &'a VectorField,
}

/// Smallest admissible interpolated density relative to `min rho_tilde`.
const DENSITY_FLOOR: f64 = 0.5;

/// Solves the projected momentum equation with convection linearized at `a`.
pub(crate) fn momentum_solve(
    spectral: &Spectral,
    helmholtz: &VectorHelmholtz,
    params: &ModelParams,
    data: &MomentumData<'_>,
    a: &VectorField,
    h: f64,
    cfg: &MomentumConfig,
) -> Result<MomentumStepResult> {
    let floor = DENSITY_FLOOR * params.rho_min();
    for r in data.rho_k.data.iter().chain(&data.rho_next.data) {
        if !(*r >= floor) {
            return Err(Error::DensityFloorViolation { rho: *r, floor });
        }
    }
    let op = MomentumOperator::new(params, data.phi_k, data.rho_k, data.rho_next, a, data.jrho, h);
    let g = spectral.grid;
    let mut b = op.rhs(data.v_k, data.force);
    // Projection can cancel `b` down to rounding noise, e.g. for a pure
    // gradient force; nothing below that level is meaningful.
    let noise = 1e3 * f64::EPSILON * libm::sqrt(crate::fields::dot(&b, &b));
    spectral.leray_flat(&mut b);
    // The convecting velocity is the latest available estimate of the answer.
    let mut x = a.to_flat();
    spectral.leray_flat(&mut x);
    let (m, c) = op.mean_coefficients();
    let gcfg = GmresConfig { restart: 80, max_iters: cfg.max_iters, rel_tol: cfg.rel_tol, abs_tol: noise };
    let out = gmres(
        |x, y| {
            op.apply(x, y);
            spectral.leray_flat(y);
        },
        |x, y| {
            helmholtz.apply(m, c, x, y);
            spectral.leray_flat(y);
        },
        &b,
        &mut x,
        &gcfg,
    );
    if !out.converged && out.rel_residual > 1e3 * cfg.rel_tol && out.abs_residual > noise {
        return Err(Error::LinearSolveFailure { iters: out.iters, residual: out.rel_residual });
    }
    let v_next = VectorField::from_flat(g, &x);
    // grad p = b - L v away from the walls.
    let mut r = op.rhs(data.v_k, data.force);
    let mut lv = vec![0.0; r.len()];
    op.apply(&x, &mut lv);
    r.iter_mut().zip(&lv).for_each(|(ri, li)| *ri -= li);
    let mut rf = VectorField::from_flat(g, &r);
    rf.zero_boundary_normal();
    let p_next = spectral.poisson_mean_free(&crate::fields::divergence(&rf));
    Ok(MomentumStepResult { v_next, p_next, linear_iters: out.iters, residual: out.rel_residual })
}

/// One momentum step with the capillary force `(grad phi_k)^T w_next` and
/// `cfg.picard_sweeps` convection updates starting from `v_k`.
pub fn momentum_step(
    state_k: &MomentumState,
    rho_next: &ScalarField,
    phi_k: &PhaseField,
    w_next: &ChemicalPotentialField,
    params: &ModelParams,
    h: f64,
    cfg: &MomentumConfig,
) -> Result<MomentumStepResult> {
    let g = phi_k.grid;
    let spectral = Spectral::new(g);
    let helmholtz = VectorHelmholtz::new(g);
    let grads = FaceGradients::of_components(&g, phi_k.n, &phi_k.data);
    let force = capillary_force_with(&grads, w_next);
    let jrho = flux_jrho(w_next, phi_k, params);
    let data = MomentumData { v_k: &state_k.v, rho_k: &state_k.rho, rho_next, phi_k, force: &force, jrho: &jrho };
    let mut a = state_k.v.clone();
    let mut total = 0;
    let mut last = None;
    for _ in 0..cfg.picard_sweeps.max(1) {
        let r = momentum_solve(&spectral, &helmholtz, params, &data, &a, h, cfg)?;
        total += r.linear_iters;
        a = r.v_next.clone();
        last = Some(r);
    }
    let mut r = last.expect("at least one sweep");
    r.linear_iters = total;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::thermo::kinetic_energy;

    fn params3() -> ModelParams {
        let mut p = ModelParams::with_defaults(3);
        p.rho_tilde = vec![1.0, 2.0, 3.0];
        p.viscosity = crate::thermo::Viscosity { per_phase: vec![0.5, 1.0, 2.0], nu_min: 0.5, nu_max: 2.0 };
        p
    }

    fn wavy_phase(g: Grid) -> PhaseField {
        let a = PhaseField::from_components(&[
            ScalarField::from_fn(g, |x, y| 0.3 + 0.1 * libm::cos(3.0 * x) * libm::sin(2.0 * y)),
            ScalarField::from_fn(g, |x, _| 0.3 + 0.1 * libm::sin(5.0 * x)),
            ScalarField::from_fn(g, |x, y| 0.4 - 0.1 * libm::cos(3.0 * x) * libm::sin(2.0 * y) - 0.1 * libm::sin(5.0 * x)),
        ]);
        a
    }

    #[test]
    fn density_is_a_convex_combination() {
        let g = Grid::unit(8).unwrap();
        let p = params3();
        let rho = density_from_phase(&wavy_phase(g), &p);
        assert!(rho.data.iter().all(|r| *r >= 1.0 && *r <= 3.0));
        let mut matched = p.clone();
        matched.rho_tilde = vec![1.7; 3];
        let rho = density_from_phase(&wavy_phase(g), &matched);
        assert!(rho.data.iter().all(|r| (r - 1.7).abs() < 1e-15));
    }

    #[test]
    fn matched_densities_have_no_mass_flux() {
        let g = Grid::unit(8).unwrap();
        let mut p = params3();
        p.rho_tilde = vec![2.0; 3];
        let w = ChemicalPotentialField::from_flat(g, 3, wavy_phase(g).data);
        assert!(flux_jrho(&w, &wavy_phase(g), &p).max_abs() < 1e-14);
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let g = Grid::unit(8).unwrap();
        let p = params3();
        let phi = PhaseField::uniform(g, &[0.2, 0.3, 0.5]);
        let state = MomentumState::at_rest(&phi, &p);
        let w = ChemicalPotentialField::from_flat(g, 3, PhaseField::uniform(g, &[0.1, 0.2, -0.3]).data);
        let r = momentum_step(&state, &state.rho, &phi, &w, &p, 1e-3, &MomentumConfig::default()).unwrap();
        assert_eq!(r.v_next.max_abs(), 0.0);
    }

    #[test]
    fn kinetic_energy_identity_holds() {
        let g = Grid::new(12, 10, 1.0, 0.9).unwrap();
        let mut p = params3();
        p.alpha = 0.1;
        let phi_k = wavy_phase(g);
        let rho_k = density_from_phase(&phi_k, &p);
        let mut shifted = phi_k.clone();
        for c in 0..g.cells() {
            shifted.data[c] += 0.01;
            shifted.data[g.cells() + c] -= 0.01;
        }
        let rho_next = density_from_phase(&shifted, &p);
        let v_k = VectorField::from_stream_function(g, |x, y| libm::sin(3.0 * x) * libm::sin(3.0 * y / 0.9) * 0.1);
        let state = MomentumState { v: v_k.clone(), rho: rho_k.clone(), p: ScalarField::zeros(g) };
        let w = ChemicalPotentialField::from_flat(g, 3, {
            let mut d = phi_k.data.clone();
            crate::ch::project_cells(&mut d, 3, g.cells());
            d
        });
        let h = 1e-2;
        let cfg = MomentumConfig { picard_sweeps: 3, ..Default::default() };
        let r = momentum_step(&state, &rho_next, &phi_k, &w, &p, h, &cfg).unwrap();
        let v = &r.v_next;
        assert!(crate::fields::divergence(v).max_abs() < 1e-10 * v.max_abs().max(1.0) / g.dx);
        assert_eq!(v.boundary_normal_max(), 0.0);
        // Every term of the balance, tested against v itself.
        let grads = FaceGradients::of_components(&g, 3, &phi_k.data);
        let work = h * capillary_force_with(&grads, &w).dot(v);
        let dv = v.lincomb(1.0, &v_k, -1.0);
        let mut rho_u = vec![0.0; g.u_len()];
        let mut rho_v = vec![0.0; g.v_len()];
        cell_to_u(&g, &rho_k.data, &mut rho_u);
        cell_to_v(&g, &rho_k.data, &mut rho_v);
        let jump = 0.5
            * (rho_u.iter().zip(&dv.u).map(|(r, x)| r * x * x).sum::<f64>()
                + rho_v.iter().zip(&dv.v).map(|(r, x)| r * x * x).sum::<f64>())
            * g.cell_area();
        let op = MomentumOperator::new(&p, &phi_k, &rho_k, &rho_next, v, &flux_jrho(&w, &phi_k, &p), h);
        let visc = h * op.viscous_dissipation(v);
        let reg = |x: &VectorField| 0.5 * p.alpha * crate::fields::Strain::of(x).norm_sq(&g);
        let lhs = kinetic_energy(&rho_next, v) + jump + visc + reg(v) + reg(&dv);
        let rhs = kinetic_energy(&rho_k, &v_k) + reg(&v_k) + work;
        assert!((lhs - rhs).abs() < 1e-11 * rhs.abs().max(1e-3), "{lhs} vs {rhs}");
    }
}
