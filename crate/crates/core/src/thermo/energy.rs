use alloc::vec;

use super::params::ModelParams;
use super::phase::PhaseField;
use super::potential::bulk_potential;
use crate::error::Result;
use crate::fields::ops::{cell_to_u, cell_to_v, gradient_into};
use crate::fields::{dot, ScalarField, VectorField};

/// The three parts of the total energy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub gradient: f64,
    pub potential: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.gradient + self.potential
    }
}

/// `zeta / 2 * sum_i ||grad phi_i||^2`.
pub fn gradient_energy(phi: &PhaseField, zeta: f64) -> f64 {
    let g = phi.grid;
    let mut u = vec![0.0; g.u_len()];
    let mut v = vec![0.0; g.v_len()];
    let mut s = 0.0;
    for i in 0..phi.n {
        gradient_into(&g, phi.component(i), &mut u, &mut v);
        s += dot(&u, &u) + dot(&v, &v);
    }
    0.5 * zeta * s * g.cell_area()
}

/// `int Psi(phi)` by the midpoint rule.
pub fn potential_energy(phi: &PhaseField, params: &ModelParams) -> Result<f64> {
    let g = phi.grid;
    let mut buf = vec![0.0; phi.n];
    let mut s = 0.0;
    for c in 0..g.cells() {
        phi.at_cell(c, &mut buf);
        s += bulk_potential(&buf, params)?;
    }
    Ok(s * g.cell_area())
}

/// Free energy `int Psi(phi) + zeta / 2 int |grad phi|^2`.
pub fn ch_energy(phi: &PhaseField, params: &ModelParams) -> Result<f64> {
    Ok(potential_energy(phi, params)? + gradient_energy(phi, params.gamma_scale))
}

/// `1/2 int rho |v|^2`, with the density averaged onto the faces.
pub fn kinetic_energy(rho: &ScalarField, v: &VectorField) -> f64 {
    let g = rho.grid;
    let mut ru = vec![0.0; g.u_len()];
    let mut rv = vec![0.0; g.v_len()];
    cell_to_u(&g, &rho.data, &mut ru);
    cell_to_v(&g, &rho.data, &mut rv);
    let su: f64 = ru.iter().zip(&v.u).map(|(r, x)| r * x * x).sum();
    let sv: f64 = rv.iter().zip(&v.v).map(|(r, x)| r * x * x).sum();
    0.5 * (su + sv) * g.cell_area()
}

pub fn energy_parts(rho: &ScalarField, v: &VectorField, phi: &PhaseField, params: &ModelParams) -> Result<EnergyParts> {
    Ok(EnergyParts {
        kinetic: kinetic_energy(rho, v),
        gradient: gradient_energy(phi, params.gamma_scale),
        potential: potential_energy(phi, params)?,
    })
}

pub fn total_energy(rho: &ScalarField, v: &VectorField, phi: &PhaseField, params: &ModelParams) -> Result<f64> {
    Ok(energy_parts(rho, v, phi, params)?.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn uniform_state_has_only_bulk_energy() {
        let g = Grid::new(8, 6, 2.0, 1.5).unwrap();
        let p = ModelParams::with_defaults(3);
        let m = [0.2, 0.3, 0.5];
        let phi = PhaseField::uniform(g, &m);
        let e = ch_energy(&phi, &p).unwrap();
        let want = g.area() * bulk_potential(&m, &p).unwrap();
        assert!((e - want).abs() < 1e-13 * want.abs());
        assert_eq!(gradient_energy(&phi, 1.0), 0.0);
        let rho = ScalarField::constant(g, 1.0);
        assert_eq!(kinetic_energy(&rho, &VectorField::zeros(g)), 0.0);
    }
}
