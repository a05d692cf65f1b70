//! The pair of coupling terms between the phase and momentum equations.
//!
//! `transport` is `(grad phi) v` at cell centers and `capillary_force` is
//! `(grad phi)^T w` on the faces. They are built from the same face gradients
//! and averaging operators so that
//! `<transport(phi, v), w>_cells == <capillary_force(phi, w), v>_faces`
//! holds to round-off, which is what cancels the exchange term in the discrete
//! energy balance.

use alloc::vec;
use alloc::vec::Vec;

use crate::fields::ops::{cell_to_u, cell_to_v, gradient_into, u_to_cell_add, v_to_cell_add};
use crate::fields::VectorField;
use crate::thermo::{ChemicalPotentialField, PhaseField};

/// Face gradients of every component, cached for repeated use.
#[derive(Debug, Clone)]
pub(crate) struct FaceGradients {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl FaceGradients {
    pub(crate) fn of_components(grid: &crate::fields::Grid, n: usize, data: &[f64]) -> Self {
        let nc = grid.cells();
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let mut gu = vec![0.0; grid.u_len()];
            let mut gv = vec![0.0; grid.v_len()];
            gradient_into(grid, &data[i * nc..(i + 1) * nc], &mut gu, &mut gv);
            u.push(gu);
            v.push(gv);
        }
        Self { u, v }
    }
}

/// `(grad phi) v`, component-major.
pub fn transport(phi: &PhaseField, vel: &VectorField) -> Vec<f64> {
    let g = phi.grid;
    let grads = FaceGradients::of_components(&g, phi.n, &phi.data);
    transport_with(&g, &grads, vel)
}

pub(crate) fn transport_with(g: &crate::fields::Grid, grads: &FaceGradients, vel: &VectorField) -> Vec<f64> {
    let n = grads.u.len();
    let nc = g.cells();
    let mut out = vec![0.0; n * nc];
    let mut qu = vec![0.0; g.u_len()];
    let mut qv = vec![0.0; g.v_len()];
    for i in 0..n {
        for ((q, d), a) in qu.iter_mut().zip(&grads.u[i]).zip(&vel.u) {
            *q = d * a;
        }
        for ((q, d), a) in qv.iter_mut().zip(&grads.v[i]).zip(&vel.v) {
            *q = d * a;
        }
        let slot = &mut out[i * nc..(i + 1) * nc];
        u_to_cell_add(g, &qu, slot);
        v_to_cell_add(g, &qv, slot);
    }
    out
}

/// `(grad phi)^T w` on the faces.
pub fn capillary_force(phi: &PhaseField, w: &ChemicalPotentialField) -> VectorField {
    let g = phi.grid;
    let grads = FaceGradients::of_components(&g, phi.n, &phi.data);
    capillary_force_with(&grads, w)
}

pub(crate) fn capillary_force_with(grads: &FaceGradients, w: &ChemicalPotentialField) -> VectorField {
    let g = w.grid;
    let mut out = VectorField::zeros(g);
    let mut wu = vec![0.0; g.u_len()];
    let mut wv = vec![0.0; g.v_len()];
    for i in 0..w.n {
        cell_to_u(&g, w.component(i), &mut wu);
        cell_to_v(&g, w.component(i), &mut wv);
        for ((o, d), x) in out.u.iter_mut().zip(&grads.u[i]).zip(&wu) {
            *o += d * x;
        }
        for ((o, d), x) in out.v.iter_mut().zip(&grads.v[i]).zip(&wv) {
            *o += d * x;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn transport_and_capillary_force_are_adjoint() {
        let g = Grid::new(10, 14, 1.0, 1.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 3;
        let phi = PhaseField::from_flat(g, n, (0..n * g.cells()).map(|_| rng.random_range(0.0..1.0)).collect());
        let w = ChemicalPotentialField::from_flat(g, n, (0..n * g.cells()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let mut vel = VectorField::from_parts(
            g,
            (0..g.u_len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..g.v_len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        vel.zero_boundary_normal();
        let t = transport(&phi, &vel);
        let lhs: f64 = t.iter().zip(&w.data).map(|(a, b)| a * b).sum::<f64>() * g.cell_area();
        let rhs = capillary_force(&phi, &w).dot(&vel);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}
