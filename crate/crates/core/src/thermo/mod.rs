//! Simplex geometry, the logarithmic potential, model parameters and the
//! energy functionals.

mod energy;
mod params;
mod phase;
mod potential;

pub use energy::{ch_energy, energy_parts, gradient_energy, kinetic_energy, potential_energy, total_energy, EnergyParts};
pub use params::{interaction_matrix, ModelParams, Mobility, Viscosity, DEFAULT_THETA_C};
pub use phase::{ChemicalPotentialField, PhaseField};
pub use potential::{
    bulk_potential, potential_gradient, project_tangent, project_tangent_in_place, projector_matrix, Entropy, SimplexVector,
    S_FLOOR,
};
