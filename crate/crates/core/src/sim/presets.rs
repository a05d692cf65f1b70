use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Forcing, InitialCondition, VelocityInit};
use crate::ch::{renormalize, EPS0};
use crate::fields::{Grid, VectorField};
use crate::thermo::{project_tangent_in_place, ChemicalPotentialField, PhaseField};

/// Disc centres of the three-bubble preset, as fractions of the domain.
const BUBBLES: [(f64, f64); 3] = [(0.3, 0.3), (0.7, 0.35), (0.5, 0.72)];

/// Builds the initial phase field; every preset is clipped to `[EPS0, 1 - EPS0]`
/// and rescaled onto the simplex.
pub fn initial_phase(grid: Grid, n: usize, ic: &InitialCondition) -> PhaseField {
    let nc = grid.cells();
    let barycentre = |m: &Vec<f64>| if m.is_empty() { vec![1.0 / n as f64; n] } else { m.clone() };
    let mut data = vec![0.0; n * nc];
    match ic {
        InitialCondition::Uniform { mean } => {
            // Already interior; clipping would only move it.
            return PhaseField::uniform(grid, &barycentre(mean));
        }
        InitialCondition::RandomPerturbation { mean, seed, amplitude } => {
            let m = barycentre(mean);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut q = vec![0.0; n];
            for c in 0..nc {
                for x in q.iter_mut() {
                    *x = if *amplitude > 0.0 { rng.random_range(-amplitude..*amplitude) } else { 0.0 };
                }
                project_tangent_in_place(&mut q);
                for i in 0..n {
                    data[i * nc + c] = m[i] + q[i];
                }
            }
        }
        InitialCondition::Stripes { count, width } => {
            let band = grid.lx / *count as f64;
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let (x, _) = grid.center(i, j);
                    let c = grid.idx(i, j);
                    for b in 0..*count {
                        let lo = if b == 0 { 1.0 } else { libm::tanh((x - b as f64 * band) / width) };
                        let hi = if b + 1 == *count { -1.0 } else { libm::tanh((x - (b + 1) as f64 * band) / width) };
                        data[(b % n) * nc + c] += 0.5 * (lo - hi);
                    }
                }
            }
        }
        InitialCondition::ThreeBubble { radius, width } => {
            let r = radius * grid.lx.min(grid.ly);
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let (x, y) = grid.center(i, j);
                    let c = grid.idx(i, j);
                    let mut rest = 1.0;
                    for (k, (fx, fy)) in BUBBLES.iter().enumerate() {
                        let d = libm::hypot(x - fx * grid.lx, y - fy * grid.ly);
                        let s = 0.5 * (1.0 - libm::tanh((d - r) / width));
                        data[(1 + k % (n - 1)) * nc + c] += s;
                        rest -= s;
                    }
                    data[c] += rest;
                }
            }
        }
    }
    renormalize(&mut data, n, nc, EPS0);
    PhaseField::from_flat(grid, n, data)
}

pub fn initial_velocity(grid: Grid, v: &VelocityInit) -> VectorField {
    match *v {
        VelocityInit::Zero => VectorField::zeros(grid),
        VelocityInit::Vortex { amplitude } => {
            let mut v = VectorField::from_stream_function(grid, |x, y| {
                let s = libm::sin(PI * x / grid.lx) * libm::sin(PI * y / grid.ly);
                amplitude * s * s
            });
            // sin(pi) is not exactly zero.
            v.zero_boundary_normal();
            v
        }
    }
}

pub fn forcing_field(grid: Grid, n: usize, f: &Forcing) -> ChemicalPotentialField {
    let nc = grid.cells();
    let mut data = vec![0.0; n * nc];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = grid.center(i, j);
            let mode = libm::cos(f.kx as f64 * PI * x / grid.lx) * libm::cos(f.ky as f64 * PI * y / grid.ly);
            for k in 0..n {
                let c0 = f.constant.get(k).copied().unwrap_or(0.0);
                let a = f.amplitude.get(k).copied().unwrap_or(0.0);
                data[k * nc + grid.idx(i, j)] = c0 + a * mode;
            }
        }
    }
    ChemicalPotentialField::from_flat(grid, n, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn presets() -> [InitialCondition; 4] {
        [
            InitialCondition::Uniform { mean: vec![] },
            InitialCondition::RandomPerturbation { mean: vec![], seed: 7, amplitude: 0.05 },
            InitialCondition::Stripes { count: 4, width: 0.02 },
            InitialCondition::ThreeBubble { radius: 0.15, width: 0.02 },
        ]
    }

    #[test]
    fn presets_are_interior_and_on_simplex() {
        let g = Grid::unit(24).unwrap();
        for n in [2, 3, 4] {
            for ic in presets() {
                let phi = initial_phase(g, n, &ic);
                assert!(phi.simplex_error() < 1e-14, "{} N={n}", ic.name());
                assert!(phi.min_value() >= EPS0 * 0.99 && phi.is_interior(), "{}", ic.name());
            }
        }
    }

    #[test]
    fn stripes_alternate_phases() {
        let g = Grid::unit(16).unwrap();
        let phi = initial_phase(g, 2, &InitialCondition::Stripes { count: 4, width: 0.01 });
        let at = |i: usize| phi.component(0)[g.idx(i, 5)];
        assert!(at(1) > 0.99 && at(5) < 0.01 && at(9) > 0.99 && at(14) < 0.01);
    }

    #[test]
    fn random_perturbation_is_seeded() {
        let g = Grid::unit(8).unwrap();
        let ic = |seed| InitialCondition::RandomPerturbation { mean: vec![0.2, 0.3, 0.5], seed, amplitude: 0.05 };
        assert_eq!(initial_phase(g, 3, &ic(3)), initial_phase(g, 3, &ic(3)));
        assert_ne!(initial_phase(g, 3, &ic(3)), initial_phase(g, 3, &ic(4)));
        let m = initial_phase(g, 3, &ic(3)).means();
        assert!((m[0] - 0.2).abs() < 0.02 && (m[2] - 0.5).abs() < 0.02);
    }

    #[test]
    fn vortex_is_tangential_at_walls() {
        let g = Grid::unit(16).unwrap();
        let v = initial_velocity(g, &VelocityInit::Vortex { amplitude: 0.1 });
        assert!(v.boundary_normal_max() == 0.0 && v.norm() > 0.0);
    }
}
