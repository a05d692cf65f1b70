use alloc::vec;
use alloc::vec::Vec;

use crate::fields::{Grid, ScalarField};

macro_rules! component_field {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            pub grid: Grid,
            pub n: usize,
            /// Component-major: component `i` occupies `data[i * cells .. (i + 1) * cells]`.
            pub data: Vec<f64>,
        }

        impl $name {
            pub fn zeros(grid: Grid, n: usize) -> Self {
                Self { grid, n, data: vec![0.0; n * grid.cells()] }
            }

            pub fn from_flat(grid: Grid, n: usize, data: Vec<f64>) -> Self {
                assert_eq!(data.len(), n * grid.cells(), "component field length mismatch");
                Self { grid, n, data }
            }

            pub fn from_components(comps: &[ScalarField]) -> Self {
                let grid = comps[0].grid;
                let mut data = Vec::with_capacity(comps.len() * grid.cells());
                for c in comps {
                    data.extend_from_slice(&c.data);
                }
                Self { grid, n: comps.len(), data }
            }

            #[inline]
            pub fn component(&self, i: usize) -> &[f64] {
                let nc = self.grid.cells();
                &self.data[i * nc..(i + 1) * nc]
            }

            #[inline]
            pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
                let nc = self.grid.cells();
                &mut self.data[i * nc..(i + 1) * nc]
            }

            pub fn scalar(&self, i: usize) -> ScalarField {
                ScalarField::from_vec(self.grid, self.component(i).to_vec())
            }

            /// Values of all components at cell `c`.
            pub fn at_cell(&self, c: usize, out: &mut [f64]) {
                let nc = self.grid.cells();
                for (i, o) in out.iter_mut().enumerate().take(self.n) {
                    *o = self.data[i * nc + c];
                }
            }

            pub fn means(&self) -> Vec<f64> {
                (0..self.n).map(|i| self.component(i).iter().sum::<f64>() / self.grid.cells() as f64).collect()
            }

            /// Largest deviation of the pointwise component sum from `target`.
            pub fn sum_error(&self, target: f64) -> f64 {
                let nc = self.grid.cells();
                let mut worst: f64 = 0.0;
                for c in 0..nc {
                    let s: f64 = (0..self.n).map(|i| self.data[i * nc + c]).sum();
                    worst = worst.max((s - target).abs());
                }
                worst
            }

            pub fn is_finite(&self) -> bool {
                self.data.iter().all(|x| x.is_finite())
            }

            pub fn max_abs(&self) -> f64 {
                crate::fields::max_abs(&self.data)
            }

            /// Discrete L2 norm over all components.
            pub fn norm(&self) -> f64 {
                libm::sqrt(crate::fields::dot(&self.data, &self.data) * self.grid.cell_area())
            }
        }
    };
}

component_field!(
    /// `N` volume fractions per cell, constrained to the Gibbs simplex.
    PhaseField
);

component_field!(
    /// `N` chemical potentials per cell, tangent (sum zero) after projection.
    ChemicalPotentialField
);

impl PhaseField {
    pub fn uniform(grid: Grid, m: &[f64]) -> Self {
        let nc = grid.cells();
        let mut data = Vec::with_capacity(m.len() * nc);
        for &mi in m {
            data.extend(core::iter::repeat(mi).take(nc));
        }
        Self { grid, n: m.len(), data }
    }

    pub fn simplex_error(&self) -> f64 {
        self.sum_error(1.0)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every component strictly inside `(0, 1)`.
    pub fn is_interior(&self) -> bool {
        self.data.iter().all(|x| *x > 0.0 && *x < 1.0)
    }
}

impl ChemicalPotentialField {
    /// Largest pointwise `|sum_i w_i|`.
    pub fn tangent_error(&self) -> f64 {
        self.sum_error(0.0)
    }
}
