use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::SmallMat;

/// Mobility `M(phi) = s(phi) * base`, with `s(phi) = sum_i f_i phi_i` when phase
/// factors are given and `s = 1` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Mobility {
    pub base: SmallMat,
    pub phase_factors: Option<Vec<f64>>,
}

impl Mobility {
    pub fn constant(base: SmallMat) -> Self {
        Self { base, phase_factors: None }
    }

    /// `m (I - E / N)`: the isotropic choice with zero row sums.
    pub fn isotropic(n: usize, m: f64) -> Self {
        let mut base = SmallMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                base.set(i, j, m * (if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64));
            }
        }
        Self::constant(base)
    }

    pub fn is_constant(&self) -> bool {
        self.phase_factors.is_none()
    }

    /// Scalar factor at one cell.
    #[inline]
    pub fn scale(&self, phi: &[f64]) -> f64 {
        match &self.phase_factors {
            None => 1.0,
            Some(f) => f.iter().zip(phi).map(|(a, b)| a * b).sum(),
        }
    }
}

/// Phase-dependent viscosity `nu(phi) = clamp(sum_i nu_i phi_i, nu_min, nu_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Viscosity {
    pub per_phase: Vec<f64>,
    pub nu_min: f64,
    pub nu_max: f64,
}

impl Viscosity {
    pub fn constant(n: usize, nu: f64) -> Self {
        Self { per_phase: vec![nu; n], nu_min: nu, nu_max: nu }
    }

    #[inline]
    pub fn eval(&self, phi: &[f64]) -> f64 {
        let s: f64 = self.per_phase.iter().zip(phi).map(|(a, b)| a * b).sum();
        s.clamp(self.nu_min, self.nu_max)
    }
}

/// Physical and model constants of the coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n_phases: usize,
    /// Temperature in the entropy term `theta s ln s`.
    pub theta: f64,
    /// Symmetric interaction matrix; the potential is `sum psi(phi_i) - phi^T A phi / 2`.
    pub a: SmallMat,
    pub mobility: Mobility,
    /// Specific densities of the pure phases.
    pub rho_tilde: Vec<f64>,
    pub viscosity: Viscosity,
    /// Gradient-energy coefficient; the interfacial operator is `zeta * Identity`.
    pub gamma_scale: f64,
    /// Weight of the velocity regularization term, in `[0, 1]`.
    pub alpha: f64,
}

/// Default interaction strength for [`ModelParams::with_defaults`].
pub const DEFAULT_THETA_C: f64 = 4.0;

impl ModelParams {
    /// `theta = 1`, `A = theta_c (I - E)`, isotropic unit mobility, matched unit
    /// densities, unit viscosity, `zeta = 4e-3`, `alpha = 0`.
    pub fn with_defaults(n: usize) -> Self {
        Self {
            n_phases: n,
            theta: 1.0,
            a: interaction_matrix(n, DEFAULT_THETA_C),
            mobility: Mobility::isotropic(n, 1.0),
            rho_tilde: vec![1.0; n],
            viscosity: Viscosity::constant(n, 1.0),
            gamma_scale: 4e-3,
            alpha: 0.0,
        }
    }

    /// Checks every structural assumption and returns the coercivity constant
    /// `C0 = min { xi^T M xi : xi in T Sigma, |xi| = 1 }` of the base mobility.
    pub fn validate(&self) -> Result<f64> {
        let n = self.n_phases;
        let bad = |m: alloc::string::String| Err(Error::InvalidParams(m));
        if n < 2 {
            return bad(format!("need at least two phases, got {n}"));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad(format!("theta must be positive, got {}", self.theta));
        }
        if self.a.n != n || !self.a.is_symmetric(1e-12 * (1.0 + max_entry(&self.a))) {
            return bad("interaction matrix A must be symmetric N x N".into());
        }
        let m = &self.mobility.base;
        let scale = 1.0 + max_entry(m);
        if m.n != n || !m.is_symmetric(1e-12 * scale) {
            return bad("mobility must be symmetric N x N".into());
        }
        for i in 0..n {
            let row: f64 = (0..n).map(|j| m.get(i, j)).sum();
            if row.abs() > 1e-12 * scale {
                return bad(format!("mobility row {i} sums to {row:e}, expected 0"));
            }
        }
        let ev = m.symmetric_eigenvalues();
        if ev[0] < -1e-12 * scale {
            return bad(format!("mobility is not positive semidefinite (eigenvalue {:e})", ev[0]));
        }
        // M e = 0, so the smallest eigenvalue belongs to e; the rest live on T Sigma.
        let c0 = ev[1];
        if c0 <= 1e-12 * scale {
            return bad(format!("mobility is degenerate on the tangent space (C0 = {c0:e})"));
        }
        if let Some(f) = &self.mobility.phase_factors {
            if f.len() != n || f.iter().any(|x| !(*x > 0.0)) {
                return bad("mobility phase factors must be N positive numbers".into());
            }
        }
        if self.rho_tilde.len() != n || self.rho_tilde.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("rho_tilde must be N positive densities".into());
        }
        let nu = &self.viscosity;
        if nu.per_phase.len() != n || !(nu.nu_min > 0.0 && nu.nu_min <= nu.nu_max && nu.nu_max.is_finite()) {
            return bad(format!("viscosity needs N values and 0 < nu_min <= nu_max (got {} .. {})", nu.nu_min, nu.nu_max));
        }
        if !(self.gamma_scale > 0.0 && self.gamma_scale.is_finite()) {
            return bad(format!("gamma_scale must be positive, got {}", self.gamma_scale));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        Ok(c0)
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_tilde.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_tilde.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `theta_c (I - E)`, with `E` the all-ones matrix. Positive definite on the
/// tangent space, so `-phi^T A phi / 2` is the concave part of the potential.
pub fn interaction_matrix(n: usize, theta_c: f64) -> SmallMat {
    let mut a = SmallMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, theta_c * (if i == j { 1.0 } else { 0.0 } - 1.0));
        }
    }
    a
}

fn max_entry(m: &SmallMat) -> f64 {
    m.a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for n in 2..6 {
            let p = ModelParams::with_defaults(n);
            let c0 = p.validate().unwrap();
            assert!((c0 - 1.0).abs() < 1e-12, "isotropic mobility has C0 = m");
        }
    }

    #[test]
    fn rejects_broken_mobility() {
        let mut p = ModelParams::with_defaults(3);
        p.mobility.base.set(0, 0, 2.0);
        assert!(p.validate().is_err());
        // Rank-one mobility acting on a single tangent direction is degenerate.
        let mut p = ModelParams::with_defaults(3);
        let mut m = SmallMat::zeros(3);
        for (i, j, v) in [(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)] {
            m.set(i, j, v);
        }
        p.mobility = Mobility::constant(m);
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn rejects_out_of_range_scalars() {
        let mut p = ModelParams::with_defaults(2);
        p.alpha = 1.5;
        assert!(p.validate().is_err());
        let mut p = ModelParams::with_defaults(2);
        p.rho_tilde = vec![1.0, 0.0];
        assert!(p.validate().is_err());
        let mut p = ModelParams::with_defaults(2);
        p.viscosity.nu_min = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn viscosity_is_clamped() {
        let nu = Viscosity { per_phase: vec![0.1, 5.0], nu_min: 0.5, nu_max: 2.0 };
        assert_eq!(nu.eval(&[1.0, 0.0]), 0.5);
        assert_eq!(nu.eval(&[0.0, 1.0]), 2.0);
        assert!((nu.eval(&[0.7, 0.3]) - 1.57).abs() < 1e-12);
    }
}
