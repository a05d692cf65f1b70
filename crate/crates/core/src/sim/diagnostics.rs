use alloc::vec;
use alloc::vec::Vec;

use crate::ch::ChSolver;
use crate::error::Result;
use crate::thermo::{ModelParams, PhaseField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticSample {
    pub t: f64,
    pub sep_margin: f64,
    pub v_norm: f64,
    pub eq_residual: f64,
}

/// Long-time diagnostics of a run, sampled at the output cadence.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub samples: Vec<DiagnosticSample>,
    /// First time the separation margin exceeded the threshold and then never
    /// fell below half of it.
    pub t_star: Option<f64>,
    /// Time at which the equilibrium residual completed its window of
    /// consecutive outputs below `tol_eq`.
    pub t_eq: Option<f64>,
    pub initial_means: Vec<f64>,
    /// Largest relative change of each component mean over one step.
    pub max_step_drift: Vec<f64>,
    /// Relative change of each component mean over the whole run.
    pub cumulative_drift: Vec<f64>,
    /// Largest `|sum_i phi_i - 1|` over accepted steps.
    pub max_simplex_error: f64,
    pub min_phase: f64,
    pub max_phase: f64,
    /// Largest `max |div v|` over accepted steps.
    pub max_divergence: f64,
}

impl Diagnostics {
    pub fn new(phi: &PhaseField) -> Self {
        let n = phi.n;
        Self {
            samples: Vec::new(),
            t_star: None,
            t_eq: None,
            initial_means: phi.means(),
            max_step_drift: vec![0.0; n],
            cumulative_drift: vec![0.0; n],
            max_simplex_error: phi.simplex_error(),
            min_phase: phi.min_value(),
            max_phase: phi.max_value(),
            max_divergence: 0.0,
        }
    }

    pub(crate) fn record_state(&mut self, prev_means: &[f64], phi: &PhaseField, divergence: f64) -> Vec<f64> {
        let means = phi.means();
        for i in 0..phi.n {
            let scale = self.initial_means[i].abs().max(f64::MIN_POSITIVE);
            self.max_step_drift[i] = self.max_step_drift[i].max((means[i] - prev_means[i]).abs() / scale);
            self.cumulative_drift[i] = (means[i] - self.initial_means[i]).abs() / scale;
        }
        self.max_simplex_error = self.max_simplex_error.max(phi.simplex_error());
        self.min_phase = self.min_phase.min(phi.min_value());
        self.max_phase = self.max_phase.max(phi.max_value());
        self.max_divergence = self.max_divergence.max(divergence);
        means
    }
}

/// Online `t*` detector: a candidate time survives until the margin drops
/// below half the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationDetector {
    pub threshold: f64,
    candidate: Option<f64>,
}

impl SeparationDetector {
    pub fn new(threshold: f64) -> Self {
        Self { threshold, candidate: None }
    }

    pub fn observe(&mut self, t: f64, margin: f64) {
        match self.candidate {
            None if margin > self.threshold => self.candidate = Some(t),
            Some(_) if margin < 0.5 * self.threshold => self.candidate = None,
            _ => {}
        }
    }

    pub fn t_star(&self) -> Option<f64> {
        self.candidate
    }
}

/// Fires once `window` consecutive observations are at most `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumDetector {
    pub tol: f64,
    pub window: usize,
    run: usize,
    fired: Option<f64>,
}

impl EquilibriumDetector {
    pub fn new(tol: f64, window: usize) -> Self {
        Self { tol, window, run: 0, fired: None }
    }

    /// Returns true on the observation that completes the window.
    pub fn observe(&mut self, t: f64, residual: f64) -> bool {
        if self.fired.is_some() {
            return false;
        }
        self.run = if residual <= self.tol { self.run + 1 } else { 0 };
        if self.run >= self.window {
            self.fired = Some(t);
            return true;
        }
        false
    }

    pub fn t_eq(&self) -> Option<f64> {
        self.fired
    }
}

/// Equilibrium test on a single state: the relative RMS deviation of the
/// chemical potential from its component means, and whether it is within
/// `tol_eq`.
pub fn detect_equilibrium(phi: &PhaseField, params: &ModelParams, tol_eq: f64) -> Result<(bool, f64)> {
    let r = ChSolver::new(phi.grid, params.clone())?.equilibrium_residual(phi)?;
    Ok((r <= tol_eq, r))
}
