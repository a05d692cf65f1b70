use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::thermo::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 64, ny: 64, lx: 1.0, ly: 1.0 }
    }
}

/// Named initial phase distributions. An empty `mean` means the barycentre.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Uniform { mean: Vec<f64> },
    /// Seeded uniform noise of the given amplitude in the tangent space
    /// around `mean`, clipped and renormalized.
    RandomPerturbation { mean: Vec<f64>, seed: u64, amplitude: f64 },
    /// `count` vertical bands of equal width cycling through the phases,
    /// joined by `tanh` profiles of half-width `width`.
    Stripes { count: usize, width: f64 },
    /// Three discs of the non-background phases in phase 0.
    ThreeBubble { radius: f64, width: f64 },
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::RandomPerturbation { .. } => "random-perturbation",
            Self::Stripes { .. } => "stripes",
            Self::ThreeBubble { .. } => "three-bubble",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityInit {
    Zero,
    /// Single cell vortex with stream function `a sin^2(pi x/lx) sin^2(pi y/ly)`.
    Vortex { amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Coupled,
    /// Phase equation alone, advected by the initial velocity held fixed.
    ConvectiveCh,
    Stationary,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Coupled => "coupled",
            Self::ConvectiveCh => "convective-ch",
            Self::Stationary => "stationary",
        }
    }
}

impl core::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(Self::Coupled),
            "convective-ch" => Ok(Self::ConvectiveCh),
            "stationary" => Ok(Self::Stationary),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub newton_tol: f64,
    /// Relative energy tolerance; the bound is `tol_energy * (1 + |E|)`.
    pub tol_energy: f64,
    /// Bound on `max |div v|`.
    pub tol_div: f64,
    /// Threshold of the equilibrium detector.
    pub tol_eq: f64,
    pub coupling_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { newton_tol: 1e-10, tol_energy: 1e-9, tol_div: 1e-8, tol_eq: 1e-6, coupling_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputCadence {
    /// Accepted steps between diagnostic samples.
    pub output_every: usize,
    /// Accepted steps between snapshots; 0 disables intermediate snapshots.
    pub snapshot_every: usize,
}

impl Default for OutputCadence {
    fn default() -> Self {
        Self { output_every: 1, snapshot_every: 0 }
    }
}

/// Forcing `f_i = c_i + a_i cos(kx pi x / lx) cos(ky pi y / ly)` for the
/// stationary mode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Forcing {
    pub constant: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub kx: usize,
    pub ky: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StationarySpec {
    pub forcing: Forcing,
    /// Fix the component means to those of the initial condition.
    pub mean_from_initial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub initial: InitialCondition,
    pub velocity: VelocityInit,
    pub mode: Mode,
    pub h: f64,
    pub t_end: f64,
    /// Smallest step the halving fallback may reach.
    pub h_min: f64,
    /// Upper bound on accepted steps.
    pub max_steps: Option<usize>,
    pub tolerances: Tolerances,
    pub output: OutputCadence,
    pub max_sweeps: usize,
    /// Stop as soon as the equilibrium detector fires.
    pub stop_at_equilibrium: bool,
    /// Separation threshold for `t*`.
    pub separation_threshold: f64,
    /// Consecutive outputs below `tol_eq` needed for `t_eq`.
    pub equilibrium_window: usize,
    pub stationary: StationarySpec,
}

impl SimConfig {
    /// A coupled run on the unit square with default parameters for `n` phases.
    pub fn new(n: usize) -> Self {
        Self {
            grid: GridSpec::default(),
            params: ModelParams::with_defaults(n),
            initial: InitialCondition::RandomPerturbation { mean: Vec::new(), seed: 0, amplitude: 0.05 },
            velocity: VelocityInit::Zero,
            mode: Mode::Coupled,
            h: 1e-3,
            t_end: 0.1,
            h_min: 1e-3 / 64.0,
            max_steps: None,
            tolerances: Tolerances::default(),
            output: OutputCadence::default(),
            max_sweeps: 30,
            stop_at_equilibrium: false,
            separation_threshold: 1e-3,
            equilibrium_window: 20,
            stationary: StationarySpec::default(),
        }
    }

    /// Means requested by the initial condition, with the barycentre filled in.
    pub fn initial_mean(&self) -> Option<Vec<f64>> {
        let n = self.params.n_phases;
        match &self.initial {
            InitialCondition::Uniform { mean } | InitialCondition::RandomPerturbation { mean, .. } => {
                Some(if mean.is_empty() { alloc::vec![1.0 / n as f64; n] } else { mean.clone() })
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<Grid> {
        let bad = |m: String| Err(Error::Config(m));
        let grid = self.grid.build()?;
        self.params.validate()?;
        let n = self.params.n_phases;
        let t = &self.tolerances;
        for (name, v) in [
            ("newton_tol", t.newton_tol),
            ("tol_energy", t.tol_energy),
            ("tol_div", t.tol_div),
            ("tol_eq", t.tol_eq),
            ("coupling_tol", t.coupling_tol),
            ("separation_threshold", self.separation_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h) {
            return bad(format!("h_min must lie in (0, h], got {}", self.h_min));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.output.output_every == 0 {
            return bad("output_every must be at least 1".into());
        }
        if self.max_sweeps == 0 || self.equilibrium_window == 0 {
            return bad("max_sweeps and equilibrium_window must be at least 1".into());
        }
        if let Some(m) = self.initial_mean() {
            let sum: f64 = m.iter().sum();
            if m.len() != n || m.iter().any(|x| !(*x > 0.0 && *x < 1.0)) || (sum - 1.0).abs() > 1e-12 {
                return bad(format!("initial mean must be {n} values in (0, 1) summing to 1, got {m:?}"));
            }
        }
        match &self.initial {
            InitialCondition::RandomPerturbation { amplitude, .. } if !(*amplitude >= 0.0 && *amplitude < 1.0) => {
                return bad(format!("perturbation amplitude must lie in [0, 1), got {amplitude}"));
            }
            InitialCondition::Stripes { count, width } if *count < 2 || !(*width > 0.0) => {
                return bad("stripes need count >= 2 and a positive width".into());
            }
            InitialCondition::ThreeBubble { radius, width } if !(*radius > 0.0 && *radius < 0.25 && *width > 0.0) => {
                return bad("three-bubble needs 0 < radius < 0.25 and a positive width".into());
            }
            _ => {}
        }
        if let VelocityInit::Vortex { amplitude } = self.velocity {
            if !amplitude.is_finite() {
                return bad("vortex amplitude must be finite".into());
            }
        }
        if self.mode == Mode::Stationary {
            let f = &self.stationary.forcing;
            if (!f.constant.is_empty() && f.constant.len() != n) || (!f.amplitude.is_empty() && f.amplitude.len() != n) {
                return bad(format!("forcing vectors must have {n} entries"));
            }
        }
        Ok(grid)
    }
}
