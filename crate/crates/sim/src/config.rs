//! TOML run configuration. Every key is optional; omitted keys take the
//! defaults of [`SimConfig::new`] for the given number of phases.

use std::path::Path;

use nsch_core::linalg::SmallMat;
use nsch_core::sim::{InitialCondition, Mode, SimConfig, VelocityInit};
use nsch_core::thermo::{interaction_matrix, ModelParams, Mobility, Viscosity, DEFAULT_THETA_C};
use serde::Deserialize;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<String>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub velocity: VelocitySection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub stationary: StationarySection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub lx: Option<f64>,
    pub ly: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_phases: Option<usize>,
    pub theta: Option<f64>,
    /// Builds `A = theta_c (I - E)` unless `interaction` is given.
    pub theta_c: Option<f64>,
    pub interaction: Option<Vec<Vec<f64>>>,
    /// Isotropic mobility `m (I - E/N)` unless `mobility_matrix` is given.
    pub mobility: Option<f64>,
    pub mobility_matrix: Option<Vec<Vec<f64>>>,
    pub mobility_phase_factors: Option<Vec<f64>>,
    pub rho_tilde: Option<Vec<f64>>,
    pub viscosity: Option<Vec<f64>>,
    pub nu_min: Option<f64>,
    pub nu_max: Option<f64>,
    pub zeta: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub preset: Option<String>,
    pub mean: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub amplitude: Option<f64>,
    pub count: Option<usize>,
    pub width: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocitySection {
    pub preset: Option<String>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub h: Option<f64>,
    pub t_end: Option<f64>,
    pub h_min: Option<f64>,
    pub max_steps: Option<usize>,
    pub max_sweeps: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub newton_tol: Option<f64>,
    pub tol_energy: Option<f64>,
    pub tol_div: Option<f64>,
    pub tol_eq: Option<f64>,
    pub coupling_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub output_every: Option<usize>,
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub stop_at_equilibrium: Option<bool>,
    pub separation_threshold: Option<f64>,
    pub equilibrium_window: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySection {
    pub forcing_constant: Option<Vec<f64>>,
    pub forcing_amplitude: Option<Vec<f64>>,
    pub kx: Option<usize>,
    pub ky: Option<usize>,
    pub mean_from_initial: Option<bool>,
}

fn matrix(rows: &[Vec<f64>], n: usize, what: &str) -> std::result::Result<SmallMat, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{what} must be a {n} x {n} array"));
    }
    let mut m = SmallMat::zeros(n);
    for (i, r) in rows.iter().enumerate() {
        for (j, x) in r.iter().enumerate() {
            m.set(i, j, *x);
        }
    }
    Ok(m)
}

impl ConfigFile {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Builds and validates the run configuration.
    pub fn to_sim_config(&self) -> std::result::Result<SimConfig, String> {
        let m = &self.model;
        let n = m.n_phases.unwrap_or(3);
        if n < 2 {
            return Err(format!("model.n_phases must be at least 2, got {n}"));
        }
        let mut c = SimConfig::new(n);
        if let Some(mode) = &self.mode {
            c.mode = mode.parse::<Mode>().map_err(|e| e.to_string())?;
        }

        let g = &self.grid;
        c.grid.nx = g.nx.unwrap_or(c.grid.nx);
        c.grid.ny = g.ny.unwrap_or(c.grid.ny);
        c.grid.lx = g.lx.unwrap_or(c.grid.lx);
        c.grid.ly = g.ly.unwrap_or(c.grid.ly);

        let mut p = ModelParams::with_defaults(n);
        p.theta = m.theta.unwrap_or(p.theta);
        p.a = match &m.interaction {
            Some(rows) => matrix(rows, n, "model.interaction")?,
            None => interaction_matrix(n, m.theta_c.unwrap_or(DEFAULT_THETA_C)),
        };
        p.mobility = match &m.mobility_matrix {
            Some(rows) => Mobility::constant(matrix(rows, n, "model.mobility_matrix")?),
            None => Mobility::isotropic(n, m.mobility.unwrap_or(1.0)),
        };
        p.mobility.phase_factors = m.mobility_phase_factors.clone();
        if let Some(r) = &m.rho_tilde {
            p.rho_tilde = r.clone();
        }
        if let Some(nu) = &m.viscosity {
            let lo = nu.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = nu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            p.viscosity = Viscosity { per_phase: nu.clone(), nu_min: lo, nu_max: hi };
        }
        p.viscosity.nu_min = m.nu_min.unwrap_or(p.viscosity.nu_min);
        p.viscosity.nu_max = m.nu_max.unwrap_or(p.viscosity.nu_max);
        p.gamma_scale = m.zeta.unwrap_or(p.gamma_scale);
        p.alpha = m.alpha.unwrap_or(p.alpha);
        c.params = p;

        let i = &self.initial;
        let mean = i.mean.clone().unwrap_or_default();
        c.initial = match i.preset.as_deref().unwrap_or("random-perturbation") {
            "uniform" => InitialCondition::Uniform { mean },
            "random-perturbation" => InitialCondition::RandomPerturbation {
                mean,
                seed: i.seed.unwrap_or(0),
                amplitude: i.amplitude.unwrap_or(0.05),
            },
            "stripes" => InitialCondition::Stripes { count: i.count.unwrap_or(4), width: i.width.unwrap_or(0.02) },
            "three-bubble" => InitialCondition::ThreeBubble { radius: i.radius.unwrap_or(0.15), width: i.width.unwrap_or(0.02) },
            other => return Err(format!("unknown initial preset {other:?}")),
        };

        c.velocity = match self.velocity.preset.as_deref().unwrap_or("zero") {
            "zero" => VelocityInit::Zero,
            "vortex" => VelocityInit::Vortex { amplitude: self.velocity.amplitude.unwrap_or(0.05) },
            other => return Err(format!("unknown velocity preset {other:?}")),
        };

        let t = &self.time;
        c.h = t.h.unwrap_or(c.h);
        c.t_end = t.t_end.unwrap_or(c.t_end);
        c.h_min = t.h_min.unwrap_or(c.h / 64.0);
        c.max_steps = t.max_steps;
        c.max_sweeps = t.max_sweeps.unwrap_or(c.max_sweeps);

        let tol = &self.tolerances;
        let d = &mut c.tolerances;
        d.newton_tol = tol.newton_tol.unwrap_or(d.newton_tol);
        d.tol_energy = tol.tol_energy.unwrap_or(d.tol_energy);
        d.tol_div = tol.tol_div.unwrap_or(d.tol_div);
        d.tol_eq = tol.tol_eq.unwrap_or(d.tol_eq);
        d.coupling_tol = tol.coupling_tol.unwrap_or(d.coupling_tol);

        c.output.output_every = self.output.output_every.unwrap_or(c.output.output_every);
        c.output.snapshot_every = self.output.snapshot_every.unwrap_or(c.output.snapshot_every);

        let dg = &self.diagnostics;
        c.stop_at_equilibrium = dg.stop_at_equilibrium.unwrap_or(c.stop_at_equilibrium);
        c.separation_threshold = dg.separation_threshold.unwrap_or(c.separation_threshold);
        c.equilibrium_window = dg.equilibrium_window.unwrap_or(c.equilibrium_window);

        let s = &self.stationary;
        c.stationary.forcing.constant = s.forcing_constant.clone().unwrap_or_default();
        c.stationary.forcing.amplitude = s.forcing_amplitude.clone().unwrap_or_default();
        c.stationary.forcing.kx = s.kx.unwrap_or(0);
        c.stationary.forcing.ky = s.ky.unwrap_or(0);
        c.stationary.mean_from_initial = s.mean_from_initial.unwrap_or(false);

        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

/// Reads, parses and validates a configuration file.
pub fn load(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    ConfigFile::parse(&text).and_then(|f| f.to_sim_config()).map_err(|m| SimError::parse(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ConfigFile::parse("").unwrap().to_sim_config().unwrap();
        assert_eq!(c, SimConfig::new(3));
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
            mode = "convective-ch"
            [grid]
            nx = 32
            [model]
            n_phases = 2
            rho_tilde = [1.0, 3.0]
            viscosity = [0.5, 2.0]
            alpha = 0.1
            [initial]
            preset = "stripes"
            count = 3
            [time]
            h = 2e-3
        "#;
        let c = ConfigFile::parse(text).unwrap().to_sim_config().unwrap();
        assert_eq!(c.mode, Mode::ConvectiveCh);
        assert_eq!(c.grid.nx, 32);
        assert_eq!(c.params.rho_tilde, vec![1.0, 3.0]);
        assert_eq!((c.params.viscosity.nu_min, c.params.viscosity.nu_max), (0.5, 2.0));
        assert_eq!(c.initial, InitialCondition::Stripes { count: 3, width: 0.02 });
        assert_eq!(c.h_min, 2e-3 / 64.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(ConfigFile::parse("[grid]\nnz = 3").is_err());
        let f = ConfigFile::parse("[tolerances]\ntol_energy = -1.0").unwrap();
        assert!(f.to_sim_config().is_err());
        let f = ConfigFile::parse("[initial]\npreset = \"checkerboard\"").unwrap();
        assert!(f.to_sim_config().is_err());
    }
}
