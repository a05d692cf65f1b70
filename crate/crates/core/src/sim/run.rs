use alloc::boxed::Box;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use super::config::{Mode, SimConfig};
use super::diagnostics::{DiagnosticSample, Diagnostics, EquilibriumDetector, SeparationDetector};
use super::ledger::{EnergyLedger, Flags, LedgerRow};
use super::presets::{forcing_field, initial_phase, initial_velocity};
use crate::ch::{separation_margin, transport, ChSolver, ChStepConfig, StationaryConfig, StationaryResult};
use crate::error::{Error, Result};
use crate::fields::{divergence, Strain, VectorField};
use crate::ns::{CoupledConfig, CoupledSolver, MomentumConfig, MomentumState};
use crate::thermo::{energy_parts, gradient_energy, EnergyParts, PhaseField};

/// Accepted steps at the reduced size before the step is doubled again.
const RECOVERY_STREAK: usize = 5;

/// State handed to the snapshot observer.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    /// Running snapshot number, starting at 0 for the initial state.
    pub index: usize,
    /// Accepted steps so far.
    pub step: usize,
    pub t: f64,
    pub phi: &'a PhaseField,
    pub state: &'a MomentumState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EndTime,
    Equilibrium,
    MaxSteps,
    /// The observer asked to stop.
    Observer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub phi: PhaseField,
    pub state: MomentumState,
    pub t: f64,
    /// Accepted steps.
    pub steps: usize,
    pub ledger: EnergyLedger,
    pub diagnostics: Diagnostics,
    pub stationary: Option<StationaryResult>,
    pub stop: StopReason,
}

/// A run that could not continue; `partial` holds everything up to the
/// failure when the run got past its setup.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error}")]
pub struct RunError {
    pub error: Error,
    pub partial: Option<Box<SimOutcome>>,
}

impl From<Error> for RunError {
    fn from(error: Error) -> Self {
        Self { error, partial: None }
    }
}

enum Stepper {
    Coupled(CoupledSolver),
    Convective(ChSolver, VectorField),
}

impl Stepper {
    fn ch(&self) -> &ChSolver {
        match self {
            Self::Coupled(s) => &s.ch,
            Self::Convective(s, _) => s,
        }
    }
}

struct Accepted {
    phi: PhaseField,
    state: MomentumState,
    row: LedgerRow,
}

/// Runs a simulation described by `cfg`, calling `observer` on the initial
/// state, every `snapshot_every` accepted steps and the final state.
pub fn run(cfg: &SimConfig, mut observer: impl FnMut(&Snapshot<'_>) -> ControlFlow<()>) -> core::result::Result<SimOutcome, RunError> {
    let grid = cfg.validate()?;
    let params = &cfg.params;
    let n = params.n_phases;
    let phi0 = initial_phase(grid, n, &cfg.initial);
    if cfg.mode == Mode::Stationary {
        return stationary(cfg, phi0, observer);
    }
    let v0 = initial_velocity(grid, &cfg.velocity);
    let stepper = match cfg.mode {
        Mode::Coupled => Stepper::Coupled(CoupledSolver::new(grid, params.clone())?),
        _ => Stepper::Convective(ChSolver::new(grid, params.clone())?, v0.clone()),
    };
    let mut state = MomentumState::at_rest(&phi0, params);
    if cfg.mode == Mode::Coupled {
        state.v = v0;
    }
    let mut phi = phi0;
    let (initial, initial_reg) = match &stepper {
        Stepper::Coupled(_) => (energy_parts(&state.rho, &state.v, &phi, params)?, regularization(cfg, &state.v)),
        Stepper::Convective(..) => (ch_parts(&phi, cfg)?, 0.0),
    };
    let mut ledger = EnergyLedger { initial, initial_reg, rows: Vec::new() };
    let mut diagnostics = Diagnostics::new(&phi);
    let mut sep = SeparationDetector::new(cfg.separation_threshold);
    let mut eq = EquilibriumDetector::new(cfg.tolerances.tol_eq, cfg.equilibrium_window);

    let eq0 = stepper.ch().equilibrium_residual(&phi)?;
    let margin0 = separation_margin(&phi);
    let vnorm0 = state.v.norm();
    diagnostics.samples.push(DiagnosticSample { t: 0.0, sep_margin: margin0, v_norm: vnorm0, eq_residual: eq0 });
    sep.observe(0.0, margin0);
    eq.observe(0.0, eq0);

    let mut snapshots = 0;
    let mut stop = StopReason::EndTime;
    let flow = observer(&Snapshot { index: 0, step: 0, t: 0.0, phi: &phi, state: &state });
    snapshots += 1;
    if flow.is_break() {
        stop = StopReason::Observer;
    }

    let mut t = 0.0;
    let mut steps = 0;
    let mut h = cfg.h;
    let mut streak = 0;
    let mut means = phi.means();
    let mut last_snapshot_step = 0;
    while stop == StopReason::EndTime && cfg.t_end - t > 1e-9 * h {
        if cfg.max_steps.is_some_and(|m| steps >= m) {
            stop = StopReason::MaxSteps;
            break;
        }
        let remaining = cfg.t_end - t;
        let h_try = if remaining < h * (1.0 + 1e-9) { remaining } else { h };
        match attempt(cfg, &stepper, &phi, &state, h_try) {
            Ok(mut acc) => {
                t += h_try;
                steps += 1;
                streak += 1;
                if streak >= RECOVERY_STREAK && h < cfg.h {
                    h = (2.0 * h).min(cfg.h);
                    streak = 0;
                }
                let div = divergence(&acc.state.v).max_abs();
                means = diagnostics.record_state(&means, &acc.phi, div);
                let row = &mut acc.row;
                row.t = t;
                row.sep_margin = separation_margin(&acc.phi);
                row.v_norm = acc.state.v.norm();
                row.eq_residual = stepper.ch().equilibrium_residual(&acc.phi)?;
                if steps % cfg.output.output_every == 0 {
                    row.flags.insert(Flags::OUTPUT);
                    diagnostics.samples.push(DiagnosticSample {
                        t,
                        sep_margin: row.sep_margin,
                        v_norm: row.v_norm,
                        eq_residual: row.eq_residual,
                    });
                    sep.observe(t, row.sep_margin);
                    if eq.observe(t, row.eq_residual) {
                        row.flags.insert(Flags::EQUILIBRIUM);
                        if cfg.stop_at_equilibrium {
                            stop = StopReason::Equilibrium;
                        }
                    }
                }
                phi = acc.phi;
                state = acc.state;
                let every = cfg.output.snapshot_every;
                if every > 0 && steps % every == 0 {
                    row.flags.insert(Flags::SNAPSHOT);
                    last_snapshot_step = steps;
                    let flow = observer(&Snapshot { index: snapshots, step: steps, t, phi: &phi, state: &state });
                    snapshots += 1;
                    if flow.is_break() {
                        stop = StopReason::Observer;
                    }
                }
                ledger.rows.push(acc.row);
            }
            Err((error, row)) => {
                ledger.rows.push(row);
                streak = 0;
                h *= 0.5;
                if h < cfg.h_min * (1.0 - 1e-12) {
                    diagnostics.t_star = sep.t_star();
                    diagnostics.t_eq = eq.t_eq();
                    let partial = SimOutcome { phi, state, t, steps, ledger, diagnostics, stationary: None, stop };
                    return Err(RunError { error, partial: Some(Box::new(partial)) });
                }
            }
        }
    }
    if steps > last_snapshot_step && stop != StopReason::Observer {
        if let Some(last) = ledger.rows.iter_mut().rev().find(|r| r.flags.is_accepted()) {
            last.flags.insert(Flags::SNAPSHOT);
        }
        let _ = observer(&Snapshot { index: snapshots, step: steps, t, phi: &phi, state: &state });
    }
    diagnostics.t_star = sep.t_star();
    diagnostics.t_eq = eq.t_eq();
    Ok(SimOutcome { phi, state, t, steps, ledger, diagnostics, stationary: None, stop })
}

fn regularization(cfg: &SimConfig, v: &VectorField) -> f64 {
    0.5 * cfg.params.alpha * Strain::of(v).norm_sq(&v.grid)
}

fn ch_parts(phi: &PhaseField, cfg: &SimConfig) -> Result<EnergyParts> {
    Ok(EnergyParts {
        kinetic: 0.0,
        gradient: gradient_energy(phi, cfg.params.gamma_scale),
        potential: crate::thermo::potential_energy(phi, &cfg.params)?,
    })
}

fn ch_config(cfg: &SimConfig, h: f64) -> ChStepConfig {
    ChStepConfig { h, newton_tol: cfg.tolerances.newton_tol, ..ChStepConfig::default() }
}

fn attempt(
    cfg: &SimConfig,
    stepper: &Stepper,
    phi: &PhaseField,
    state: &MomentumState,
    h: f64,
) -> core::result::Result<Accepted, (Error, LedgerRow)> {
    let fail = |e: Error| {
        let row = LedgerRow::rejected(f64::NAN, h, Flags::for_error(&e));
        (e, row)
    };
    let tol = &cfg.tolerances;
    let (phi_next, state_next, mut row) = match stepper {
        Stepper::Coupled(solver) => {
            let ccfg = CoupledConfig {
                ch: ch_config(cfg, h),
                momentum: MomentumConfig { picard_sweeps: 1, ..MomentumConfig::default() },
                max_sweeps: cfg.max_sweeps,
                coupling_tol: tol.coupling_tol,
                tol_energy: tol.tol_energy,
            };
            let r = solver.step(phi, state, &ccfg).map_err(fail)?;
            let b = r.balance;
            let mut row = LedgerRow::rejected(f64::NAN, h, Flags::ACCEPTED);
            row.set_energy(&b.after);
            row.diss_visc = b.diss_visc;
            row.diss_ch = b.diss_ch;
            row.slack = b.slack;
            row.reg = b.reg_after;
            row.numerical = b.numerical;
            row.work = 0.0;
            row.tol = b.tol;
            let next = MomentumState { v: r.momentum.v_next, rho: r.rho_next, p: r.momentum.p_next };
            (r.ch.phi_next, next, row)
        }
        Stepper::Convective(solver, v) => {
            let before = ch_parts(phi, cfg).map_err(fail)?;
            let r = solver.step(phi, v, &ch_config(cfg, h)).map_err(fail)?;
            let after = ch_parts(&r.phi_next, cfg).map_err(fail)?;
            let g = phi.grid;
            let nc = g.cells();
            let mut t = transport(phi, v);
            let mut work = 0.0;
            for i in 0..phi.n {
                let ti = &mut t[i * nc..(i + 1) * nc];
                let m = ti.iter().sum::<f64>() / nc as f64;
                work += ti.iter().zip(r.w_next.component(i)).map(|(a, b)| (a - m) * b).sum::<f64>();
            }
            work *= h * g.cell_area();
            let dphi = PhaseField::from_flat(g, phi.n, r.phi_next.data.iter().zip(&phi.data).map(|(a, b)| a - b).collect());
            let mut row = LedgerRow::rejected(f64::NAN, h, Flags::ACCEPTED);
            row.set_energy(&after);
            row.diss_visc = 0.0;
            row.diss_ch = h * solver.mobility_dissipation(phi, &r.w_next);
            row.numerical = gradient_energy(&dphi, cfg.params.gamma_scale);
            row.work = work;
            row.reg = 0.0;
            row.slack = before.total() - after.total() - row.diss_ch - row.numerical - work;
            row.tol = tol.tol_energy * (1.0 + libm::fabs(before.total()));
            let mut next = state.clone();
            next.v = v.clone();
            (r.phi_next, next, row)
        }
    };
    if !(row.slack >= -row.tol) {
        let e = Error::EnergyViolation { slack: row.slack, tol: row.tol };
        row.flags = Flags::REJECT_ENERGY;
        return Err((e, row));
    }
    if let Stepper::Coupled(_) = stepper {
        let g = phi.grid;
        let div = divergence(&state_next.v).max_abs();
        let bound = tol.tol_div * (state_next.v.max_abs() / g.dx.min(g.dy)).max(f64::MIN_POSITIVE);
        if div > bound {
            row.flags = Flags::REJECT_DIVERGENCE;
            return Err((Error::LinearSolveFailure { iters: 0, residual: div }, row));
        }
    }
    Ok(Accepted { phi: phi_next, state: state_next, row })
}

fn stationary(
    cfg: &SimConfig,
    phi0: PhaseField,
    mut observer: impl FnMut(&Snapshot<'_>) -> ControlFlow<()>,
) -> core::result::Result<SimOutcome, RunError> {
    let grid = phi0.grid;
    let params = &cfg.params;
    let solver = ChSolver::new(grid, params.clone())?;
    let f = forcing_field(grid, params.n_phases, &cfg.stationary.forcing);
    let mean = cfg.stationary.mean_from_initial.then(|| phi0.means());
    let scfg = StationaryConfig { newton_tol: cfg.tolerances.newton_tol, ..StationaryConfig::default() };
    let result = solver.stationary_solve(&f, mean.as_deref(), &scfg)?;
    let phi = result.phi.clone();
    let state = MomentumState::at_rest(&phi, params);
    let mut diagnostics = Diagnostics::new(&phi);
    let sample = DiagnosticSample { t: 0.0, sep_margin: separation_margin(&phi), v_norm: 0.0, eq_residual: result.residual };
    diagnostics.samples.push(sample);
    let mut sep = SeparationDetector::new(cfg.separation_threshold);
    sep.observe(0.0, sample.sep_margin);
    diagnostics.t_star = sep.t_star();
    let _ = observer(&Snapshot { index: 0, step: 0, t: 0.0, phi: &phi, state: &state });
    let ledger = EnergyLedger { initial: energy_parts(&state.rho, &state.v, &phi, params)?, initial_reg: 0.0, rows: Vec::new() };
    Ok(SimOutcome { phi, state, t: 0.0, steps: 0, ledger, diagnostics, stationary: Some(result), stop: StopReason::EndTime })
}
