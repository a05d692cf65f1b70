//! Command-line front end. Exit codes: 0 success, 1 configuration or solver
//! error, 2 invariant violation.

use std::ffi::OsString;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nsch_core::sim::{run, InitialCondition, Mode, SimConfig, SimOutcome, Snapshot};

use crate::error::{Result, SimError};
use crate::{config, reduction, snapshot, timeseries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

/// Output directory used when neither `--out-dir` nor `NSCH_OUT_DIR` is set.
pub const DEFAULT_OUT_DIR: &str = "nsch-out";

#[derive(Debug, Parser)]
#[command(name = "nsch-sim", version, about = "Multi-component Navier-Stokes-Cahn-Hilliard simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time-step a configuration, writing timeseries.csv and snapshots.
    Run(RunArgs),
    /// Solve the stationary phase problem of a configuration.
    Stationary(RunArgs),
    /// Re-check the ledger inequalities of a timeseries.csv.
    Check {
        csv: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol_energy: f64,
    },
    /// Compare the vector stepper with the scalar two-phase solver.
    Reduce2 {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
    /// Seed of the random initial perturbation.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "NSCH_OUT_DIR", default_value = DEFAULT_OUT_DIR)]
    out_dir: PathBuf,
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Initial (and maximal) step size.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
}

impl RunArgs {
    fn load(&self, mode: Option<Mode>) -> Result<SimConfig> {
        let mut c = config::load(&self.config)?;
        if let Some(m) = mode {
            c.mode = m;
        }
        if let Some(s) = self.seed {
            match &mut c.initial {
                InitialCondition::RandomPerturbation { seed, .. } => *seed = s,
                other => eprintln!("warning: --seed ignored for the {} preset", other.name()),
            }
        }
        if let Some(k) = self.snapshot_every {
            c.output.snapshot_every = k;
        }
        if let Some(h) = self.h {
            c.h_min = c.h_min * h / c.h;
            c.h = h;
        }
        if let Some(a) = self.alpha {
            c.params.alpha = a;
        }
        if let Some(t) = self.t_end {
            c.t_end = t;
        }
        c.validate().map_err(|e| SimError::parse(&self.config, e.to_string()))?;
        Ok(c)
    }
}

fn snapshot_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("snapshot_{index:05}.vtk"))
}

fn summary(o: &SimOutcome) {
    let d = &o.diagnostics;
    let fmt = |t: Option<f64>| t.map_or("-".to_string(), |t| format!("{t}"));
    println!("stop: {:?} at t = {} after {} steps ({} rejected)", o.stop, o.t, o.steps, o.ledger.rejected_count());
    println!("t_star: {}  t_eq: {}", fmt(d.t_star), fmt(d.t_eq));
    println!("max mean drift: {:e}  max simplex error: {:e}", d.max_step_drift.iter().fold(0.0_f64, |m, x| m.max(*x)), d.max_simplex_error);
    if let Some(s) = &o.stationary {
        println!("stationary: {} Newton iterations, residual {:e}", s.newton_iters, s.residual);
    }
}

fn run_command(args: &RunArgs, mode: Option<Mode>) -> Result<i32> {
    let cfg = args.load(mode)?;
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let mut write_err = None;
    let result = run(&cfg, |s: &Snapshot<'_>| match snapshot::write_snapshot(&snapshot_path(dir, s.index), s.step, s.t, s.phi, s.state) {
        Ok(()) => ControlFlow::Continue(()),
        Err(e) => {
            write_err = Some(e);
            ControlFlow::Break(())
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    let csv = dir.join("timeseries.csv");
    match result {
        Ok(outcome) => {
            timeseries::write_timeseries(&csv, &outcome.ledger.rows)?;
            summary(&outcome);
            let violations = timeseries::check_rows(&outcome.ledger.rows, cfg.tolerances.tol_energy);
            for v in &violations {
                eprintln!("row {}: {}", v.row, v.message);
            }
            Ok(if violations.is_empty() { EXIT_OK } else { EXIT_VIOLATION })
        }
        Err(e) => {
            if let Some(partial) = &e.partial {
                timeseries::write_timeseries(&csv, &partial.ledger.rows)?;
            }
            Err(e.into())
        }
    }
}

fn check_command(csv: &Path, tol_energy: f64) -> Result<i32> {
    let rows = timeseries::read_timeseries(csv)?;
    let violations = timeseries::check_rows(&rows, tol_energy);
    for v in &violations {
        eprintln!("{}: row {}: {}", csv.display(), v.row, v.message);
    }
    println!("{} rows, {} violations", rows.len(), violations.len());
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_VIOLATION })
}

fn reduce2_command(path: &Path, steps: usize, tol: f64) -> Result<i32> {
    let cfg = config::load(path)?;
    let grid = cfg.validate()?;
    let phi0 = nsch_core::sim::initial_phase(grid, cfg.params.n_phases, &cfg.initial);
    let r = reduction::compare(&phi0, &cfg.params, cfg.h, steps, cfg.tolerances.newton_tol)?;
    println!("steps: {}  max |u - u_ref|: {:e}  mean drift: {:e}", r.steps, r.max_diff, r.mean_drift);
    Ok(if r.max_diff <= tol && r.mean_drift <= 1e-12 { EXIT_OK } else { EXIT_VIOLATION })
}

/// Parses `args` (program name first) and runs the command.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run_command(a, None),
        Command::Stationary(a) => run_command(a, Some(Mode::Stationary)),
        Command::Check { csv, tol_energy } => check_command(csv, *tol_energy),
        Command::Reduce2 { config, steps, tol } => reduce2_command(config, *steps, *tol),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}
