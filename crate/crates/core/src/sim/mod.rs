//! Run configuration, initial-condition presets, the time loop with its
//! energy ledger, and long-time diagnostics.

mod config;
mod diagnostics;
mod ledger;
mod presets;
mod run;

pub use config::{Forcing, GridSpec, InitialCondition, Mode, OutputCadence, SimConfig, StationarySpec, Tolerances, VelocityInit};
pub use diagnostics::{detect_equilibrium, DiagnosticSample, Diagnostics, EquilibriumDetector, SeparationDetector};
pub use ledger::{EnergyLedger, Flags, LedgerRow};
pub use presets::{forcing_field, initial_phase, initial_velocity};
pub use run::{run, RunError, SimOutcome, Snapshot, StopReason};
