use alloc::string::String;

/// Failures raised by the field operators and the step solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("incompatible Neumann data: mean {mean:e} exceeds tolerance {tol:e}")]
    IncompatibleRhs { mean: f64, tol: f64 },
    #[error("potential evaluated outside its domain at s = {0:e}")]
    DomainError(f64),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("Newton iteration failed after {iters} iterations (residual {residual:e})")]
    NewtonDivergence { iters: usize, residual: f64 },
    #[error("line search could not keep the iterate inside the simplex")]
    InteriorViolation,
    #[error("linear solve failed to converge ({iters} iterations, relative residual {residual:e})")]
    LinearSolveFailure { iters: usize, residual: f64 },
    #[error("density {rho:e} fell below the admissible floor {floor:e}")]
    DensityFloorViolation { rho: f64, floor: f64 },
    #[error("coupling sweeps did not converge (velocity change {change:e})")]
    CouplingFailure { change: f64 },
    #[error("discrete energy inequality violated (slack {slack:e}, tolerance {tol:e})")]
    EnergyViolation { slack: f64, tol: f64 },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;
