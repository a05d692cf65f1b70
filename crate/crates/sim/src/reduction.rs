//! Independent two-phase solver used to cross-check the vector stepper.
//!
//! With two phases and `u = phi_2 - phi_1`, `A = theta_c (I - E)` and
//! `M = m (I - E/2)`, one implicit step at rest reduces to the scalar problem
//!
//! ```text
//! u - u_k = h m lap mu,
//! mu = -zeta lap u + theta ln((1 + u) / (1 - u)) - theta_c (u + u_k) / 2,
//! ```
//!
//! solved here by Newton's method with a sparse LU of the assembled Jacobian
//! `I + h m K (zeta K + D)`, `K = -lap`. The stencil is built from scratch so
//! that it shares no code with the vector solver.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use nsch_core::ch::{ChSolver, ChStepConfig};
use nsch_core::fields::{Grid, VectorField};
use nsch_core::thermo::{ModelParams, PhaseField};

use crate::error::{Result, SimError};

/// Largest `|u|` a Newton iterate may reach.
const U_GUARD: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarCh {
    pub grid: Grid,
    pub theta: f64,
    pub theta_c: f64,
    pub zeta: f64,
    pub m: f64,
}

/// Sparse rows of `K = -lap` with homogeneous Neumann walls.
fn neg_laplacian_rows(g: &Grid) -> Vec<Vec<(usize, f64)>> {
    let (nx, ny) = (g.nx, g.ny);
    let (ax, ay) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let mut rows = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let c = i + nx * j;
            let mut row = Vec::with_capacity(5);
            let mut diag = 0.0;
            let mut link = |nb: usize, a: f64| {
                row.push((nb, -a));
                diag += a;
            };
            if i > 0 {
                link(c - 1, ax);
            }
            if i + 1 < nx {
                link(c + 1, ax);
            }
            if j > 0 {
                link(c - nx, ay);
            }
            if j + 1 < ny {
                link(c + nx, ay);
            }
            row.push((c, diag));
            rows.push(row);
        }
    }
    rows
}

fn apply(rows: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().map(|&(k, a)| a * x[k]).sum()).collect()
}

impl ScalarCh {
    /// Extracts the scalar coefficients, failing unless the model has the
    /// two-phase structure above.
    pub fn from_params(grid: Grid, p: &ModelParams) -> std::result::Result<Self, String> {
        if p.n_phases != 2 {
            return Err(format!("the reduction needs two phases, got {}", p.n_phases));
        }
        let a = &p.a;
        if a.get(0, 0) != 0.0 || a.get(1, 1) != 0.0 || a.get(0, 1) != a.get(1, 0) {
            return Err("interaction matrix must be theta_c (I - E)".into());
        }
        let mb = &p.mobility.base;
        let m = 2.0 * mb.get(0, 0);
        let iso = [mb.get(1, 1), -mb.get(0, 1), -mb.get(1, 0)].iter().all(|x| (x - m / 2.0).abs() <= 1e-14 * m.abs());
        if p.mobility.phase_factors.is_some() || !iso || !(m > 0.0) {
            return Err("mobility must be a constant multiple of I - E/2".into());
        }
        Ok(Self { grid, theta: p.theta, theta_c: -a.get(0, 1), zeta: p.gamma_scale, m })
    }

    fn chemical_potential(&self, k_rows: &[Vec<(usize, f64)>], u: &[f64], uk: &[f64]) -> Vec<f64> {
        let ku = apply(k_rows, u);
        u.iter()
            .zip(uk)
            .zip(&ku)
            .map(|((&u, &uk), &ku)| self.zeta * ku + self.theta * ((1.0 + u) / (1.0 - u)).ln() - 0.5 * self.theta_c * (u + uk))
            .collect()
    }

    fn residual(&self, k_rows: &[Vec<(usize, f64)>], u: &[f64], uk: &[f64], h: f64) -> Vec<f64> {
        let kmu = apply(k_rows, &self.chemical_potential(k_rows, u, uk));
        u.iter().zip(uk).zip(&kmu).map(|((u, uk), km)| u - uk + h * self.m * km).collect()
    }

    fn norm(&self, r: &[f64]) -> f64 {
        (r.iter().map(|x| x * x).sum::<f64>() * self.grid.dx * self.grid.dy).sqrt()
    }

    fn jacobian(&self, k_rows: &[Vec<(usize, f64)>], u: &[f64], h: f64) -> Result<SparseColMat<usize, f64>> {
        let nc = u.len();
        let d: Vec<f64> = u.iter().map(|u| 2.0 * self.theta / (1.0 - u * u) - 0.5 * self.theta_c).collect();
        let hm = h * self.m;
        let mut trips = Vec::with_capacity(nc * 14);
        for (r, row) in k_rows.iter().enumerate() {
            trips.push(Triplet::new(r, r, 1.0));
            for &(s, krs) in row {
                // (zeta K + D) row s
                trips.push(Triplet::new(r, s, hm * krs * d[s]));
                for &(t, kst) in &k_rows[s] {
                    trips.push(Triplet::new(r, t, hm * krs * self.zeta * kst));
                }
            }
        }
        SparseColMat::try_new_from_triplets(nc, nc, &trips).map_err(|e| SimError::Factorization(format!("{e:?}")))
    }

    /// One implicit step from `uk`; returns the new state and the Newton count.
    pub fn step(&self, uk: &[f64], h: f64, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
        let k_rows = neg_laplacian_rows(&self.grid);
        let mut u = uk.to_vec();
        let mut r = self.residual(&k_rows, &u, uk, h);
        let mut rn = self.norm(&r);
        let mut iters = 0;
        while rn > tol {
            if iters == max_iter {
                return Err(nsch_core::Error::NewtonDivergence { iters, residual: rn }.into());
            }
            iters += 1;
            let lu = self.jacobian(&k_rows, &u, h)?.sp_lu().map_err(|e| SimError::Factorization(format!("{e:?}")))?;
            let rhs = Col::from_fn(u.len(), |i| -r[i]);
            let du = lu.solve(&rhs);
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = u.iter().enumerate().map(|(i, x)| x + step * du[i]).collect();
                if trial.iter().all(|x| x.abs() < U_GUARD) {
                    let rt = self.residual(&k_rows, &trial, uk, h);
                    let rtn = self.norm(&rt);
                    if rtn < rn || step < 1e-10 {
                        u = trial;
                        r = rt;
                        rn = rtn;
                        break;
                    }
                }
                step *= 0.5;
                if step < 1e-10 {
                    return Err(nsch_core::Error::NewtonDivergence { iters, residual: rn }.into());
                }
            }
        }
        Ok((u, iters))
    }
}

/// `phi_2 - phi_1` at every cell.
pub fn reduce(phi: &PhaseField) -> Vec<f64> {
    phi.component(1).iter().zip(phi.component(0)).map(|(b, a)| b - a).collect()
}

/// Inverse of [`reduce`] on the simplex.
pub fn lift(grid: Grid, u: &[f64]) -> PhaseField {
    let mut data: Vec<f64> = u.iter().map(|u| 0.5 * (1.0 - u)).collect();
    data.extend(u.iter().map(|u| 0.5 * (1.0 + u)));
    PhaseField::from_flat(grid, 2, data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionReport {
    pub steps: usize,
    /// `max |u_vector - u_scalar|` over all steps and cells.
    pub max_diff: f64,
    /// Largest drift of the mean of `u` in the scalar run.
    pub mean_drift: f64,
}

/// Advances `phi0` at rest with both solvers and compares them step by step.
/// Each solver starts every step from its own previous state.
pub fn compare(phi0: &PhaseField, params: &ModelParams, h: f64, steps: usize, tol: f64) -> Result<ReductionReport> {
    let grid = phi0.grid;
    let scalar = ScalarCh::from_params(grid, params).map_err(|m| nsch_core::Error::InvalidParams(m))?;
    let solver = ChSolver::new(grid, params.clone())?;
    let cfg = ChStepConfig { h, newton_tol: tol, ..ChStepConfig::default() };
    let rest = VectorField::zeros(grid);
    let mean = |u: &[f64]| u.iter().sum::<f64>() / u.len() as f64;

    let mut phi = phi0.clone();
    let mut u = reduce(phi0);
    let mean0 = mean(&u);
    let mut report = ReductionReport { steps, max_diff: 0.0, mean_drift: 0.0 };
    for _ in 0..steps {
        phi = solver.step(&phi, &rest, &cfg)?.phi_next;
        u = scalar.step(&u, h, tol, 50)?.0;
        let diff = reduce(&phi).iter().zip(&u).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        report.max_diff = report.max_diff.max(diff);
        report.mean_drift = report.mean_drift.max((mean(&u) - mean0).abs());
    }
    Ok(report)
}
