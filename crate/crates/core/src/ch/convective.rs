use alloc::vec;
use alloc::vec::Vec;

use super::{ChSolver, ChStepConfig};
use crate::error::Result;
use crate::fields::ops::gradient_into;
use crate::fields::{dot, VectorField};
use crate::thermo::{ch_energy, PhaseField};

/// One recorded step of a prescribed-velocity run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvectiveSample {
    pub t: f64,
    pub ch_energy: f64,
    /// `||grad w||` over all components.
    pub grad_w_norm: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvectiveTrajectory {
    /// Entry 0 is the initial state; `grad_w_norm` is zero there.
    pub samples: Vec<ConvectiveSample>,
    pub phi: PhaseField,
    pub means: Vec<Vec<f64>>,
}

/// Runs the phase equation alone with velocity `velocity(t)` evaluated at the
/// start of each step, up to `t_end`.
pub fn convective_ch_run(
    solver: &ChSolver,
    phi_0: &PhaseField,
    mut velocity: impl FnMut(f64) -> VectorField,
    cfg: &ChStepConfig,
    t_end: f64,
) -> Result<ConvectiveTrajectory> {
    let g = solver.grid();
    let steps = libm::ceil(t_end / cfg.h - 1e-9) as usize;
    let mut phi = phi_0.clone();
    let mut t = 0.0;
    let mut samples = vec![ConvectiveSample { t, ch_energy: ch_energy(&phi, &solver.params)?, grad_w_norm: 0.0, newton_iters: 0 }];
    let mut means = vec![phi.means()];
    let mut gu = vec![0.0; g.u_len()];
    let mut gv = vec![0.0; g.v_len()];
    for k in 0..steps {
        let v = velocity(t);
        let r = solver.step(&phi, &v, cfg)?;
        let mut s = 0.0;
        for i in 0..r.w_next.n {
            gradient_into(&g, r.w_next.component(i), &mut gu, &mut gv);
            s += dot(&gu, &gu) + dot(&gv, &gv);
        }
        phi = r.phi_next;
        t = (k + 1) as f64 * cfg.h;
        samples.push(ConvectiveSample {
            t,
            ch_energy: ch_energy(&phi, &solver.params)?,
            grad_w_norm: libm::sqrt(s * g.cell_area()),
            newton_iters: r.newton_iters,
        });
        means.push(phi.means());
    }
    Ok(ConvectiveTrajectory { samples, phi, means })
}
