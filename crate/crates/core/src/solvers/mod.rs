//! RKDG time evolution for linear advection and the 1D Euler system.

pub mod advection;
pub mod euler;
pub mod limiter;
pub mod operator;
pub mod riemann;
mod rk;

pub use advection::{advect_solve, AdvectionInitial, AdvectionOptions, AdvectionProblem, AdvectionRun};
pub use euler::{
    euler_solve, euler_solve_snapshots, reference_shu_osher, reference_shu_osher_snapshots,
    primitives_from_conservative, EulerFields, EulerOptions, InitialCondition, PrimitiveGrids, RunDescriptor,
    REFERENCE_CFL,
};
pub use limiter::{minmod, moment_limit, moment_limit_field, tvb_detect, tvb_minmod, ScalarBoundary};
pub use operator::{llf_flux, project_system, ConservationLaw, DgOperator, SystemBoundary};
pub use riemann::{exact_riemann, RiemannSolution, RiemannState, Wave, GAMMA};
pub use rk::ssp_rk3_step;

use crate::error::{Error, Result};

/// Stable CFL number used when none is given.
pub fn default_cfl(degree: usize) -> f64 {
    0.1 / (2 * degree + 1) as f64
}

/// Largest CFL number accepted for degree `p`.
pub fn cfl_limit(degree: usize) -> f64 {
    1.0 / (2 * degree + 1) as f64
}

pub(crate) fn check_cfl(cfl: f64, degree: usize) -> Result<()> {
    let limit = cfl_limit(degree);
    if !(cfl > 0.0 && cfl <= limit) {
        return Err(Error::Cfl { cfl, limit, degree });
    }
    Ok(())
}

pub(crate) fn check_finite(u: &[f64], n_elements: usize, n_modes: usize, time: f64) -> Result<()> {
    match u.iter().position(|v| !v.is_finite()) {
        Some(idx) => Err(Error::NonFinite {
            element: (idx / n_modes) % n_elements,
            time,
        }),
        None => Ok(()),
    }
}

/// Advances `u` from `t` to `t_end` with SSP-RK3 steps of size
/// `cfl * h / max_speed`, shortening the last step to land on `t_end`.
pub(crate) fn evolve<const NV: usize, L: ConservationLaw<NV>>(
    op: &DgOperator<NV>,
    law: &L,
    bc: &SystemBoundary<NV>,
    u: &mut [f64],
    t: &mut f64,
    t_end: f64,
    cfl: f64,
    post_stage: &mut dyn FnMut(&mut [f64], f64) -> Result<()>,
) -> Result<()> {
    let h = op.mesh.h;
    let (n, m) = (op.mesh.n_elements, op.n_modes());
    while *t < t_end {
        let speed = op.max_speed(law, u);
        if !speed.is_finite() {
            check_finite(u, n, m, *t)?;
            return Err(Error::NonFinite { element: 0, time: *t });
        }
        let mut dt = cfl * h / speed.max(1e-12);
        let last = *t + dt >= t_end * (1.0 - 1e-14);
        if last {
            dt = t_end - *t;
        }
        let stage_time = *t + dt;
        ssp_rk3_step(
            u,
            dt,
            |v, out| {
                op.residual(law, bc, v, out);
                Ok(())
            },
            |v| post_stage(v, stage_time),
        )?;
        *t = if last { t_end } else { *t + dt };
        check_finite(u, n, m, *t)?;
    }
    Ok(())
}
