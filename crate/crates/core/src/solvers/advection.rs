//! Periodic linear advection `u_t + a u_x = 0`.

use serde::{Deserialize, Serialize};

use super::limiter::{moment_limit_field, tvb_detect, ScalarBoundary};
use super::operator::{ConservationLaw, DgOperator, SystemBoundary};
use super::{check_cfl, default_cfl, evolve};
use crate::dg::{gauss_legendre, project, DGField, Mesh};
use crate::error::{Error, Result};

struct Advection {
    a: f64,
}

impl ConservationLaw<1> for Advection {
    fn flux(&self, u: &[f64; 1]) -> [f64; 1] {
        [self.a * u[0]]
    }
    fn max_speed(&self, _u: &[f64; 1]) -> f64 {
        self.a.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdvectionInitial {
    /// `alpha + delta` on `[-2.5, 2.5]`, `alpha` elsewhere.
    TopHat { alpha: f64, delta: f64 },
    /// `sin(2 pi x / wavelength)`.
    Sine { wavelength: f64 },
}

impl AdvectionInitial {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            AdvectionInitial::TopHat { alpha, delta } => {
                if (-2.5..=2.5).contains(&x) {
                    alpha + delta
                } else {
                    alpha
                }
            }
            AdvectionInitial::Sine { wavelength } => (2.0 * std::f64::consts::PI * x / wavelength).sin(),
        }
    }

    /// Initial discontinuity locations.
    pub fn jumps(&self) -> Vec<f64> {
        match self {
            AdvectionInitial::TopHat { .. } => vec![-2.5, 2.5],
            AdvectionInitial::Sine { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvectionProblem {
    pub wave_speed: f64,
    pub initial: AdvectionInitial,
    pub final_time: f64,
    pub lo: f64,
    pub hi: f64,
}

impl AdvectionProblem {
    /// Top-hat on `[-5, 5]`.
    pub fn top_hat(wave_speed: f64, alpha: f64, delta: f64, final_time: f64) -> Self {
        AdvectionProblem {
            wave_speed,
            initial: AdvectionInitial::TopHat { alpha, delta },
            final_time,
            lo: -5.0,
            hi: 5.0,
        }
    }

    fn wrap(&self, x: f64) -> f64 {
        let len = self.hi - self.lo;
        self.lo + (x - self.lo).rem_euclid(len)
    }

    /// Exact solution at time `t`.
    pub fn exact_at(&self, x: f64, t: f64) -> f64 {
        self.initial.eval(self.wrap(x - self.wave_speed * t))
    }

    /// Exact solution at the final time.
    pub fn exact(&self, x: f64) -> f64 {
        self.exact_at(x, self.final_time)
    }

    /// Discontinuity locations at the final time, ascending.
    pub fn jump_locations(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .initial
            .jumps()
            .into_iter()
            .map(|x0| self.wrap(x0 + self.wave_speed * self.final_time))
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn validate(&self) -> Result<()> {
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::InvalidArgument(format!("final time {} must be positive", self.final_time)));
        }
        if !(self.wave_speed > 0.0 && self.wave_speed.is_finite()) {
            return Err(Error::InvalidArgument(format!("wave speed {} must be positive", self.wave_speed)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdvectionOptions {
    /// Defaults to `0.1 / (2p + 1)`.
    pub cfl: Option<f64>,
    /// TVB parameter; `None` disables detection and limiting.
    pub tvb_m: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AdvectionRun {
    pub problem: AdvectionProblem,
    pub field: DGField,
}

impl AdvectionRun {
    pub fn exact(&self, x: f64) -> f64 {
        self.problem.exact(x)
    }
}

pub fn advect_solve(problem: &AdvectionProblem, p: usize, n: usize, options: AdvectionOptions) -> Result<AdvectionRun> {
    problem.validate()?;
    let cfl = options.cfl.unwrap_or_else(|| default_cfl(p));
    check_cfl(cfl, p)?;
    let mesh = Mesh::new(problem.lo, problem.hi, n)?;
    let init_quad = gauss_legendre((p + 4).min(crate::dg::MAX_QUADRATURE_NODES))?;
    let field0 = project(|x| problem.initial.eval(x), &mesh, p, &init_quad);
    let op = DgOperator::<1>::new(mesh, p, p + 1);
    let law = Advection { a: problem.wave_speed };
    let mut u = field0.coeffs;
    let mut t = 0.0;
    let mut post = |v: &mut [f64], _t: f64| -> Result<()> {
        if let Some(m) = options.tvb_m {
            let mut f = DGField { mesh, degree: p, coeffs: v.to_vec() };
            let flagged = tvb_detect(&[&f], &[ScalarBoundary::Periodic], m);
            moment_limit_field(&mut f, ScalarBoundary::Periodic, &flagged);
            v.copy_from_slice(&f.coeffs);
        }
        Ok(())
    };
    evolve(&op, &law, &SystemBoundary::Periodic, &mut u, &mut t, problem.final_time, cfl, &mut post)?;
    Ok(AdvectionRun {
        problem: *problem,
        field: DGField { mesh, degree: p, coeffs: u },
    })
}
