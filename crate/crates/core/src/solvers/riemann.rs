//! Exact Riemann solver for the ideal-gas Euler equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GAMMA: f64 = 1.4;

/// Primitive state (density, velocity, pressure).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannState {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl RiemannState {
    pub fn new(rho: f64, u: f64, p: f64) -> Result<Self> {
        if !(rho > 0.0 && p > 0.0 && u.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "inadmissible state rho = {rho}, u = {u}, p = {p}"
            )));
        }
        Ok(RiemannState { rho, u, p })
    }

    pub fn sound_speed(&self) -> f64 {
        (GAMMA * self.p / self.rho).sqrt()
    }

    /// Characteristic speeds `u - c, u, u + c`.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let c = self.sound_speed();
        [self.u - c, self.u, self.u + c]
    }

    pub fn conservative(&self) -> [f64; 3] {
        [
            self.rho,
            self.rho * self.u,
            self.p / (GAMMA - 1.0) + 0.5 * self.rho * self.u * self.u,
        ]
    }

    pub fn from_conservative(q: &[f64; 3]) -> Self {
        let u = q[1] / q[0];
        RiemannState {
            rho: q[0],
            u,
            p: (GAMMA - 1.0) * (q[2] - 0.5 * q[1] * u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wave {
    Shock { speed: f64 },
    Rarefaction { head: f64, tail: f64 },
}

/// Solved Riemann problem: star-region state and the three waves.
#[derive(Debug, Clone, Copy)]
pub struct RiemannSolution {
    pub left: RiemannState,
    pub right: RiemannState,
    pub p_star: f64,
    pub u_star: f64,
    pub rho_star_left: f64,
    pub rho_star_right: f64,
    pub left_wave: Wave,
    pub right_wave: Wave,
}

/// Pressure function f_K(p) and its derivative for one side.
pub fn pressure_function(p: f64, s: &RiemannState) -> (f64, f64) {
    let g = GAMMA;
    let c = s.sound_speed();
    if p > s.p {
        let a = 2.0 / ((g + 1.0) * s.rho);
        let b = (g - 1.0) / (g + 1.0) * s.p;
        let q = (a / (p + b)).sqrt();
        ((p - s.p) * q, q * (1.0 - 0.5 * (p - s.p) / (p + b)))
    } else {
        let r = p / s.p;
        let e = (g - 1.0) / (2.0 * g);
        (
            2.0 * c / (g - 1.0) * (r.powf(e) - 1.0),
            1.0 / (s.rho * c) * r.powf(-(g + 1.0) / (2.0 * g)),
        )
    }
}

impl RiemannSolution {
    pub fn solve(left: RiemannState, right: RiemannState) -> Result<Self> {
        let g = GAMMA;
        let (cl, cr) = (left.sound_speed(), right.sound_speed());
        let du = right.u - left.u;
        if 2.0 * (cl + cr) / (g - 1.0) <= du {
            return Err(Error::Vacuum);
        }
        // primitive-variable linearisation as the starting guess
        let pvrs = 0.5 * (left.p + right.p)
            - 0.125 * du * (left.rho + right.rho) * (cl + cr);
        let mut p = pvrs.max(1e-8 * left.p.min(right.p));
        let mut converged = false;
        for _ in 0..100 {
            let (fl, dfl) = pressure_function(p, &left);
            let (fr, dfr) = pressure_function(p, &right);
            let resid = fl + fr + du;
            let mut next = p - resid / (dfl + dfr);
            if next <= 0.0 {
                next = 0.5 * p;
            }
            let change = 2.0 * (next - p).abs() / (next + p);
            p = next;
            if change < 1e-15 || resid.abs() < 1e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::RiemannNoConvergence);
        }
        let (fl, _) = pressure_function(p, &left);
        let (fr, _) = pressure_function(p, &right);
        let u_star = 0.5 * (left.u + right.u) + 0.5 * (fr - fl);

        let gm = (g - 1.0) / (g + 1.0);
        let side = |s: &RiemannState, sign: f64| -> (f64, Wave) {
            let c = s.sound_speed();
            if p > s.p {
                let r = p / s.p;
                let rho = s.rho * (r + gm) / (gm * r + 1.0);
                let speed = s.u + sign * c * ((g + 1.0) / (2.0 * g) * r + (g - 1.0) / (2.0 * g)).sqrt();
                (rho, Wave::Shock { speed })
            } else {
                let rho = s.rho * (p / s.p).powf(1.0 / g);
                let c_star = c * (p / s.p).powf((g - 1.0) / (2.0 * g));
                (
                    rho,
                    Wave::Rarefaction {
                        head: s.u + sign * c,
                        tail: u_star + sign * c_star,
                    },
                )
            }
        };
        let (rho_star_left, left_wave) = side(&left, -1.0);
        let (rho_star_right, right_wave) = side(&right, 1.0);
        Ok(RiemannSolution {
            left,
            right,
            p_star: p,
            u_star,
            rho_star_left,
            rho_star_right,
            left_wave,
            right_wave,
        })
    }

    /// Similarity solution at `xi = x / t`.
    pub fn sample(&self, xi: f64) -> RiemannState {
        let g = GAMMA;
        if xi <= self.u_star {
            let s = &self.left;
            match self.left_wave {
                Wave::Shock { speed } => {
                    if xi <= speed {
                        *s
                    } else {
                        RiemannState { rho: self.rho_star_left, u: self.u_star, p: self.p_star }
                    }
                }
                Wave::Rarefaction { head, tail } => {
                    if xi <= head {
                        *s
                    } else if xi >= tail {
                        RiemannState { rho: self.rho_star_left, u: self.u_star, p: self.p_star }
                    } else {
                        let c = s.sound_speed();
                        let f = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * c) * (s.u - xi);
                        RiemannState {
                            rho: s.rho * f.powf(2.0 / (g - 1.0)),
                            u: 2.0 / (g + 1.0) * (c + 0.5 * (g - 1.0) * s.u + xi),
                            p: s.p * f.powf(2.0 * g / (g - 1.0)),
                        }
                    }
                }
            }
        } else {
            let s = &self.right;
            match self.right_wave {
                Wave::Shock { speed } => {
                    if xi >= speed {
                        *s
                    } else {
                        RiemannState { rho: self.rho_star_right, u: self.u_star, p: self.p_star }
                    }
                }
                Wave::Rarefaction { head, tail } => {
                    if xi >= head {
                        *s
                    } else if xi <= tail {
                        RiemannState { rho: self.rho_star_right, u: self.u_star, p: self.p_star }
                    } else {
                        let c = s.sound_speed();
                        let f = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * c) * (s.u - xi);
                        RiemannState {
                            rho: s.rho * f.powf(2.0 / (g - 1.0)),
                            u: 2.0 / (g + 1.0) * (-c + 0.5 * (g - 1.0) * s.u + xi),
                            p: s.p * f.powf(2.0 * g / (g - 1.0)),
                        }
                    }
                }
            }
        }
    }

    /// Location of the contact at time `t` for an initial jump at `x0`.
    pub fn contact_position(&self, x0: f64, t: f64) -> f64 {
        x0 + self.u_star * t
    }

    /// Speeds of the shocks among the two nonlinear waves.
    pub fn shock_speeds(&self) -> Vec<f64> {
        [self.left_wave, self.right_wave]
            .iter()
            .filter_map(|w| match w {
                Wave::Shock { speed } => Some(*speed),
                _ => None,
            })
            .collect()
    }

    /// Fastest signal speeds to the left and right.
    pub fn extreme_speeds(&self) -> (f64, f64) {
        let lo = match self.left_wave {
            Wave::Shock { speed } => speed,
            Wave::Rarefaction { head, .. } => head,
        };
        let hi = match self.right_wave {
            Wave::Shock { speed } => speed,
            Wave::Rarefaction { head, .. } => head,
        };
        (lo, hi)
    }
}

/// Samples the exact similarity solution at `x_over_t`.
pub fn exact_riemann(left: RiemannState, right: RiemannState, x_over_t: f64) -> Result<RiemannState> {
    Ok(RiemannSolution::solve(left, right)?.sample(x_over_t))
}
