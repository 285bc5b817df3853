use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::bspline::{bspline, MAX_SPLINE_ORDER};
use crate::dg::gauss_legendre;
use crate::error::{Error, Result};

/// Condition numbers above this are reported as a singular moment system.
const MAX_CONDITION: f64 = 1e12;

/// Symmetric SIAC kernel: a linear combination of `moments + 1` central
/// B-splines of order `spline_order`, centred at `-moments/2 + gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiacKernel {
    pub moments: usize,
    pub spline_order: usize,
    pub offsets: Vec<f64>,
    pub coeffs: Vec<f64>,
}

/// Physical kernel width multiplier `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelScaling(pub f64);

impl KernelScaling {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h.is_finite() {
            Ok(KernelScaling(h))
        } else {
            Err(Error::InvalidArgument(format!("kernel scaling must be positive, got {h}")))
        }
    }
}

/// Reproducible text record of a kernel and its scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDescriptor {
    pub moments: usize,
    pub spline_degree: usize,
    pub scaling: f64,
    pub coeffs: Vec<f64>,
}

/// Which kernel to use globally, as a function of the DG degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GlobalKernelSpec {
    /// `2p + 1` B-splines of order `p + 1`.
    #[default]
    Standard,
    /// `2p + 1` B-splines of a fixed order.
    FixedOrder(usize),
    /// Explicit moment count and spline degree.
    Explicit { moments: usize, spline_degree: usize },
}

impl GlobalKernelSpec {
    pub fn build(&self, degree: usize) -> Result<SiacKernel> {
        match *self {
            GlobalKernelSpec::Standard => solve_coefficients(2 * degree, degree),
            GlobalKernelSpec::FixedOrder(order) => {
                if order == 0 {
                    return Err(Error::InvalidArgument("B-spline order must be >= 1".into()));
                }
                solve_coefficients(2 * degree, order - 1)
            }
            GlobalKernelSpec::Explicit {
                moments,
                spline_degree,
            } => solve_coefficients(moments, spline_degree),
        }
    }
}

/// Moments `integral of B(s) s^j ds` for `j = 0..=max_power` of the
/// central B-spline, exact by piecewise Gauss quadrature.
pub fn bspline_moments(order: usize, max_power: usize) -> Vec<f64> {
    let n = ((order - 1 + max_power) / 2 + 1).min(crate::dg::MAX_QUADRATURE_NODES);
    let q = gauss_legendre(n).expect("valid quadrature size");
    let half = order as f64 / 2.0;
    (0..=max_power)
        .map(|j| {
            (0..order)
                .map(|piece| {
                    let a = -half + piece as f64;
                    q.integrate_on(a, a + 1.0, |s| bspline(order, s) * s.powi(j as i32))
                })
                .sum()
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Solves the moment system so that the kernel reproduces polynomials of
/// degree `<= moments` under convolution.
pub fn solve_coefficients(moments: usize, spline_degree: usize) -> Result<SiacKernel> {
    let order = spline_degree + 1;
    if order > MAX_SPLINE_ORDER {
        return Err(Error::InvalidArgument(format!("B-spline order {order} too large")));
    }
    let nc = moments + 1;
    let offsets: Vec<f64> = (0..nc).map(|g| -(moments as f64) / 2.0 + g as f64).collect();
    let mu = bspline_moments(order, moments);

    // Row m: integral of B(t - x_g) t^m dt = sum_j C(m, j) x_g^(m-j) mu_j.
    let a = DMatrix::from_fn(nc, nc, |m, g| {
        (0..=m)
            .map(|j| binomial(m, j) * offsets[g].powi((m - j) as i32) * mu[j])
            .sum::<f64>()
    });
    let sv = a.singular_values();
    let (smax, smin) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularKernel(cond));
    }
    let mut rhs = DVector::zeros(nc);
    rhs[0] = 1.0;
    let c = a.lu().solve(&rhs).ok_or(Error::SingularKernel(cond))?;
    let mut coeffs: Vec<f64> = c.iter().copied().collect();
    // The exact solution is symmetric; remove round-off asymmetry.
    for g in 0..nc / 2 {
        let avg = 0.5 * (coeffs[g] + coeffs[nc - 1 - g]);
        coeffs[g] = avg;
        coeffs[nc - 1 - g] = avg;
    }
    Ok(SiacKernel {
        moments,
        spline_order: order,
        offsets,
        coeffs,
    })
}

impl SiacKernel {
    /// The consistency-only kernel: one order-1 B-spline.
    pub fn moving_average() -> Self {
        SiacKernel {
            moments: 0,
            spline_order: 1,
            offsets: vec![0.0],
            coeffs: vec![1.0],
        }
    }

    pub fn spline_degree(&self) -> usize {
        self.spline_order - 1
    }

    /// Half-width of the support in units of the scaling.
    pub fn support_radius(&self) -> f64 {
        (self.moments + self.spline_order) as f64 / 2.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        let half = self.spline_order as f64 / 2.0;
        self.offsets
            .iter()
            .zip(&self.coeffs)
            .filter(|(&xg, _)| (t - xg).abs() <= half)
            .map(|(&xg, &c)| c * bspline(self.spline_order, t - xg))
            .sum()
    }

    /// Points where the kernel's polynomial pieces change, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        let r = self.support_radius();
        let count = self.moments + self.spline_order;
        (0..=count).map(|m| -r + m as f64).collect()
    }

    pub fn descriptor(&self, scaling: KernelScaling) -> KernelDescriptor {
        KernelDescriptor {
            moments: self.moments,
            spline_degree: self.spline_degree(),
            scaling: scaling.0,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn from_descriptor(d: &KernelDescriptor) -> Result<(Self, KernelScaling)> {
        let k = solve_coefficients(d.moments, d.spline_degree)?;
        if k.coeffs.len() != d.coeffs.len() {
            return Err(Error::ShapeMismatch {
                layer: "kernel coefficients".into(),
                expected: k.coeffs.len().to_string(),
                found: d.coeffs.len().to_string(),
            });
        }
        let kernel = SiacKernel {
            coeffs: d.coeffs.clone(),
            ..k
        };
        Ok((kernel, KernelScaling::new(d.scaling)?))
    }
}

impl KernelDescriptor {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Corrupt(format!("kernel descriptor: {e}")))
    }
}
