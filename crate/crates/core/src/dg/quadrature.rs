use super::legendre::legendre_all_with_derivatives;
use crate::error::{Error, Result};

pub const MAX_QUADRATURE_NODES: usize = 16;

/// Gauss–Legendre rule on the reference element [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over [-1, 1].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integrates `f` over [a, b].
    pub fn integrate_on(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.integrate(|xi| f(mid + half * xi))
    }
}

/// Nodes and weights by Newton iteration on the roots of `P_n`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_QUADRATURE_NODES {
        return Err(Error::UnsupportedQuadrature(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut vals = vec![0.0; n + 1];
    let mut ders = vec![0.0; n + 1];
    let nf = n as f64;
    for i in 0..n {
        // Tricomi's initial guess, ascending order after the sign flip below.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            legendre_all_with_derivatives(x, &mut vals, &mut ders);
            let dx = vals[n] / ders[n];
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        legendre_all_with_derivatives(x, &mut vals, &mut ders);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * ders[n] * ders[n]);
    }
    // Exact zero for odd n keeps symmetric rules symmetric.
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}
