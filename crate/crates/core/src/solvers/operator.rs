//! Modal DG semi-discretization of a 1D conservation law with a local
//! Lax–Friedrichs flux.

use crate::dg::legendre::{basis_values, basis_values_with_derivatives, mode_scale};
use crate::dg::{gauss_legendre, DGField, Mesh, QuadratureRule};

pub trait ConservationLaw<const NV: usize> {
    fn flux(&self, u: &[f64; NV]) -> [f64; NV];
    fn max_speed(&self, u: &[f64; NV]) -> f64;
}

/// Boundary treatment for all variables of a system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemBoundary<const NV: usize> {
    Periodic,
    /// Constant ghost states outside the left and right ends.
    Dirichlet { left: [f64; NV], right: [f64; NV] },
}

/// Local Lax–Friedrichs (Rusanov) flux.
pub fn llf_flux<const NV: usize, L: ConservationLaw<NV>>(
    law: &L,
    ul: &[f64; NV],
    ur: &[f64; NV],
) -> [f64; NV] {
    let fl = law.flux(ul);
    let fr = law.flux(ur);
    let alpha = law.max_speed(ul).max(law.max_speed(ur));
    std::array::from_fn(|v| 0.5 * (fl[v] + fr[v]) - 0.5 * alpha * (ur[v] - ul[v]))
}

/// State vectors are variable-major: `u[(v * N + j) * (p + 1) + i]`.
pub struct DgOperator<const NV: usize> {
    pub mesh: Mesh,
    pub degree: usize,
    quad: QuadratureRule,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    phi_right: Vec<f64>,
    phi_left: Vec<f64>,
}

impl<const NV: usize> DgOperator<NV> {
    pub fn new(mesh: Mesh, degree: usize, volume_nodes: usize) -> Self {
        let quad = gauss_legendre(volume_nodes).expect("valid quadrature size");
        let m = degree + 1;
        let mut phi = vec![0.0; quad.len() * m];
        let mut dphi = vec![0.0; quad.len() * m];
        for (q, &xi) in quad.nodes.iter().enumerate() {
            basis_values_with_derivatives(xi, &mut phi[q * m..(q + 1) * m], &mut dphi[q * m..(q + 1) * m]);
        }
        let phi_right: Vec<f64> = (0..m).map(mode_scale).collect();
        let phi_left: Vec<f64> = (0..m)
            .map(|i| if i % 2 == 0 { mode_scale(i) } else { -mode_scale(i) })
            .collect();
        DgOperator {
            mesh,
            degree,
            quad,
            phi,
            dphi,
            phi_right,
            phi_left,
        }
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.degree + 1
    }

    pub fn state_len(&self) -> usize {
        NV * self.mesh.n_elements * self.n_modes()
    }

    pub fn volume_quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    #[inline]
    fn coeffs<'a>(&self, u: &'a [f64], v: usize, j: usize) -> &'a [f64] {
        let m = self.n_modes();
        let off = (v * self.mesh.n_elements + j) * m;
        &u[off..off + m]
    }

    /// Value of every variable at the left (`-1`) or right (`+1`) face of element `j`.
    #[inline]
    pub fn trace(&self, u: &[f64], j: usize, right: bool) -> [f64; NV] {
        let phi = if right { &self.phi_right } else { &self.phi_left };
        std::array::from_fn(|v| self.coeffs(u, v, j).iter().zip(phi).map(|(a, b)| a * b).sum())
    }

    /// Left and right element traces of every variable.
    pub fn traces(&self, u: &[f64]) -> (Vec<[f64; NV]>, Vec<[f64; NV]>) {
        let n = self.mesh.n_elements;
        ((0..n).map(|j| self.trace(u, j, false)).collect(), (0..n).map(|j| self.trace(u, j, true)).collect())
    }

    /// State at volume quadrature node `q` of element `j`.
    #[inline]
    pub fn node_state(&self, u: &[f64], j: usize, q: usize) -> [f64; NV] {
        let m = self.n_modes();
        let phi = &self.phi[q * m..(q + 1) * m];
        std::array::from_fn(|v| self.coeffs(u, v, j).iter().zip(phi).map(|(a, b)| a * b).sum())
    }

    pub fn residual<L: ConservationLaw<NV>>(
        &self,
        law: &L,
        bc: &SystemBoundary<NV>,
        u: &[f64],
        out: &mut [f64],
    ) {
        let n = self.mesh.n_elements;
        let m = self.n_modes();
        let inv_h = 1.0 / self.mesh.h;
        let eval = |q: [f64; NV]| (q, law.flux(&q), law.max_speed(&q));
        let interface = |l: &([f64; NV], [f64; NV], f64), r: &([f64; NV], [f64; NV], f64)| -> [f64; NV] {
            let alpha = l.2.max(r.2);
            std::array::from_fn(|v| 0.5 * (l.1[v] + r.1[v]) - 0.5 * alpha * (r.0[v] - l.0[v]))
        };
        let (outer_left, outer_right) = match bc {
            SystemBoundary::Periodic => (eval(self.trace(u, n - 1, true)), eval(self.trace(u, 0, false))),
            SystemBoundary::Dirichlet { left, right } => (eval(*left), eval(*right)),
        };

        // F_j is the flux at the left face of element j.
        let mut f_left = interface(&outer_left, &eval(self.trace(u, 0, false)));
        let mut vol = vec![[0.0; NV]; m];
        // derivatives of the constant mode vanish
        let volume_nodes = if m > 1 { self.quad.len() } else { 0 };
        for j in 0..n {
            let here = eval(self.trace(u, j, true));
            let there = if j + 1 < n { eval(self.trace(u, j + 1, false)) } else { outer_right };
            let f_right = interface(&here, &there);

            vol.fill([0.0; NV]);
            for (q, &w) in self.quad.weights.iter().enumerate().take(volume_nodes) {
                let f = law.flux(&self.node_state(u, j, q));
                let dphi = &self.dphi[q * m..(q + 1) * m];
                for i in 0..m {
                    for v in 0..NV {
                        vol[i][v] += w * f[v] * dphi[i];
                    }
                }
            }
            for v in 0..NV {
                let off = (v * n + j) * m;
                for i in 0..m {
                    out[off + i] =
                        inv_h * (vol[i][v] - f_right[v] * self.phi_right[i] + f_left[v] * self.phi_left[i]);
                }
            }
            f_left = f_right;
        }
    }

    /// Calls `visit` with every volume-node and trace state; stops at the
    /// first error.
    pub fn try_for_each_state<E>(
        &self,
        u: &[f64],
        mut visit: impl FnMut(usize, [f64; NV]) -> std::result::Result<(), E>,
    ) -> std::result::Result<(), E> {
        for j in 0..self.mesh.n_elements {
            if self.degree == 0 {
                // constant elements: every state equals the mean
                visit(j, self.trace(u, j, true))?;
                continue;
            }
            for q in 0..self.quad.len() {
                visit(j, self.node_state(u, j, q))?;
            }
            visit(j, self.trace(u, j, false))?;
            visit(j, self.trace(u, j, true))?;
        }
        Ok(())
    }

    /// Largest wave speed over all volume nodes and traces.
    pub fn max_speed<L: ConservationLaw<NV>>(&self, law: &L, u: &[f64]) -> f64 {
        let mut s = 0.0f64;
        let _ = self.try_for_each_state(u, |_, q| {
            let c = law.max_speed(&q);
            // NaN propagates so callers can detect it
            s = if c.is_nan() { f64::NAN } else { s.max(c) };
            if s.is_nan() {
                Err(())
            } else {
                Ok(())
            }
        });
        s
    }

    /// Splits a state vector into per-variable fields.
    pub fn unpack(&self, u: &[f64]) -> [DGField; NV] {
        let len = self.mesh.n_elements * self.n_modes();
        std::array::from_fn(|v| DGField {
            mesh: self.mesh,
            degree: self.degree,
            coeffs: u[v * len..(v + 1) * len].to_vec(),
        })
    }

    pub fn pack(&self, fields: &[&DGField; NV]) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.state_len());
        for f in fields {
            debug_assert_eq!(f.degree, self.degree);
            u.extend_from_slice(&f.coeffs);
        }
        u
    }
}

/// Projects a vector-valued function onto the modal basis.
pub fn project_system<const NV: usize>(
    f: impl Fn(f64) -> [f64; NV],
    mesh: &Mesh,
    degree: usize,
    quad: &QuadratureRule,
) -> Vec<f64> {
    let n = mesh.n_elements;
    let m = degree + 1;
    let mut u = vec![0.0; NV * n * m];
    let mut phi = vec![0.0; m];
    for j in 0..n {
        for (&xi, &w) in quad.nodes.iter().zip(&quad.weights) {
            let val = f(mesh.to_physical(j, xi));
            basis_values(xi, &mut phi);
            for v in 0..NV {
                let off = (v * n + j) * m;
                for i in 0..m {
                    u[off + i] += 0.5 * w * val[v] * phi[i];
                }
            }
        }
    }
    u
}
