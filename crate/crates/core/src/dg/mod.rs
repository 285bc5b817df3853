//! Uniform 1D meshes, the modal Legendre basis, Gauss–Legendre quadrature,
//! L2 projection and pointwise evaluation of DG fields.

mod io;
pub mod legendre;
mod quadrature;

pub use legendre::{basis_values, eval_modal, legendre_eval};
pub use quadrature::{gauss_legendre, QuadratureRule, MAX_QUADRATURE_NODES};

use crate::error::{Error, Result};

/// Number of Gauss nodes per element used for every downstream grid.
pub const GRID_NODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    pub lo: f64,
    pub hi: f64,
    pub n_elements: usize,
    pub h: f64,
}

impl Mesh {
    pub fn new(lo: f64, hi: f64, n_elements: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidMesh("mesh needs at least one element".into()));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidMesh(format!("bad domain [{lo}, {hi}]")));
        }
        Ok(Mesh {
            lo,
            hi,
            n_elements,
            h: (hi - lo) / n_elements as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn left(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    pub fn right(&self, i: usize) -> f64 {
        if i + 1 == self.n_elements {
            self.hi
        } else {
            self.lo + (i + 1) as f64 * self.h
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.h
    }

    /// Element containing `x` (right-continuous; clamped to the mesh).
    pub fn element_of(&self, x: f64) -> usize {
        let i = ((x - self.lo) / self.h).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.n_elements - 1)
        }
    }

    pub fn to_reference(&self, i: usize, x: f64) -> f64 {
        2.0 * (x - self.center(i)) / self.h
    }

    pub fn to_physical(&self, i: usize, xi: f64) -> f64 {
        self.center(i) + 0.5 * self.h * xi
    }

    /// Wraps `x` periodically into `[lo, hi)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.length();
        let mut y = (x - self.lo).rem_euclid(l) + self.lo;
        if y >= self.hi {
            y -= l;
        }
        y
    }
}

/// Modal DG approximation: `p + 1` scaled Legendre coefficients per element.
#[derive(Debug, Clone, PartialEq)]
pub struct DGField {
    pub mesh: Mesh,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl DGField {
    pub fn zeros(mesh: Mesh, degree: usize) -> Self {
        DGField {
            mesh,
            degree,
            coeffs: vec![0.0; mesh.n_elements * (degree + 1)],
        }
    }

    pub fn from_coeffs(mesh: Mesh, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.n_elements * (degree + 1) {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                mesh.n_elements * (degree + 1),
                coeffs.len()
            )));
        }
        Ok(DGField { mesh, degree, coeffs })
    }

    pub fn constant(mesh: Mesh, degree: usize, value: f64) -> Self {
        let mut f = Self::zeros(mesh, degree);
        for i in 0..mesh.n_elements {
            f.element_mut(i)[0] = value;
        }
        f
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.degree + 1
    }

    #[inline]
    pub fn element(&self, i: usize) -> &[f64] {
        let m = self.n_modes();
        &self.coeffs[i * m..(i + 1) * m]
    }

    #[inline]
    pub fn element_mut(&mut self, i: usize) -> &mut [f64] {
        let m = self.n_modes();
        &mut self.coeffs[i * m..(i + 1) * m]
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.element(i)[0]
    }

    pub fn eval_element(&self, i: usize, xi: f64) -> f64 {
        eval_modal(self.element(i), xi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.mesh.element_of(x);
        let xi = self.mesh.to_reference(i, x).clamp(-1.0, 1.0);
        self.eval_element(i, xi)
    }

    /// Domain integral of the field.
    pub fn integral(&self) -> f64 {
        (0..self.mesh.n_elements).map(|i| self.mean(i)).sum::<f64>() * self.mesh.h
    }
}

/// Point values on an element-ordered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub nodes_per_element: usize,
}

impl GridData {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Point-index range covering elements `lo..=hi`.
    pub fn element_range(&self, lo: usize, hi: usize) -> std::ops::Range<usize> {
        lo * self.nodes_per_element..(hi + 1) * self.nodes_per_element
    }

    pub fn element_of_point(&self, k: usize) -> usize {
        k / self.nodes_per_element
    }

    pub fn with_values(&self, values: Vec<f64>) -> GridData {
        assert_eq!(values.len(), self.x.len());
        GridData {
            x: self.x.clone(),
            values,
            nodes_per_element: self.nodes_per_element,
        }
    }
}

/// Physical locations of the quadrature nodes of every element.
pub fn grid_points(mesh: &Mesh, quad: &QuadratureRule) -> Vec<f64> {
    (0..mesh.n_elements)
        .flat_map(|i| quad.nodes.iter().map(move |&xi| mesh.to_physical(i, xi)))
        .collect()
}

/// L2 projection of `f` onto piecewise polynomials of degree `p`.
pub fn project(f: impl Fn(f64) -> f64, mesh: &Mesh, p: usize, quad: &QuadratureRule) -> DGField {
    debug_assert!(quad.len() > p, "quadrature too coarse for degree {p}");
    let mut field = DGField::zeros(*mesh, p);
    let mut phi = vec![0.0; p + 1];
    for i in 0..mesh.n_elements {
        let c = field.element_mut(i);
        for (&xi, &w) in quad.nodes.iter().zip(&quad.weights) {
            let v = f(mesh.to_physical(i, xi));
            basis_values(xi, &mut phi);
            for (cj, pj) in c.iter_mut().zip(&phi) {
                *cj += 0.5 * w * v * pj;
            }
        }
    }
    field
}

/// Projects point values given at the nodes of `quad` (element-ordered).
pub fn project_values(mesh: &Mesh, p: usize, quad: &QuadratureRule, values: &[f64]) -> DGField {
    assert_eq!(values.len(), mesh.n_elements * quad.len());
    let mut field = DGField::zeros(*mesh, p);
    let mut phi = vec![0.0; p + 1];
    let nq = quad.len();
    for i in 0..mesh.n_elements {
        let c = field.element_mut(i);
        for (q, (&xi, &w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
            basis_values(xi, &mut phi);
            let v = values[i * nq + q];
            for (cj, pj) in c.iter_mut().zip(&phi) {
                *cj += 0.5 * w * v * pj;
            }
        }
    }
    field
}

/// Evaluates `field` at the nodes of `quad` in every element.
pub fn eval_grid(field: &DGField, quad: &QuadratureRule) -> GridData {
    let mesh = &field.mesh;
    let mut x = Vec::with_capacity(mesh.n_elements * quad.len());
    let mut values = Vec::with_capacity(mesh.n_elements * quad.len());
    for i in 0..mesh.n_elements {
        for &xi in &quad.nodes {
            x.push(mesh.to_physical(i, xi));
            values.push(field.eval_element(i, xi));
        }
    }
    GridData {
        x,
        values,
        nodes_per_element: quad.len(),
    }
}

pub use io::{load_field, load_grid_dump, read_grid_csv, save_field, save_grid_dump, write_grid_csv};
