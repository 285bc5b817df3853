use serde::{Deserialize, Serialize};

use super::kernel::{KernelScaling, SiacKernel};
use crate::dg::{gauss_legendre, project_values, DGField, GridData, QuadratureRule};

/// What to do when the kernel support leaves the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Keep the unfiltered value and mark the point as unfiltered.
    #[default]
    Fallback,
    /// Extend the field periodically.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredGrid {
    pub grid: GridData,
    /// `false` where the boundary fallback kept the unfiltered value.
    pub filtered: Vec<bool>,
}

const BREAK_TOL: f64 = 1e-13;

/// Convolves `field` with the scaled kernel at `x`.
///
/// The integral is split at every kernel knot and element interface, and
/// each piece (a polynomial product) is integrated exactly by Gauss
/// quadrature. Returns `None` when the support leaves a non-periodic domain.
pub fn filter_at(
    field: &DGField,
    kernel: &SiacKernel,
    scaling: KernelScaling,
    quad: &QuadratureRule,
    x: f64,
    boundary: BoundaryPolicy,
) -> Option<f64> {
    let mesh = &field.mesh;
    let hs = scaling.0;
    let radius = kernel.support_radius();
    let reach = hs * radius;
    let slack = 1e-12 * mesh.length();
    if boundary == BoundaryPolicy::Fallback && (x - reach < mesh.lo - slack || x + reach > mesh.hi + slack)
    {
        return None;
    }

    // Breakpoints in kernel coordinates t, where the source point is x - H t.
    let mut breaks = kernel.breakpoints();
    let j_first = ((x - reach - mesh.lo) / mesh.h).ceil() as i64;
    let j_last = ((x + reach - mesh.lo) / mesh.h).floor() as i64;
    for j in j_first..=j_last {
        let t = (x - mesh.lo - j as f64 * mesh.h) / hs;
        if t > -radius && t < radius {
            breaks.push(t);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < BREAK_TOL);

    let n = mesh.n_elements as i64;
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        if tb - ta < BREAK_TOL {
            continue;
        }
        // Element containing this piece, found from its midpoint.
        let src_mid = x - hs * 0.5 * (ta + tb);
        let j = ((src_mid - mesh.lo) / mesh.h).floor() as i64;
        let (elem, shift) = if boundary == BoundaryPolicy::Periodic {
            let e = j.rem_euclid(n);
            (e as usize, (j - e) as f64 * mesh.h)
        } else {
            (j.clamp(0, n - 1) as usize, 0.0)
        };
        let center = mesh.center(elem) + shift;
        let coeffs = field.element(elem);
        let half = 0.5 * (tb - ta);
        let mid = 0.5 * (ta + tb);
        let mut piece = 0.0;
        for (&s, &wq) in quad.nodes.iter().zip(&quad.weights) {
            let t = mid + half * s;
            let src = x - hs * t;
            let xi = (2.0 * (src - center) / mesh.h).clamp(-1.0, 1.0);
            piece += wq * kernel.eval(t) * crate::dg::eval_modal(coeffs, xi);
        }
        total += half * piece;
    }
    Some(total)
}

/// Quadrature rule that integrates a kernel piece times a degree-`p` piece exactly.
pub fn exact_rule(kernel: &SiacKernel, degree: usize) -> QuadratureRule {
    let poly_degree = kernel.spline_degree() + degree;
    gauss_legendre((poly_degree / 2 + 1).min(crate::dg::MAX_QUADRATURE_NODES)).expect("valid size")
}

/// Filters `field` at arbitrary points.
pub fn siac_filter_points(
    field: &DGField,
    kernel: &SiacKernel,
    scaling: KernelScaling,
    points: &[f64],
    boundary: BoundaryPolicy,
) -> (Vec<f64>, Vec<bool>) {
    let quad = exact_rule(kernel, field.degree);
    points
        .iter()
        .map(|&x| match filter_at(field, kernel, scaling, &quad, x, boundary) {
            Some(v) => (v, true),
            None => (field.eval(x), false),
        })
        .unzip()
}

/// Filters `field` at the nodes of `nodes` in every element.
pub fn siac_filter(
    field: &DGField,
    kernel: &SiacKernel,
    scaling: KernelScaling,
    nodes: &QuadratureRule,
    boundary: BoundaryPolicy,
) -> FilteredGrid {
    let x = crate::dg::grid_points(&field.mesh, nodes);
    let (values, filtered) = siac_filter_points(field, kernel, scaling, &x, boundary);
    FilteredGrid {
        grid: GridData {
            x,
            values,
            nodes_per_element: nodes.len(),
        },
        filtered,
    }
}

/// Consistency-only filter: a single order-1 B-spline (moving average).
pub fn moving_average_filter(
    field: &DGField,
    scaling: KernelScaling,
    nodes: &QuadratureRule,
    boundary: BoundaryPolicy,
) -> FilteredGrid {
    siac_filter(field, &SiacKernel::moving_average(), scaling, nodes, boundary)
}

/// Projection of the filtered approximation back onto degree `p` per element.
pub fn filtered_field(
    field: &DGField,
    kernel: &SiacKernel,
    scaling: KernelScaling,
    boundary: BoundaryPolicy,
) -> DGField {
    let nodes = gauss_legendre((field.degree + 2).min(crate::dg::MAX_QUADRATURE_NODES)).unwrap();
    let fg = siac_filter(field, kernel, scaling, &nodes, boundary);
    project_values(&field.mesh, field.degree, &nodes, &fg.grid.values)
}
