//! Central B-splines, SIAC kernel construction and exact convolution
//! filtering of DG fields.

mod bspline;
mod filter;
mod kernel;

pub use bspline::{bspline, MAX_SPLINE_ORDER};
pub use filter::{
    exact_rule, filter_at, filtered_field, moving_average_filter, siac_filter, siac_filter_points,
    BoundaryPolicy, FilteredGrid,
};
pub use kernel::{
    bspline_moments, solve_coefficients, GlobalKernelSpec, KernelDescriptor, KernelScaling,
    SiacKernel,
};
