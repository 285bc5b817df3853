//! Builds the standard SIAC kernels, checks polynomial reproduction and
//! filters a smooth advection solution.
//!
//! cargo run --release --example siac_kernel

use siac_hybrid::dg::{eval_grid, gauss_legendre, GRID_NODES};
use siac_hybrid::siac::{siac_filter, BoundaryPolicy, GlobalKernelSpec, KernelScaling};
use siac_hybrid::solvers::{advect_solve, AdvectionInitial, AdvectionOptions, AdvectionProblem};

fn main() -> siac_hybrid::Result<()> {
    for p in 1..=3 {
        let kernel = GlobalKernelSpec::Standard.build(p)?;
        // K * x^k = x^k for k <= 2p, checked by quadrature on the kernel support
        let q = gauss_legendre(16)?;
        let r = kernel.support_radius();
        let mut worst: f64 = 0.0;
        for k in 0..=kernel.moments {
            let x = 0.37;
            let mut v = 0.0;
            for w in kernel.breakpoints().windows(2) {
                v += q.integrate_on(w[0], w[1], |t| kernel.eval(t) * (x - t).powi(k as i32));
            }
            worst = worst.max((v - x.powi(k as i32)).abs());
        }
        println!("p = {p}: {} B-splines of order {}, support radius {r}, reproduction error {worst:.2e}", kernel.coeffs.len(), kernel.spline_order);
    }

    let problem = AdvectionProblem {
        wave_speed: 1.0,
        initial: AdvectionInitial::Sine { wavelength: 10.0 },
        final_time: 2.0,
        lo: -5.0,
        hi: 5.0,
    };
    let nodes = gauss_legendre(GRID_NODES)?;
    for n in [16, 32, 64] {
        let run = advect_solve(&problem, 2, n, AdvectionOptions::default())?;
        let raw = eval_grid(&run.field, &nodes);
        let kernel = GlobalKernelSpec::Standard.build(2)?;
        let filtered = siac_filter(&run.field, &kernel, KernelScaling::new(run.field.mesh.h)?, &nodes, BoundaryPolicy::Periodic);
        let err = |v: &[f64]| {
            let s: f64 = raw.x.iter().zip(v).map(|(x, v)| (v - problem.exact(*x)).powi(2)).sum();
            (s / v.len() as f64).sqrt()
        };
        println!("N = {n:3}: unfiltered {:.3e}  filtered {:.3e}", err(&raw.values), err(&filtered.grid.values));
    }
    Ok(())
}
