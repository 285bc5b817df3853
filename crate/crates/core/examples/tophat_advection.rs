//! Advects a top-hat with DG and writes the grid values next to the exact
//! solution.
//!
//! cargo run --release --example tophat_advection -- [a] [p] [out.csv]

use siac_hybrid::dg::{eval_grid, gauss_legendre, GRID_NODES};
use siac_hybrid::solvers::{advect_solve, AdvectionOptions, AdvectionProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let a: f64 = args.get(1).map_or(Ok(2.0), |s| s.parse())?;
    let p: usize = args.get(2).map_or(Ok(2), |s| s.parse())?;
    let out = args.get(3).cloned().unwrap_or_else(|| "tophat.csv".into());

    let problem = AdvectionProblem::top_hat(a, 0.0, 1.0, 1.0);
    let run = advect_solve(&problem, p, 128, AdvectionOptions::default())?;
    let grid = eval_grid(&run.field, &gauss_legendre(GRID_NODES)?);

    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["x", "dg", "exact"])?;
    let mut max_err: f64 = 0.0;
    for (x, v) in grid.x.iter().zip(&grid.values) {
        let e = problem.exact(*x);
        max_err = max_err.max((v - e).abs());
        w.write_record([x.to_string(), v.to_string(), e.to_string()])?;
    }
    w.flush()?;
    println!("jumps at {:?}; max pointwise error {max_err:.3} (Gibbs overshoot); wrote {out}", problem.jump_locations());
    Ok(())
}
