//! Solves a shock tube with the limited DG scheme and writes the
//! primitive variables.
//!
//! cargo run --release --example shock_tube -- [sod|lax|shu_osher] [p] [N]

use siac_hybrid::dg::{gauss_legendre, GRID_NODES};
use siac_hybrid::solvers::{InitialCondition, RunDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let ic = InitialCondition::parse(args.get(1).map_or("sod", String::as_str))?;
    let p: usize = args.get(2).map_or(Ok(2), |s| s.parse())?;
    let n: usize = args.get(3).map_or(Ok(128), |s| s.parse())?;

    let desc = RunDescriptor::new(ic, p, n);
    print!("{}", desc.to_toml());
    let fields = desc.run()?;
    let g = fields.primitive_grids(&gauss_legendre(GRID_NODES)?);
    let out = format!("{}_p{p}_n{n}.csv", ic.name());
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["x", "density", "velocity", "pressure", "entropy"])?;
    for k in 0..g.rho.len() {
        w.write_record([g.rho.x[k], g.rho.values[k], g.velocity.values[k], g.pressure.values[k], g.entropy.values[k]].map(|v| v.to_string()))?;
    }
    w.flush()?;
    let mass = fields.rho.integral();
    println!("total mass {mass:.10}; wrote {out}");
    Ok(())
}
