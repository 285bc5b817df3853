//! Hybrid filtering of a Sod solution. Without a model path only the SIAC
//! stages run.
//!
//! cargo run --release --example hybrid_euler -- [model.bin]

use siac_hybrid::datagen::riemann_reference;
use siac_hybrid::dg::{eval_grid, gauss_legendre, GRID_NODES};
use siac_hybrid::harness::{grid_errors, riemann_reference_grids, unfiltered_primitives};
use siac_hybrid::hybrid::{hybrid_filter_euler, HybridConfig, Label};
use siac_hybrid::nn::load_model;
use siac_hybrid::solvers::{InitialCondition, RunDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = match std::env::args().nth(1) {
        Some(path) => Some(load_model(path.as_ref())?.0),
        None => None,
    };
    let ic = InitialCondition::Sod;
    let fields = RunDescriptor::new(ic, 2, 128).run()?;
    let filtered = hybrid_filter_euler(&fields, &HybridConfig::default(), model.as_ref())?;

    let velocity = filtered.variable("velocity")?;
    for label in [Label::SiacGlobal, Label::SiacMa, Label::Nn, Label::Hermite, Label::Unfiltered] {
        println!("{:>12}: {} points", label.name(), velocity.count(label));
    }
    velocity.write_csv("sod_velocity_filtered.csv".as_ref())?;

    let grid = eval_grid(&fields.rho, &gauss_legendre(GRID_NODES)?);
    let reference = riemann_reference_grids(&riemann_reference(ic)?, fields.time, &grid);
    let raw = unfiltered_primitives(&fields)?;
    for w in &filtered.windows {
        let (_, before) = grid_errors(&raw.velocity, &reference.velocity, w.elements())?;
        let (_, after) = grid_errors(&velocity.grid, &reference.velocity, w.elements())?;
        println!("window {}..={}: velocity max error {before:.3e} -> {after:.3e}", w.lo, w.hi);
    }
    Ok(())
}
