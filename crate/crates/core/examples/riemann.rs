//! Exact solutions of the Sod and Lax shock tubes.
//!
//! cargo run --release --example riemann

use siac_hybrid::solvers::{InitialCondition, RiemannSolution};

fn main() -> siac_hybrid::Result<()> {
    for ic in [InitialCondition::Sod, InitialCondition::Lax] {
        let (l, r) = ic.riemann_states().expect("two-state problem");
        let sol = RiemannSolution::solve(l, r)?;
        let t = ic.default_final_time();
        println!("{}: p* = {:.10}, u* = {:.10}, rho*L = {:.6}, rho*R = {:.6}", ic.name(), sol.p_star, sol.u_star, sol.rho_star_left, sol.rho_star_right);
        println!("  waves {:?} / {:?}; shocks at {:?}; contact at {:.4} (t = {t})", sol.left_wave, sol.right_wave,
            sol.shock_speeds().iter().map(|s| s * t).collect::<Vec<_>>(), sol.contact_position(0.0, t));
        for x in [-4.0, -1.0, 0.0, 1.0, 2.5, 4.0] {
            let s = sol.sample(x / t);
            println!("  x = {x:5.1}: rho {:.5} u {:.5} p {:.5}", s.rho, s.u, s.p);
        }
    }
    Ok(())
}
