//! Multiwavelet troubled-cell detection and discontinuity windows on the
//! Lax shock tube.
//!
//! cargo run --release --example detect_windows -- [p]

use siac_hybrid::detect::multiwavelet_detect;
use siac_hybrid::hybrid::{detect_windows, HybridConfig};
use siac_hybrid::solvers::{InitialCondition, RiemannSolution, RunDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p: usize = std::env::args().nth(1).map_or(Ok(2), |s| s.parse())?;
    let ic = InitialCondition::Lax;
    let fields = RunDescriptor::new(ic, p, 128).run()?;
    let config = HybridConfig::default();

    let raw = multiwavelet_detect(&fields.rho, config.threshold)?;
    println!("troubled cells of the raw density: {raw:?}");
    let windows = detect_windows(&fields.rho, &config)?;
    let (l, r) = ic.riemann_states().unwrap();
    let sol = RiemannSolution::solve(l, r)?;
    let t = fields.time;
    println!("exact shock at {:?}, contact at {:.4}", sol.shock_speeds().iter().map(|s| s * t).collect::<Vec<_>>(), sol.contact_position(0.0, t));
    let mesh = fields.mesh();
    for w in &windows {
        let jd = w.j_dagger.map(|j| format!("{j} [{:.3}, {:.3}]", mesh.left(j), mesh.right(j)));
        println!("window {}..={} (troubled {}..={}), discontinuity cell {}", w.lo, w.hi, w.s_lo, w.s_hi, jd.unwrap_or("-".into()));
    }
    Ok(())
}
