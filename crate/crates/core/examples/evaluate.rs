//! Runs the command pipeline at a very small scale: data generation,
//! training and evaluation into a scratch directory.
//!
//! cargo run --release --example evaluate -- [out_dir]

use siac_hybrid::harness::{cmd_evaluate, cmd_generate_data, cmd_train, ExperimentConfig, Preset};

fn main() -> siac_hybrid::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut cfg = ExperimentConfig::preset(Preset::Desk, 3);
    cfg.out_dir = std::env::args().nth(1).unwrap_or_else(|| "out_small".into()).into();
    cfg.datagen.per_speed = 1;
    cfg.datagen.validation_runs = 2;
    cfg.datagen.validation_per_ic = 2;
    cfg.train.max_epochs = 20;
    cfg.evaluate.lax_runs = 2;
    cfg.evaluate.sod_runs = 2;
    cfg.evaluate.shu_osher_runs = 2;
    cfg.evaluate.reference_elements = 2000;
    cfg.evaluate.heldout_per_speed = 1;

    println!("corpus digest {}", cmd_generate_data(&cfg)?);
    cmd_train(&cfg)?;
    let report = cmd_evaluate(&cfg, None)?;
    for case in ["top_hat", "lax", "sod", "shu_osher"] {
        let var = if case == "top_hat" { "u" } else { "density" };
        if let Ok(row) = report.quartile_row(case, var) {
            let m = |q: [(f64, f64, f64); 3]| q.map(|t| format!("{:.3e}", t.1)).join(" / ");
            println!("{case:>9} {var}: {} windows, median linf unfiltered / siac / hybrid = {}", row.count, m(row.linf));
        }
    }
    println!("tables in {}", cfg.evaluate_dir().display());
    Ok(())
}
