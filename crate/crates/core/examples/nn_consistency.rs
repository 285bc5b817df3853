//! The learned filter maps constant windows to themselves for any weights,
//! and its gradient matches finite differences.
//!
//! cargo run --release --example nn_consistency

use siac_hybrid::nn::{ArchitectureConfig, ConvFilterParams};

fn main() -> siac_hybrid::Result<()> {
    let arch = ArchitectureConfig::desk();
    for seed in 0..3 {
        let params = ConvFilterParams::init(arch, seed)?;
        let c = 0.7 + seed as f64;
        let out = params.forward(&vec![c; arch.input_length])?;
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        println!("seed {seed}: {} parameters, normaliser {:.4}, mean of f(c) - c = {:.1e}", params.n_params(), params.normalizer()?, mean - c);
    }

    let small = ArchitectureConfig { n_hidden_layers: 1, hidden_channels: 4, ..arch };
    let params = ConvFilterParams::init(small, 5)?;
    let x: Vec<f64> = (0..small.input_length).map(|i| if i < 18 { 0.1 } else { 0.9 } + 0.01 * (i as f64).sin()).collect();
    let t: Vec<f64> = (0..small.input_length).map(|i| if i < 18 { 0.0 } else { 1.0 }).collect();
    let g = params.backward(&x, &t)?;
    let loss = |p: &ConvFilterParams| -> siac_hybrid::Result<f64> {
        Ok(p.forward(&x)?.iter().zip(&t).map(|(a, b)| 0.5 * (a - b).powi(2)).sum())
    };
    let (li, wi, eps) = (0, 3, 1e-6);
    let mut plus = params.clone();
    plus.layers[li].weights[wi] += eps;
    let mut minus = params.clone();
    minus.layers[li].weights[wi] -= eps;
    let fd = (loss(&plus)? - loss(&minus)?) / (2.0 * eps);
    println!("dL/dw: backward {:.8e}, central difference {fd:.8e}", g[li][wi]);
    Ok(())
}
