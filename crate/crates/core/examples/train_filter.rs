//! Generates a small top-hat corpus, trains the convolutional filter and
//! saves the model.
//!
//! cargo run --release --example train_filter -- [per_speed] [epochs] [model.bin]

use siac_hybrid::datagen::{generate_corpus, DatagenConfig};
use siac_hybrid::nn::{save_model, train, ArchitectureConfig, ModelMeta, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().collect();
    let per_speed: usize = args.get(1).map_or(Ok(2), |s| s.parse())?;
    let epochs: usize = args.get(2).map_or(Ok(40), |s| s.parse())?;
    let out = args.get(3).cloned().unwrap_or_else(|| "model.bin".into());

    let config = DatagenConfig { per_speed, validation_per_ic: 4, validation_runs: 4, ..DatagenConfig::desk(1) };
    let corpus = generate_corpus(&config)?;
    println!("{} training / {} validation windows, digest {}", corpus.train.len(), corpus.validation.len(), corpus.digest());

    let arch = ArchitectureConfig::desk();
    let tc = TrainConfig { max_epochs: epochs, ..TrainConfig::desk(1) };
    let outcome = train(arch, &corpus.train_pairs(), &corpus.validation_pairs(), &tc)?;
    for r in outcome.history.iter().step_by((epochs / 10).max(1)) {
        println!("epoch {:4}: train {:.3e}  val {:.3e}", r.epoch, r.train_mse, r.val_mse);
    }
    save_model(&outcome.params, &ModelMeta { seed: tc.seed, config_digest: tc.digest(&arch) }, out.as_ref())?;
    println!("best epoch {} (val {:.3e}); {} parameters saved to {out}", outcome.best_epoch, outcome.best_val_mse, outcome.params.n_params());
    Ok(())
}
