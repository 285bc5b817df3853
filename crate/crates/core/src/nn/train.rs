use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ArchitectureConfig, ConvFilterParams, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many epochs without validation improvement.
    pub patience: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl TrainConfig {
    pub fn paper(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 200,
            max_epochs: 20_000,
            patience: 200,
            seed,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn desk(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 16,
            max_epochs: 400,
            patience: 200,
            ..Self::paper(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidArgument(
                "learning rate, batch size and epoch budget must be positive".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the text form of both configs, recorded in model files.
    pub fn digest(&self, arch: &ArchitectureConfig) -> [u8; 32] {
        Sha256::digest(format!("{self:?}\n{arch:?}").as_bytes()).into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the lowest validation MSE.
    pub params: ConvFilterParams,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub history: Vec<EpochRecord>,
}

const DIVERGENCE_LOSS: f64 = 1e6;

struct Adam {
    m: Gradients,
    v: Gradients,
    t: i32,
}

impl Adam {
    fn new(p: &ConvFilterParams) -> Self {
        Adam { m: p.zero_gradients(), v: p.zero_gradients(), t: 0 }
    }

    fn step(&mut self, p: &mut ConvFilterParams, g: &Gradients, tc: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - tc.beta1.powi(self.t);
        let bc2 = 1.0 - tc.beta2.powi(self.t);
        for (li, layer) in p.layers.iter_mut().enumerate() {
            for (i, w) in layer.weights.iter_mut().enumerate() {
                let gi = g[li][i];
                let m = &mut self.m[li][i];
                let v = &mut self.v[li][i];
                *m = tc.beta1 * *m + (1.0 - tc.beta1) * gi;
                *v = tc.beta2 * *v + (1.0 - tc.beta2) * gi * gi;
                *w -= tc.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + tc.eps);
            }
        }
    }
}

/// Adam on the mean squared error over shuffled mini-batches. After every
/// epoch the validation MSE is evaluated and the best parameters are kept.
pub fn train(
    arch: ArchitectureConfig,
    train_set: &[(Vec<f64>, Vec<f64>)],
    validation_set: &[(Vec<f64>, Vec<f64>)],
    tc: &TrainConfig,
) -> Result<TrainOutcome> {
    tc.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if validation_set.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut params = ConvFilterParams::init(arch, tc.seed)?;
    let mut adam = Adam::new(&params);
    let val_in: Vec<&[f64]> = validation_set.iter().map(|p| p.0.as_slice()).collect();
    let val_tg: Vec<&[f64]> = validation_set.iter().map(|p| p.1.as_slice()).collect();

    let mut best = params.clone();
    let mut best_val = params.mse(&val_in, &val_tg)?;
    let mut best_epoch = 0;
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let len = arch.input_length as f64;

    for epoch in 1..=tc.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(tc.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| train_set[i].0.as_slice()).collect();
            let ts: Vec<&[f64]> = batch.iter().map(|&i| train_set[i].1.as_slice()).collect();
            let (loss, mut g) = params.batch_gradient(&xs, &ts)?;
            loss_sum += loss;
            // gradient of the batch MSE
            let scale = 2.0 / (batch.len() as f64 * len);
            g.iter_mut().flatten().for_each(|v| *v *= scale);
            adam.step(&mut params, &g, tc);
        }
        let train_mse = 2.0 * loss_sum / (train_set.len() as f64 * len);
        let val_mse = if params.is_finite() {
            params.mse(&val_in, &val_tg).unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        };
        history.push(EpochRecord { epoch, train_mse, val_mse });
        if !(train_mse <= DIVERGENCE_LOSS) {
            return Err(Error::Diverged {
                epoch,
                loss: train_mse,
                history: history.iter().map(|r| (r.epoch, r.train_mse, r.val_mse)).collect(),
            });
        }
        if val_mse < best_val {
            best_val = val_mse;
            best = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= tc.patience {
            log::info!("early stop at epoch {epoch}; best epoch {best_epoch}");
            break;
        }
        if epoch % 50 == 0 {
            log::debug!("epoch {epoch}: train {train_mse:.3e}, val {val_mse:.3e}");
        }
    }
    Ok(TrainOutcome { params: best, best_epoch, best_val_mse: best_val, history })
}

/// Loss history as CSV with columns `epoch,train_mse,val_mse`.
pub fn write_history_csv(history: &[EpochRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut s = String::from("epoch,train_mse,val_mse\n");
    for r in history {
        s.push_str(&format!("{},{:.17e},{:.17e}\n", r.epoch, r.train_mse, r.val_mse));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
}
