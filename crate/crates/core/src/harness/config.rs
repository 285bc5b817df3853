use std::cell::Cell;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EvalConfig;
use crate::datagen::{DatagenConfig, WINDOW_LEN};
use crate::error::{Error, Result};
use crate::hybrid::HybridConfig;
use crate::nn::{ArchitectureConfig, TrainConfig};

/// Overrides `out_dir`.
pub const ENV_OUT_DIR: &str = "SIACNN_OUT_DIR";
/// Size of the worker pool.
pub const ENV_THREADS: &str = "SIACNN_THREADS";

/// Seeds are stored as TOML integers, which are signed 64-bit.
pub const MAX_SEED: u64 = i64::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Paper,
    #[default]
    Desk,
}

/// Full experiment description. Every section is optional; missing keys
/// take the value of the selected preset, and section seeds default to the
/// top-level seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub preset: Preset,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub datagen: DatagenConfig,
    #[serde(default)]
    pub arch: ArchitectureConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub hybrid: HybridConfig,
    #[serde(default)]
    pub evaluate: EvalConfig,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

thread_local! {
    // preset and seed that section defaults are drawn from while parsing
    static CURRENT: Cell<(Preset, u64)> = const { Cell::new((Preset::Desk, 0)) };
}

fn current() -> (Preset, u64) {
    CURRENT.with(|c| c.get())
}

fn with_preset<T>(preset: Preset, seed: u64, f: impl FnOnce() -> T) -> T {
    let old = CURRENT.with(|c| c.replace((preset, seed)));
    let out = f();
    CURRENT.with(|c| c.set(old));
    out
}

impl Default for DatagenConfig {
    fn default() -> Self {
        match current() {
            (Preset::Paper, s) => DatagenConfig::paper(s),
            (Preset::Desk, s) => DatagenConfig::desk(s),
        }
    }
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        match current().0 {
            Preset::Paper => ArchitectureConfig::paper(),
            Preset::Desk => ArchitectureConfig::desk(),
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        match current() {
            (Preset::Paper, s) => TrainConfig::paper(s),
            (Preset::Desk, s) => TrainConfig::desk(s),
        }
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        match current() {
            (Preset::Paper, s) => EvalConfig::paper(s),
            (Preset::Desk, s) => EvalConfig::desk(s),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
struct Header {
    preset: Option<Preset>,
    seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset, seed: u64) -> Self {
        with_preset(preset, seed, || ExperimentConfig {
            preset,
            seed,
            out_dir: default_out_dir(),
            datagen: Default::default(),
            arch: Default::default(),
            train: Default::default(),
            hybrid: Default::default(),
            evaluate: Default::default(),
        })
    }

    /// Parses `text`; `path` is only used in error messages.
    pub fn parse(text: &str, path: &Path, overrides: &Overrides) -> Result<Self> {
        let header: Header = toml::from_str(text).map_err(|e| toml_error(text, path, e))?;
        let preset = overrides.preset.or(header.preset).unwrap_or_default();
        let seed = overrides.seed.or(header.seed).unwrap_or(0);
        let mut cfg: ExperimentConfig =
            with_preset(preset, seed, || toml::from_str(text)).map_err(|e| toml_error(text, path, e))?;
        cfg.preset = preset;
        if let Some(s) = overrides.seed {
            cfg.set_seed(s);
        }
        if let Some(out) = &overrides.out_dir {
            cfg.out_dir = out.clone();
        }
        cfg.validate().map_err(|(key, e)| Error::Config { path: path.into(), line: key_line(text, key), message: e })?;
        Ok(cfg)
    }

    /// Reads a config file, or builds the preset when `path` is `None`.
    /// The output directory environment variable applies in both cases,
    /// below an explicit `--out`.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut overrides = overrides.clone();
        if overrides.out_dir.is_none() {
            overrides.out_dir = std::env::var_os(ENV_OUT_DIR).map(PathBuf::from);
        }
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => {
                        Error::MissingInput { path: p.into(), hint: "config file not found".into() }
                    }
                    _ => Error::io(p, e),
                })?;
                Self::parse(&text, p, &overrides)
            }
            None => Self::parse("", Path::new("<preset>"), &overrides),
        }
    }

    /// Sets the top-level seed and every section seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.datagen.seed = seed;
        self.train.seed = seed;
        self.evaluate.seed = seed;
    }

    /// Semantic checks; errors carry the offending key.
    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        for s in [self.seed, self.datagen.seed, self.train.seed, self.evaluate.seed] {
            if s > MAX_SEED {
                return Err(("seed", format!("seed {s} exceeds {MAX_SEED}")));
            }
        }
        self.arch.validate().map_err(|e| ("arch", e.to_string()))?;
        if self.arch.input_length != WINDOW_LEN {
            return Err(("input_length", format!("input_length must be {WINDOW_LEN}, found {}", self.arch.input_length)));
        }
        self.train.validate().map_err(|e| ("train", e.to_string()))?;
        self.hybrid.validate().map_err(|e| ("hybrid", e.to_string()))?;
        let d = &self.datagen;
        if d.per_speed == 0 {
            return Err(("per_speed", "per_speed must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&d.threshold) {
            return Err(("threshold", format!("threshold {} outside [0, 1]", d.threshold)));
        }
        let e = &self.evaluate;
        if e.n_elements < 16 || e.reference_elements < e.n_elements {
            return Err(("n_elements", "need n_elements >= 16 and reference_elements >= n_elements".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.out_dir.join("corpus")
    }

    pub fn model_dir(&self) -> PathBuf {
        self.out_dir.join("model")
    }

    pub fn model_path(&self) -> PathBuf {
        self.model_dir().join("model.bin")
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.out_dir.join("runs")
    }

    pub fn evaluate_dir(&self) -> PathBuf {
        self.out_dir.join("evaluate")
    }
}

fn toml_error(text: &str, path: &Path, e: toml::de::Error) -> Error {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(0);
    Error::Config { path: path.into(), line, message: e.message().to_string() }
}

/// First line assigning `key` or opening table `[key]`; 0 if absent.
fn key_line(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
                || t.trim_end() == format!("[{key}]")
        })
        .map_or(0, |i| i + 1)
}

/// Sizes the global worker pool from the environment. Must run before any
/// parallel work; later calls are ignored.
pub fn init_threads() -> Result<()> {
    let Some(v) = std::env::var_os(ENV_THREADS) else {
        return Ok(());
    };
    let n: usize = v
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{ENV_THREADS} must be a positive integer, found {v:?}")))?;
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("worker pool already initialised");
    }
    Ok(())
}
