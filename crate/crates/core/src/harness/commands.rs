use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::evaluate::{
    draw_cases, evaluate_dataset, evaluate_top_hat, final_time_records, heldout_samples, shu_osher_reference,
    ErrorReport, Feature, DATASET_VARIABLES,
};
use crate::binio::{read_file, write_file};
use crate::datagen::{hex, Corpus};
use crate::detect::DiscontinuityWindow;
use crate::dg::{gauss_legendre, save_grid_dump, GRID_NODES};
use crate::error::{Error, Result};
use crate::hybrid::{hybrid_filter_euler, EULER_VARIABLES};
use crate::nn::{load_model, save_model, train, write_history_csv, ConvFilterParams, ModelMeta, TrainOutcome};
use crate::solvers::{EulerFields, InitialCondition, PrimitiveGrids, RunDescriptor};

fn require(path: &Path, hint: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput { path: path.into(), hint: hint.into() })
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text.as_bytes())
}

/// Builds the training corpus into `<out>/corpus` and returns its digest.
pub fn cmd_generate_data(cfg: &ExperimentConfig) -> Result<String> {
    let corpus = crate::datagen::generate_corpus(&cfg.datagen)?;
    let digest = corpus.save(&cfg.corpus_dir(), &cfg.datagen)?;
    log::info!("corpus {digest}: {} training, {} validation windows", corpus.train.len(), corpus.validation.len());
    Ok(digest)
}

/// Summary written next to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub corpus_digest: String,
    pub config_digest: String,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub epochs_run: usize,
    pub train: crate::nn::TrainConfig,
    pub arch: crate::nn::ArchitectureConfig,
}

/// Trains on `<out>/corpus`, writing `model.bin`, `loss_history.csv` and
/// `train.toml` into `<out>/model`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let dir = cfg.corpus_dir();
    require(&dir.join("corpus.bin"), "run `siacnn generate-data` first")?;
    let corpus = Corpus::load(&dir)?;
    let outcome = train(cfg.arch, &corpus.train_pairs(), &corpus.validation_pairs(), &cfg.train)?;
    let digest = cfg.train.digest(&cfg.arch);
    let out = cfg.model_dir();
    save_model(&outcome.params, &ModelMeta { seed: cfg.train.seed, config_digest: digest }, &out.join("model.bin"))?;
    write_history_csv(&outcome.history, &out.join("loss_history.csv"))?;
    let summary = TrainSummary {
        corpus_digest: corpus.digest(),
        config_digest: hex(&digest),
        best_epoch: outcome.best_epoch,
        best_val_mse: outcome.best_val_mse,
        epochs_run: outcome.history.len(),
        train: cfg.train,
        arch: cfg.arch,
    };
    write_text(&out.join("train.toml"), &toml::to_string(&summary).expect("summary serializes"))?;
    log::info!("best epoch {} with validation mse {:.3e}", outcome.best_epoch, outcome.best_val_mse);
    Ok(outcome)
}

fn write_primitives_csv(g: &PrimitiveGrids, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "density", "velocity", "pressure", "entropy"])?;
    for k in 0..g.rho.len() {
        w.write_record(
            [g.rho.x[k], g.rho.values[k], g.velocity.values[k], g.pressure.values[k], g.entropy.values[k]]
                .map(|v| format!("{v:.17e}")),
        )?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Default run directory name.
pub fn run_name(desc: &RunDescriptor) -> String {
    format!("{}_p{}_n{}", desc.ic_id.name(), desc.p, desc.n)
}

/// Solves `desc` and stores the conservative fields (`*.dgf`), the
/// descriptor (`run.toml`) and unfiltered primitives (`primitives.csv`).
pub fn cmd_euler_run(cfg: &ExperimentConfig, desc: &RunDescriptor, name: Option<&str>) -> Result<PathBuf> {
    let dir = cfg.runs_dir().join(name.map_or_else(|| run_name(desc), str::to_string));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let fields = desc.run()?;
    fields.save(&dir)?;
    write_text(&dir.join("run.toml"), &desc.to_toml())?;
    let g = fields.primitive_grids(&gauss_legendre(GRID_NODES)?);
    write_primitives_csv(&g, &dir.join("primitives.csv"))?;
    Ok(dir)
}

#[derive(Serialize)]
struct WindowsFile<'a> {
    mode: &'a str,
    model: Option<String>,
    windows: &'a [DiscontinuityWindow],
}

/// Filters a stored run. Without a model only the SIAC stages run and the
/// output goes to `filtered_siac/`, otherwise to `filtered_hybrid/`.
pub fn cmd_filter(cfg: &ExperimentConfig, run_dir: &Path, model: Option<&Path>) -> Result<PathBuf> {
    let run_toml = run_dir.join("run.toml");
    require(&run_toml, "run `siacnn euler-run` first")?;
    let desc = RunDescriptor::from_toml(&String::from_utf8_lossy(&read_file(&run_toml)?))?;
    let fields = EulerFields::load(run_dir, desc.t_final)?;
    let params = model.map(load_checked).transpose()?;
    let filtered = hybrid_filter_euler(&fields, &cfg.hybrid, params.as_ref())?;
    let mode = if params.is_some() { "hybrid" } else { "siac" };
    let out = run_dir.join(format!("filtered_{mode}"));
    for v in EULER_VARIABLES {
        let sol = filtered.variable(v)?;
        sol.write_csv(&out.join(format!("{v}.csv")))?;
        save_grid_dump(&sol.grid, &out.join(format!("{v}.grid")))?;
    }
    let file = WindowsFile { mode, model: model.map(|p| p.display().to_string()), windows: &filtered.windows };
    write_text(&out.join("windows.toml"), &toml::to_string(&file).expect("windows serialize"))?;
    log::info!("{} windows; output in {}", filtered.windows.len(), out.display());
    Ok(out)
}

fn load_checked(path: &Path) -> Result<ConvFilterParams> {
    require(path, "run `siacnn train` first or pass --model")?;
    let (params, meta) = load_model(path)?;
    log::info!("model {} (seed {}, config {})", path.display(), meta.seed, &hex(&meta.config_digest)[..12]);
    Ok(params)
}

/// Runs every dataset of the evaluation and writes the tables into
/// `<out>/evaluate`:
///
/// * `windows_raw.csv`: one row per window, variable and method
/// * `summary.csv`: quartiles of every (case, variable)
/// * `dataset_{lax,sod,shu_osher}.csv`, `top_hat.csv`: quartile tables
/// * `final_*.csv`: per-degree errors at the benchmark final times
pub fn cmd_evaluate(cfg: &ExperimentConfig, model: Option<&Path>) -> Result<ErrorReport> {
    let path = model.map_or_else(|| cfg.model_path(), Path::to_path_buf);
    let params = load_checked(&path)?;
    let e = &cfg.evaluate;
    let h = &cfg.hybrid;
    let mut report = ErrorReport::default();

    let heldout = heldout_samples(e.heldout_per_speed, e.seed)?;
    let mut top = evaluate_top_hat(&heldout, h, Some(&params))?;
    top.retain(|r| r.feature == Feature::Jump);
    top.truncate(e.heldout_windows);
    if top.len() < e.heldout_windows {
        log::warn!("only {} held-out windows of {} requested", top.len(), e.heldout_windows);
    }
    report.records.extend(top);

    let runs = [
        (InitialCondition::Lax, e.lax_runs, 1u64),
        (InitialCondition::Sod, e.sod_runs, 2),
        (InitialCondition::ShuOsher, e.shu_osher_runs, 3),
    ];
    let cases: Vec<_> =
        runs.iter().flat_map(|&(ic, count, k)| draw_cases(ic, count, e.n_elements, e.seed.wrapping_add(k))).collect();
    let so_final = InitialCondition::ShuOsher.default_final_time();
    let extra = if e.final_time_tables { vec![so_final] } else { Vec::new() };
    let fine = shu_osher_reference(&cases, &extra, e.reference_elements)?;
    report.records.extend(evaluate_dataset(&cases, &fine, h, Some(&params))?);

    if e.final_time_tables {
        for ic in [InitialCondition::Lax, InitialCondition::Sod, InitialCondition::ShuOsher] {
            let reference = if ic == InitialCondition::ShuOsher { fine.iter().find(|f| f.time == so_final) } else { None };
            report.records.extend(final_time_records(ic, e.n_elements, reference, &["density", "velocity", "pressure", "entropy"], h, Some(&params))?);
        }
    }

    let dir = cfg.evaluate_dir();
    report.write_raw_csv(&dir.join("windows_raw.csv"))?;
    report.write_summary(&dir.join("summary.csv"))?;
    for ic in InitialCondition::ALL {
        report.write_quartile_table(ic.name(), &DATASET_VARIABLES, &dir.join(format!("dataset_{}.csv", ic.name())))?;
    }
    report.write_quartile_table("top_hat", &["u"], &dir.join("top_hat.csv"))?;
    if e.final_time_tables {
        let cs = [Some(Feature::Contact), Some(Feature::Shock)];
        let tables: [(&str, Vec<(&str, Option<Feature>)>, &str); 4] = [
            ("lax_final", cs.iter().map(|f| ("density", *f)).collect(), "final_lax_density.csv"),
            ("lax_final", cs.iter().map(|f| ("entropy", *f)).collect(), "final_lax_entropy.csv"),
            ("sod_final", cs.iter().map(|f| ("velocity", *f)).collect(), "final_sod_velocity.csv"),
            ("shu_osher_final", vec![("density", Some(Feature::Shock)), ("pressure", Some(Feature::Shock))], "final_shu_osher.csv"),
        ];
        for (case, cols, file) in tables {
            report.write_degree_table(case, &cols, &dir.join(file))?;
        }
    }
    write_text(&dir.join("config.toml"), &cfg.to_toml())?;
    Ok(report)
}
