use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use siac_hybrid::harness::{
    cmd_euler_run, cmd_evaluate, cmd_filter, cmd_generate_data, cmd_train, init_threads, ExperimentConfig,
    Overrides, Preset, ENV_OUT_DIR,
};
use siac_hybrid::solvers::{default_cfl, InitialCondition, RunDescriptor};

#[derive(Parser)]
#[command(name = "siacnn", version, about = "Hybrid SIAC / learned filtering of DG shock solutions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); presets apply to every missing key.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true, env = ENV_OUT_DIR)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the training corpus into <out>/corpus.
    GenerateData,
    /// Train the filter on <out>/corpus into <out>/model.
    Train,
    /// Solve one Euler problem into <out>/runs/<name>.
    EulerRun {
        /// sod, lax or shu_osher
        #[arg(long)]
        ic: String,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long, short = 'n', default_value_t = 128)]
        elements: usize,
        /// Final time (problem default if omitted).
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        tvb_m: Option<f64>,
        #[arg(long)]
        cfl: Option<f64>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Filter a stored run; SIAC only when no model is given.
    Filter {
        run_dir: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Evaluate a model on all datasets into <out>/evaluate.
    Evaluate {
        /// Defaults to <out>/model/model.bin.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> siac_hybrid::Result<()> {
    init_threads()?;
    let overrides = Overrides { preset: cli.common.preset, seed: cli.common.seed, out_dir: cli.common.out };
    let cfg = ExperimentConfig::load(cli.common.config.as_deref(), &overrides)?;
    match cli.command {
        Command::GenerateData => println!("{}", cmd_generate_data(&cfg)?),
        Command::Train => {
            let o = cmd_train(&cfg)?;
            println!("best epoch {} validation mse {:.6e}", o.best_epoch, o.best_val_mse);
        }
        Command::EulerRun { ic, p, elements, t_final, tvb_m, cfl, name } => {
            let ic = InitialCondition::parse(&ic)?;
            let mut desc = RunDescriptor::new(ic, p, elements);
            desc.t_final = t_final.unwrap_or(desc.t_final);
            desc.tvb_m = tvb_m.unwrap_or(desc.tvb_m);
            desc.cfl = cfl.unwrap_or_else(|| default_cfl(p));
            desc.seed = cfg.seed;
            println!("{}", cmd_euler_run(&cfg, &desc, name.as_deref())?.display());
        }
        Command::Filter { run_dir, model } => println!("{}", cmd_filter(&cfg, &run_dir, model.as_deref())?.display()),
        Command::Evaluate { model } => {
            let report = cmd_evaluate(&cfg, model.as_deref())?;
            println!("{} windows evaluated; tables in {}", report.records.len(), cfg.evaluate_dir().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
