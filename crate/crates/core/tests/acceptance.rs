//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! `SIACNN_ACCEPT_SEED` changes the training seed of criteria 5 and 6
//! (default 0, the config default).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use siac_hybrid::datagen::{generate_corpus, DatagenConfig};
use siac_hybrid::dg::{eval_grid, gauss_legendre, project, DGField, Mesh, GRID_NODES};
use siac_hybrid::harness::{
    cmd_evaluate, cmd_generate_data, cmd_train, evaluate_riemann_case, evaluate_top_hat, heldout_samples,
    quartiles, EulerCase, EvalConfig, ExperimentConfig, Feature, Method, Preset,
};
use siac_hybrid::hybrid::{detect_windows, hybrid_filter_euler, hybrid_filter_euler_with, HybridConfig};
use siac_hybrid::nn::{train, ArchitectureConfig, ConvFilterParams, TrainConfig};
use siac_hybrid::detect::DiscontinuityWindow;
use siac_hybrid::siac::{exact_rule, filter_at, siac_filter, solve_coefficients, BoundaryPolicy, GlobalKernelSpec, KernelScaling};
use siac_hybrid::solvers::{
    advect_solve, euler_solve_snapshots, AdvectionInitial, AdvectionOptions, AdvectionProblem, EulerFields,
    EulerOptions, InitialCondition, RiemannSolution, RiemannState, GAMMA,
};

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = (bool, String);

fn c1_polynomial_reproduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mesh = Mesh::new(0.0, 1.0, 40).unwrap();
    let mut worst: f64 = 0.0;
    for (r, k) in [(2, 1), (4, 2), (6, 3)] {
        let kernel = solve_coefficients(r, k).unwrap();
        let scaling = KernelScaling::new(mesh.h).unwrap();
        let quad = exact_rule(&kernel, r);
        for p in 0..=r {
            let f = project(|x| x.powi(p as i32), &mesh, r, &gauss_legendre(r + 2).unwrap());
            for _ in 0..50 {
                let x = rng.gen_range(0.2..0.8);
                let v = filter_at(&f, &kernel, scaling, &quad, x, BoundaryPolicy::Fallback).unwrap();
                worst = worst.max((v - x.powi(p as i32)).abs());
            }
        }
    }
    (worst <= 1e-9, format!("max |K*x^p - x^p| = {worst:.2e} (tol 1e-9)"))
}

fn slope(ns: &[usize], errs: &[f64]) -> f64 {
    // least-squares slope of log(err) against log(1/N)
    let xs: Vec<f64> = ns.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn c2_superconvergence() -> Outcome {
    let problem =
        AdvectionProblem { wave_speed: 1.0, initial: AdvectionInitial::Sine { wavelength: 10.0 }, final_time: 1.0, lo: -5.0, hi: 5.0 };
    let nodes = gauss_legendre(GRID_NODES).unwrap();
    let ns = [16, 32, 64];
    let mut ok = true;
    let mut msg = Vec::new();
    for p in [1, 2] {
        let (mut raw_e, mut fil_e) = (Vec::new(), Vec::new());
        for &n in &ns {
            let run = advect_solve(&problem, p, n, AdvectionOptions::default()).unwrap();
            let raw = eval_grid(&run.field, &nodes);
            let kernel = GlobalKernelSpec::Standard.build(p).unwrap();
            let fil = siac_filter(&run.field, &kernel, KernelScaling::new(run.field.mesh.h).unwrap(), &nodes, BoundaryPolicy::Periodic);
            let err = |v: &[f64]| {
                (raw.x.iter().zip(v).map(|(x, v)| (v - problem.exact(*x)).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
            };
            raw_e.push(err(&raw.values));
            fil_e.push(err(&fil.grid.values));
        }
        let (a, b) = (slope(&ns, &raw_e), slope(&ns, &fil_e));
        ok &= b >= a + 1.0;
        msg.push(format!("p={p}: unfiltered order {a:.2}, filtered {b:.2}"));
    }
    (ok, msg.join("; "))
}

fn c3_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let arch = ArchitectureConfig {
            n_hidden_layers: rng.gen_range(1..=3),
            hidden_channels: rng.gen_range(2..=16),
            ..ArchitectureConfig::desk()
        };
        let params = ConvFilterParams::init(arch, seed).unwrap();
        let c: f64 = rng.gen_range(-5.0..5.0);
        let out = params.forward(&vec![c; arch.input_length]).unwrap();
        worst = worst.max((out.iter().sum::<f64>() / out.len() as f64 - c).abs());
    }
    (worst <= 1e-10, format!("max |mean f(c 1) - c| over 100 nets = {worst:.2e} (tol 1e-10)"))
}

fn c4_gradient() -> Outcome {
    let arch = ArchitectureConfig { n_hidden_layers: 2, hidden_channels: 4, ..ArchitectureConfig::desk() };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let loss = |p: &ConvFilterParams, x: &[f64], t: &[f64]| -> f64 {
        p.forward(x).unwrap().iter().zip(t).map(|(a, b)| 0.5 * (a - b).powi(2)).sum()
    };
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..20 {
        let params = ConvFilterParams::init(arch, 100 + i).unwrap();
        let x: Vec<f64> = (0..arch.input_length).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..arch.input_length).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = params.backward(&x, &t).unwrap();
        for li in 0..params.layers.len() {
            for wi in 0..params.layers[li].weights.len() {
                let mut a = params.clone();
                a.layers[li].weights[wi] += eps;
                let mut b = params.clone();
                b.layers[li].weights[wi] -= eps;
                let fd = (loss(&a, &x, &t) - loss(&b, &x, &t)) / (2.0 * eps);
                let an = g[li][wi];
                worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6));
                checked += 1;
            }
        }
    }
    (worst <= 1e-4, format!("max relative deviation {worst:.2e} over {checked} weights in 20 pairs (tol 1e-4)"))
}

const ACCEPT_SEED: u64 = 0;

fn accept_seed() -> u64 {
    std::env::var("SIACNN_ACCEPT_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(ACCEPT_SEED)
}

fn desk_model(seed: u64) -> Result<(ConvFilterParams, String), String> {
    let t = Instant::now();
    let corpus = generate_corpus(&DatagenConfig::desk(seed)).map_err(|e| e.to_string())?;
    let n_train = corpus.train.len();
    if n_train < 100 {
        return Err(format!("only {n_train} training windows"));
    }
    let out = train(ArchitectureConfig::desk(), &corpus.train_pairs(), &corpus.validation_pairs(), &TrainConfig::desk(seed))
        .map_err(|e| e.to_string())?;
    let info = format!(
        "{n_train} training / {} validation windows, best epoch {} (val mse {:.2e}), {:.0}s",
        corpus.validation.len(),
        out.best_epoch,
        out.best_val_mse,
        t.elapsed().as_secs_f64()
    );
    Ok((out.params, info))
}

fn c5_training_efficacy(model: &Result<(ConvFilterParams, String), String>, seed: u64) -> Outcome {
    let (params, info) = match model {
        Ok(m) => m,
        Err(e) => return (false, format!("training failed: {e}")),
    };
    let eval = EvalConfig::desk(seed);
    let samples = heldout_samples(eval.heldout_per_speed, seed).unwrap();
    let mut recs = evaluate_top_hat(&samples, &HybridConfig::default(), Some(params)).unwrap();
    recs.retain(|r| r.feature == Feature::Jump);
    recs.truncate(eval.heldout_windows);
    if recs.len() < eval.heldout_windows {
        return (false, format!("only {} held-out windows", recs.len()));
    }
    let med = |f: &dyn Fn(&siac_hybrid::harness::ErrorRecord) -> f64| quartiles(&recs.iter().map(f).collect::<Vec<_>>()).unwrap().1;
    let (u2, h2) = (med(&|r| r.l2(Method::Unfiltered)), med(&|r| r.l2(Method::Hybrid)));
    let (ui, hi) = (med(&|r| r.linf(Method::Unfiltered)), med(&|r| r.linf(Method::Hybrid)));
    let ok = h2 <= 0.5 * u2 && hi <= 0.5 * ui;
    (
        ok,
        format!(
            "seed {seed}, {} windows: median l2 {u2:.3e} -> {h2:.3e} (ratio {:.2}), median linf {ui:.3e} -> {hi:.3e} (ratio {:.2}), bar 0.5; {info}",
            recs.len(),
            h2 / u2,
            hi / ui
        ),
    )
}

fn c6_euler_shocks(model: &Result<(ConvFilterParams, String), String>) -> Outcome {
    let Ok((params, _)) = model else {
        return (false, "no trained model".into());
    };
    let mut ok = true;
    let mut msg = Vec::new();
    for (ic, p, var, paper) in [
        (InitialCondition::Sod, 2, "velocity", (4.04e-1, 5.84e-2)),
        (InitialCondition::Lax, 1, "density", (3.75e-1, 6.78e-2)),
    ] {
        let t = ic.default_final_time();
        let fields = euler_solve_snapshots(ic, p, 128, &[t], EulerOptions::default()).unwrap().remove(0);
        let case = EulerCase { ic, p, n: 128, t_final: t };
        let recs = evaluate_riemann_case(&case, 0, &fields, &[var], &HybridConfig::default(), Some(params)).unwrap();
        match recs.iter().find(|r| r.feature == Feature::Shock) {
            Some(r) => {
                let (u, h) = (r.linf(Method::Unfiltered), r.linf(Method::Hybrid));
                let pass = 2.0 * h <= u;
                ok &= pass;
                msg.push(format!(
                    "{} p={p} {var} shock linf unfiltered {u:.3e} hybrid {h:.3e} [{}] (reference values {:.2e} vs {:.2e})",
                    ic.name(),
                    if pass { "ok" } else { "miss" },
                    paper.0,
                    paper.1
                ));
            }
            None => {
                ok = false;
                msg.push(format!("{} p={p}: no shock window detected", ic.name()));
            }
        }
    }
    (ok, msg.join("; "))
}

fn c7_constant_state() -> Outcome {
    let mesh = Mesh::new(-5.0, 5.0, 64).unwrap();
    let (rho, u, p) = (1.3, 0.4, 0.9);
    let state = RiemannState::new(rho, u, p).unwrap().conservative();
    let fields = EulerFields {
        rho: DGField::constant(mesh, 2, state[0]),
        mom: DGField::constant(mesh, 2, state[1]),
        energy: DGField::constant(mesh, 2, state[2]),
        gamma: GAMMA,
        time: 0.0,
    };
    let cfg = HybridConfig::default();
    let windows = detect_windows(&fields.rho, &cfg).unwrap();
    let siac = hybrid_filter_euler(&fields, &cfg, None).unwrap();
    let forced: Vec<DiscontinuityWindow> = [20usize, 40]
        .iter()
        .map(|&j| DiscontinuityWindow { s_lo: j, s_hi: j, pad: 4, lo: j - 4, hi: j + 4, j_dagger: Some(j) })
        .collect();
    let model = ConvFilterParams::init(ArchitectureConfig::desk(), 7).unwrap();
    let hybrid = hybrid_filter_euler_with(&fields, &cfg, Some(&model), &forced).unwrap();
    let mut dev: f64 = 0.0;
    for out in [&siac, &hybrid] {
        for (g, v) in [(&out.primitives.rho, rho), (&out.primitives.velocity, u), (&out.primitives.pressure, p)] {
            dev = dev.max(g.values.iter().map(|x| (x - v).abs()).fold(0.0, f64::max));
        }
    }
    let nn = hybrid.rho.count(siac_hybrid::hybrid::Label::Nn);
    let ok = windows.is_empty() && dev <= 1e-9 && nn == 8;
    (ok, format!("{} windows detected, {nn} nn points in 2 forced windows, max deviation {dev:.2e} (tol 1e-9)", windows.len()))
}

/// Pressure function of one side for the star pressure, written out
/// directly from the ideal-gas shock and rarefaction relations.
fn side(p: f64, rho: f64, pk: f64) -> f64 {
    let g = GAMMA;
    if p > pk {
        let a = 2.0 / ((g + 1.0) * rho);
        let b = (g - 1.0) / (g + 1.0) * pk;
        (p - pk) * (a / (p + b)).sqrt()
    } else {
        let c = (g * pk / rho).sqrt();
        2.0 * c / (g - 1.0) * ((p / pk).powf((g - 1.0) / (2.0 * g)) - 1.0)
    }
}

fn c8_riemann() -> Outcome {
    let (l, r) = InitialCondition::Sod.riemann_states().unwrap();
    let f = |p: f64| side(p, l.rho, l.p) + side(p, r.rho, r.p) + (r.u - l.u);
    let (mut lo, mut hi) = (1e-12, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid
        } else {
            lo = mid
        }
    }
    let oracle = 0.5 * (lo + hi);
    let sol = RiemannSolution::solve(l, r).unwrap();
    let dp = (sol.p_star - oracle).abs();

    let s = sol.shock_speeds()[0];
    let flux = |q: [f64; 3]| {
        let st = RiemannState::from_conservative(&q);
        [q[1], q[1] * st.u + st.p, (q[2] + st.p) * st.u]
    };
    let (a, b) = (sol.sample(s + 1e-9).conservative(), sol.sample(s - 1e-9).conservative());
    let (fa, fb) = (flux(a), flux(b));
    let rh = (0..3).map(|v| (fa[v] - fb[v] - s * (a[v] - b[v])).abs()).fold(0.0, f64::max);
    (dp <= 1e-10 && rh <= 1e-8, format!("p* = {:.12} vs oracle {oracle:.12} (|diff| {dp:.1e}); RH residual {rh:.1e}", sol.p_star))
}

fn small_config(out: &Path, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(Preset::Desk, seed);
    cfg.out_dir = out.to_path_buf();
    cfg.datagen.per_speed = 1;
    cfg.datagen.validation_runs = 2;
    cfg.datagen.validation_per_ic = 2;
    cfg.train.max_epochs = 15;
    cfg.evaluate.lax_runs = 1;
    cfg.evaluate.sod_runs = 1;
    cfg.evaluate.shu_osher_runs = 1;
    cfg.evaluate.reference_elements = 1000;
    cfg.evaluate.heldout_per_speed = 1;
    cfg.evaluate.final_time_tables = false;
    cfg
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn c9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for k in 0..2 {
        let cfg = small_config(&tmp.path().join(format!("run{k}")), 9);
        let digest = cmd_generate_data(&cfg).unwrap();
        cmd_train(&cfg).unwrap();
        cmd_evaluate(&cfg, None).unwrap();
        let history = std::fs::read(cfg.model_dir().join("loss_history.csv")).unwrap();
        let model = std::fs::read(cfg.model_path()).unwrap();
        runs.push((digest, history, model, csv_files(&cfg.evaluate_dir())));
    }
    let (a, b) = (&runs[0], &runs[1]);
    let same = [a.0 == b.0, a.1 == b.1, a.2 == b.2, a.3 == b.3];
    (
        same.iter().all(|&s| s) && !a.3.is_empty(),
        format!(
            "corpus digest {} ({}), loss history {}, model {}, {} evaluation CSVs {}",
            &a.0[..16],
            if same[0] { "same" } else { "differs" },
            if same[1] { "identical" } else { "differs" },
            if same[2] { "identical" } else { "differs" },
            a.3.len(),
            if same[3] { "identical" } else { "differ" }
        ),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let (ok, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let m = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", m.unwrap_or_default()))
        }
    };
    println!("{} {name}: {msg} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    ok
}

fn main() {
    let seed = accept_seed();
    let mut results = vec![
        run("criterion 1 (SIAC polynomial reproduction)", c1_polynomial_reproduction),
        run("criterion 2 (smooth superconvergence trend)", c2_superconvergence),
        run("criterion 3 (consistency constraint)", c3_consistency),
        run("criterion 4 (gradient oracle)", c4_gradient),
    ];
    let model = catch_unwind(|| desk_model(seed)).unwrap_or_else(|_| Err("panicked".into()));
    results.push(run("criterion 5 (training efficacy, desk scale)", || c5_training_efficacy(&model, seed)));
    results.push(run("criterion 6 (Euler shock improvement)", || c6_euler_shocks(&model)));
    results.push(run("criterion 7 (constant data end to end)", c7_constant_state));
    results.push(run("criterion 8 (exact Riemann solver)", c8_riemann));
    results.push(run("criterion 9 (determinism)", c9_determinism));
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
