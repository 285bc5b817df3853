//! Training and validation corpora of normalized discontinuity windows.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::detect::{multiwavelet_detect, training_windows, DEFAULT_THRESHOLD, TRAINING_HALF_WIDTH};
use crate::dg::{gauss_legendre, DGField, Mesh, GRID_NODES};
use crate::error::{Error, Result};
use crate::siac::{filtered_field, moving_average_filter, BoundaryPolicy, KernelScaling, SiacKernel};
use crate::solvers::{
    advect_solve, euler_solve_snapshots, AdvectionOptions, AdvectionProblem, EulerOptions, InitialCondition,
    RiemannSolution,
};

/// Points per window: 9 elements of 4 nodes.
pub const WINDOW_LEN: usize = (2 * TRAINING_HALF_WIDTH + 1) * GRID_NODES;

/// Elements of the top-hat training runs.
pub const TRAINING_ELEMENTS: usize = 128;

/// Wave speeds `1, 1.5, ..., 5`.
pub fn wave_speeds() -> Vec<f64> {
    (0..9).map(|i| 1.0 + 0.5 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub index: usize,
    pub a: f64,
    pub alpha: f64,
    pub delta: f64,
    pub p: usize,
    pub t_final: f64,
    pub seed: u64,
}

impl SampleParams {
    /// Draws everything except the wave speed from the sample's own seed.
    pub fn from_seed(index: usize, a: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = rng.gen_range(0.1..0.5);
        let delta = rng.gen_range(0.1..1.0);
        let p = rng.gen_range(1..=4);
        let t_final = 10.0 / a * rng.gen_range(1.1..1.3);
        SampleParams { index, a, alpha, delta, p, t_final, seed }
    }

    pub fn problem(&self) -> AdvectionProblem {
        AdvectionProblem::top_hat(self.a, self.alpha, self.delta, self.t_final)
    }
}

/// `per_speed` samples for each wave speed, in speed order.
pub fn draw_params(per_speed: usize, speeds: &[f64], seed: u64) -> Result<Vec<SampleParams>> {
    if per_speed == 0 || speeds.is_empty() {
        return Err(Error::InvalidArgument("need at least one sample per speed".into()));
    }
    if let Some(a) = speeds.iter().find(|a| !(**a >= 1.0 && **a <= 5.0)) {
        return Err(Error::InvalidArgument(format!("wave speed {a} outside [1, 5]")));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_speed * speeds.len());
    for &a in speeds {
        for _ in 0..per_speed {
            // 63 bits, so the seed fits a TOML integer in the manifest
            let s: u64 = master.gen::<u64>() >> 1;
            out.push(SampleParams::from_seed(out.len(), a, s));
        }
    }
    Ok(out)
}

/// Affine map `y -> (y - shift) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: f64,
    pub scale: f64,
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization { shift: 0.0, scale: 1.0 };

    /// Min/max map of `input`; identity for flat input.
    pub fn from_input(input: &[f64]) -> Self {
        let lo = input.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = input.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            Normalization { shift: lo, scale: hi - lo }
        } else {
            Self::IDENTITY
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|y| (y - self.shift) / self.scale).collect()
    }

    pub fn invert(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|y| y * self.scale + self.shift).collect()
    }
}

pub fn normalize_window(input: &[f64], target: &[f64]) -> (Vec<f64>, Vec<f64>, Normalization) {
    let t = Normalization::from_input(input);
    (t.apply(input), t.apply(target), t)
}

pub fn denormalize(values: &[f64], t: &Normalization) -> Vec<f64> {
    t.invert(values)
}

/// Where a window came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Advection { params: SampleParams, tc: usize },
    Euler { ic: InitialCondition, p: usize, n: usize, t_final: f64, tc: usize },
}

impl Provenance {
    pub fn troubled_cell(&self) -> usize {
        match *self {
            Provenance::Advection { tc, .. } | Provenance::Euler { tc, .. } => tc,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub transform: Normalization,
    pub provenance: Provenance,
}

impl WindowSample {
    pub fn pair(&self) -> (Vec<f64>, Vec<f64>) {
        (self.input.clone(), self.target.clone())
    }
}

/// Moving-average SIAC with `H = h`, used both for detection and as network input.
fn pre_filter(field: &DGField, boundary: BoundaryPolicy) -> Result<(DGField, Vec<f64>)> {
    let scaling = KernelScaling::new(field.mesh.h)?;
    let ma = SiacKernel::moving_average();
    let detect_on = filtered_field(field, &ma, scaling, boundary);
    let nodes = gauss_legendre(GRID_NODES)?;
    let values = moving_average_filter(field, scaling, &nodes, boundary).grid.values;
    Ok((detect_on, values))
}

/// Extracts the windows `[tc - 4, tc + 4]` of `field` whose central five
/// elements contain one of `jumps`.
fn extract(
    field: &DGField,
    boundary: BoundaryPolicy,
    c: f64,
    jumps: &[f64],
    exact: impl Fn(f64) -> f64,
    provenance: impl Fn(usize) -> Provenance,
) -> Result<Vec<WindowSample>> {
    let (detect_on, values) = pre_filter(field, boundary)?;
    let troubled = multiwavelet_detect(&detect_on, c)?;
    let mesh = &field.mesh;
    let nodes = gauss_legendre(GRID_NODES)?;
    let x = crate::dg::grid_points(mesh, &nodes);
    let mut out = Vec::new();
    for (tc, range) in training_windows(&troubled, mesh.n_elements) {
        let (lo, hi) = (mesh.left(tc - 2), mesh.right(tc + 2));
        if !jumps.iter().any(|&xj| xj >= lo && xj <= hi) {
            continue;
        }
        let pts = range.start() * GRID_NODES..(range.end() + 1) * GRID_NODES;
        let target: Vec<f64> = x[pts.clone()].iter().map(|&xi| exact(xi)).collect();
        let (input, target, transform) = normalize_window(&values[pts], &target);
        out.push(WindowSample { input, target, transform, provenance: provenance(tc) });
    }
    if out.is_empty() {
        log::warn!("no usable troubled-cell windows ({} troubled cells)", troubled.len());
    }
    Ok(out)
}

/// Runs one top-hat sample and cuts its training windows.
pub fn make_window_samples(params: &SampleParams, c: f64) -> Result<Vec<WindowSample>> {
    let problem = params.problem();
    let run = advect_solve(&problem, params.p, TRAINING_ELEMENTS, AdvectionOptions::default())?;
    let jumps = problem.jump_locations();
    extract(&run.field, BoundaryPolicy::Periodic, c, &jumps, |x| problem.exact(x), |tc| {
        Provenance::Advection { params: *params, tc }
    })
}

/// Exact self-similar solution of a two-state shock tube.
pub fn riemann_reference(ic: InitialCondition) -> Result<RiemannSolution> {
    let (l, r) = ic
        .riemann_states()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no exact Riemann solution", ic.name())))?;
    RiemannSolution::solve(l, r)
}

/// Positions of the contact and shocks of a shock tube at time `t`.
pub fn riemann_discontinuities(sol: &RiemannSolution, t: f64) -> Vec<f64> {
    let mut v = vec![sol.contact_position(0.0, t)];
    v.extend(sol.shock_speeds().iter().map(|s| s * t));
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// One Euler density run feeding the validation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationRun {
    pub ic: InitialCondition,
    pub p: usize,
    pub n: usize,
    pub t_final: f64,
}

impl ValidationRun {
    pub fn samples(&self, c: f64) -> Result<Vec<WindowSample>> {
        let sol = riemann_reference(self.ic)?;
        let fields = euler_solve_snapshots(self.ic, self.p, self.n, &[self.t_final], EulerOptions::default())?;
        let t = self.t_final;
        let run = *self;
        extract(
            &fields[0].rho,
            BoundaryPolicy::Fallback,
            c,
            &riemann_discontinuities(&sol, t),
            |x| sol.sample(x / t).rho,
            |tc| Provenance::Euler { ic: run.ic, p: run.p, n: run.n, t_final: run.t_final, tc },
        )
    }
}

/// Lax runs with `T in [0.7, 1]` and Sod runs with `T in [1, 1.5]`,
/// `max_runs` each, drawn from `seed`.
pub fn draw_validation_runs(max_runs: usize, n: usize, seed: u64) -> Vec<ValidationRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (ic, range) in [(InitialCondition::Lax, 0.7..1.0), (InitialCondition::Sod, 1.0..1.5)] {
        for _ in 0..max_runs {
            let p = rng.gen_range(1..=4);
            let t_final = rng.gen_range(range.clone());
            out.push(ValidationRun { ic, p, n, t_final });
        }
    }
    out
}

/// Density windows from `runs`, at most `per_ic` per initial condition, in
/// run order. Runs that fail are skipped with a warning.
pub fn build_validation_set(runs: &[ValidationRun], per_ic: usize, c: f64) -> Vec<WindowSample> {
    let results: Vec<_> = runs.par_iter().map(|r| (r, r.samples(c))).collect();
    let mut out: Vec<WindowSample> = Vec::new();
    for (run, res) in results {
        match res {
            Ok(samples) => {
                let have = out
                    .iter()
                    .filter(|s| matches!(s.provenance, Provenance::Euler { ic, .. } if ic == run.ic))
                    .count();
                out.extend(samples.into_iter().take(per_ic.saturating_sub(have)));
            }
            Err(e) => log::warn!("validation run {run:?} skipped: {e}"),
        }
    }
    out
}

/// Scale of a corpus build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenConfig {
    pub per_speed: usize,
    pub validation_per_ic: usize,
    /// Candidate Euler runs per initial condition.
    pub validation_runs: usize,
    pub validation_elements: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl DatagenConfig {
    pub fn paper(seed: u64) -> Self {
        DatagenConfig {
            per_speed: 100,
            validation_per_ic: 25,
            validation_runs: 25,
            validation_elements: 128,
            threshold: DEFAULT_THRESHOLD,
            seed,
        }
    }

    pub fn desk(seed: u64) -> Self {
        DatagenConfig { per_speed: 10, validation_per_ic: 8, validation_runs: 8, ..Self::paper(seed) }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub train: Vec<WindowSample>,
    pub validation: Vec<WindowSample>,
}

/// Generates the training corpus of `config` (runs in parallel, merged in sample order).
pub fn generate_corpus(config: &DatagenConfig) -> Result<Corpus> {
    let params = draw_params(config.per_speed, &wave_speeds(), config.seed)?;
    let per_sample: Vec<Result<Vec<WindowSample>>> =
        params.par_iter().map(|p| make_window_samples(p, config.threshold)).collect();
    let mut train = Vec::new();
    for r in per_sample {
        train.extend(r?);
    }
    let runs = draw_validation_runs(config.validation_runs, config.validation_elements, config.seed ^ 0x5eed);
    let validation = build_validation_set(&runs, config.validation_per_ic, config.threshold);
    log::info!("corpus: {} training and {} validation windows", train.len(), validation.len());
    Ok(Corpus { train, validation })
}

const MAGIC: &[u8; 4] = b"SCWD";
const VERSION: u32 = 1;

fn write_sample(w: &mut Writer, s: &WindowSample) {
    match s.provenance {
        Provenance::Advection { params, tc } => {
            w.u8(0);
            w.u64(params.index as u64);
            w.u64(params.seed);
            w.u64(params.p as u64);
            w.u64(tc as u64);
            w.u64(TRAINING_ELEMENTS as u64);
            w.f64s(&[params.a, params.alpha, params.delta, params.t_final]);
        }
        Provenance::Euler { ic, p, n, t_final, tc } => {
            w.u8(1 + InitialCondition::ALL.iter().position(|&i| i == ic).unwrap() as u8);
            w.u64(0);
            w.u64(0);
            w.u64(p as u64);
            w.u64(tc as u64);
            w.u64(n as u64);
            w.f64s(&[0.0, 0.0, 0.0, t_final]);
        }
    }
    w.f64(s.transform.shift);
    w.f64(s.transform.scale);
    w.f64s(&s.input);
    w.f64s(&s.target);
}

fn read_sample(r: &mut Reader) -> Result<WindowSample> {
    let kind = r.u8()?;
    let (index, seed, p, tc, n) = (r.u64()?, r.u64()?, r.u64()? as usize, r.u64()? as usize, r.u64()? as usize);
    let (a, alpha, delta, t_final) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
    let provenance = match kind {
        0 => Provenance::Advection {
            params: SampleParams { index: index as usize, a, alpha, delta, p, t_final, seed },
            tc,
        },
        k if (k as usize) <= InitialCondition::ALL.len() => {
            Provenance::Euler { ic: InitialCondition::ALL[k as usize - 1], p, n, t_final, tc }
        }
        k => return Err(Error::Corrupt(format!("corpus: unknown record kind {k}"))),
    };
    let transform = Normalization { shift: r.f64()?, scale: r.f64()? };
    let input = r.f64s(WINDOW_LEN)?;
    let target = r.f64s(WINDOW_LEN)?;
    Ok(WindowSample { input, target, transform, provenance })
}

impl Corpus {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u64(WINDOW_LEN as u64);
        w.u64(self.train.len() as u64);
        w.u64(self.validation.len() as u64);
        for s in self.train.iter().chain(&self.validation) {
            write_sample(&mut w, s);
        }
        w.buf
    }

    pub fn decode(data: &[u8]) -> Result<Self> {
        let mut r = Reader::new(data, "corpus");
        r.expect_magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::VersionMismatch { expected: VERSION, found: version });
        }
        let len = r.u64()? as usize;
        if len != WINDOW_LEN {
            return Err(Error::Corrupt(format!("corpus: window length {len}, expected {WINDOW_LEN}")));
        }
        let (n_train, n_val) = (r.u64()? as usize, r.u64()? as usize);
        let train = (0..n_train).map(|_| read_sample(&mut r)).collect::<Result<Vec<_>>>()?;
        let validation = (0..n_val).map(|_| read_sample(&mut r)).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ok(Corpus { train, validation })
    }

    /// SHA-256 of the encoded corpus, as lowercase hex.
    pub fn digest(&self) -> String {
        hex(&Sha256::digest(self.encode()))
    }

    pub fn train_pairs(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.train.iter().map(WindowSample::pair).collect()
    }

    pub fn validation_pairs(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.validation.iter().map(WindowSample::pair).collect()
    }

    /// Writes `corpus.bin` and `manifest.toml` into `dir`.
    pub fn save(&self, dir: &Path, config: &DatagenConfig) -> Result<String> {
        let bytes = self.encode();
        let digest = hex(&Sha256::digest(&bytes));
        write_file(&dir.join("corpus.bin"), &bytes)?;
        let manifest = Manifest {
            version: VERSION,
            digest: digest.clone(),
            config: *config,
            train: self.train.iter().map(|s| s.provenance).collect(),
            validation: self.validation.iter().map(|s| s.provenance).collect(),
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))?;
        write_file(&dir.join("manifest.toml"), text.as_bytes())?;
        Ok(digest)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Self::decode(&read_file(&dir.join("corpus.bin"))?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    digest: String,
    config: DatagenConfig,
    train: Vec<Provenance>,
    validation: Vec<Provenance>,
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Mesh of the training runs.
pub fn training_mesh() -> Mesh {
    Mesh::new(-5.0, 5.0, TRAINING_ELEMENTS).expect("valid mesh")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_stratified_and_in_range() {
        let ps = draw_params(10, &wave_speeds(), 3).unwrap();
        assert_eq!(ps.len(), 90);
        for (i, p) in ps.iter().enumerate() {
            assert_eq!(p.index, i);
            assert_eq!(p.a, 1.0 + 0.5 * (i / 10) as f64);
            assert!((0.1..0.5).contains(&p.alpha));
            assert!((0.1..1.0).contains(&p.delta));
            assert!((1..=4).contains(&p.p));
            let periods = p.t_final * p.a / 10.0;
            assert!((1.1..1.3).contains(&periods), "{periods}");
            assert_eq!(SampleParams::from_seed(p.index, p.a, p.seed), *p);
        }
        assert_eq!(ps, draw_params(10, &wave_speeds(), 3).unwrap());
        assert_ne!(ps, draw_params(10, &wave_speeds(), 4).unwrap());
    }

    #[test]
    fn normalization_examples() {
        let input = [0.2, 0.9, 0.5];
        let (i, t, tr) = normalize_window(&input, &[0.2, 1.6, -0.5]);
        assert_eq!(i.iter().cloned().fold(f64::NAN, f64::min), 0.0);
        assert!((i.iter().cloned().fold(f64::NAN, f64::max) - 1.0).abs() < 1e-15);
        assert!(t[1] > 1.0 && t[2] < 0.0);
        let back = denormalize(&t, &tr);
        for (b, o) in back.iter().zip([0.2, 1.6, -0.5]) {
            assert!((b - o).abs() < 1e-14);
        }
        let (_, _, flat) = normalize_window(&[0.3; 5], &[0.3; 5]);
        assert_eq!(flat, Normalization::IDENTITY);
    }

    #[test]
    fn top_hat_sample_windows() {
        let p = SampleParams::from_seed(0, 2.0, 11);
        let samples = make_window_samples(&p, DEFAULT_THRESHOLD).unwrap();
        assert!(!samples.is_empty());
        let mesh = training_mesh();
        let jumps = p.problem().jump_locations();
        for s in &samples {
            assert_eq!(s.input.len(), WINDOW_LEN);
            assert!(s.transform.scale > 0.0);
            let lo = s.input.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = s.input.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
            let tc = s.provenance.troubled_cell();
            assert!(jumps.iter().any(|&x| x >= mesh.left(tc - 2) && x <= mesh.right(tc + 2)));
            // the target is two-level: alpha and alpha + delta
            let raw = denormalize(&s.target, &s.transform);
            assert!(raw.iter().all(|v| (v - p.alpha).abs() < 1e-12 || (v - p.alpha - p.delta).abs() < 1e-12));
        }
        // both discontinuities are represented
        for &xj in &jumps {
            let j = mesh.element_of(xj);
            if j >= 6 && j + 6 < mesh.n_elements {
                assert!(samples.iter().any(|s| s.provenance.troubled_cell().abs_diff(j) <= 2), "jump {xj}");
            }
        }
        // recomputable from provenance
        assert_eq!(samples, make_window_samples(&p, DEFAULT_THRESHOLD).unwrap());
    }

    #[test]
    fn corpus_round_trip_and_digest() {
        let p = SampleParams::from_seed(0, 3.0, 5);
        let train = make_window_samples(&p, DEFAULT_THRESHOLD).unwrap();
        let run = ValidationRun { ic: InitialCondition::Sod, p: 1, n: 128, t_final: 1.2 };
        let validation = run.samples(DEFAULT_THRESHOLD).unwrap();
        assert!(!validation.is_empty());
        let corpus = Corpus { train, validation };
        let dir = tempfile::tempdir().unwrap();
        let digest = corpus.save(dir.path(), &DatagenConfig::desk(0)).unwrap();
        assert_eq!(digest.len(), 64);
        let back = Corpus::load(dir.path()).unwrap();
        assert_eq!(back, corpus);
        assert_eq!(back.digest(), digest);
        let bytes = corpus.encode();
        assert!(matches!(Corpus::decode(&bytes[..bytes.len() - 3]), Err(Error::Corrupt(_))));
        let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
        assert!(manifest.contains(&digest));
    }

    #[test]
    fn euler_validation_targets_are_exact_density() {
        let run = ValidationRun { ic: InitialCondition::Lax, p: 2, n: 64, t_final: 0.8 };
        let sol = riemann_reference(run.ic).unwrap();
        let mesh = Mesh::new(-5.0, 5.0, 64).unwrap();
        let nodes = gauss_legendre(GRID_NODES).unwrap();
        let x = crate::dg::grid_points(&mesh, &nodes);
        for s in run.samples(DEFAULT_THRESHOLD).unwrap() {
            let tc = s.provenance.troubled_cell();
            let raw = denormalize(&s.target, &s.transform);
            for (k, v) in raw.iter().enumerate() {
                let xk = x[(tc - 4) * GRID_NODES + k];
                assert!((v - sol.sample(xk / 0.8).rho).abs() < 1e-12);
            }
        }
    }
}
