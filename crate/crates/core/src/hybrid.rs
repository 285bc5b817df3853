//! Hybrid filtered approximation: global SIAC, moving average inside
//! discontinuity windows, the learned filter in the discontinuity cell and
//! interpolation patches in its neighbours.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::Normalization;
use crate::detect::{group_windows, locate_in_windows, multiwavelet_detect, DiscontinuityWindow, TRAINING_HALF_WIDTH};
use crate::dg::{gauss_legendre, DGField, GridData, GRID_NODES};
use crate::error::{Error, Result};
use crate::nn::ConvFilterParams;
use crate::siac::{filtered_field, moving_average_filter, siac_filter, BoundaryPolicy, GlobalKernelSpec, KernelScaling, SiacKernel};
use crate::solvers::{primitives_from_conservative, EulerFields, PrimitiveGrids};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridConfig {
    pub global_kernel: GlobalKernelSpec,
    /// Troubled cells at most `n` apart share a window.
    pub n: usize,
    /// Window padding in elements.
    pub d: usize,
    pub threshold: f64,
    /// Interpolation degree is `min(hermite_max_degree, p)`.
    pub hermite_max_degree: usize,
    pub boundary: BoundaryPolicy,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            global_kernel: GlobalKernelSpec::Standard,
            n: 4,
            d: 4,
            threshold: crate::detect::DEFAULT_THRESHOLD,
            hermite_max_degree: 2,
            boundary: BoundaryPolicy::Fallback,
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("window grouping distance n must be at least 1".into()));
        }
        if !(self.threshold >= 0.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidArgument(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

/// Which stage produced an output point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Unfiltered,
    SiacGlobal,
    SiacMa,
    Nn,
    Hermite,
}

impl Label {
    pub fn name(&self) -> &'static str {
        match self {
            Label::Unfiltered => "unfiltered",
            Label::SiacGlobal => "siac_global",
            Label::SiacMa => "siac_ma",
            Label::Nn => "nn",
            Label::Hermite => "hermite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSolution {
    pub grid: GridData,
    pub labels: Vec<Label>,
    pub windows: Vec<DiscontinuityWindow>,
}

impl FilteredSolution {
    /// CSV with columns `x,value,label`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "value", "label"])?;
        for ((x, v), l) in self.grid.x.iter().zip(&self.grid.values).zip(&self.labels) {
            w.write_record([format!("{x:.17e}"), format!("{v:.17e}"), l.name().to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn save_dump(&self, path: &Path) -> Result<()> {
        crate::dg::save_grid_dump(&self.grid, path)
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

fn unit_scaling(field: &DGField) -> Result<KernelScaling> {
    KernelScaling::new(field.mesh.h)
}

/// Moving-average filtered values at the grid nodes.
pub fn moving_average_grid(field: &DGField, boundary: BoundaryPolicy) -> Result<GridData> {
    let nodes = gauss_legendre(GRID_NODES)?;
    Ok(moving_average_filter(field, unit_scaling(field)?, &nodes, boundary).grid)
}

/// Troubled cells of the moving-average filtered `field`, grouped into
/// windows with located discontinuity cells.
pub fn detect_windows(field: &DGField, config: &HybridConfig) -> Result<Vec<DiscontinuityWindow>> {
    config.validate()?;
    let smoothed = filtered_field(field, &SiacKernel::moving_average(), unit_scaling(field)?, config.boundary);
    let troubled = multiwavelet_detect(&smoothed, config.threshold)?;
    let mut windows = group_windows(&troubled, config.n, config.d, field.mesh.n_elements)?;
    let ma = moving_average_grid(field, config.boundary)?;
    locate_in_windows(&ma.values, GRID_NODES, &mut windows)?;
    Ok(windows)
}

/// Polynomial through `(xs, ys)` evaluated at `x` (Neville).
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    for i in 0..n {
        for j in i + 1..n {
            if !((xs[i] - xs[j]).abs() > 0.0) {
                return Err(Error::DegenerateAbscissae);
            }
        }
    }
    let mut p = ys.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = ((x - xs[i + m]) * p[i] + (xs[i] - x) * p[i + 1]) / (xs[i] - xs[i + m]);
        }
    }
    Ok(p[0])
}

/// Replaces the values of cells `j_dagger +- 1` with the degree-`p_h`
/// interpolant through the node of `j_dagger` nearest the shared face (taken
/// from `values`) and the `p_h` nodes of `j_dagger +- 2` nearest it (taken
/// from `anchors`). Sides whose outer cell leaves the grid are left alone.
pub fn hermite_patch(
    grid: &mut GridData,
    anchors: &[f64],
    labels: &mut [Label],
    j_dagger: usize,
    p_h: usize,
) -> Result<()> {
    let npe = grid.nodes_per_element;
    let n_elements = grid.len() / npe;
    if p_h >= npe {
        return Err(Error::InvalidArgument(format!("interpolation degree {p_h} needs more than {npe} nodes")));
    }
    for right in [false, true] {
        let (Some(near), Some(far)) = (
            if right { j_dagger.checked_add(1) } else { j_dagger.checked_sub(1) },
            if right { j_dagger.checked_add(2) } else { j_dagger.checked_sub(2) },
        ) else {
            continue;
        };
        if far >= n_elements {
            continue;
        }
        let own = grid.element_range(j_dagger, j_dagger);
        let outer = grid.element_range(far, far);
        let k0 = if right { own.end - 1 } else { own.start };
        let mut xs = vec![grid.x[k0]];
        let mut ys = vec![grid.values[k0]];
        let outer_ks: Vec<usize> = if right {
            outer.clone().take(p_h).collect()
        } else {
            outer.clone().rev().take(p_h).collect()
        };
        for k in outer_ks {
            xs.push(grid.x[k]);
            ys.push(anchors[k]);
        }
        for k in grid.element_range(near, near) {
            grid.values[k] = interpolate(&xs, &ys, grid.x[k])?;
            labels[k] = Label::Hermite;
        }
    }
    Ok(())
}

/// Applies the learned filter to the 36 moving-average values centred on
/// `j_dagger` and returns the 4 values of the central cell.
pub fn nn_cell_values(model: &ConvFilterParams, ma: &[f64], j_dagger: usize) -> Result<Vec<f64>> {
    let lo = (j_dagger - TRAINING_HALF_WIDTH) * GRID_NODES;
    let hi = (j_dagger + TRAINING_HALF_WIDTH + 1) * GRID_NODES;
    let window = &ma[lo..hi];
    let t = Normalization::from_input(window);
    let out = model.forward(&t.apply(window))?;
    let c = TRAINING_HALF_WIDTH * GRID_NODES;
    Ok(t.invert(&out[c..c + GRID_NODES]))
}

/// Hybrid filter of a single field with precomputed `windows`.
///
/// Without a model only the SIAC stages run.
pub fn hybrid_filter_field(
    field: &DGField,
    config: &HybridConfig,
    model: Option<&ConvFilterParams>,
    windows: &[DiscontinuityWindow],
) -> Result<FilteredSolution> {
    config.validate()?;
    let nodes = gauss_legendre(GRID_NODES)?;
    let scaling = unit_scaling(field)?;
    let kernel = config.global_kernel.build(field.degree)?;
    let global = siac_filter(field, &kernel, scaling, &nodes, config.boundary);
    let mut grid = global.grid;
    let mut labels: Vec<Label> =
        global.filtered.iter().map(|&f| if f { Label::SiacGlobal } else { Label::Unfiltered }).collect();
    let n_elements = field.mesh.n_elements;
    let ma = if windows.is_empty() {
        None
    } else {
        Some(moving_average_filter(field, scaling, &nodes, config.boundary))
    };
    let p_h = config.hermite_max_degree.min(field.degree);
    let mut kept = Vec::with_capacity(windows.len());

    for w in windows {
        let ma = ma.as_ref().expect("computed when windows exist");
        if w.hi >= n_elements {
            return Err(Error::GridMismatch(format!("window [{}, {}] outside {n_elements} elements", w.lo, w.hi)));
        }
        if w.touches_boundary(n_elements) {
            log::warn!("window [{}, {}] touches the domain boundary; skipped", w.lo, w.hi);
            continue;
        }
        for k in grid.element_range(w.lo, w.hi) {
            grid.values[k] = ma.grid.values[k];
            labels[k] = if ma.filtered[k] { Label::SiacMa } else { Label::Unfiltered };
        }
        if let (Some(model), Some(jd)) = (model, w.j_dagger) {
            if jd < TRAINING_HALF_WIDTH || jd + TRAINING_HALF_WIDTH >= n_elements {
                log::warn!("discontinuity cell {jd} too close to the boundary for the learned filter");
            } else {
                let cell = nn_cell_values(model, &ma.grid.values, jd)?;
                let range = grid.element_range(jd, jd);
                grid.values[range.clone()].copy_from_slice(&cell);
                labels[range].iter_mut().for_each(|l| *l = Label::Nn);
                hermite_patch(&mut grid, &ma.grid.values, &mut labels, jd, p_h)?;
            }
        }
        kept.push(*w);
    }
    Ok(FilteredSolution { grid, labels, windows: kept })
}

/// Detects windows on `field` itself and filters it.
pub fn hybrid_filter_scalar(
    field: &DGField,
    config: &HybridConfig,
    model: Option<&ConvFilterParams>,
) -> Result<FilteredSolution> {
    let windows = detect_windows(field, config)?;
    hybrid_filter_field(field, config, model, &windows)
}

/// Filtered conservative variables and the primitives derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerFiltered {
    pub rho: FilteredSolution,
    pub mom: FilteredSolution,
    pub energy: FilteredSolution,
    pub primitives: PrimitiveGrids,
    pub windows: Vec<DiscontinuityWindow>,
}

impl EulerFiltered {
    /// A primitive or entropy variable by name, with the density labels.
    pub fn variable(&self, name: &str) -> Result<FilteredSolution> {
        let g = match name {
            "density" | "rho" => &self.primitives.rho,
            "velocity" | "u" => &self.primitives.velocity,
            "pressure" | "p" => &self.primitives.pressure,
            "entropy" | "s" => &self.primitives.entropy,
            _ => return Err(Error::InvalidArgument(format!("unknown variable {name}"))),
        };
        Ok(FilteredSolution { grid: g.clone(), labels: self.rho.labels.clone(), windows: self.windows.clone() })
    }
}

/// Variables reported for Euler runs.
pub const EULER_VARIABLES: [&str; 4] = ["density", "velocity", "pressure", "entropy"];

/// Windows are detected on the filtered density and shared by all
/// conservative variables; primitives come from the filtered conservatives.
pub fn hybrid_filter_euler(
    fields: &EulerFields,
    config: &HybridConfig,
    model: Option<&ConvFilterParams>,
) -> Result<EulerFiltered> {
    let windows = detect_windows(&fields.rho, config)?;
    hybrid_filter_euler_with(fields, config, model, &windows)
}

pub fn hybrid_filter_euler_with(
    fields: &EulerFields,
    config: &HybridConfig,
    model: Option<&ConvFilterParams>,
    windows: &[DiscontinuityWindow],
) -> Result<EulerFiltered> {
    let rho = hybrid_filter_field(&fields.rho, config, model, windows)?;
    if let Some(k) = rho.grid.values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::FilteredPositivity { x: rho.grid.x[k], value: rho.grid.values[k] });
    }
    let mom = hybrid_filter_field(&fields.mom, config, model, windows)?;
    let energy = hybrid_filter_field(&fields.energy, config, model, windows)?;
    let primitives = primitives_from_conservative(&rho.grid, &mom.grid, &energy.grid, fields.gamma);
    let windows = rho.windows.clone();
    Ok(EulerFiltered { rho, mom, energy, primitives, windows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{project, Mesh};
    use crate::nn::ArchitectureConfig;

    fn step_field(p: usize, n: usize, x0: f64) -> DGField {
        let mesh = Mesh::new(-5.0, 5.0, n).unwrap();
        let q = gauss_legendre(p + 6).unwrap();
        project(|x| if x < x0 { 1.0 } else { 0.2 }, &mesh, p, &q)
    }

    #[test]
    fn no_windows_gives_global_siac() {
        let f = step_field(2, 64, 0.03);
        let cfg = HybridConfig::default();
        let out = hybrid_filter_field(&f, &cfg, None, &[]).unwrap();
        let nodes = gauss_legendre(4).unwrap();
        let g = siac_filter(&f, &cfg.global_kernel.build(2).unwrap(), KernelScaling(f.mesh.h), &nodes, cfg.boundary);
        assert_eq!(out.grid, g.grid);
        assert_eq!(out.count(Label::SiacMa), 0);
    }

    #[test]
    fn window_locality_and_labels() {
        let f = step_field(2, 64, 0.03);
        let cfg = HybridConfig::default();
        let windows = detect_windows(&f, &cfg).unwrap();
        assert_eq!(windows.len(), 1);
        let jd = windows[0].j_dagger.unwrap();
        assert_eq!(jd, f.mesh.element_of(0.03));
        let model = ConvFilterParams::init(ArchitectureConfig::desk(), 1).unwrap();
        let out = hybrid_filter_field(&f, &cfg, Some(&model), &windows).unwrap();
        let global = hybrid_filter_field(&f, &cfg, None, &[]).unwrap();
        for k in 0..out.grid.len() {
            let j = k / 4;
            if !windows[0].contains(j) {
                assert_eq!(out.grid.values[k].to_bits(), global.grid.values[k].to_bits());
            }
        }
        assert_eq!(out.count(Label::Nn), 4);
        assert_eq!(out.count(Label::Hermite), 8);
        assert_eq!(out.labels[jd * 4], Label::Nn);
        assert_eq!(out.labels[(jd - 1) * 4], Label::Hermite);
        assert_eq!(out.labels[(jd - 2) * 4], Label::SiacMa);
    }

    #[test]
    fn boundary_windows_are_skipped() {
        let f = step_field(1, 32, -4.9);
        let cfg = HybridConfig::default();
        let w = group_windows(&[1], 4, 4, 32).unwrap();
        let out = hybrid_filter_field(&f, &cfg, None, &w).unwrap();
        assert!(out.windows.is_empty());
        assert_eq!(out.count(Label::SiacMa), 0);
    }

    #[test]
    fn interpolation_reproduces_lines() {
        let mesh = Mesh::new(0.0, 1.0, 12).unwrap();
        let nodes = gauss_legendre(4).unwrap();
        let x = crate::dg::grid_points(&mesh, &nodes);
        let line: Vec<f64> = x.iter().map(|x| 3.0 * x - 0.5).collect();
        for p_h in 1..=2 {
            let mut grid = GridData { x: x.clone(), values: line.clone(), nodes_per_element: 4 };
            let mut labels = vec![Label::SiacMa; x.len()];
            hermite_patch(&mut grid, &line, &mut labels, 6, p_h).unwrap();
            for (a, b) in grid.values.iter().zip(&line) {
                assert!((a - b).abs() < 1e-13);
            }
            assert_eq!(labels.iter().filter(|&&l| l == Label::Hermite).count(), 8);
        }
        assert!(matches!(interpolate(&[0.0, 0.0], &[1.0, 2.0], 0.5), Err(Error::DegenerateAbscissae)));
    }

    #[test]
    fn constant_state_passes_unchanged() {
        let mesh = Mesh::new(-5.0, 5.0, 64).unwrap();
        let rho = DGField::constant(mesh, 2, 0.7);
        let mom = DGField::constant(mesh, 2, 0.35);
        let energy = DGField::constant(mesh, 2, 2.1);
        let fields = EulerFields { rho, mom, energy, gamma: 1.4, time: 0.0 };
        let cfg = HybridConfig::default();
        assert!(detect_windows(&fields.rho, &cfg).unwrap().is_empty());
        let mut windows = group_windows(&[30], 4, 4, 64).unwrap();
        windows[0].j_dagger = Some(30);
        let model = ConvFilterParams::init(ArchitectureConfig::desk(), 3).unwrap();
        let out = hybrid_filter_euler_with(&fields, &cfg, Some(&model), &windows).unwrap();
        assert_eq!(out.rho.count(Label::Nn), 4);
        for (g, v) in [(&out.rho.grid, 0.7), (&out.mom.grid, 0.35), (&out.energy.grid, 2.1)] {
            assert!(g.values.iter().all(|x| (x - v).abs() <= 1e-9));
        }
        let u = &out.primitives.velocity.values;
        assert!(u.iter().all(|x| (x - 0.5).abs() <= 1e-9));
    }

    #[test]
    fn negative_filtered_density_is_reported() {
        let mesh = Mesh::new(-5.0, 5.0, 32).unwrap();
        let rho = DGField::constant(mesh, 1, -0.1);
        let fields = EulerFields { rho: rho.clone(), mom: rho.clone(), energy: rho, gamma: 1.4, time: 0.0 };
        assert!(matches!(
            hybrid_filter_euler_with(&fields, &HybridConfig::default(), None, &[]),
            Err(Error::FilteredPositivity { .. })
        ));
    }
}
