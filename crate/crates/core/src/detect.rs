//! Multiwavelet troubled-cell indication, grouping of troubled cells into
//! discontinuity windows and location of the discontinuity cell.

use serde::{Deserialize, Serialize};

use crate::dg::legendre::basis_values;
use crate::dg::{gauss_legendre, DGField};
use crate::error::{Error, Result};

/// Default relative detection threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.4;

/// Details below this fraction of the largest element mean are treated as
/// round-off, so constant data yields no troubled cells.
const DETAIL_FLOOR: f64 = 1e-12;

/// Maps mode-0 data of two adjacent elements to the mean of their merged
/// degree-`p` projection over the left half.
struct PairProjector {
    /// coarse mode `i` from fine coefficients of the left / right element
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    /// mean of coarse mode `i` over the left half
    left_half_mean: Vec<f64>,
}

impl PairProjector {
    fn new(p: usize) -> Self {
        let m = p + 1;
        let quad = gauss_legendre(m).expect("valid size");
        let mut left = vec![vec![0.0; m]; m];
        let mut right = vec![vec![0.0; m]; m];
        let mut left_half_mean = vec![0.0; m];
        let mut fine = vec![0.0; m];
        let mut coarse = vec![0.0; m];
        for (&xi, &w) in quad.nodes.iter().zip(&quad.weights) {
            basis_values(xi, &mut fine);
            // left child: eta = (xi - 1) / 2, right child: eta = (xi + 1) / 2
            basis_values(0.5 * (xi - 1.0), &mut coarse);
            for i in 0..m {
                for k in 0..m {
                    left[i][k] += 0.25 * w * coarse[i] * fine[k];
                }
                left_half_mean[i] += 0.5 * w * coarse[i];
            }
            basis_values(0.5 * (xi + 1.0), &mut coarse);
            for i in 0..m {
                for k in 0..m {
                    right[i][k] += 0.25 * w * coarse[i] * fine[k];
                }
            }
        }
        PairProjector { left, right, left_half_mean }
    }

    /// Mode-0 detail of the left element of the pair.
    fn detail(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut coarse_mean = 0.0;
        for (i, w) in self.left_half_mean.iter().enumerate() {
            let c: f64 = self.left[i].iter().zip(a).map(|(x, y)| x * y).sum::<f64>()
                + self.right[i].iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            coarse_mean += w * c;
        }
        a[0] - coarse_mean
    }
}

/// Per-element detail magnitudes: every adjacent pair `(j, j + 1)` is
/// compared against its merged coarse projection and the magnitude of the
/// mean detail is assigned to both elements (largest value wins).
pub fn multiwavelet_details(field: &DGField) -> Vec<f64> {
    let n = field.mesh.n_elements;
    let mut d = vec![0.0f64; n];
    let proj = PairProjector::new(field.degree);
    for j in 0..n.saturating_sub(1) {
        let v = proj.detail(field.element(j), field.element(j + 1)).abs();
        d[j] = d[j].max(v);
        d[j + 1] = d[j + 1].max(v);
    }
    d
}

/// Elements whose detail exceeds `c` times the largest detail, ascending.
pub fn multiwavelet_detect(field: &DGField, c: f64) -> Result<Vec<usize>> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidArgument(format!("threshold {c} must lie in (0, 1]")));
    }
    let d = multiwavelet_details(field);
    let max = d.iter().cloned().fold(0.0f64, f64::max);
    let scale = (0..field.mesh.n_elements).map(|j| field.mean(j).abs()).fold(0.0f64, f64::max);
    if max <= DETAIL_FLOOR * scale || max == 0.0 {
        return Ok(Vec::new());
    }
    Ok(d.iter().enumerate().filter(|(_, &v)| v > c * max).map(|(j, _)| j).collect())
}

/// A padded group of troubled cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscontinuityWindow {
    pub s_lo: usize,
    pub s_hi: usize,
    pub pad: usize,
    /// Padded range `[s_lo - pad, s_hi + pad]` clipped to the mesh.
    pub lo: usize,
    pub hi: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_dagger: Option<usize>,
}

impl DiscontinuityWindow {
    pub fn elements(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    pub fn contains(&self, j: usize) -> bool {
        (self.lo..=self.hi).contains(&j)
    }

    pub fn touches_boundary(&self, n_elements: usize) -> bool {
        self.lo == 0 || self.hi + 1 == n_elements
    }
}

/// Groups troubled cells that are at most `n` cells apart, pads each group
/// by `d` and clips to `[0, n_elements - 1]`.
pub fn group_windows(troubled: &[usize], n: usize, d: usize, n_elements: usize) -> Result<Vec<DiscontinuityWindow>> {
    if n == 0 {
        return Err(Error::InvalidArgument("grouping distance must be at least 1".into()));
    }
    let mut cells: Vec<usize> = troubled.to_vec();
    cells.sort_unstable();
    cells.dedup();
    if let Some(&last) = cells.last() {
        if last >= n_elements {
            return Err(Error::InvalidArgument(format!("troubled cell {last} outside mesh of {n_elements}")));
        }
    }
    let mut out = Vec::new();
    let mut iter = cells.into_iter();
    let Some(first) = iter.next() else {
        return Ok(out);
    };
    let (mut lo, mut hi) = (first, first);
    let mut push = |lo: usize, hi: usize| {
        out.push(DiscontinuityWindow {
            s_lo: lo,
            s_hi: hi,
            pad: d,
            lo: lo.saturating_sub(d),
            hi: (hi + d).min(n_elements - 1),
            j_dagger: None,
        })
    };
    for j in iter {
        if j - hi <= n {
            hi = j;
        } else {
            push(lo, hi);
            lo = j;
            hi = j;
        }
    }
    push(lo, hi);
    Ok(out)
}

/// Index (into `values`) of the left point of the largest forward
/// difference; ties go to the leftmost pair.
pub fn max_jump_point(values: &[f64]) -> Result<usize> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points to locate a jump".into()));
    }
    let scale = values.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tol = 1e-12 * scale;
    let mut best = 0;
    let mut best_d = f64::NEG_INFINITY;
    for i in 0..values.len() - 1 {
        let d = (values[i + 1] - values[i]).abs();
        if d > best_d + tol {
            best = i;
            best_d = d;
        }
    }
    Ok(best)
}

/// Element owning the left point of the largest forward difference over
/// grid values of elements `first_element..`.
pub fn locate_discontinuity_cell(values: &[f64], first_element: usize, nodes_per_element: usize) -> Result<usize> {
    Ok(first_element + max_jump_point(values)? / nodes_per_element)
}

/// Fills `j_dagger` of each window from element-ordered grid values.
pub fn locate_in_windows(values: &[f64], nodes_per_element: usize, windows: &mut [DiscontinuityWindow]) -> Result<()> {
    for w in windows.iter_mut() {
        let range = w.lo * nodes_per_element..(w.hi + 1) * nodes_per_element;
        if range.end > values.len() {
            return Err(Error::GridMismatch(format!(
                "window [{}, {}] exceeds grid of {} points",
                w.lo,
                w.hi,
                values.len()
            )));
        }
        w.j_dagger = Some(locate_discontinuity_cell(&values[range], w.lo, nodes_per_element)?);
    }
    Ok(())
}

/// Half-width of single-cell training windows `[tc - 4, tc + 4]`.
pub const TRAINING_HALF_WIDTH: usize = 4;

/// Element ranges `[tc - 4, tc + 4]` of the troubled cells whose window lies
/// inside the mesh.
pub fn training_windows(troubled: &[usize], n_elements: usize) -> Vec<(usize, std::ops::RangeInclusive<usize>)> {
    troubled
        .iter()
        .filter(|&&tc| tc >= TRAINING_HALF_WIDTH && tc + TRAINING_HALF_WIDTH < n_elements)
        .map(|&tc| (tc, tc - TRAINING_HALF_WIDTH..=tc + TRAINING_HALF_WIDTH))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WindowList {
    #[serde(default)]
    pub windows: Vec<DiscontinuityWindow>,
}

impl WindowList {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("window list serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidArgument(format!("window list: {e}")))
    }
}
