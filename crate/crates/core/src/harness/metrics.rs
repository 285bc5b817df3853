use std::ops::RangeInclusive;

use crate::dg::GridData;
use crate::error::{Error, Result};

/// Root-mean-square and maximum pointwise error over the grid points of
/// elements `window`.
pub fn grid_errors(approx: &GridData, reference: &GridData, window: RangeInclusive<usize>) -> Result<(f64, f64)> {
    if approx.nodes_per_element != reference.nodes_per_element
        || approx.len() != reference.len()
        || approx.x.iter().zip(&reference.x).any(|(a, b)| a != b)
    {
        return Err(Error::GridMismatch("approximation and reference grids differ".into()));
    }
    let range = approx.element_range(*window.start(), *window.end());
    if range.end > approx.len() || range.is_empty() {
        return Err(Error::GridMismatch(format!(
            "window {}..={} outside grid of {} points",
            window.start(),
            window.end(),
            approx.len()
        )));
    }
    let m = range.len() as f64;
    let (mut sq, mut max) = (0.0f64, 0.0f64);
    for k in range {
        let e = (approx.values[k] - reference.values[k]).abs();
        sq += e * e;
        max = max.max(e);
    }
    Ok(((sq / m).sqrt(), max))
}

/// Linear-interpolation quartiles `(q25, median, q75)`; NaN values sort last.
pub fn quartiles(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quartiles"));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let q = |f: f64| {
        let pos = f * (v.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < v.len() {
            v[i] + frac * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    Ok((q(0.25), q(0.5), q(0.75)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: Vec<f64>) -> GridData {
        GridData { x: (0..values.len()).map(|i| i as f64).collect(), values, nodes_per_element: 4 }
    }

    #[test]
    fn error_examples() {
        let r = grid(vec![0.0; 36]);
        assert_eq!(grid_errors(&r, &r, 0..=8).unwrap(), (0.0, 0.0));
        let mut a = vec![0.0; 36];
        a[7] = 0.3;
        let (l2, linf) = grid_errors(&grid(a), &r, 0..=8).unwrap();
        assert_eq!(linf, 0.3);
        assert!((l2 - 0.3 / 6.0).abs() < 1e-15);
        let alt: Vec<f64> = (0..36).map(|i| if i % 2 == 0 { 0.2 } else { -0.2 }).collect();
        let (l2, linf) = grid_errors(&grid(alt), &r, 0..=8).unwrap();
        assert!((l2 - 0.2).abs() < 1e-15 && linf == 0.2);
        let mut other = r.clone();
        other.x[3] = 9.0;
        assert!(matches!(grid_errors(&other, &r, 0..=1), Err(Error::GridMismatch(_))));
        assert!(grid_errors(&r, &r, 8..=9).is_err());
    }

    #[test]
    fn quartile_examples() {
        assert_eq!(quartiles(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap(), (2.0, 3.0, 4.0));
        assert_eq!(quartiles(&[7.0]).unwrap(), (7.0, 7.0, 7.0));
        assert_eq!(quartiles(&[1.0, 2.0]).unwrap(), (1.25, 1.5, 1.75));
        assert!(matches!(quartiles(&[]), Err(Error::EmptyInput(_))));
    }
}
