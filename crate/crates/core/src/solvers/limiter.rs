//! TVB troubled-cell detection and the hierarchical moment limiter.

use crate::dg::legendre::mode_scale;
use crate::dg::DGField;

/// How a single scalar variable is continued past the domain ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarBoundary {
    Periodic,
    /// Constant ghost elements with the given values.
    Ghost { left: f64, right: f64 },
}

pub fn minmod(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// Minmod with the TVB relaxation: `a` is kept whenever `|a| <= M h^2`.
pub fn tvb_minmod(a: f64, b: f64, c: f64, mh2: f64) -> f64 {
    if a.abs() <= mh2 {
        a
    } else {
        minmod(a, b, c)
    }
}

fn neighbour_means(field: &DGField, bc: ScalarBoundary) -> Vec<f64> {
    // padded with one ghost on each side
    let n = field.mesh.n_elements;
    let mut means = Vec::with_capacity(n + 2);
    let (gl, gr) = match bc {
        ScalarBoundary::Periodic => (field.mean(n - 1), field.mean(0)),
        ScalarBoundary::Ghost { left, right } => (left, right),
    };
    means.push(gl);
    means.extend((0..n).map(|j| field.mean(j)));
    means.push(gr);
    means
}

fn tvb_flags_into(field: &DGField, bc: ScalarBoundary, m: f64, flags: &mut [bool]) {
    let n = field.mesh.n_elements;
    let mh2 = m * field.mesh.h * field.mesh.h;
    let means = neighbour_means(field, bc);
    // round-off in the projected modes must not count as a modification
    let tol = 1e-12 * means.iter().fold(1e-300f64, |a, b| a.max(b.abs()));
    for j in 0..n {
        let c = field.element(j);
        let mean = means[j + 1];
        let right: f64 = c.iter().enumerate().map(|(i, b)| b * mode_scale(i)).sum();
        let left: f64 = c
            .iter()
            .enumerate()
            .map(|(i, b)| if i % 2 == 0 { b * mode_scale(i) } else { -b * mode_scale(i) })
            .sum();
        let fwd = means[j + 2] - mean;
        let bwd = mean - means[j];
        let dr = right - mean;
        let dl = mean - left;
        if (tvb_minmod(dr, fwd, bwd, mh2) - dr).abs() > tol || (tvb_minmod(dl, fwd, bwd, mh2) - dl).abs() > tol {
            flags[j] = true;
        }
    }
}

/// Elements whose interface deviations are altered by the TVB-modified
/// minmod in any of the given variables (sorted ascending).
pub fn tvb_detect(fields: &[&DGField], bcs: &[ScalarBoundary], m: f64) -> Vec<usize> {
    assert_eq!(fields.len(), bcs.len());
    let Some(first) = fields.first() else {
        return Vec::new();
    };
    let mut flags = vec![false; first.mesh.n_elements];
    for (f, &bc) in fields.iter().zip(bcs) {
        tvb_flags_into(f, bc, m, &mut flags);
    }
    flags
        .iter()
        .enumerate()
        .filter_map(|(j, &f)| f.then_some(j))
        .collect()
}

/// Limits one variable in the flagged elements. Neighbour coefficients are
/// always taken from the unlimited input.
pub fn moment_limit_field(field: &mut DGField, bc: ScalarBoundary, flagged: &[usize]) {
    let n = field.mesh.n_elements;
    let m = field.n_modes();
    if m < 2 || flagged.is_empty() {
        return;
    }
    // standard Legendre coefficients of element j, with ghosts at -1 and n
    let orig = field.clone();
    let legendre = |j: i64, i: usize| -> f64 {
        if (0..n as i64).contains(&j) {
            return orig.element(j as usize)[i] * mode_scale(i);
        }
        match bc {
            ScalarBoundary::Periodic => {
                orig.element(j.rem_euclid(n as i64) as usize)[i] * mode_scale(i)
            }
            ScalarBoundary::Ghost { left, right } => match i {
                0 if j < 0 => left,
                0 => right,
                _ => 0.0,
            },
        }
    };
    for &j in flagged {
        let ji = j as i64;
        let coeffs = field.element_mut(j);
        for i in (1..m).rev() {
            let a = legendre(ji, i);
            let alpha = 1.0 / (2.0 * (2 * i - 1) as f64);
            let fwd = alpha * (legendre(ji + 1, i - 1) - legendre(ji, i - 1));
            let bwd = alpha * (legendre(ji, i - 1) - legendre(ji - 1, i - 1));
            let limited = minmod(a, fwd, bwd);
            if limited == a {
                break;
            }
            coeffs[i] = limited / mode_scale(i);
        }
    }
}

/// Applies the moment limiter to every variable on the shared flagged set.
pub fn moment_limit(fields: &mut [DGField], bcs: &[ScalarBoundary], flagged: &[usize]) {
    assert_eq!(fields.len(), bcs.len());
    for (f, &bc) in fields.iter_mut().zip(bcs) {
        moment_limit_field(f, bc, flagged);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{gauss_legendre, project, Mesh};

    fn ghosts(f: &DGField) -> ScalarBoundary {
        ScalarBoundary::Ghost {
            left: f.mean(0),
            right: f.mean(f.mesh.n_elements - 1),
        }
    }

    #[test]
    fn minmod_cases() {
        assert_eq!(minmod(1.0, 2.0, 3.0), 1.0);
        assert_eq!(minmod(-1.0, -0.5, -3.0), -0.5);
        assert_eq!(minmod(1.0, -2.0, 3.0), 0.0);
        assert_eq!(tvb_minmod(0.01, -1.0, 1.0, 0.02), 0.01);
    }

    #[test]
    fn linear_data_is_never_flagged() {
        let mesh = Mesh::new(0.0, 1.0, 20).unwrap();
        let q = gauss_legendre(4).unwrap();
        for p in 1..=3 {
            let f = project(|x| 2.0 * x - 0.3, &mesh, p, &q);
            // ghost means continue the line
            let bc = ScalarBoundary::Ghost {
                left: 2.0 * (-0.5 * mesh.h) - 0.3,
                right: 2.0 * (1.0 + 0.5 * mesh.h) - 0.3,
            };
            for &m in &[0.0, 10.0, 1e4] {
                assert!(tvb_detect(&[&f], &[bc], m).is_empty(), "p={p} M={m}");
            }
        }
    }

    #[test]
    fn interface_step_is_not_flagged_but_in_cell_step_is() {
        let mesh = Mesh::new(0.0, 16.0, 16).unwrap();
        let q = gauss_legendre(6).unwrap();
        let bc = ScalarBoundary::Ghost { left: 0.0, right: 1.0 };
        // jump exactly at an interface: every element is constant, so the
        // interface deviations vanish and minmod keeps them
        let aligned = project(|x| if x < 8.0 { 0.0 } else { 1.0 }, &mesh, 2, &q);
        assert!(tvb_detect(&[&aligned], &[bc], 0.0).is_empty());
        // jump inside element 8: its traces deviate from the mean
        let inside = project(|x| if x < 8.4 { 0.0 } else { 1.0 }, &mesh, 2, &q);
        let flags = tvb_detect(&[&inside], &[bc], 0.0);
        assert!(flags.contains(&8), "{flags:?}");
        assert!(flags.iter().all(|&j| (7..=9).contains(&j)), "{flags:?}");
    }

    #[test]
    fn smooth_sine_with_large_m_is_clean() {
        let mesh = Mesh::new(0.0, 1.0, 128).unwrap();
        let q = gauss_legendre(4).unwrap();
        let f = project(|x| (2.0 * std::f64::consts::PI * x).sin(), &mesh, 2, &q);
        assert!(tvb_detect(&[&f], &[ScalarBoundary::Periodic], 100.0).is_empty());
        // without relaxation the extrema get flagged
        assert!(!tvb_detect(&[&f], &[ScalarBoundary::Periodic], 0.0).is_empty());
    }

    #[test]
    fn hand_computed_three_element_case() {
        // p = 2, element means 0, 1, 2 so the first-mode bound is 1/2
        let mesh = Mesh::new(0.0, 3.0, 3).unwrap();
        let s1 = mode_scale(1);
        let s2 = mode_scale(2);
        // middle element: a1 = 0.5 (consistent), a2 = 0.4 (oscillatory)
        let coeffs = vec![0.0, 0.5 / s1, 0.0, 1.0, 0.5 / s1, 0.4 / s2, 2.0, 0.5 / s1, 0.0];
        let mut f = DGField::from_coeffs(mesh, 2, coeffs).unwrap();
        let bc = ScalarBoundary::Ghost { left: -1.0, right: 3.0 };
        moment_limit_field(&mut f, bc, &[1]);
        // a2 bound: (a1 differences are 0) / 6 -> minmod(0.4, 0, 0) = 0
        assert_eq!(f.element(1)[2], 0.0);
        // a1 = minmod(0.5, 0.5, 0.5) unchanged
        assert_eq!(f.element(1)[1], 0.5 / s1);
        assert_eq!(f.element(1)[0], 1.0);
    }

    #[test]
    fn limiter_keeps_unflagged_and_means() {
        let mesh = Mesh::new(-1.0, 1.0, 10).unwrap();
        let q = gauss_legendre(6).unwrap();
        let f0 = project(|x| if x < 0.13 { 1.0 } else { -0.5 + x * x }, &mesh, 3, &q);
        let mut f = f0.clone();
        let bc = ghosts(&f0);
        moment_limit_field(&mut f, bc, &[4, 5, 6]);
        for j in 0..10 {
            assert_eq!(f.mean(j), f0.mean(j));
            if ![4, 5, 6].contains(&j) {
                assert_eq!(f.element(j), f0.element(j));
            }
        }
    }

    #[test]
    fn linear_limiting_is_idempotent() {
        let mesh = Mesh::new(0.0, 1.0, 12).unwrap();
        let q = gauss_legendre(4).unwrap();
        let f0 = project(|x| if x < 0.47 { (9.0 * x).sin() } else { 2.0 - x }, &mesh, 1, &q);
        let all: Vec<usize> = (0..12).collect();
        let bc = ScalarBoundary::Periodic;
        let mut once = f0.clone();
        moment_limit_field(&mut once, bc, &all);
        let mut twice = once.clone();
        moment_limit_field(&mut twice, bc, &all);
        assert_eq!(once, twice);
    }
}
