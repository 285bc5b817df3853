//! Legendre polynomials and the scaled modal basis `phi_i = sqrt(2i+1) P_i`.
//!
//! The scaling makes the basis orthonormal with respect to the element
//! average `(1/2) * integral over [-1, 1]`, so mode 0 is the cell mean.

/// Legendre polynomial `P_p(xi)` by the three-term recurrence.
pub fn legendre_eval(p: usize, xi: f64) -> f64 {
    debug_assert!(
        (-1.0 - 1e-12..=1.0 + 1e-12).contains(&xi),
        "xi = {xi} outside the reference element"
    );
    match p {
        0 => 1.0,
        1 => xi,
        _ => {
            let (mut prev, mut cur) = (1.0, xi);
            for n in 1..p {
                let n = n as f64;
                let next = ((2.0 * n + 1.0) * xi * cur - n * prev) / (n + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fills `out[i] = P_i(xi)` for `i < out.len()`.
pub fn legendre_all(xi: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = xi;
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * xi * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
}

/// Fills `vals[i] = P_i(xi)` and `ders[i] = P_i'(xi)`.
pub fn legendre_all_with_derivatives(xi: f64, vals: &mut [f64], ders: &mut [f64]) {
    legendre_all(xi, vals);
    if ders.is_empty() {
        return;
    }
    ders[0] = 0.0;
    for n in 1..ders.len() {
        // P_n' = n P_{n-1} + xi P_{n-1}'
        ders[n] = n as f64 * vals[n - 1] + xi * ders[n - 1];
    }
}

#[inline]
pub fn mode_scale(i: usize) -> f64 {
    ((2 * i + 1) as f64).sqrt()
}

/// Scaled modal basis values `phi_i(xi)` for `i < out.len()`.
pub fn basis_values(xi: f64, out: &mut [f64]) {
    legendre_all(xi, out);
    for (i, v) in out.iter_mut().enumerate() {
        *v *= mode_scale(i);
    }
}

/// Scaled modal basis values and reference-coordinate derivatives.
pub fn basis_values_with_derivatives(xi: f64, vals: &mut [f64], ders: &mut [f64]) {
    legendre_all_with_derivatives(xi, vals, ders);
    for i in 0..vals.len() {
        let s = mode_scale(i);
        vals[i] *= s;
        ders[i] *= s;
    }
}

/// Evaluates a modal expansion at `xi`.
pub fn eval_modal(coeffs: &[f64], xi: f64) -> f64 {
    // Forward recurrence, accumulating as we go.
    let mut sum = 0.0;
    let (mut prev, mut cur) = (0.0, 1.0);
    for (n, c) in coeffs.iter().enumerate() {
        if n == 1 {
            prev = 1.0;
            cur = xi;
        } else if n > 1 {
            let nf = (n - 1) as f64;
            let next = ((2.0 * nf + 1.0) * xi * cur - nf * prev) / (nf + 1.0);
            prev = cur;
            cur = next;
        }
        sum += c * mode_scale(n) * cur;
    }
    sum
}
