/// Largest B-spline order supported by the fixed-size recursion buffer.
pub const MAX_SPLINE_ORDER: usize = 32;

/// Central B-spline of the given order (degree `order - 1`), evaluated by
/// the Cox–de Boor recursion on the integer-spaced knots
/// `-order/2, -order/2 + 1, ..., order/2`.
///
/// The order-1 spline is the indicator of `[-1/2, 1/2)`.
pub fn bspline(order: usize, x: f64) -> f64 {
    assert!(
        (1..=MAX_SPLINE_ORDER).contains(&order),
        "unsupported B-spline order {order}"
    );
    let half = order as f64 / 2.0;
    if x < -half || x >= half {
        return 0.0;
    }
    let mut b = [0.0f64; MAX_SPLINE_ORDER];
    // Only the degree-0 piece containing x is nonzero.
    let cell = ((x + half).floor() as usize).min(order - 1);
    b[cell] = 1.0;
    for m in 2..=order {
        let denom = (m - 1) as f64;
        for i in 0..=(order - m) {
            let t_i = -half + i as f64;
            let t_im = t_i + m as f64;
            b[i] = ((x - t_i) * b[i] + (t_im - x) * b[i + 1]) / denom;
        }
    }
    b[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_unit_box() {
        assert_eq!(bspline(1, 0.0), 1.0);
        assert_eq!(bspline(1, -0.5), 1.0);
        assert_eq!(bspline(1, 0.49), 1.0);
        assert_eq!(bspline(1, 0.5), 0.0);
        assert_eq!(bspline(1, -0.51), 0.0);
    }

    #[test]
    fn hat_and_quadratic_closed_forms() {
        assert_eq!(bspline(2, 0.0), 1.0);
        assert!((bspline(2, 0.25) - 0.75).abs() < 1e-15);
        assert!((bspline(2, -0.6) - 0.4).abs() < 1e-15);
        // order 3: 3/4 - x^2 on |x| < 1/2, (3/2 - |x|)^2 / 2 on 1/2 <= |x| < 3/2
        for &x in &[0.0, 0.2, -0.4, 0.7, -1.2, 1.49] {
            let ax: f64 = f64::abs(x);
            let exact = if ax < 0.5 { 0.75 - x * x } else { 0.5 * (1.5 - ax).powi(2) };
            assert!((bspline(3, x) - exact).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn order_three_integrates_to_one() {
        // composite Simpson over 64 panels aligned with the knots; exact for
        // the quadratic pieces
        let (a, b, panels) = (-2.0f64, 2.0f64, 64usize);
        let hstep = (b - a) / panels as f64;
        let mut s = 0.0;
        for i in 0..panels {
            let x0 = a + i as f64 * hstep;
            let x1 = x0 + hstep;
            let f0 = bspline(3, x0);
            let fm = bspline(3, 0.5 * (x0 + x1));
            let f1 = bspline(3, x1);
            s += hstep / 6.0 * (f0 + 4.0 * fm + f1);
        }
        assert!((s - 1.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn nonnegative_symmetric_partition_of_unity() {
        for order in 1..=8 {
            for k in 0..200 {
                let x = -5.0 + 10.0 * k as f64 / 199.0;
                let v = bspline(order, x);
                assert!(v >= 0.0);
                if x.abs() > 1e-9 && (x.abs() - order as f64 / 2.0).abs() > 1e-9 {
                    assert!((v - bspline(order, -x)).abs() < 1e-13);
                }
                // sum of integer translates is 1
                let s: f64 = (-20..=20).map(|j| bspline(order, x - j as f64)).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
