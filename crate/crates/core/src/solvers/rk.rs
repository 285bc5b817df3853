use crate::error::Result;

/// One step of the three-stage SSP Runge–Kutta scheme (Shu–Osher form).
///
/// `post_stage` runs after every stage (limiting, positivity checks).
pub fn ssp_rk3_step(
    u: &mut [f64],
    dt: f64,
    mut rhs: impl FnMut(&[f64], &mut [f64]) -> Result<()>,
    mut post_stage: impl FnMut(&mut [f64]) -> Result<()>,
) -> Result<()> {
    let n = u.len();
    let mut k = vec![0.0; n];
    let mut stage = vec![0.0; n];

    rhs(u, &mut k)?;
    for i in 0..n {
        stage[i] = u[i] + dt * k[i];
    }
    post_stage(&mut stage)?;

    rhs(&stage, &mut k)?;
    for i in 0..n {
        stage[i] = 0.75 * u[i] + 0.25 * (stage[i] + dt * k[i]);
    }
    post_stage(&mut stage)?;

    rhs(&stage, &mut k)?;
    for i in 0..n {
        u[i] = u[i] / 3.0 + 2.0 / 3.0 * (stage[i] + dt * k[i]);
    }
    post_stage(u)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_ode_matches_third_order_taylor() {
        let lambda = -1.3;
        for &dt in &[0.1, 0.05, 0.025] {
            let mut u = vec![1.0];
            ssp_rk3_step(
                &mut u,
                dt,
                |v, out| {
                    out[0] = lambda * v[0];
                    Ok(())
                },
                |_| Ok(()),
            )
            .unwrap();
            let z: f64 = lambda * dt;
            let taylor = 1.0 + z + z * z / 2.0 + z * z * z / 6.0;
            assert!((u[0] - taylor).abs() < 1e-15);
            // local error against exp is O(dt^4)
            assert!((u[0] - z.exp()).abs() < 0.05 * z.abs().powi(4));
        }
    }

    #[test]
    fn zero_residual_leaves_state_unchanged() {
        let mut u = vec![0.3, -2.0, 5.5];
        let before = u.clone();
        ssp_rk3_step(
            &mut u,
            0.7,
            |_, out| {
                out.fill(0.0);
                Ok(())
            },
            |_| Ok(()),
        )
        .unwrap();
        for (a, b) in u.iter().zip(&before) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
