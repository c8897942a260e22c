//! Central finite-difference gradient checks.

/// Floor on the relative-error denominator. [`max_relative_error`] scales it
/// by the largest gradient component (when that exceeds 1).
pub const REL_ERR_FLOOR: f64 = 1e-6;

/// Central-difference gradient of `f` at `point` with step `h`.
pub fn central_difference<F>(f: F, point: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = point.to_vec();
    (0..point.len())
        .map(|i| {
            x[i] = point[i] + h;
            let plus = f(&x);
            x[i] = point[i] - h;
            let minus = f(&x);
            x[i] = point[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    relative_error_with_floor(analytic, numeric, REL_ERR_FLOOR)
}

fn relative_error_with_floor(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Largest component-wise relative error between two gradients.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let scale = analytic.iter().chain(numeric).fold(1.0f64, |m, v| m.max(v.abs()));
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error_with_floor(a, n, REL_ERR_FLOOR * scale))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let f = |v: &[f64]| v[0] * v[0] + 3.0 * v[0] * v[1];
        let g = central_difference(f, &[1.0, 2.0], 1e-6);
        assert!(max_relative_error(&[8.0, 3.0], &g) < 1e-8);
    }

    #[test]
    fn detects_wrong_gradient() {
        let f = |v: &[f64]| v[0].sin();
        let g = central_difference(f, &[0.3], 1e-6);
        assert!(max_relative_error(&[0.3f64.cos() * 1.01], &g) > 1e-3);
    }
}
