//! Central finite-difference utilities for verifying analytic gradients.

/// Central-difference gradient of a scalar function at `x`.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let up = f(&probe);
        probe[i] = x[i] - step;
        let down = f(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    grad
}

/// Largest relative discrepancy between analytic and numeric gradients:
/// `|a − n| / max(|a| + |n|, 1e-6)` over all components.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

/// The step size every gradient suite in this crate uses.
pub const STEP: f64 = 1e-5;

/// The pass threshold for a single check.
pub const TOLERANCE: f64 = 1e-4;
