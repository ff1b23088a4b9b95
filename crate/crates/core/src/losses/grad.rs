//! Central finite-difference gradient checking.

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Central-difference gradient.
    pub numeric: Vec<f64>,
    /// Largest `|analytic - numeric| / max(1, |analytic|, |numeric|)`; absent
    /// when no analytic gradient was supplied.
    pub max_deviation: Option<f64>,
    pub worst_coordinate: Option<usize>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares `analytic` (if given) against central differences of `f` at `x0`.
pub fn grad_check<F>(f: F, x0: &[f64], step: f64, tol: f64, analytic: Option<&[f64]>) -> Result<GradCheckReport>
where
    F: Fn(&[f64]) -> f64,
{
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    if let Some(a) = analytic {
        if a.len() != x0.len() {
            return Err(invalid(format!("analytic gradient has {} entries, expected {}", a.len(), x0.len())));
        }
    }
    let mut x = x0.to_vec();
    let mut numeric = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        x[i] = x0[i] + step;
        let up = f(&x);
        x[i] = x0[i] - step;
        let down = f(&x);
        x[i] = x0[i];
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::NonFinite(format!("objective evaluation at coordinate {i}")));
        }
        numeric.push((up - down) / (2.0 * step));
    }
    let (max_deviation, worst_coordinate) = match analytic {
        None => (None, None),
        Some(a) => {
            let mut worst = (0.0f64, 0usize);
            for (i, (ai, ni)) in a.iter().zip(&numeric).enumerate() {
                let dev = (ai - ni).abs() / 1f64.max(ai.abs()).max(ni.abs());
                if !(dev <= worst.0) {
                    worst = (dev, i);
                }
            }
            (Some(worst.0), Some(worst.1))
        }
    };
    let passed = max_deviation.map_or(true, |d| d <= tol);
    Ok(GradCheckReport { numeric, max_deviation, worst_coordinate, tolerance: tol, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let f = |x: &[f64]| 3.0 * x[0] * x[0] + x[0] * x[1] - 2.0 * x[1] * x[1];
        let x0 = [0.7, -1.3];
        let g = [6.0 * x0[0] + x0[1], x0[0] - 4.0 * x0[1]];
        let r = grad_check(f, &x0, 1e-5, 1e-8, Some(&g)).unwrap();
        assert!(r.passed);
        assert!(r.max_deviation.unwrap() < 1e-8);
    }

    #[test]
    fn wrong_gradient_fails() {
        let f = |x: &[f64]| x[0] * x[0];
        let r = grad_check(f, &[1.0], 1e-5, 1e-6, Some(&[3.0])).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_coordinate, Some(0));
    }

    #[test]
    fn non_finite_names_coordinate() {
        let f = |x: &[f64]| if x[1] > 0.5 { f64::NAN } else { x[0] };
        let err = grad_check(f, &[0.0, 0.5], 1e-3, 1e-6, None).unwrap_err();
        assert!(err.to_string().contains("coordinate 1"), "{err}");
    }
}
