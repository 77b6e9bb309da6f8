//! Truncated Taylor expansions of the sinusoidal coupling `C sin θ + D cos θ`.
//!
//! Every coupling term of the swing models depends on a single angle (the
//! machine angle for an infinite bus, the angle difference for a machine
//! pair), so a univariate series per pair represents the truncated vector
//! field exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients `e_0..e_n` of the order-`n` expansion of
/// `C sin(θ0 + x) + D cos(θ0 + x)` in powers of the displacement `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncSeries {
    theta0: f64,
    coeffs: Vec<f64>,
}

/// `k`-th derivative of `(sin, cos)` at `theta0`, i.e. `sin(θ0 + kπ/2)` and
/// `cos(θ0 + kπ/2)`, taken from the exact four-cycle instead of adding
/// rounded multiples of π/2.
fn shifted_sin_cos(sin0: f64, cos0: f64, k: usize) -> (f64, f64) {
    match k % 4 {
        0 => (sin0, cos0),
        1 => (cos0, -sin0),
        2 => (-sin0, -cos0),
        _ => (-cos0, sin0),
    }
}

/// Builds the order-`order` series of `C sin + D cos` about `theta0`.
///
/// `e_k = [C sin(θ0 + kπ/2) + D cos(θ0 + kπ/2)] / k!`; `e_0` is the value of
/// the coupling at the expansion point.
pub fn pair_coefficients(c: f64, d: f64, theta0: f64, order: usize) -> Result<TruncSeries> {
    if order == 0 {
        return Err(Error::UnsupportedOrder {
            order,
            reason: "truncation order must be at least 1",
        });
    }
    if !(c.is_finite() && d.is_finite() && theta0.is_finite()) {
        return Err(Error::NonFinite("pair_coefficients input"));
    }
    let (sin0, cos0) = theta0.sin_cos();
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut factorial = 1.0;
    for k in 0..=order {
        if k > 0 {
            factorial *= k as f64;
        }
        let (s, co) = shifted_sin_cos(sin0, cos0, k);
        coeffs.push((c * s + d * co) / factorial);
    }
    Ok(TruncSeries { theta0, coeffs })
}

impl TruncSeries {
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation of `Σ e_k x^k`, highest order first.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    /// Value and first derivative with respect to `x`.
    #[inline]
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut value = 0.0;
        let mut slope = 0.0;
        for &e in self.coeffs.iter().rev() {
            slope = slope * x + value;
            value = value * x + e;
        }
        (value, slope)
    }

    /// Series with the constant term removed, i.e. the displacement-dependent
    /// part `Σ_{k≥1} e_k x^k`.
    pub fn eval_increment(&self, x: f64) -> f64 {
        horner(&self.coeffs[1..], x) * x
    }
}

/// Checked evaluation: rejects non-finite displacements.
pub fn eval_series(series: &TruncSeries, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("eval_series displacement"));
    }
    Ok(series.eval(x))
}

#[inline]
pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &e| acc * x + e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn assert_slice_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= tol, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn maclaurin_sine() {
        let s = pair_coefficients(1.0, 0.0, 0.0, 3).unwrap();
        assert_slice_close(s.coeffs(), &[0.0, 1.0, 0.0, -1.0 / 6.0], 1e-15);
    }

    #[test]
    fn maclaurin_cosine() {
        let s = pair_coefficients(0.0, 1.0, 0.0, 2).unwrap();
        assert_slice_close(s.coeffs(), &[1.0, 0.0, -0.5], 1e-15);
    }

    #[test]
    fn sine_about_pi_over_six() {
        let s = pair_coefficients(1.0, 0.0, FRAC_PI_6, 2).unwrap();
        // sin(π/6 + kπ/2)/k! computed directly
        let direct: Vec<f64> = (0..=2)
            .map(|k| (FRAC_PI_6 + k as f64 * FRAC_PI_2).sin() / [1.0, 1.0, 2.0][k])
            .collect();
        assert_slice_close(s.coeffs(), &direct, 1e-15);
        assert_slice_close(s.coeffs(), &[0.5, 0.86603, -0.25], 1e-5);
    }

    #[test]
    fn coefficient_count_is_order_plus_one() {
        for n in 1..=15 {
            assert_eq!(pair_coefficients(0.3, -0.2, 1.1, n).unwrap().coeffs().len(), n + 1);
        }
    }

    #[test]
    fn horner_examples() {
        let sin3 = pair_coefficients(1.0, 0.0, 0.0, 3).unwrap();
        assert_eq!(eval_series(&sin3, 0.0).unwrap(), 0.0);
        let expected = 0.5 - 0.125 / 6.0;
        assert!((eval_series(&sin3, 0.5).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.479167).abs() < 1e-6);

        let cos2 = pair_coefficients(0.0, 1.0, 0.0, 2).unwrap();
        assert!((eval_series(&cos2, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(pair_coefficients(f64::NAN, 0.0, 0.0, 2).is_err());
        assert!(pair_coefficients(1.0, f64::INFINITY, 0.0, 2).is_err());
        assert!(pair_coefficients(1.0, 0.0, 0.0, 0).is_err());
        let s = pair_coefficients(1.0, 0.0, 0.0, 2).unwrap();
        assert!(eval_series(&s, f64::NAN).is_err());
    }

    #[test]
    fn derivative_matches_lower_order_shifted_series() {
        let s = pair_coefficients(1.3, 0.4, 0.7, 6).unwrap();
        let (_, slope) = s.eval_with_derivative(0.25);
        let h = 1e-6;
        let fd = (s.eval(0.25 + h) - s.eval(0.25 - h)) / (2.0 * h);
        assert!((slope - fd).abs() < 1e-8);
    }
}
