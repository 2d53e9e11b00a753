//! Composite quadrature on uniform grids.

use alloc::vec;
use alloc::vec::Vec;

/// Which rule produced an integral value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum QuadratureMethod {
    Trapezoid,
    Simpson,
}

/// Composite trapezoid rule.
pub fn trapezoid(samples: &[f64], step: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.5 * (samples[0] + samples[n - 1]);
    for s in &samples[1..n - 1] {
        acc += s;
    }
    acc * step
}

/// Composite Simpson when the interval count is even, trapezoid otherwise.
/// Returns the value and the rule actually used.
pub fn integrate(samples: &[f64], step: f64) -> (f64, QuadratureMethod) {
    let n = samples.len();
    if n >= 3 && (n - 1) % 2 == 0 {
        let mut acc = samples[0] + samples[n - 1];
        for (i, s) in samples.iter().enumerate().take(n - 1).skip(1) {
            acc += if i % 2 == 1 { 4.0 * s } else { 2.0 * s };
        }
        (acc * step / 3.0, QuadratureMethod::Simpson)
    } else {
        (trapezoid(samples, step), QuadratureMethod::Trapezoid)
    }
}

/// Cumulative integral `Y[i] = ∫₀^{tᵢ} y`, fourth-order where the grid
/// allows: each interval increment integrates the cubic through the four
/// nearest samples (parabola on three-sample grids, trapezoid on two).
pub fn cumulative(samples: &[f64], step: f64) -> Vec<f64> {
    let n = samples.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * step * (samples[0] + samples[1]);
        return out;
    }
    if n == 3 {
        out[1] = step * (5.0 * samples[0] + 8.0 * samples[1] - samples[2]) / 12.0;
        out[2] = out[1] + step * (-samples[0] + 8.0 * samples[1] + 5.0 * samples[2]) / 12.0;
        return out;
    }
    for i in 0..n - 1 {
        let inc = if i == 0 {
            step * (9.0 * samples[0] + 19.0 * samples[1] - 5.0 * samples[2] + samples[3]) / 24.0
        } else if i == n - 2 {
            step
                * (samples[n - 4] - 5.0 * samples[n - 3]
                    + 19.0 * samples[n - 2]
                    + 9.0 * samples[n - 1])
                / 24.0
        } else {
            step
                * (-samples[i - 1] + 13.0 * samples[i] + 13.0 * samples[i + 1] - samples[i + 2])
                / 24.0
        };
        out[i + 1] = out[i] + inc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, tau: f64) -> (Vec<f64>, f64) {
        let step = tau / n as f64;
        ((0..=n).map(|i| i as f64 * step).collect(), step)
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let (ts, h) = grid(10, 2.0);
        let samples: Vec<f64> = ts.iter().map(|&t| t * t * t - t).collect();
        let (v, m) = integrate(&samples, h);
        assert_eq!(m, QuadratureMethod::Simpson);
        assert!((v - 2.0).abs() < 1e-13); // ∫₀² t³ - t = 4 - 2
    }

    #[test]
    fn odd_interval_counts_fall_back_to_trapezoid() {
        let (ts, h) = grid(9, 1.0);
        let samples: Vec<f64> = ts.iter().map(|&t| t).collect();
        let (v, m) = integrate(&samples, h);
        assert_eq!(m, QuadratureMethod::Trapezoid);
        assert!((v - 0.5).abs() < 1e-13);
    }

    #[test]
    fn cumulative_matches_antiderivative_at_fourth_order() {
        let (ts, h) = grid(200, 2.0);
        let samples: Vec<f64> = ts.iter().map(|&t| libm::exp(t) * libm::cos(2.0 * t)).collect();
        let exact = |t: f64| libm::exp(t) * (libm::cos(2.0 * t) + 2.0 * libm::sin(2.0 * t)) / 5.0;
        let cum = cumulative(&samples, h);
        let mut worst: f64 = 0.0;
        for (i, &t) in ts.iter().enumerate() {
            worst = worst.max((cum[i] - (exact(t) - exact(0.0))).abs());
        }
        assert!(worst < 1e-7, "worst cumulative error {worst}");

        // Fourth order: doubling the grid shrinks the error ~16x.
        let (ts2, h2) = grid(400, 2.0);
        let samples2: Vec<f64> = ts2.iter().map(|&t| libm::exp(t) * libm::cos(2.0 * t)).collect();
        let cum2 = cumulative(&samples2, h2);
        let mut worst2: f64 = 0.0;
        for (i, &t) in ts2.iter().enumerate() {
            worst2 = worst2.max((cum2[i] - (exact(t) - exact(0.0))).abs());
        }
        let ratio = worst / worst2;
        assert!(ratio > 10.0, "cumulative rule not fourth order: ratio {ratio}");
    }

    #[test]
    fn cumulative_of_zero_is_zero() {
        let cum = cumulative(&[0.0; 7], 0.3);
        assert!(cum.iter().all(|&v| v == 0.0));
    }
}
