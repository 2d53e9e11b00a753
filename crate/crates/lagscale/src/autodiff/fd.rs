//! Central finite differences, kept as an independent reference for the
//! hyper-dual derivatives. Nothing in the library's computation paths uses
//! this module; it exists for tests and verification reports.
//!
//! Verification ladder: gradients are checked directly against central
//! differences of the function. Hessians are checked against central
//! differences of the *exact* gradient — a pure 4-point function stencil at
//! step `1e-5` carries an `eps/h² ≈ 2e-6` rounding floor in f64 and cannot
//! resolve the `1e-6` tolerance, while differencing an exact gradient can.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

/// Central-difference gradient of a scalar function.
pub fn gradient<F>(f: F, point: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut p = point.to_vec();
    let mut grad = vec![0.0; point.len()];
    for i in 0..point.len() {
        p[i] = point[i] + h;
        let plus = f(&p);
        p[i] = point[i] - h;
        let minus = f(&p);
        p[i] = point[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Central-difference Jacobian of a vector-valued function.
pub fn jacobian<F>(f: F, point: &[f64], out_dim: usize, h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut p = point.to_vec();
    let mut jac = DMatrix::zeros(out_dim, point.len());
    for i in 0..point.len() {
        p[i] = point[i] + h;
        let plus = f(&p);
        p[i] = point[i] - h;
        let minus = f(&p);
        p[i] = point[i];
        for k in 0..out_dim {
            jac[(k, i)] = (plus[k] - minus[k]) / (2.0 * h);
        }
    }
    jac
}

/// Hessian as the central difference of a supplied gradient function.
pub fn hessian_from_gradient<G>(grad: G, point: &[f64], h: f64) -> DMatrix<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let m = point.len();
    let mut p = point.to_vec();
    let mut hess = DMatrix::zeros(m, m);
    for i in 0..m {
        p[i] = point[i] + h;
        let plus = grad(&p);
        p[i] = point[i] - h;
        let minus = grad(&p);
        p[i] = point[i];
        for j in 0..m {
            hess[(i, j)] = (plus[j] - minus[j]) / (2.0 * h);
        }
    }
    hess
}

/// Pure function-stencil Hessian (4-point for mixed entries). Rounding
/// noise scales as `eps/h²`; use a step near `1e-4` and loose tolerances.
pub fn hessian<F>(f: F, point: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let m = point.len();
    let mut p = point.to_vec();
    let mut hess = DMatrix::zeros(m, m);
    let f0 = f(point);
    for i in 0..m {
        p[i] = point[i] + h;
        let plus = f(&p);
        p[i] = point[i] - h;
        let minus = f(&p);
        p[i] = point[i];
        hess[(i, i)] = (plus - 2.0 * f0 + minus) / (h * h);
        for j in (i + 1)..m {
            let mut corner = |si: f64, sj: f64| {
                p[i] = point[i] + si * h;
                p[j] = point[j] + sj * h;
                let v = f(&p);
                p[i] = point[i];
                p[j] = point[j];
                v
            };
            let pp = corner(1.0, 1.0);
            let pm = corner(1.0, -1.0);
            let mp = corner(-1.0, 1.0);
            let mm = corner(-1.0, -1.0);
            let mixed = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(i, j)] = mixed;
            hess[(j, i)] = mixed;
        }
    }
    hess
}

/// Second-order time derivative stencils on a uniform grid: central in the
/// interior, one-sided at the ends. Returns a curve of the same length.
pub fn differentiate_samples(samples: &[f64], step: f64) -> Vec<f64> {
    let n = samples.len();
    assert!(n >= 3, "need at least 3 samples to differentiate");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) / (2.0 * step);
    for i in 1..n - 1 {
        d[i] = (samples[i + 1] - samples[i - 1]) / (2.0 * step);
    }
    d[n - 1] = (3.0 * samples[n - 1] - 4.0 * samples[n - 2] + samples[n - 3]) / (2.0 * step);
    d
}
