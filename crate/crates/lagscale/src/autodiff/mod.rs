//! Exact first and second derivatives of user-supplied smooth functions.
//!
//! Functions are written once, generically over [`Scalar`], and wrapped in
//! [`ScalarField`] / [`SmoothMap`]. The wrappers store monomorphized
//! evaluators for each carrier the toolkit needs:
//!
//! * `f64` — plain evaluation,
//! * [`Dual<f64>`] — a tangent pushed through the map,
//! * [`HyperDual`] — gradients, Hessians, Jacobians,
//! * `Dual<HyperDual>` — a tangent through the map while the base point is
//!   itself differentiated (needed when a derived reduced Lagrangian is
//!   differentiated to second order).
//!
//! Every public entry point checks its outputs for finiteness and reports
//! the offending coordinate, so domain violations (log of a negative
//! number, division by zero) surface as errors instead of silent NaNs.

mod hyperdual;
mod scalar;

pub mod fd;

pub use hyperdual::HyperDual;
pub use scalar::{Dual, Scalar};

use crate::error::{Error, Result};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

/// A smooth function `ℝᵐ → ℝᵏ`, written generically over the scalar
/// carrier.
pub trait Smooth: Send + Sync {
    fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]);
}

/// Object-safe monomorphization of [`Smooth`], so evaluators can be stored
/// behind `Arc<dyn _>`.
pub trait ErasedSmooth: Send + Sync {
    fn eval_f64(&self, inputs: &[f64], out: &mut [f64]);
    fn eval_dual(&self, inputs: &[Dual<f64>], out: &mut [Dual<f64>]);
    fn eval_hd(&self, inputs: &[HyperDual], out: &mut [HyperDual]);
    fn eval_dual_hd(&self, inputs: &[Dual<HyperDual>], out: &mut [Dual<HyperDual>]);
}

impl<S: Smooth> ErasedSmooth for S {
    fn eval_f64(&self, inputs: &[f64], out: &mut [f64]) {
        self.eval(inputs, out)
    }

    fn eval_dual(&self, inputs: &[Dual<f64>], out: &mut [Dual<f64>]) {
        self.eval(inputs, out)
    }

    fn eval_hd(&self, inputs: &[HyperDual], out: &mut [HyperDual]) {
        self.eval(inputs, out)
    }

    fn eval_dual_hd(&self, inputs: &[Dual<HyperDual>], out: &mut [Dual<HyperDual>]) {
        self.eval(inputs, out)
    }
}

/// A smooth scalar function of `arity` real inputs.
#[derive(Clone)]
pub struct ScalarField {
    arity: usize,
    eval: Arc<dyn ErasedSmooth>,
}

impl core::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ScalarField").field("arity", &self.arity).finish()
    }
}

impl ScalarField {
    pub fn new<S: Smooth + 'static>(arity: usize, f: S) -> Self {
        Self {
            arity,
            eval: Arc::new(f),
        }
    }

    pub(crate) fn from_erased(arity: usize, eval: Arc<dyn ErasedSmooth>) -> Self {
        Self { arity, eval }
    }

    pub(crate) fn into_erased(self) -> Arc<dyn ErasedSmooth> {
        self.eval
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn check_arity(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.arity {
            return Err(Error::DimensionMismatch {
                what: "scalar field input",
                expected: self.arity,
                got: point.len(),
            });
        }
        Ok(())
    }

    /// Plain evaluation. Errors if the result is non-finite.
    pub fn value(&self, point: &[f64]) -> Result<f64> {
        self.check_arity(point)?;
        let mut out = [0.0];
        self.eval.eval_f64(point, &mut out);
        if !out[0].is_finite() {
            return Err(Error::NonFinite {
                what: "scalar field value",
                coordinate: 0,
            });
        }
        Ok(out[0])
    }

    /// Evaluation on hyper-dual inputs (the caller controls seeding).
    pub fn value_hd(&self, point: &[HyperDual]) -> HyperDual {
        let mut out = [HyperDual::constant(0.0)];
        self.eval.eval_hd(point, &mut out);
        out[0]
    }

    /// Exact gradient via one hyper-dual pass per coordinate.
    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_arity(point)?;
        let mut seeds: Vec<HyperDual> = point.iter().map(|&x| HyperDual::constant(x)).collect();
        let mut grad = vec![0.0; self.arity];
        let mut out = [HyperDual::constant(0.0)];
        for i in 0..self.arity {
            seeds[i].e1 = 1.0;
            self.eval.eval_hd(&seeds, &mut out);
            seeds[i].e1 = 0.0;
            if !out[0].re.is_finite() || !out[0].e1.is_finite() {
                return Err(Error::NonFinite {
                    what: "gradient",
                    coordinate: i,
                });
            }
            grad[i] = out[0].e1;
        }
        Ok(grad)
    }

    /// Exact Hessian, symmetrized as `(H + Hᵀ)/2`, together with the
    /// gradient (which the same passes produce for free) and the largest
    /// relative asymmetry observed before symmetrization.
    pub fn gradient_hessian(&self, point: &[f64]) -> Result<GradHess> {
        self.check_arity(point)?;
        let m = self.arity;
        let mut seeds: Vec<HyperDual> = point.iter().map(|&x| HyperDual::constant(x)).collect();
        let mut grad = vec![0.0; m];
        let mut hess = DMatrix::<f64>::zeros(m, m);
        let mut out = [HyperDual::constant(0.0)];
        for i in 0..m {
            for j in 0..m {
                seeds[i].e1 = 1.0;
                seeds[j].e2 = 1.0;
                self.eval.eval_hd(&seeds, &mut out);
                seeds[i].e1 = 0.0;
                seeds[j].e2 = 0.0;
                if !out[0].is_finite() {
                    return Err(Error::NonFinite {
                        what: "hessian",
                        coordinate: i * m + j,
                    });
                }
                hess[(i, j)] = out[0].e12;
                if j == 0 {
                    grad[i] = out[0].e1;
                }
            }
        }
        let mut asym: f64 = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                let scale = 1.0 + hess[(i, j)].abs().max(hess[(j, i)].abs());
                asym = asym.max((hess[(i, j)] - hess[(j, i)]).abs() / scale);
                let avg = 0.5 * (hess[(i, j)] + hess[(j, i)]);
                hess[(i, j)] = avg;
                hess[(j, i)] = avg;
            }
        }
        Ok(GradHess {
            gradient: grad,
            hessian: hess,
            asymmetry: asym,
        })
    }

    /// Symmetrized Hessian of exact second partials.
    pub fn hessian(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.gradient_hessian(point)?.hessian)
    }
}

/// Gradient, symmetrized Hessian and pre-symmetrization asymmetry of a
/// [`ScalarField`] at a point.
#[derive(Debug, Clone)]
pub struct GradHess {
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
    /// Max relative discrepancy `|H_ij - H_ji|` seen before averaging.
    /// Beyond `1e-10` this indicates a numerical problem in the evaluator.
    pub asymmetry: f64,
}

/// A smooth map `ℝᵐ → ℝᵏ`.
#[derive(Clone)]
pub struct SmoothMap {
    in_dim: usize,
    out_dim: usize,
    eval: Arc<dyn ErasedSmooth>,
}

impl core::fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SmoothMap")
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .finish()
    }
}

impl SmoothMap {
    pub fn new<S: Smooth + 'static>(in_dim: usize, out_dim: usize, f: S) -> Self {
        Self {
            in_dim,
            out_dim,
            eval: Arc::new(f),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn check_arity(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                what: "smooth map input",
                expected: self.in_dim,
                got: point.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_arity(point)?;
        let mut out = vec![0.0; self.out_dim];
        self.eval.eval_f64(point, &mut out);
        for (k, v) in out.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "map value",
                    coordinate: k,
                });
            }
        }
        Ok(out)
    }

    /// Exact Jacobian, one hyper-dual pass per input coordinate.
    pub fn jacobian(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        self.check_arity(point)?;
        let mut seeds: Vec<HyperDual> = point.iter().map(|&x| HyperDual::constant(x)).collect();
        let mut jac = DMatrix::<f64>::zeros(self.out_dim, self.in_dim);
        let mut out = vec![HyperDual::constant(0.0); self.out_dim];
        for i in 0..self.in_dim {
            seeds[i].e1 = 1.0;
            self.eval.eval_hd(&seeds, &mut out);
            seeds[i].e1 = 0.0;
            for k in 0..self.out_dim {
                if !out[k].re.is_finite() || !out[k].e1.is_finite() {
                    return Err(Error::NonFinite {
                        what: "jacobian",
                        coordinate: i,
                    });
                }
                jac[(k, i)] = out[k].e1;
            }
        }
        Ok(jac)
    }

    /// Value and Jacobian-vector product in a single dual pass:
    /// returns `(F(x), dF(x)·dx)`.
    pub fn value_and_tangent(&self, point: &[f64], direction: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_arity(point)?;
        if direction.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                what: "tangent direction",
                expected: self.in_dim,
                got: direction.len(),
            });
        }
        let seeds: Vec<Dual<f64>> = point
            .iter()
            .zip(direction)
            .map(|(&x, &dx)| Dual::new(x, dx))
            .collect();
        let mut out = vec![Dual::constant(0.0); self.out_dim];
        self.eval.eval_dual(&seeds, &mut out);
        let mut value = vec![0.0; self.out_dim];
        let mut tangent = vec![0.0; self.out_dim];
        for k in 0..self.out_dim {
            if !out[k].v.is_finite() || !out[k].d.is_finite() {
                return Err(Error::NonFinite {
                    what: "tangent",
                    coordinate: k,
                });
            }
            value[k] = out[k].v;
            tangent[k] = out[k].d;
        }
        Ok((value, tangent))
    }

    /// Shared evaluator handle, for wrappers that nest this map inside
    /// another differentiated function.
    pub(crate) fn erased(&self) -> Arc<dyn ErasedSmooth> {
        Arc::clone(&self.eval)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::fd;

    struct Square;
    impl Smooth for Square {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            out[0] = inputs[0] * inputs[0];
        }
    }

    struct AtanRatio;
    impl Smooth for AtanRatio {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            out[0] = (inputs[1] / inputs[0]).atan();
        }
    }

    struct Constant(f64);
    impl Smooth for Constant {
        fn eval<T: Scalar>(&self, _inputs: &[T], out: &mut [T]) {
            out[0] = T::from_f64(self.0);
        }
    }

    struct Bilinear;
    impl Smooth for Bilinear {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            out[0] = inputs[0] * inputs[1];
        }
    }

    struct Cube;
    impl Smooth for Cube {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            out[0] = inputs[0].powi(3);
        }
    }

    struct HalfSumSquares;
    impl Smooth for HalfSumSquares {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            let mut acc = T::zero();
            for &x in inputs {
                acc = acc + x * x;
            }
            out[0] = acc * T::from_f64(0.5);
        }
    }

    #[test]
    fn gradient_of_square() {
        let f = ScalarField::new(1, Square);
        let g = f.gradient(&[3.0]).unwrap();
        assert_eq!(g, vec![6.0]);
    }

    #[test]
    fn gradient_of_atan_ratio_matches_finite_differences() {
        let f = ScalarField::new(2, AtanRatio);
        let g = f.gradient(&[1.0, 1.0]).unwrap();
        assert!((g[0] - (-0.5)).abs() < 1e-14);
        assert!((g[1] - 0.5).abs() < 1e-14);
        let g_fd = fd::gradient(|p| f.value(p).unwrap(), &[1.0, 1.0], 1e-6);
        for k in 0..2 {
            assert!((g[k] - g_fd[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = ScalarField::new(3, Constant(7.0));
        let g = f.gradient(&[0.4, -2.0, 11.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn hessian_of_bilinear_form() {
        let f = ScalarField::new(2, Bilinear);
        let h = f.hessian(&[2.0, 5.0]).unwrap();
        assert_eq!(h[(0, 0)], 0.0);
        assert_eq!(h[(0, 1)], 1.0);
        assert_eq!(h[(1, 0)], 1.0);
        assert_eq!(h[(1, 1)], 0.0);
    }

    #[test]
    fn hessian_of_cube() {
        let f = ScalarField::new(1, Cube);
        let h = f.hessian(&[2.0]).unwrap();
        assert_eq!(h[(0, 0)], 12.0);
    }

    #[test]
    fn hessian_of_quadratic_form_is_identity() {
        let f = ScalarField::new(3, HalfSumSquares);
        for point in [[0.3, -1.1, 2.0], [5.0, 0.0, -0.7]] {
            let h = f.hessian(&point).unwrap();
            assert_eq!(h, DMatrix::identity(3, 3));
        }
    }

    #[test]
    fn hessian_is_exactly_symmetric_after_symmetrization() {
        let f = ScalarField::new(2, AtanRatio);
        let gh = f.gradient_hessian(&[0.8, 1.7]).unwrap();
        assert_eq!(gh.hessian[(0, 1)], gh.hessian[(1, 0)]);
        assert!(gh.asymmetry <= 1e-10);
    }

    struct LinearPair;
    impl Smooth for LinearPair {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            out[0] = inputs[0] + inputs[1];
            out[1] = inputs[0] - inputs[1];
        }
    }

    struct Normalize;
    impl Smooth for Normalize {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            let norm = (inputs[0] * inputs[0] + inputs[1] * inputs[1]).sqrt();
            out[0] = inputs[0] / norm;
            out[1] = inputs[1] / norm;
        }
    }

    struct Identity(usize);
    impl Smooth for Identity {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            out[..self.0].copy_from_slice(&inputs[..self.0]);
        }
    }

    #[test]
    fn jacobian_of_linear_map() {
        let m = SmoothMap::new(2, 2, LinearPair);
        let j = m.jacobian(&[0.1, 9.0]).unwrap();
        assert_eq!(j[(0, 0)], 1.0);
        assert_eq!(j[(0, 1)], 1.0);
        assert_eq!(j[(1, 0)], 1.0);
        assert_eq!(j[(1, 1)], -1.0);
    }

    #[test]
    fn jacobian_of_normalization_matches_finite_differences() {
        let m = SmoothMap::new(2, 2, Normalize);
        let j = m.jacobian(&[1.0, 0.0]).unwrap();
        assert!((j[(0, 0)]).abs() < 1e-14);
        assert!((j[(0, 1)]).abs() < 1e-14);
        assert!((j[(1, 0)]).abs() < 1e-14);
        assert!((j[(1, 1)] - 1.0).abs() < 1e-14);
        let j_fd = fd::jacobian(|p| m.value(p).unwrap(), &[1.0, 0.0], 2, 1e-6);
        for r in 0..2 {
            for c in 0..2 {
                assert!((j[(r, c)] - j_fd[(r, c)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn jacobian_of_identity() {
        let m = SmoothMap::new(3, 3, Identity(3));
        let j = m.jacobian(&[4.0, -1.0, 0.5]).unwrap();
        assert_eq!(j, DMatrix::identity(3, 3));
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let f = ScalarField::new(2, Bilinear);
        assert!(matches!(
            f.gradient(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    struct Log;
    impl Smooth for Log {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            out[0] = inputs[0].ln();
        }
    }

    #[test]
    fn domain_violation_surfaces_as_numeric_error() {
        let f = ScalarField::new(1, Log);
        assert!(matches!(
            f.gradient(&[-1.0]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(f.value(&[-1.0]), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn gradient_is_linear_in_the_field() {
        // gradient(f + g) = gradient(f) + gradient(g), exercised through a
        // combined evaluator.
        struct Sum;
        impl Smooth for Sum {
            fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
                let mut a = [T::zero()];
                let mut b = [T::zero()];
                AtanRatio.eval(inputs, &mut a);
                Bilinear.eval(inputs, &mut b);
                out[0] = a[0] + b[0];
            }
        }
        let fs = ScalarField::new(2, Sum);
        let fa = ScalarField::new(2, AtanRatio);
        let fb = ScalarField::new(2, Bilinear);
        let p = [0.9, 1.4];
        let gs = fs.gradient(&p).unwrap();
        let ga = fa.gradient(&p).unwrap();
        let gb = fb.gradient(&p).unwrap();
        for k in 0..2 {
            assert!((gs[k] - (ga[k] + gb[k])).abs() < 1e-15);
        }
    }
}
