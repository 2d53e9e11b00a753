//! Quotient-side data: the Atiyah identification `TQ/ℝ⁺ ≅ T(Q/ℝ⁺) × ℝ`,
//! reduced Lagrangians, and the projection/reconstruction maps between
//! full and reduced trajectories.
//!
//! The identification sends a velocity `v_q` to `(π_*(v_q), y)` with
//! `y = df(v_q)/f(q)` the logarithmic fiber rate. A full curve `γ` and
//! reduced data `(x, y, ς)` are *interrelated* when
//!
//! ```text
//! x = π∘γ,   y = d ln f(γ̇),   ς = f(γ(0))
//!     ⇕
//! γ(t) = ψ(exp(∫₀ᵗ y), (π, f)⁻¹(x(t), ς))
//! ```
//!
//! so reconstruction costs exactly one quadrature of `y`.

use crate::autodiff::{Dual, ErasedSmooth, HyperDual, Scalar, ScalarField};
use crate::error::{Error, Result};
use crate::quad;
use crate::systems::{LagrangianSystem, ScalingSystem};
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

/// A uniformly sampled curve on configuration space.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub qdot: Vec<Vec<f64>>,
}

/// A uniformly sampled curve on the quotient data `(x, ẋ, y)` together
/// with the fiber constant `ς`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub xdot: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub sigma: f64,
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::DimensionMismatch {
            what: "trajectory grid (need at least 2 samples)",
            expected: 2,
            got: times.len(),
        });
    }
    let step = times[1] - times[0];
    if step <= 0.0 {
        return Err(Error::ChartViolation {
            message: format!("grid is not strictly increasing: step {step}"),
        });
    }
    for i in 1..times.len() {
        let here = times[i] - times[i - 1];
        if (here - step).abs() > 1e-9 * step.abs() {
            return Err(Error::ChartViolation {
                message: format!(
                    "grid is not uniform: step {here} at index {i}, expected {step}"
                ),
            });
        }
    }
    Ok(step)
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The (validated) uniform grid step.
    pub fn step(&self) -> Result<f64> {
        uniform_step(&self.times)
    }

    /// Diagnostic: worst mismatch between the stored velocities and
    /// central differences of the positions. Scales with step² on smooth
    /// data.
    pub fn velocity_consistency(&self) -> Result<f64> {
        let step = self.step()?;
        let dim = self.q.first().map_or(0, Vec::len);
        let mut worst: f64 = 0.0;
        for i in 1..self.len() - 1 {
            for k in 0..dim {
                let central = (self.q[i + 1][k] - self.q[i - 1][k]) / (2.0 * step);
                worst = worst.max((central - self.qdot[i][k]).abs());
            }
        }
        Ok(worst)
    }
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step(&self) -> Result<f64> {
        uniform_step(&self.times)
    }

    pub fn velocity_consistency(&self) -> Result<f64> {
        let step = self.step()?;
        let dim = self.x.first().map_or(0, Vec::len);
        let mut worst: f64 = 0.0;
        for i in 1..self.len() - 1 {
            for k in 0..dim {
                let central = (self.x[i + 1][k] - self.x[i - 1][k]) / (2.0 * step);
                worst = worst.max((central - self.xdot[i][k]).abs());
            }
        }
        Ok(worst)
    }
}

/// How a [`ReducedLagrangian`] came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Built from a homogeneous `L` and a scaling structure.
    Derived,
    /// Supplied directly as a function of `(x, ẋ, y)`.
    Direct,
}

/// The reduced Lagrangian `ℓ(x, ẋ, y)`, a scalar field of arity
/// `2·base_dim + 1` with slot layout `[x..., ẋ..., y]`.
#[derive(Debug, Clone)]
pub struct ReducedLagrangian {
    base_dim: usize,
    ell: ScalarField,
    provenance: Provenance,
}

impl ReducedLagrangian {
    /// Wraps a directly specified `ℓ(x, ẋ, y)`.
    pub fn direct(base_dim: usize, ell: ScalarField) -> Result<Self> {
        if ell.arity() != 2 * base_dim + 1 {
            return Err(Error::DimensionMismatch {
                what: "reduced Lagrangian arity (2·base + 1)",
                expected: 2 * base_dim + 1,
                got: ell.arity(),
            });
        }
        Ok(Self {
            base_dim,
            ell,
            provenance: Provenance::Direct,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn field(&self) -> &ScalarField {
        &self.ell
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `ℓ(x, ẋ, y)`.
    pub fn value(&self, x: &[f64], xdot: &[f64], y: f64) -> Result<f64> {
        let mut state: Vec<f64> = x.iter().chain(xdot).copied().collect();
        state.push(y);
        self.ell.value(&state)
    }
}

/// Forward Atiyah map: `v_q ↦ (x, ẋ, y)` with `x = π(q)`,
/// `ẋ = π_*(v)` and `y = df(v)/f(q)`.
pub fn atiyah_forward(
    scaling: &ScalingSystem,
    q: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let fq = scaling.scaling_value(q)?;
    let (x, xdot) = scaling.projection().value_and_tangent(q, v)?;
    let grad_f = scaling.scaling_function().gradient(q)?;
    let y = grad_f.iter().zip(v).map(|(g, vi)| g * vi).sum::<f64>() / fq;
    Ok((x, xdot, y))
}

/// Inverse Atiyah map: `(x, ẋ, y, ς) ↦ (q, v)` as the tangent map of the
/// trivialization inverse at `(x, ς)` applied to `(ẋ, ς·y)` — the fiber
/// slot velocity is forced to `ς·y` by `df(v) = y·f`.
pub fn atiyah_inverse(
    scaling: &ScalingSystem,
    x: &[f64],
    xdot: &[f64],
    y: f64,
    sigma: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if sigma <= 0.0 {
        return Err(Error::ChartViolation {
            message: format!("fiber constant must be positive, got {sigma}"),
        });
    }
    let mut point: Vec<f64> = x.to_vec();
    point.push(sigma);
    let mut direction: Vec<f64> = xdot.to_vec();
    direction.push(sigma * y);
    scaling.triv_inv().value_and_tangent(&point, &direction)
}

/// Evaluator of a derived reduced Lagrangian:
/// `ℓ(x, ẋ, y) = L(q, v)/ς` at `(q, v) = atiyah_inverse(x, ẋ, y, ς)`.
///
/// Because the invariant quotient `L/(f∘τ_Q)` does not depend on the fiber
/// representative, any `ς > 0` produces the same `ℓ`; the default is 1.
///
/// The tangent map of the trivialization inverse must stay differentiable
/// with respect to `(x, ẋ, y)`, so the inner map runs on a `Dual` carrier
/// stacked on whatever carrier `ℓ` itself is being evaluated on.
struct DerivedReduced {
    triv_inv: Arc<dyn ErasedSmooth>,
    lagrangian: Arc<dyn ErasedSmooth>,
    ambient_dim: usize,
    sigma: f64,
}

impl DerivedReduced {
    fn eval_generic<T, FTriv, FLagr>(
        &self,
        triv: FTriv,
        lagr: FLagr,
        inputs: &[T],
        out: &mut [T],
    ) where
        T: Scalar,
        FTriv: Fn(&[Dual<T>], &mut [Dual<T>]),
        FLagr: Fn(&[T], &mut [T]),
    {
        let n = self.ambient_dim;
        let m = n - 1;
        let sigma = T::from_f64(self.sigma);
        let y = inputs[2 * m];
        let mut triv_in: Vec<Dual<T>> = Vec::with_capacity(m + 1);
        for i in 0..m {
            triv_in.push(Dual::new(inputs[i], inputs[m + i]));
        }
        triv_in.push(Dual::new(sigma, sigma * y));
        let mut triv_out = vec![Dual::constant(T::zero()); n];
        triv(&triv_in, &mut triv_out);
        let mut state: Vec<T> = Vec::with_capacity(2 * n);
        for o in &triv_out {
            state.push(o.v);
        }
        for o in &triv_out {
            state.push(o.d);
        }
        let mut l_out = [T::zero()];
        lagr(&state, &mut l_out);
        out[0] = l_out[0] / sigma;
    }
}

impl ErasedSmooth for DerivedReduced {
    fn eval_f64(&self, inputs: &[f64], out: &mut [f64]) {
        self.eval_generic(
            |i: &[Dual<f64>], o: &mut [Dual<f64>]| self.triv_inv.eval_dual(i, o),
            |i: &[f64], o: &mut [f64]| self.lagrangian.eval_f64(i, o),
            inputs,
            out,
        )
    }

    fn eval_hd(&self, inputs: &[HyperDual], out: &mut [HyperDual]) {
        self.eval_generic(
            |i: &[Dual<HyperDual>], o: &mut [Dual<HyperDual>]| self.triv_inv.eval_dual_hd(i, o),
            |i: &[HyperDual], o: &mut [HyperDual]| self.lagrangian.eval_hd(i, o),
            inputs,
            out,
        )
    }

    fn eval_dual(&self, _inputs: &[Dual<f64>], _out: &mut [Dual<f64>]) {
        unimplemented!(
            "derived reduced Lagrangians support plain evaluation and \
             first/second derivatives, not further tangent nesting"
        )
    }

    fn eval_dual_hd(&self, _inputs: &[Dual<HyperDual>], _out: &mut [Dual<HyperDual>]) {
        unimplemented!(
            "derived reduced Lagrangians support plain evaluation and \
             first/second derivatives, not further tangent nesting"
        )
    }
}

/// Builds the reduced Lagrangian of a homogeneous system,
/// `ℓ∘α_f∘p = L/(f∘τ_Q)`, evaluated at the `ς = 1` representative.
///
/// Precondition: `L` is homogeneous of degree one for the scaling
/// structure (certify with [`crate::systems::check_homogeneity`]).
pub fn reduce_lagrangian(
    system: &LagrangianSystem,
    scaling: &ScalingSystem,
) -> Result<ReducedLagrangian> {
    reduce_lagrangian_at(system, scaling, 1.0)
}

/// Same as [`reduce_lagrangian`] with an explicit fiber representative;
/// the result is independent of `sigma` (that is the invariance being
/// exploited), which tests assert.
pub fn reduce_lagrangian_at(
    system: &LagrangianSystem,
    scaling: &ScalingSystem,
    sigma: f64,
) -> Result<ReducedLagrangian> {
    if system.dim() != scaling.ambient_dim() {
        return Err(Error::DimensionMismatch {
            what: "reduce_lagrangian dimensions",
            expected: scaling.ambient_dim(),
            got: system.dim(),
        });
    }
    if sigma <= 0.0 {
        return Err(Error::ChartViolation {
            message: format!("fiber representative must be positive, got {sigma}"),
        });
    }
    let base_dim = scaling.base_dim();
    let evaluator = DerivedReduced {
        triv_inv: scaling.triv_inv().erased(),
        lagrangian: system.lagrangian().clone().into_erased(),
        ambient_dim: scaling.ambient_dim(),
        sigma,
    };
    Ok(ReducedLagrangian {
        base_dim,
        ell: ScalarField::from_erased(2 * base_dim + 1, Arc::new(evaluator)),
        provenance: Provenance::Derived,
    })
}

/// Projects a full trajectory to its interrelated reduced data:
/// per-sample forward Atiyah map, `ς = f(q(0))`.
pub fn project_trajectory(scaling: &ScalingSystem, traj: &Trajectory) -> Result<ReducedTrajectory> {
    traj.step()?;
    let sigma = scaling.scaling_value(&traj.q[0])?;
    let mut x = Vec::with_capacity(traj.len());
    let mut xdot = Vec::with_capacity(traj.len());
    let mut y = Vec::with_capacity(traj.len());
    for (qi, vi) in traj.q.iter().zip(&traj.qdot) {
        let (xi, xdi, yi) = atiyah_forward(scaling, qi, vi)?;
        x.push(xi);
        xdot.push(xdi);
        y.push(yi);
    }
    Ok(ReducedTrajectory {
        times: traj.times.clone(),
        x,
        xdot,
        y,
        sigma,
    })
}

/// Reconstructs the interrelated full trajectory from reduced data by a
/// single cumulative quadrature:
/// `γ(t) = ψ(exp(∫₀ᵗ y), (π, f)⁻¹(x(t), ς))`.
///
/// Velocities come from the chain rule through `ψ` and the trivialization
/// inverse (two tangent passes per sample), not from differencing.
pub fn reconstruct_trajectory(
    scaling: &ScalingSystem,
    reduced: &ReducedTrajectory,
) -> Result<Trajectory> {
    if reduced.sigma <= 0.0 {
        return Err(Error::ChartViolation {
            message: format!("fiber constant must be positive, got {}", reduced.sigma),
        });
    }
    let step = reduced.step()?;
    let exponent = quad::cumulative(&reduced.y, step);
    let n = scaling.ambient_dim();
    let mut q = Vec::with_capacity(reduced.len());
    let mut qdot = Vec::with_capacity(reduced.len());
    for i in 0..reduced.len() {
        // Fiber point at constant ς, moved along x(t).
        let mut point: Vec<f64> = reduced.x[i].clone();
        point.push(reduced.sigma);
        let mut direction: Vec<f64> = reduced.xdot[i].clone();
        direction.push(0.0);
        let (base_q, base_qdot) = scaling.triv_inv().value_and_tangent(&point, &direction)?;

        // Group motion: scale by E(t) = exp(Y(t)), Ė = E·y.
        let scale = libm::exp(exponent[i]);
        let mut psi_point = vec![scale];
        psi_point.extend_from_slice(&base_q);
        let mut psi_dir = vec![scale * reduced.y[i]];
        psi_dir.extend_from_slice(&base_qdot);
        let (qi, vi) = scaling.psi().value_and_tangent(&psi_point, &psi_dir)?;
        debug_assert_eq!(qi.len(), n);
        q.push(qi);
        qdot.push(vi);
    }
    Ok(Trajectory {
        times: reduced.times.clone(),
        q,
        qdot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Smooth;
    use crate::expr::parse;
    use crate::systems::tests::{first_quadrant_box, sqrt_action_system};
    use crate::systems::{check_homogeneity, LagrangianSystem};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Harmonic oscillator with M = k = 1 on ℝ²∖{0}.
    fn oscillator() -> LagrangianSystem {
        let e = parse(
            "(v0^2 + v1^2)/2 - (q0^2 + q1^2)/2",
            &["q0", "q1", "v0", "v1"],
        )
        .unwrap();
        LagrangianSystem::new(2, ScalarField::new(4, e)).unwrap()
    }

    #[test]
    fn atiyah_forward_splits_rotational_and_radial_velocities() {
        let sys = sqrt_action_system();
        // Pure rotation: y = 0, angle rate 1.
        let (x, xdot, y) = atiyah_forward(&sys, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((x[0]).abs() < 1e-15);
        assert!((xdot[0] - 1.0).abs() < 1e-15);
        assert!(y.abs() < 1e-15);
        // Pure radial: y = 2⟨q,v⟩/‖q‖² = 2, angle rate 0.
        let (_, xdot, y) = atiyah_forward(&sys, &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((xdot[0]).abs() < 1e-15);
        assert!((y - 2.0).abs() < 1e-15);
        // Zero velocity maps to zero.
        let (_, xdot, y) = atiyah_forward(&sys, &[0.6, 0.8], &[0.0, 0.0]).unwrap();
        assert_eq!(xdot[0], 0.0);
        assert_eq!(y, 0.0);
    }

    #[test]
    fn atiyah_maps_are_mutually_inverse() {
        let sys = sqrt_action_system();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..50 {
            let q = [rng.gen_range(0.3..1.5), rng.gen_range(0.3..1.5)];
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let (x, xdot, y) = atiyah_forward(&sys, &q, &v).unwrap();
            let sigma = sys.scaling_value(&q).unwrap();
            let (q2, v2) = atiyah_inverse(&sys, &x, &xdot, y, sigma).unwrap();
            for k in 0..2 {
                assert!((q[k] - q2[k]).abs() < 1e-9, "q mismatch");
                assert!((v[k] - v2[k]).abs() < 1e-9, "v mismatch");
            }
            let f2 = sys.scaling_value(&q2).unwrap();
            assert!((f2 - sigma).abs() < 1e-9);
        }
    }

    #[test]
    fn atiyah_inverse_with_zero_rates_gives_zero_velocity() {
        let sys = sqrt_action_system();
        let (_, v) = atiyah_inverse(&sys, &[0.4], &[0.0], 0.0, 2.5).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn reduced_oscillator_matches_closed_form() {
        // ℓ(x, ẋ, y) = (ẋ² + y²/4)/2 − 1/2 for M = k = 1, f = ‖q‖².
        let sys = sqrt_action_system();
        let ell = reduce_lagrangian(&oscillator(), &sys).unwrap();
        for x in [-0.5, 0.2, 1.0] {
            for xd in [-1.0, 0.0, 0.7] {
                for y in [-0.8, 0.0, 1.3] {
                    let got = ell.value(&[x], &[xd], y).unwrap();
                    let want = 0.5 * (xd * xd + y * y / 4.0) - 0.5;
                    assert!(
                        (got - want).abs() <= 1e-9 * (1.0 + want.abs()),
                        "ℓ({x},{xd},{y}) = {got}, want {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn reduced_lagrangian_satisfies_quotient_identity_on_samples() {
        // f(q)·ℓ(α_f(q, v)) = L(q, v) on random samples.
        let sys = sqrt_action_system();
        let system = oscillator();
        let ell = reduce_lagrangian(&system, &sys).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let q = [rng.gen_range(0.3..1.5), rng.gen_range(0.3..1.5)];
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let (x, xdot, y) = atiyah_forward(&sys, &q, &v).unwrap();
            let fq = sys.scaling_value(&q).unwrap();
            let lhs = fq * ell.value(&x, &xdot, y).unwrap();
            let rhs = system.value(&q, &v).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()),
                "quotient identity violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn representative_choice_does_not_change_the_reduction() {
        let sys = sqrt_action_system();
        let system = oscillator();
        let ell_one = reduce_lagrangian_at(&system, &sys, 1.0).unwrap();
        let ell_other = reduce_lagrangian_at(&system, &sys, 3.7).unwrap();
        for x in [-0.4, 0.9] {
            for xd in [-0.6, 0.5] {
                for y in [-1.1, 0.3] {
                    let a = ell_one.value(&[x], &[xd], y).unwrap();
                    let b = ell_other.value(&[x], &[xd], y).unwrap();
                    assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
                }
            }
        }
    }

    #[test]
    fn derived_reduction_differentiates_to_second_order() {
        // The gradient/Hessian of the derived ℓ must match the closed form
        // ℓ = (ẋ² + y²/4)/2 − 1/2, which requires the nested tangent path.
        let sys = sqrt_action_system();
        let ell = reduce_lagrangian(&oscillator(), &sys).unwrap();
        let point = [0.3, 0.8, -0.4]; // (x, ẋ, y)
        let grad = ell.field().gradient(&point).unwrap();
        assert!((grad[0]).abs() < 1e-12);
        assert!((grad[1] - 0.8).abs() < 1e-12);
        assert!((grad[2] - (-0.4 / 4.0)).abs() < 1e-12);
        let hess = ell.field().hessian(&point).unwrap();
        assert!((hess[(1, 1)] - 1.0).abs() < 1e-12);
        assert!((hess[(2, 2)] - 0.25).abs() < 1e-12);
        assert!((hess[(0, 0)]).abs() < 1e-12);
        assert!((hess[(1, 2)]).abs() < 1e-12);
    }

    fn circle_trajectory(n: usize, tau: f64) -> Trajectory {
        let step = tau / n as f64;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        let q = times
            .iter()
            .map(|&t| vec![libm::cos(t), libm::sin(t)])
            .collect();
        let qdot = times
            .iter()
            .map(|&t| vec![-libm::sin(t), libm::cos(t)])
            .collect();
        Trajectory { times, q, qdot }
    }

    #[test]
    fn projecting_a_circle_gives_zero_fiber_rate() {
        let sys = sqrt_action_system();
        let traj = circle_trajectory(100, 2.0);
        let reduced = project_trajectory(&sys, &traj).unwrap();
        assert!((reduced.sigma - 1.0).abs() < 1e-14);
        for (i, &t) in reduced.times.iter().enumerate() {
            assert!(reduced.y[i].abs() < 1e-13);
            assert!((reduced.x[i][0] - t).abs() < 1e-12);
            assert!((reduced.xdot[i][0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projecting_a_radial_curve_gives_constant_rate() {
        // γ(t) = e^{ct}·q₀: y ≡ 2c, x constant.
        let sys = sqrt_action_system();
        let c = 0.35;
        let n = 80;
        let step = 1.5 / n as f64;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        let q0 = [0.8, 0.5];
        let q: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| vec![libm::exp(c * t) * q0[0], libm::exp(c * t) * q0[1]])
            .collect();
        let qdot: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| {
                vec![
                    c * libm::exp(c * t) * q0[0],
                    c * libm::exp(c * t) * q0[1],
                ]
            })
            .collect();
        let reduced = project_trajectory(&sys, &Trajectory { times, q, qdot }).unwrap();
        for i in 0..reduced.len() {
            assert!((reduced.y[i] - 2.0 * c).abs() < 1e-12);
            assert!((reduced.x[i][0] - reduced.x[0][0]).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_of_constant_reduced_data_is_constant() {
        let sys = sqrt_action_system();
        let n = 40;
        let step = 2.0 / n as f64;
        let reduced = ReducedTrajectory {
            times: (0..=n).map(|i| i as f64 * step).collect(),
            x: vec![vec![0.7]; n + 1],
            xdot: vec![vec![0.0]; n + 1],
            y: vec![0.0; n + 1],
            sigma: 2.0,
        };
        let traj = reconstruct_trajectory(&sys, &reduced).unwrap();
        let expected = sys.triv_inv().value(&[0.7, 2.0]).unwrap();
        for i in 0..traj.len() {
            for k in 0..2 {
                assert!((traj.q[i][k] - expected[k]).abs() < 1e-14);
                assert!(traj.qdot[i][k].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_y_reconstruction_is_exponential_scaling() {
        // x constant, y ≡ c: γ(t) = e^{ct/2}·q₀ with f(q₀) = ς under the
        // √s action.
        let sys = sqrt_action_system();
        let c = 0.4;
        let n = 200;
        let step = 2.0 / n as f64;
        let reduced = ReducedTrajectory {
            times: (0..=n).map(|i| i as f64 * step).collect(),
            x: vec![vec![0.5]; n + 1],
            xdot: vec![vec![0.0]; n + 1],
            y: vec![c; n + 1],
            sigma: 1.3,
        };
        let traj = reconstruct_trajectory(&sys, &reduced).unwrap();
        let q0 = sys.triv_inv().value(&[0.5, 1.3]).unwrap();
        for (i, &t) in reduced.times.iter().enumerate() {
            let scale = libm::exp(c * t / 2.0);
            for k in 0..2 {
                assert!(
                    (traj.q[i][k] - scale * q0[k]).abs() < 1e-10,
                    "sample {i} coordinate {k}"
                );
                assert!((traj.qdot[i][k] - 0.5 * c * scale * q0[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn round_trip_on_an_analytic_curve() {
        // Smooth curve in the first quadrant: project then reconstruct.
        let sys = sqrt_action_system();
        let n = 2000;
        let tau = 2.0;
        let step = tau / n as f64;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        let a = |t: f64| 1.0 + 0.3 * libm::sin(1.7 * t) + 0.1 * t;
        let b = |t: f64| 0.9 + 0.2 * libm::cos(2.3 * t);
        let ad = |t: f64| 0.3 * 1.7 * libm::cos(1.7 * t) + 0.1;
        let bd = |t: f64| -0.2 * 2.3 * libm::sin(2.3 * t);
        let traj = Trajectory {
            times: times.clone(),
            q: times.iter().map(|&t| vec![a(t), b(t)]).collect(),
            qdot: times.iter().map(|&t| vec![ad(t), bd(t)]).collect(),
        };
        let reduced = project_trajectory(&sys, &traj).unwrap();
        let back = reconstruct_trajectory(&sys, &reduced).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..traj.len() {
            for k in 0..2 {
                worst = worst.max((traj.q[i][k] - back.q[i][k]).abs());
            }
        }
        assert!(worst <= 1e-8, "round-trip error {worst}");
    }

    #[test]
    fn jacobi_style_velocity_identities() {
        // With π = atan(b/a) and f = (a² + b²)/2:
        // ȧ = (a·y − 2b·ẋ)/2 and ḃ = (b·y + 2a·ẋ)/2.
        let vars_psi = ["s", "a", "b"];
        let psi = crate::expr::ExprMap::new(vec![
            parse("sqrt(s)*a", &vars_psi).unwrap(),
            parse("sqrt(s)*b", &vars_psi).unwrap(),
        ]);
        let f = parse("(a^2 + b^2)/2", &["a", "b"]).unwrap();
        let pi = crate::expr::ExprMap::new(vec![parse("atan(b/a)", &["a", "b"]).unwrap()]);
        let triv = crate::expr::ExprMap::new(vec![
            parse("sqrt(2*s)*cos(x)", &["x", "s"]).unwrap(),
            parse("sqrt(2*s)*sin(x)", &["x", "s"]).unwrap(),
        ]);
        let sys = ScalingSystem::new(
            2,
            crate::autodiff::SmoothMap::new(3, 2, psi),
            ScalarField::new(2, f),
            crate::autodiff::SmoothMap::new(2, 1, pi),
            crate::autodiff::SmoothMap::new(2, 2, triv),
            None,
        )
        .unwrap();
        let (x, xdot, y) = ([0.7], [0.45], -0.3);
        let sigma = 1.8;
        let (q, v) = atiyah_inverse(&sys, &x, &xdot, y, sigma).unwrap();
        let (a, b) = (q[0], q[1]);
        assert!((v[0] - (a * y - 2.0 * b * xdot[0]) / 2.0).abs() < 1e-12);
        assert!((v[1] - (b * y + 2.0 * a * xdot[0]) / 2.0).abs() < 1e-12);
    }

    struct LinearAlongFiber;
    impl Smooth for LinearAlongFiber {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            // L = 2⟨q, q̇⟩
            out[0] = T::from_f64(2.0) * (inputs[0] * inputs[2] + inputs[1] * inputs[3]);
        }
    }

    #[test]
    fn linear_lagrangian_reduces_to_the_fiber_rate() {
        // L = 2k⟨q, q̇⟩ with k = 1 and f = ‖q‖² reduces to ℓ = y.
        let sys = sqrt_action_system();
        let system = LagrangianSystem::new(2, ScalarField::new(4, LinearAlongFiber)).unwrap();
        assert!(check_homogeneity(&system, &sys, &first_quadrant_box(31))
            .unwrap()
            .pass);
        let ell = reduce_lagrangian(&system, &sys).unwrap();
        for x in [-0.5, 0.4] {
            for xd in [-0.9, 0.8] {
                for y in [-1.2, 0.0, 0.6] {
                    let got = ell.value(&[x], &[xd], y).unwrap();
                    assert!((got - y).abs() <= 1e-9 * (1.0 + y.abs()));
                }
            }
        }
    }

    #[test]
    fn chart_violation_is_reported_for_nonpositive_scaling_values() {
        let sys = sqrt_action_system();
        let err = atiyah_forward(&sys, &[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::ChartViolation { .. }));
        let err = atiyah_inverse(&sys, &[0.2], &[0.0], 0.0, -1.0).unwrap_err();
        assert!(matches!(err, Error::ChartViolation { .. }));
    }
}
