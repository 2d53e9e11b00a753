//! Discrete action functionals and first-variation instruments.
//!
//! Two variational principles are implemented side by side:
//!
//! * the Hamilton principle for `A(γ) = ∫ L(γ, γ̇) dt` with
//!   endpoint-vanishing variations `δγ`;
//! * the reduced principle for
//!   `Ǎ(x, y) = ∫ exp(∫₀ᵗ y) · ℓ(x, ẋ, y) dt` with endpoint-vanishing
//!   `δx` and `δy` of zero time integral.
//!
//! Admissible `δy` is generated as `η̇` for a random Fourier bump `η`
//! vanishing at the endpoints; on a uniform grid the trapezoid quadrature
//! of sampled `cos(kπt/τ)` modes vanishes identically, so the zero-mean
//! constraint holds to rounding and not merely to quadrature order.
//!
//! For interrelated data the two functionals are proportional,
//! `A(γ) = ς·Ǎ(x, y)` — for arbitrary curves, not only critical ones.

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureMethod};
use crate::reduction::{project_trajectory, ReducedLagrangian, ReducedTrajectory, Trajectory};
use crate::systems::{LagrangianSystem, ScalingSystem};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Number of Fourier modes in generated variation fields.
const VARIATION_MODES: usize = 3;

/// An action integral value with its quadrature provenance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ActionValue {
    pub value: f64,
    pub method: QuadratureMethod,
    pub samples: usize,
}

/// `A(γ) = ∫ L(γ(t), γ̇(t)) dt` by composite Simpson (trapezoid when the
/// interval count is odd).
pub fn action_full(system: &LagrangianSystem, traj: &Trajectory) -> Result<ActionValue> {
    let step = traj.step()?;
    let mut integrand = Vec::with_capacity(traj.len());
    for (q, v) in traj.q.iter().zip(&traj.qdot) {
        integrand.push(system.value(q, v)?);
    }
    let (value, method) = quad::integrate(&integrand, step);
    Ok(ActionValue {
        value,
        method,
        samples: traj.len(),
    })
}

/// `Ǎ(x, y) = ∫₀^τ exp(∫₀ᵗ y) · ℓ(x, ẋ, y) dt`: the inner cumulative
/// quadrature is fourth-order, the outer one Simpson.
pub fn action_reduced(ell: &ReducedLagrangian, curve: &ReducedTrajectory) -> Result<ActionValue> {
    let step = curve.step()?;
    let exponent = quad::cumulative(&curve.y, step);
    let mut integrand = Vec::with_capacity(curve.len());
    for i in 0..curve.len() {
        let l = ell.value(&curve.x[i], &curve.xdot[i], curve.y[i])?;
        integrand.push(libm::exp(exponent[i]) * l);
    }
    let (value, method) = quad::integrate(&integrand, step);
    Ok(ActionValue {
        value,
        method,
        samples: curve.len(),
    })
}

/// `Â(x, y) = ∫ ℓ(x, ẋ, y) dt`, the standard-symmetry reduced action
/// (no exponential weight).
pub fn action_standard_reduced(
    ell: &ReducedLagrangian,
    curve: &ReducedTrajectory,
) -> Result<ActionValue> {
    let step = curve.step()?;
    let mut integrand = Vec::with_capacity(curve.len());
    for i in 0..curve.len() {
        integrand.push(ell.value(&curve.x[i], &curve.xdot[i], curve.y[i])?);
    }
    let (value, method) = quad::integrate(&integrand, step);
    Ok(ActionValue {
        value,
        method,
        samples: curve.len(),
    })
}

/// Which variational principle a variation field is admissible for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum VariationClass {
    /// Endpoint-vanishing `δγ`.
    Hamilton,
    /// Endpoint-vanishing `δx` with zero-mean `δy`.
    Reduced,
}

/// A sampled admissible variation field along a trajectory grid.
///
/// `delta` holds `δγ` (Hamilton) or `δx` (reduced); `delta_dot` is its
/// analytic time derivative sampled on the same grid, so perturbed
/// velocities carry no differencing noise. `delta_y` is empty for the
/// Hamilton class.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct VariationField {
    pub class: VariationClass,
    pub times: Vec<f64>,
    pub delta: Vec<Vec<f64>>,
    pub delta_dot: Vec<Vec<f64>>,
    pub delta_y: Vec<f64>,
}

impl VariationField {
    /// Trapezoid quadrature of `δy` over the grid (the zero-mean
    /// constraint; identically zero by construction for generated fields).
    pub fn delta_y_quadrature(&self) -> f64 {
        if self.delta_y.is_empty() {
            return 0.0;
        }
        let step = self.times[1] - self.times[0];
        quad::trapezoid(&self.delta_y, step)
    }
}

/// Draws a seeded admissible variation field on `times` for `dim`
/// configuration components.
///
/// Endpoint vanishing is exact: every component is a combination of
/// `sin(kπt/τ)` modes, and `δy = η̇` for such an `η`, which makes the grid
/// quadrature of `δy` vanish to rounding.
pub fn sample_variation(
    class: VariationClass,
    times: &[f64],
    dim: usize,
    seed: u64,
) -> Result<VariationField> {
    if times.len() < 4 {
        return Err(Error::DimensionMismatch {
            what: "variation grid (need at least 4 samples)",
            expected: 4,
            got: times.len(),
        });
    }
    let tau = times[times.len() - 1] - times[0];
    let t0 = times[0];
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut coeff = vec![[0.0; VARIATION_MODES]; dim];
    for c in coeff.iter_mut() {
        for a in c.iter_mut() {
            *a = rng.gen_range(-1.0..1.0);
        }
    }
    let mut eta = [0.0; VARIATION_MODES];
    if class == VariationClass::Reduced {
        for a in eta.iter_mut() {
            *a = rng.gen_range(-1.0..1.0);
        }
    }

    let omega = |k: usize| (k + 1) as f64 * core::f64::consts::PI / tau;
    let mut delta = Vec::with_capacity(times.len());
    let mut delta_dot = Vec::with_capacity(times.len());
    let mut delta_y = Vec::new();
    for &t in times {
        let s = t - t0;
        let mut row = vec![0.0; dim];
        let mut row_dot = vec![0.0; dim];
        for (j, c) in coeff.iter().enumerate() {
            for (k, &a) in c.iter().enumerate() {
                let w = omega(k);
                row[j] += a * libm::sin(w * s);
                row_dot[j] += a * w * libm::cos(w * s);
            }
        }
        // Endpoints of sin(kπs/τ) are zero analytically; pin them to avoid
        // rounding residue at s = τ.
        if s == 0.0 || (s - tau).abs() < 1e-15 * tau.abs() {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
        delta.push(row);
        delta_dot.push(row_dot);
        if class == VariationClass::Reduced {
            let mut dy = 0.0;
            for (k, &a) in eta.iter().enumerate() {
                let w = omega(k);
                dy += a * w * libm::cos(w * s);
            }
            delta_y.push(dy);
        }
    }
    Ok(VariationField {
        class,
        times: times.to_vec(),
        delta,
        delta_dot,
        delta_y,
    })
}

fn check_grid_match(anchor: &[f64], field: &VariationField) -> Result<()> {
    if anchor.len() != field.times.len() {
        return Err(Error::DimensionMismatch {
            what: "variation grid length",
            expected: anchor.len(),
            got: field.times.len(),
        });
    }
    Ok(())
}

/// Displaces a trajectory by `scale·δγ` (velocities by `scale·δγ̇`).
pub fn perturb_trajectory(traj: &Trajectory, field: &VariationField, scale: f64) -> Result<Trajectory> {
    if field.class != VariationClass::Hamilton {
        return Err(Error::Incompatible {
            message: String::from("a Hamilton-class variation is required for full trajectories"),
        });
    }
    check_grid_match(&traj.times, field)?;
    let mut out = traj.clone();
    for i in 0..out.len() {
        for k in 0..out.q[i].len() {
            out.q[i][k] += scale * field.delta[i][k];
            out.qdot[i][k] += scale * field.delta_dot[i][k];
        }
    }
    Ok(out)
}

/// Displaces reduced data by `scale·(δx, δy)`; the fiber constant is held
/// fixed (admissible variations do not move it).
pub fn perturb_reduced(
    curve: &ReducedTrajectory,
    field: &VariationField,
    scale: f64,
) -> Result<ReducedTrajectory> {
    if field.class != VariationClass::Reduced {
        return Err(Error::Incompatible {
            message: String::from("a reduced-class variation is required for reduced curves"),
        });
    }
    check_grid_match(&curve.times, field)?;
    let mut out = curve.clone();
    for i in 0..out.len() {
        for k in 0..out.x[i].len() {
            out.x[i][k] += scale * field.delta[i][k];
            out.xdot[i][k] += scale * field.delta_dot[i][k];
        }
        out.y[i] += scale * field.delta_y[i];
    }
    Ok(out)
}

/// Central-difference first variation of the full action along `field`:
/// `(A[γ + h·v] − A[γ − h·v]) / 2h`.
pub fn first_variation_full(
    system: &LagrangianSystem,
    traj: &Trajectory,
    field: &VariationField,
    h: f64,
) -> Result<f64> {
    let plus = action_full(system, &perturb_trajectory(traj, field, h)?)?;
    let minus = action_full(system, &perturb_trajectory(traj, field, -h)?)?;
    let value = (plus.value - minus.value) / (2.0 * h);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            what: "first variation",
            coordinate: 0,
        });
    }
    Ok(value)
}

/// Central-difference first variation of the reduced action `Ǎ`.
pub fn first_variation_reduced(
    ell: &ReducedLagrangian,
    curve: &ReducedTrajectory,
    field: &VariationField,
    h: f64,
) -> Result<f64> {
    let plus = action_reduced(ell, &perturb_reduced(curve, field, h)?)?;
    let minus = action_reduced(ell, &perturb_reduced(curve, field, -h)?)?;
    let value = (plus.value - minus.value) / (2.0 * h);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            what: "first variation",
            coordinate: 0,
        });
    }
    Ok(value)
}

/// Both sides of the proportionality identity `A(γ) = ς·Ǎ(x, y)` computed
/// independently along one full curve.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ProportionalityReport {
    pub action_full: f64,
    pub action_reduced: f64,
    pub sigma: f64,
    /// `|A − ς·Ǎ| / (1 + |A|)`.
    pub rel_discrepancy: f64,
}

/// Projects `traj`, evaluates both action functionals and reports the
/// relative discrepancy of the proportionality identity.
pub fn proportionality_check(
    system: &LagrangianSystem,
    scaling: &ScalingSystem,
    ell: &ReducedLagrangian,
    traj: &Trajectory,
) -> Result<ProportionalityReport> {
    let a = action_full(system, traj)?;
    let reduced = project_trajectory(scaling, traj)?;
    let a_check = action_reduced(ell, &reduced)?;
    let rel = (a.value - reduced.sigma * a_check.value).abs() / (1.0 + a.value.abs());
    Ok(ProportionalityReport {
        action_full: a.value,
        action_reduced: a_check.value,
        sigma: reduced.sigma,
        rel_discrepancy: rel,
    })
}

/// Per-seed battery outcome, serialized by the verification commands.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct VariationReport {
    pub principle: String,
    pub action: f64,
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
    pub max_abs: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VariationReport {
    pub fn evaluate(
        principle: &str,
        action: f64,
        seeds: Vec<u64>,
        values: Vec<f64>,
        tolerance_scale: f64,
    ) -> Self {
        let max_abs = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let tolerance = tolerance_scale * (1.0 + action.abs());
        VariationReport {
            principle: String::from(principle),
            action,
            seeds,
            values,
            max_abs,
            tolerance,
            pass: max_abs <= tolerance,
        }
    }
}
