//! Rate-form assembly, fixed-step RK4 integration and residual evaluators
//! for the four equation families:
//!
//! * Euler-Lagrange: `d/dt(∂L/∂q̇) − ∂L/∂q = 0`
//! * scaling-Lagrange-Poincaré:
//!   `d/dt(∂ℓ/∂ẋ) + y·∂ℓ/∂ẋ − ∂ℓ/∂x = 0`,
//!   `d/dt(∂ℓ/∂y) + y·∂ℓ/∂y − ℓ = 0`
//! * standard abelian Lagrange-Poincaré (flat connection):
//!   `d/dt(∂ℓ/∂ẋ) − ∂ℓ/∂x = 0`, `d/dt(∂ℓ/∂y) = 0`
//! * Herglotz: `−d/dt(∂L̂/∂ẋ) + (∂L̂/∂y)·∂L̂/∂ẋ + ∂L̂/∂x = 0`,
//!   `ẏ = L̂(x, ẋ, y)`
//!
//! Rate form requires the relevant velocity/block Hessian to be
//! invertible; degenerate systems are served by the residual evaluators,
//! which only differentiate sampled momenta in time (second-order central
//! differences inside, one-sided at the ends).

use crate::autodiff::fd::differentiate_samples;
use crate::autodiff::ScalarField;
use crate::error::{Error, Result};
use crate::linalg::{solve_with_condition, SINGULAR_CONDITION};
use crate::quad;
use crate::reduction::{ReducedLagrangian, ReducedTrajectory, Trajectory};
use crate::systems::LagrangianSystem;
use crate::SmoothMap;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

/// Fixed-step integrator configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorConfig {
    pub steps: usize,
    pub horizon: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum Method {
    #[default]
    Rk4,
}

impl IntegratorConfig {
    pub fn new(steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::DimensionMismatch {
                what: "integrator steps (need at least 1)",
                expected: 1,
                got: 0,
            });
        }
        if !(horizon > 0.0) {
            return Err(Error::ChartViolation {
                message: alloc::format!("integration horizon must be positive, got {horizon}"),
            });
        }
        Ok(Self {
            steps,
            horizon,
            method: Method::Rk4,
        })
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

/// An action-dependent Lagrangian `L̂(x, ẋ, y)` for the Herglotz
/// principle, slot layout `[x..., ẋ..., y]`.
#[derive(Debug, Clone)]
pub struct HerglotzLagrangian {
    base_dim: usize,
    lhat: ScalarField,
}

impl HerglotzLagrangian {
    pub fn new(base_dim: usize, lhat: ScalarField) -> Result<Self> {
        if lhat.arity() != 2 * base_dim + 1 {
            return Err(Error::DimensionMismatch {
                what: "action-dependent Lagrangian arity (2·base + 1)",
                expected: 2 * base_dim + 1,
                got: lhat.arity(),
            });
        }
        Ok(Self { base_dim, lhat })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn field(&self) -> &ScalarField {
        &self.lhat
    }
}

/// Solves `M(q, q̇)·q̈ = ∂L/∂q − (∂²L/∂q̇∂q)·q̇` with `M = ∂²L/∂q̇²`.
pub fn el_acceleration(system: &LagrangianSystem, q: &[f64], qdot: &[f64]) -> Result<Vec<f64>> {
    let n = system.dim();
    let state: Vec<f64> = q.iter().chain(qdot).copied().collect();
    let gh = system.lagrangian().gradient_hessian(&state)?;
    let mut mass = DMatrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let mut coupling = 0.0;
        for j in 0..n {
            mass[(i, j)] = gh.hessian[(n + i, n + j)];
            coupling += gh.hessian[(n + i, j)] * qdot[j];
        }
        rhs[i] = gh.gradient[i] - coupling;
    }
    match solve_with_condition(&mass, &rhs) {
        Some((qddot, cond)) if cond <= SINGULAR_CONDITION => Ok(qddot),
        Some((_, cond)) => Err(Error::SingularLagrangian { condition: cond }),
        None => Err(Error::SingularLagrangian {
            condition: f64::INFINITY,
        }),
    }
}

fn rk4<F>(state0: Vec<f64>, cfg: &IntegratorConfig, rhs: F) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let h = cfg.step();
    let dim = state0.len();
    let mut times = Vec::with_capacity(cfg.steps + 1);
    let mut states = Vec::with_capacity(cfg.steps + 1);
    let mut state = state0;
    times.push(0.0);
    states.push(state.clone());
    let mut scratch = vec![0.0; dim];
    for step in 0..cfg.steps {
        let t = step as f64 * h;
        let stamp = |e: Error| e.at_time(t);
        let k1 = rhs(&state).map_err(stamp)?;
        for i in 0..dim {
            scratch[i] = state[i] + 0.5 * h * k1[i];
        }
        let k2 = rhs(&scratch).map_err(stamp)?;
        for i in 0..dim {
            scratch[i] = state[i] + 0.5 * h * k2[i];
        }
        let k3 = rhs(&scratch).map_err(stamp)?;
        for i in 0..dim {
            scratch[i] = state[i] + h * k3[i];
        }
        let k4 = rhs(&scratch).map_err(stamp)?;
        for i in 0..dim {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        times.push((step + 1) as f64 * h);
        states.push(state.clone());
    }
    Ok((times, states))
}

/// Integrates the Euler-Lagrange equations from `(q0, v0)` with classical
/// fixed-step RK4 on the first-order system `(q, q̇)`.
pub fn integrate_el(
    system: &LagrangianSystem,
    q0: &[f64],
    v0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let n = system.dim();
    if q0.len() != n || v0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: n,
            got: q0.len().min(v0.len()),
        });
    }
    let state0: Vec<f64> = q0.iter().chain(v0).copied().collect();
    let (times, states) = rk4(state0, cfg, |s| {
        let (q, v) = s.split_at(n);
        let a = el_acceleration(system, q, v)?;
        let mut ds = Vec::with_capacity(2 * n);
        ds.extend_from_slice(v);
        ds.extend_from_slice(&a);
        Ok(ds)
    })?;
    Ok(Trajectory {
        times,
        q: states.iter().map(|s| s[..n].to_vec()).collect(),
        qdot: states.iter().map(|s| s[n..].to_vec()).collect(),
    })
}

/// Per-sample Euler-Lagrange residual `−d/dt(∂L/∂q̇) + ∂L/∂q` along a
/// sampled trajectory.
pub fn el_residual(system: &LagrangianSystem, traj: &Trajectory) -> Result<Vec<Vec<f64>>> {
    let n = system.dim();
    let step = traj.step()?;
    let samples = traj.len();
    let mut momenta = vec![vec![0.0; samples]; n];
    let mut force = vec![vec![0.0; samples]; n];
    for (i, (qi, vi)) in traj.q.iter().zip(&traj.qdot).enumerate() {
        let state: Vec<f64> = qi.iter().chain(vi).copied().collect();
        let grad = system.lagrangian().gradient(&state)?;
        for k in 0..n {
            momenta[k][i] = grad[n + k];
            force[k][i] = grad[k];
        }
    }
    let mut residual = vec![vec![0.0; n]; samples];
    for k in 0..n {
        let pdot = differentiate_samples(&momenta[k], step);
        for i in 0..samples {
            residual[i][k] = -pdot[i] + force[k][i];
        }
    }
    Ok(residual)
}

struct ReducedGrad {
    value: f64,
    dx: Vec<f64>,
    p_x: Vec<f64>,
    p_y: f64,
}

fn reduced_gradient(field: &ScalarField, m: usize, state: &[f64]) -> Result<ReducedGrad> {
    let grad = field.gradient(state)?;
    let value = field.value(state)?;
    Ok(ReducedGrad {
        value,
        dx: grad[..m].to_vec(),
        p_x: grad[m..2 * m].to_vec(),
        p_y: grad[2 * m],
    })
}

/// Block system shared by the reduced rate assemblers: solves
///
/// ```text
/// [∂²ℓ/∂ẋ²   ∂²ℓ/∂ẋ∂y] [ẍ]   [rhs_x]
/// [∂²ℓ/∂y∂ẋ  ∂²ℓ/∂y² ] [ẏ] = [rhs_y]
/// ```
fn solve_reduced_block(
    hessian: &DMatrix<f64>,
    m: usize,
    rhs: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let mut block = DMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            block[(i, j)] = hessian[(m + i, m + j)];
        }
        block[(i, m)] = hessian[(m + i, 2 * m)];
        block[(m, i)] = hessian[(2 * m, m + i)];
    }
    block[(m, m)] = hessian[(2 * m, 2 * m)];
    match solve_with_condition(&block, rhs) {
        Some((sol, cond)) if cond <= SINGULAR_CONDITION => {
            let ydot = sol[m];
            Ok((sol[..m].to_vec(), ydot))
        }
        Some((_, cond)) => Err(Error::ReducedRegularity { condition: cond }),
        None => Err(Error::ReducedRegularity {
            condition: f64::INFINITY,
        }),
    }
}

/// Rates `(ẍ, ẏ)` of the scaling-Lagrange-Poincaré equations at
/// `(x, ẋ, y)`.
pub fn slp_rates(
    ell: &ReducedLagrangian,
    x: &[f64],
    xdot: &[f64],
    y: f64,
) -> Result<(Vec<f64>, f64)> {
    let m = ell.base_dim();
    let mut state: Vec<f64> = x.iter().chain(xdot).copied().collect();
    state.push(y);
    let gh = ell.field().gradient_hessian(&state)?;
    let value = ell.field().value(&state)?;
    let mut rhs = vec![0.0; m + 1];
    for i in 0..m {
        let mut coupling = 0.0;
        for j in 0..m {
            coupling += gh.hessian[(m + i, j)] * xdot[j];
        }
        rhs[i] = gh.gradient[i] - coupling - y * gh.gradient[m + i];
    }
    let mut coupling_y = 0.0;
    for j in 0..m {
        coupling_y += gh.hessian[(2 * m, j)] * xdot[j];
    }
    rhs[m] = value - coupling_y - y * gh.gradient[2 * m];
    solve_reduced_block(&gh.hessian, m, &rhs)
}

/// Rates of the standard abelian Lagrange-Poincaré equations (the
/// `y`-terms of the scaling case removed; `∂ℓ/∂y` is a conserved
/// momentum).
pub fn std_lp_rates(
    ell: &ReducedLagrangian,
    x: &[f64],
    xdot: &[f64],
    y: f64,
) -> Result<(Vec<f64>, f64)> {
    let m = ell.base_dim();
    let mut state: Vec<f64> = x.iter().chain(xdot).copied().collect();
    state.push(y);
    let gh = ell.field().gradient_hessian(&state)?;
    let mut rhs = vec![0.0; m + 1];
    for i in 0..m {
        let mut coupling = 0.0;
        for j in 0..m {
            coupling += gh.hessian[(m + i, j)] * xdot[j];
        }
        rhs[i] = gh.gradient[i] - coupling;
    }
    let mut coupling_y = 0.0;
    for j in 0..m {
        coupling_y += gh.hessian[(2 * m, j)] * xdot[j];
    }
    rhs[m] = -coupling_y;
    solve_reduced_block(&gh.hessian, m, &rhs)
}

/// Herglotz rates: `ẏ = L̂` exactly and `ẍ` solved from the expanded
/// momentum equation, with the `∂²L̂/∂ẋ∂y·ẏ` term of the total derivative
/// taken at `ẏ = L̂`.
pub fn herglotz_rates(
    lhat: &HerglotzLagrangian,
    x: &[f64],
    xdot: &[f64],
    y: f64,
) -> Result<(Vec<f64>, f64)> {
    let m = lhat.base_dim();
    let mut state: Vec<f64> = x.iter().chain(xdot).copied().collect();
    state.push(y);
    let gh = lhat.field().gradient_hessian(&state)?;
    let value = lhat.field().value(&state)?;
    let mut mass = DMatrix::zeros(m, m);
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let mut coupling = 0.0;
        for j in 0..m {
            mass[(i, j)] = gh.hessian[(m + i, m + j)];
            coupling += gh.hessian[(m + i, j)] * xdot[j];
        }
        rhs[i] = gh.gradient[2 * m] * gh.gradient[m + i] + gh.gradient[i]
            - coupling
            - gh.hessian[(m + i, 2 * m)] * value;
    }
    match solve_with_condition(&mass, &rhs) {
        Some((xddot, cond)) if cond <= SINGULAR_CONDITION => Ok((xddot, value)),
        Some((_, cond)) => Err(Error::SingularLagrangian { condition: cond }),
        None => Err(Error::SingularLagrangian {
            condition: f64::INFINITY,
        }),
    }
}

fn integrate_reduced<F>(
    m: usize,
    x0: &[f64],
    xdot0: &[f64],
    y0: f64,
    sigma: f64,
    cfg: &IntegratorConfig,
    rates: F,
) -> Result<ReducedTrajectory>
where
    F: Fn(&[f64], &[f64], f64) -> Result<(Vec<f64>, f64)>,
{
    if x0.len() != m || xdot0.len() != m {
        return Err(Error::DimensionMismatch {
            what: "reduced initial state",
            expected: m,
            got: x0.len().min(xdot0.len()),
        });
    }
    let mut state0: Vec<f64> = x0.iter().chain(xdot0).copied().collect();
    state0.push(y0);
    let (times, states) = rk4(state0, cfg, |s| {
        let (xddot, ydot) = rates(&s[..m], &s[m..2 * m], s[2 * m])?;
        let mut ds = Vec::with_capacity(2 * m + 1);
        ds.extend_from_slice(&s[m..2 * m]);
        ds.extend_from_slice(&xddot);
        ds.push(ydot);
        Ok(ds)
    })?;
    Ok(ReducedTrajectory {
        times,
        x: states.iter().map(|s| s[..m].to_vec()).collect(),
        xdot: states.iter().map(|s| s[m..2 * m].to_vec()).collect(),
        y: states.iter().map(|s| s[2 * m]).collect(),
        sigma,
    })
}

/// Integrates the scaling-Lagrange-Poincaré equations; `sigma` is the
/// fiber constant stamped on the result for later reconstruction (the
/// equations themselves do not involve it).
pub fn integrate_slp(
    ell: &ReducedLagrangian,
    x0: &[f64],
    xdot0: &[f64],
    y0: f64,
    sigma: f64,
    cfg: &IntegratorConfig,
) -> Result<ReducedTrajectory> {
    integrate_reduced(ell.base_dim(), x0, xdot0, y0, sigma, cfg, |x, xd, y| {
        slp_rates(ell, x, xd, y)
    })
}

/// Integrates the standard abelian Lagrange-Poincaré equations.
pub fn integrate_std_lp(
    ell: &ReducedLagrangian,
    x0: &[f64],
    xdot0: &[f64],
    y0: f64,
    sigma: f64,
    cfg: &IntegratorConfig,
) -> Result<ReducedTrajectory> {
    integrate_reduced(ell.base_dim(), x0, xdot0, y0, sigma, cfg, |x, xd, y| {
        std_lp_rates(ell, x, xd, y)
    })
}

/// Integrates the Herglotz equations on the `(x, ẋ, y)` state. The
/// returned curve's `sigma` is a placeholder 1 — `y` is the action
/// variable here, not a fiber rate.
pub fn integrate_herglotz(
    lhat: &HerglotzLagrangian,
    x0: &[f64],
    xdot0: &[f64],
    y0: f64,
    cfg: &IntegratorConfig,
) -> Result<ReducedTrajectory> {
    integrate_reduced(lhat.base_dim(), x0, xdot0, y0, 1.0, cfg, |x, xd, y| {
        herglotz_rates(lhat, x, xd, y)
    })
}

/// Per-sample momenta `(∂ℓ/∂ẋ, ∂ℓ/∂y)` along a reduced curve.
pub fn reduced_momenta(
    ell: &ReducedLagrangian,
    curve: &ReducedTrajectory,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = ell.base_dim();
    let mut p_x = Vec::with_capacity(curve.len());
    let mut p_y = Vec::with_capacity(curve.len());
    for i in 0..curve.len() {
        let mut state: Vec<f64> = curve.x[i].iter().chain(&curve.xdot[i]).copied().collect();
        state.push(curve.y[i]);
        let g = reduced_gradient(ell.field(), m, &state)?;
        p_x.push(g.p_x);
        p_y.push(g.p_y);
    }
    Ok((p_x, p_y))
}

/// Per-sample scaling-Lagrange-Poincaré residuals along a sampled curve:
/// horizontal `−d/dt(∂ℓ/∂ẋ) − y·∂ℓ/∂ẋ + ∂ℓ/∂x` (a vector) and vertical
/// `−d/dt(∂ℓ/∂y) − y·∂ℓ/∂y + ℓ` (a scalar).
pub fn slp_residual(
    ell: &ReducedLagrangian,
    curve: &ReducedTrajectory,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = ell.base_dim();
    let step = curve.step()?;
    let samples = curve.len();
    let mut p_x = vec![vec![0.0; samples]; m];
    let mut p_y = vec![0.0; samples];
    let mut dx = vec![vec![0.0; samples]; m];
    let mut values = vec![0.0; samples];
    for i in 0..samples {
        let mut state: Vec<f64> = curve.x[i].iter().chain(&curve.xdot[i]).copied().collect();
        state.push(curve.y[i]);
        let g = reduced_gradient(ell.field(), m, &state)?;
        for k in 0..m {
            p_x[k][i] = g.p_x[k];
            dx[k][i] = g.dx[k];
        }
        p_y[i] = g.p_y;
        values[i] = g.value;
    }
    let mut horizontal = vec![vec![0.0; m]; samples];
    for k in 0..m {
        let pdot = differentiate_samples(&p_x[k], step);
        for i in 0..samples {
            horizontal[i][k] = -pdot[i] - curve.y[i] * p_x[k][i] + dx[k][i];
        }
    }
    let pydot = differentiate_samples(&p_y, step);
    let mut vertical = vec![0.0; samples];
    for i in 0..samples {
        vertical[i] = -pydot[i] - curve.y[i] * p_y[i] + values[i];
    }
    Ok((horizontal, vertical))
}

/// Per-sample standard Lagrange-Poincaré residuals: horizontal
/// `−d/dt(∂ℓ/∂ẋ) + ∂ℓ/∂x` and vertical `−d/dt(∂ℓ/∂y)` (momentum
/// conservation).
pub fn std_lp_residual(
    ell: &ReducedLagrangian,
    curve: &ReducedTrajectory,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = ell.base_dim();
    let step = curve.step()?;
    let samples = curve.len();
    let mut p_x = vec![vec![0.0; samples]; m];
    let mut p_y = vec![0.0; samples];
    let mut dx = vec![vec![0.0; samples]; m];
    for i in 0..samples {
        let mut state: Vec<f64> = curve.x[i].iter().chain(&curve.xdot[i]).copied().collect();
        state.push(curve.y[i]);
        let g = reduced_gradient(ell.field(), m, &state)?;
        for k in 0..m {
            p_x[k][i] = g.p_x[k];
            dx[k][i] = g.dx[k];
        }
        p_y[i] = g.p_y;
    }
    let mut horizontal = vec![vec![0.0; m]; samples];
    for k in 0..m {
        let pdot = differentiate_samples(&p_x[k], step);
        for i in 0..samples {
            horizontal[i][k] = -pdot[i] + dx[k][i];
        }
    }
    let pydot = differentiate_samples(&p_y, step);
    let vertical = pydot.iter().map(|&v| -v).collect();
    Ok((horizontal, vertical))
}

/// Per-sample Herglotz residuals: the momentum equation
/// `−d/dt(∂L̂/∂ẋ) + (∂L̂/∂y)·∂L̂/∂ẋ + ∂L̂/∂x` and the action equation
/// `L̂ − ẏ` (so a curve with `y(t) = t` under `L̂ ≡ 0` reads −1).
pub fn herglotz_residual(
    lhat: &HerglotzLagrangian,
    curve: &ReducedTrajectory,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = lhat.base_dim();
    let step = curve.step()?;
    let samples = curve.len();
    let mut p_x = vec![vec![0.0; samples]; m];
    let mut dy = vec![0.0; samples];
    let mut dx = vec![vec![0.0; samples]; m];
    let mut values = vec![0.0; samples];
    for i in 0..samples {
        let mut state: Vec<f64> = curve.x[i].iter().chain(&curve.xdot[i]).copied().collect();
        state.push(curve.y[i]);
        let g = reduced_gradient(lhat.field(), m, &state)?;
        for k in 0..m {
            p_x[k][i] = g.p_x[k];
            dx[k][i] = g.dx[k];
        }
        dy[i] = g.p_y;
        values[i] = g.value;
    }
    let mut momentum = vec![vec![0.0; m]; samples];
    for k in 0..m {
        let pdot = differentiate_samples(&p_x[k], step);
        for i in 0..samples {
            momentum[i][k] = -pdot[i] + dy[i] * p_x[k][i] + dx[k][i];
        }
    }
    let ydot = differentiate_samples(&curve.y, step);
    let action = (0..samples).map(|i| values[i] - ydot[i]).collect();
    Ok((momentum, action))
}

/// One-dimensional abelian group carried by a standard-symmetry scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// `(ℝ, +)`: the reconstruction offset is `g₀ + ∫y`.
    Additive,
    /// `(ℝ⁺, ·)`: the reconstruction factor is `g₀·exp(∫y)`.
    Multiplicative,
}

/// Reconstruction for standard abelian symmetries: composes the group
/// motion `g(t)` solved from `ẏ`-quadrature with a supplied horizontal
/// lift, `γ(t) = ψ(g(t), h(t))`.
pub fn standard_reconstruct(
    action: &SmoothMap,
    group: GroupKind,
    horizontal: &Trajectory,
    y: &[f64],
    g0: f64,
) -> Result<Trajectory> {
    let step = horizontal.step()?;
    if y.len() != horizontal.len() {
        return Err(Error::DimensionMismatch {
            what: "group-rate samples",
            expected: horizontal.len(),
            got: y.len(),
        });
    }
    let integral = quad::cumulative(y, step);
    let mut q = Vec::with_capacity(horizontal.len());
    let mut qdot = Vec::with_capacity(horizontal.len());
    for i in 0..horizontal.len() {
        let (g, gdot) = match group {
            GroupKind::Additive => (g0 + integral[i], y[i]),
            GroupKind::Multiplicative => {
                let g = g0 * libm::exp(integral[i]);
                (g, g * y[i])
            }
        };
        let mut point = vec![g];
        point.extend_from_slice(&horizontal.q[i]);
        let mut direction = vec![gdot];
        direction.extend_from_slice(&horizontal.qdot[i]);
        let (qi, vi) = action.value_and_tangent(&point, &direction)?;
        q.push(qi);
        qdot.push(vi);
    }
    Ok(Trajectory {
        times: horizontal.times.clone(),
        q,
        qdot,
    })
}
