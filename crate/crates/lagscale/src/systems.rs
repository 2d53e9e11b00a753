//! Domain types for Lagrangian systems and scaling structures, plus
//! validators that numerically certify the standing hypotheses
//! (degree-one homogeneity of `L`, the scaling-function law
//! `f(ψ_ς(q)) = ς·f(q)`, and the trivialization identities).

use crate::autodiff::{ScalarField, SmoothMap};
use crate::error::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Default relative tolerance for all structure validators.
pub const VALIDATOR_TOLERANCE: f64 = 1e-9;

/// A Lagrangian system: configuration dimension `n` and a smooth
/// evaluator `L(q, q̇)` of arity `2n` (first the `n` positions, then the
/// `n` velocities).
#[derive(Debug, Clone)]
pub struct LagrangianSystem {
    dim: usize,
    lagrangian: ScalarField,
}

impl LagrangianSystem {
    pub fn new(dim: usize, lagrangian: ScalarField) -> Result<Self> {
        if lagrangian.arity() != 2 * dim {
            return Err(Error::DimensionMismatch {
                what: "Lagrangian arity",
                expected: 2 * dim,
                got: lagrangian.arity(),
            });
        }
        Ok(Self { dim, lagrangian })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lagrangian(&self) -> &ScalarField {
        &self.lagrangian
    }

    /// `L(q, q̇)`.
    pub fn value(&self, q: &[f64], qdot: &[f64]) -> Result<f64> {
        let state: Vec<f64> = q.iter().chain(qdot).copied().collect();
        self.lagrangian.value(&state)
    }
}

/// The scaling structure on a configuration space `Q` presented in one
/// global chart of dimension `ambient_dim`:
///
/// * `psi` — the action `(ς, q) ↦ ψ_ς(q)`, slot 0 is `ς`;
/// * `f` — a strictly positive scaling function, `f(ψ_ς(q)) = ς·f(q)`;
/// * `pi` — the projection onto an `(ambient_dim - 1)`-chart of `Q/ℝ⁺`;
/// * `triv_inv` — the inverse of `(π, f)`, taking `(x, ς)` with the `ς`
///   slot last;
/// * `generator` — optionally, the infinitesimal generator `Δ` of `ψ`,
///   which must satisfy `𝓛_Δ f = f`.
#[derive(Debug, Clone)]
pub struct ScalingSystem {
    ambient_dim: usize,
    base_dim: usize,
    psi: SmoothMap,
    f: ScalarField,
    pi: SmoothMap,
    triv_inv: SmoothMap,
    generator: Option<SmoothMap>,
}

impl ScalingSystem {
    pub fn new(
        ambient_dim: usize,
        psi: SmoothMap,
        f: ScalarField,
        pi: SmoothMap,
        triv_inv: SmoothMap,
        generator: Option<SmoothMap>,
    ) -> Result<Self> {
        if ambient_dim < 2 {
            return Err(Error::DimensionMismatch {
                what: "ambient dimension (need a nontrivial quotient)",
                expected: 2,
                got: ambient_dim,
            });
        }
        let base_dim = ambient_dim - 1;
        let expect = |what, expected, got| {
            if expected != got {
                Err(Error::DimensionMismatch {
                    what,
                    expected,
                    got,
                })
            } else {
                Ok(())
            }
        };
        expect("psi input arity (1 + ambient)", ambient_dim + 1, psi.in_dim())?;
        expect("psi output arity", ambient_dim, psi.out_dim())?;
        expect("scaling function arity", ambient_dim, f.arity())?;
        expect("projection input arity", ambient_dim, pi.in_dim())?;
        expect("projection output arity", base_dim, pi.out_dim())?;
        expect(
            "trivialization inverse input arity (base + 1)",
            base_dim + 1,
            triv_inv.in_dim(),
        )?;
        expect("trivialization inverse output arity", ambient_dim, triv_inv.out_dim())?;
        if let Some(g) = &generator {
            expect("generator input arity", ambient_dim, g.in_dim())?;
            expect("generator output arity", ambient_dim, g.out_dim())?;
        }
        Ok(Self {
            ambient_dim,
            base_dim,
            psi,
            f,
            pi,
            triv_inv,
            generator,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn psi(&self) -> &SmoothMap {
        &self.psi
    }

    pub fn scaling_function(&self) -> &ScalarField {
        &self.f
    }

    pub fn projection(&self) -> &SmoothMap {
        &self.pi
    }

    pub fn triv_inv(&self) -> &SmoothMap {
        &self.triv_inv
    }

    pub fn generator(&self) -> Option<&SmoothMap> {
        self.generator.as_ref()
    }

    /// `ψ(ς, q)`.
    pub fn apply_action(&self, sigma: f64, q: &[f64]) -> Result<Vec<f64>> {
        let mut input = vec![sigma];
        input.extend_from_slice(q);
        self.psi.value(&input)
    }

    /// The tangent lift `(ψ_ς)_{*,q}(v)`, computed as a Jacobian-vector
    /// product of the frozen-`ς` slice of the action.
    pub fn tangent_lift(&self, sigma: f64, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if sigma <= 0.0 {
            return Err(Error::ChartViolation {
                message: format!("group parameter must be positive, got {sigma}"),
            });
        }
        let mut point = vec![sigma];
        point.extend_from_slice(q);
        let mut direction = vec![0.0];
        direction.extend_from_slice(v);
        let (_, tangent) = self.psi.value_and_tangent(&point, &direction)?;
        Ok(tangent)
    }

    /// `f(q)`, rejecting non-positive values (chart violation).
    pub fn scaling_value(&self, q: &[f64]) -> Result<f64> {
        let fq = self.f.value(q)?;
        if fq <= 0.0 {
            return Err(Error::ChartViolation {
                message: format!("scaling function is {fq} <= 0 at q = {q:?}"),
            });
        }
        Ok(fq)
    }
}

/// Chart region sampled by the validators, with a deterministic seed.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SamplingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub count: usize,
    pub seed: u64,
}

impl SamplingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, count: usize, seed: u64) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                what: "sampling box bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if count == 0 {
            return Err(Error::DimensionMismatch {
                what: "sampling box count (need at least 1)",
                expected: 1,
                got: 0,
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) {
                return Err(Error::ChartViolation {
                    message: format!("sampling box has lower[{i}] = {lo} >= upper[{i}] = {hi}"),
                });
            }
        }
        Ok(Self {
            lower,
            upper,
            count,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| rng.gen_range(lo..hi))
            .collect()
    }
}

/// Outcome of one validator check over a sampling box.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ValidationReport {
    pub check: String,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    /// The sample realizing the worst relative residual (layout depends on
    /// the check; typically `(ς, q...)` or `(ς, q..., v...)`).
    pub worst_sample: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

struct ReportBuilder {
    check: &'static str,
    max_abs: f64,
    max_rel: f64,
    worst: Vec<f64>,
    tolerance: f64,
}

impl ReportBuilder {
    fn new(check: &'static str, tolerance: f64) -> Self {
        Self {
            check,
            max_abs: 0.0,
            max_rel: 0.0,
            worst: Vec::new(),
            tolerance,
        }
    }

    /// Record one residual with its reference magnitude and sample point.
    fn record(&mut self, residual: f64, reference: f64, sample: &[f64]) {
        let abs = residual.abs();
        let rel = abs / (1.0 + reference.abs());
        self.max_abs = self.max_abs.max(abs);
        if rel > self.max_rel || self.worst.is_empty() {
            self.max_rel = self.max_rel.max(rel);
            self.worst = sample.to_vec();
        }
    }

    fn finish(self) -> ValidationReport {
        ValidationReport {
            check: String::from(self.check),
            max_abs_residual: self.max_abs,
            max_rel_residual: self.max_rel,
            worst_sample: self.worst,
            tolerance: self.tolerance,
            pass: self.max_rel <= self.tolerance,
        }
    }
}

fn sample_sigma(rng: &mut ChaCha12Rng) -> f64 {
    // Log-uniform over [0.1, 10].
    libm::exp(rng.gen_range(libm::log(0.1)..libm::log(10.0)))
}

fn sample_velocity(rng: &mut ChaCha12Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Checks degree-one homogeneity `L((ψ_ς)_* v) = ς·L(v)` on seeded samples
/// with `ς` drawn log-uniformly from `[0.1, 10]`.
pub fn check_homogeneity(
    system: &LagrangianSystem,
    scaling: &ScalingSystem,
    sampling: &SamplingBox,
) -> Result<ValidationReport> {
    if system.dim() != scaling.ambient_dim() {
        return Err(Error::DimensionMismatch {
            what: "homogeneity check dimensions",
            expected: scaling.ambient_dim(),
            got: system.dim(),
        });
    }
    if sampling.dim() != scaling.ambient_dim() {
        return Err(Error::DimensionMismatch {
            what: "sampling box dimension",
            expected: scaling.ambient_dim(),
            got: sampling.dim(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(sampling.seed);
    let mut report = ReportBuilder::new("homogeneity", VALIDATOR_TOLERANCE);
    for _ in 0..sampling.count {
        let q = sampling.sample(&mut rng);
        let v = sample_velocity(&mut rng, scaling.ambient_dim());
        let sigma = sample_sigma(&mut rng);
        let scaled_q = scaling.apply_action(sigma, &q)?;
        let lifted_v = scaling.tangent_lift(sigma, &q, &v)?;
        let lhs = system.value(&scaled_q, &lifted_v)?;
        let rhs = sigma * system.value(&q, &v)?;
        let mut sample = vec![sigma];
        sample.extend_from_slice(&q);
        sample.extend_from_slice(&v);
        report.record(lhs - rhs, rhs, &sample);
    }
    Ok(report.finish())
}

/// Checks every structural identity of a [`ScalingSystem`], one report per
/// identity:
///
/// 1. `f(ψ_ς(q)) = ς·f(q)`
/// 2. `π(ψ_ς(q)) = π(q)`
/// 3. `(π, f) ∘ triv_inv = id` on sampled `(x, ς)`
/// 4. `triv_inv(π(q), ς) = ψ(ς / f(q), q)`
/// 5. `𝓛_Δ f = f` (when the generator is supplied)
pub fn check_scaling_structure(
    scaling: &ScalingSystem,
    sampling: &SamplingBox,
) -> Result<Vec<ValidationReport>> {
    if sampling.dim() != scaling.ambient_dim() {
        return Err(Error::DimensionMismatch {
            what: "sampling box dimension",
            expected: scaling.ambient_dim(),
            got: sampling.dim(),
        });
    }
    let tol = VALIDATOR_TOLERANCE;
    let mut rng = ChaCha12Rng::seed_from_u64(sampling.seed);
    let mut scaling_fn = ReportBuilder::new("scaling-function-equivariance", tol);
    let mut projection = ReportBuilder::new("projection-invariance", tol);
    let mut right_inverse = ReportBuilder::new("trivialization-right-inverse", tol);
    let mut triv_formula = ReportBuilder::new("trivialization-formula", tol);
    let mut generator = scaling
        .generator()
        .is_some()
        .then(|| ReportBuilder::new("generator-scaling-identity", tol));

    for _ in 0..sampling.count {
        let q = sampling.sample(&mut rng);
        let sigma = sample_sigma(&mut rng);
        let mut sample = vec![sigma];
        sample.extend_from_slice(&q);

        let fq = scaling.scaling_value(&q)?;
        let scaled_q = scaling.apply_action(sigma, &q)?;

        // 1. f(ψ_ς(q)) = ς f(q)
        let f_scaled = scaling.f.value(&scaled_q)?;
        scaling_fn.record(f_scaled - sigma * fq, sigma * fq, &sample);

        // 2. π(ψ_ς(q)) = π(q)
        let pi_q = scaling.pi.value(&q)?;
        let pi_scaled = scaling.pi.value(&scaled_q)?;
        for k in 0..scaling.base_dim() {
            projection.record(pi_scaled[k] - pi_q[k], pi_q[k], &sample);
        }

        // 3. (π, f) ∘ triv_inv = id at (x, ς) with x = π(q)
        let mut x_sigma = pi_q.clone();
        x_sigma.push(sigma);
        let q_rebuilt = scaling.triv_inv.value(&x_sigma)?;
        let pi_rebuilt = scaling.pi.value(&q_rebuilt)?;
        let f_rebuilt = scaling.f.value(&q_rebuilt)?;
        for k in 0..scaling.base_dim() {
            right_inverse.record(pi_rebuilt[k] - pi_q[k], pi_q[k], &sample);
        }
        right_inverse.record(f_rebuilt - sigma, sigma, &sample);

        // 4. triv_inv(π(q), ς) = ψ(ς / f(q), q)
        let via_action = scaling.apply_action(sigma / fq, &q)?;
        for k in 0..scaling.ambient_dim() {
            triv_formula.record(q_rebuilt[k] - via_action[k], via_action[k], &sample);
        }

        // 5. df(Δ_q) = f(q)
        if let (Some(gen_map), Some(rep)) = (scaling.generator(), generator.as_mut()) {
            let delta = gen_map.value(&q)?;
            let grad_f = scaling.f.gradient(&q)?;
            let lie: f64 = grad_f.iter().zip(&delta).map(|(g, d)| g * d).sum();
            rep.record(lie - fq, fq, &sample);
        }
    }

    let mut reports = vec![
        scaling_fn.finish(),
        projection.finish(),
        right_inverse.finish(),
        triv_formula.finish(),
    ];
    if let Some(rep) = generator {
        reports.push(rep.finish());
    }
    Ok(reports)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::autodiff::{Scalar, Smooth};
    use crate::expr::{parse, ExprMap};

    /// ψ(s, q) = √s·q on ℝ²∖{0} with f = ‖q‖², π the angle chart.
    pub(crate) fn sqrt_action_system() -> ScalingSystem {
        let vars_psi = ["s", "q0", "q1"];
        let psi = ExprMap::new(vec![
            parse("sqrt(s)*q0", &vars_psi).unwrap(),
            parse("sqrt(s)*q1", &vars_psi).unwrap(),
        ]);
        let f = parse("q0^2 + q1^2", &["q0", "q1"]).unwrap();
        let pi = ExprMap::new(vec![parse("atan2(q1, q0)", &["q0", "q1"]).unwrap()]);
        let triv = ExprMap::new(vec![
            parse("sqrt(s)*cos(x)", &["x", "s"]).unwrap(),
            parse("sqrt(s)*sin(x)", &["x", "s"]).unwrap(),
        ]);
        let gen = ExprMap::new(vec![
            parse("q0/2", &["q0", "q1"]).unwrap(),
            parse("q1/2", &["q0", "q1"]).unwrap(),
        ]);
        ScalingSystem::new(
            2,
            SmoothMap::new(3, 2, psi),
            ScalarField::new(2, f),
            SmoothMap::new(2, 1, pi),
            SmoothMap::new(2, 2, triv),
            Some(SmoothMap::new(2, 2, gen)),
        )
        .unwrap()
    }

    pub(crate) fn first_quadrant_box(seed: u64) -> SamplingBox {
        SamplingBox::new(vec![0.3, 0.3], vec![1.5, 1.5], 200, seed).unwrap()
    }

    #[test]
    fn tangent_lift_of_sqrt_action() {
        let sys = sqrt_action_system();
        // ς = 4: lift of any v is √4·v = 2v
        let lifted = sys.tangent_lift(4.0, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((lifted[0]).abs() < 1e-14);
        assert!((lifted[1] - 2.0).abs() < 1e-14);
        // group identity
        let lifted = sys.tangent_lift(1.0, &[0.7, 0.4], &[0.3, -0.9]).unwrap();
        assert!((lifted[0] - 0.3).abs() < 1e-14);
        assert!((lifted[1] + 0.9).abs() < 1e-14);
        // ς = 9 on the Jacobi-style action: lift of (1, 0) is (3, 0)
        let lifted = sys.tangent_lift(9.0, &[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((lifted[0] - 3.0).abs() < 1e-14);
        assert!((lifted[1]).abs() < 1e-14);
    }

    #[test]
    fn scaling_structure_checks_pass_for_sqrt_action() {
        let sys = sqrt_action_system();
        let reports = check_scaling_structure(&sys, &first_quadrant_box(11)).unwrap();
        assert_eq!(reports.len(), 5);
        for r in &reports {
            assert!(r.pass, "{} failed: max rel {}", r.check, r.max_rel_residual);
            assert!(r.pass == (r.max_rel_residual <= r.tolerance));
        }
    }

    #[test]
    fn corrupted_cubic_scaling_function_fails_its_check() {
        let good = sqrt_action_system();
        let f_cubic = parse("pow(q0^2 + q1^2, 1.5)", &["q0", "q1"]).unwrap();
        let sys = ScalingSystem::new(
            2,
            good.psi().clone(),
            ScalarField::new(2, f_cubic),
            good.projection().clone(),
            good.triv_inv().clone(),
            None,
        )
        .unwrap();
        let reports = check_scaling_structure(&sys, &first_quadrant_box(11)).unwrap();
        let scaling_fn = reports
            .iter()
            .find(|r| r.check == "scaling-function-equivariance")
            .unwrap();
        assert!(!scaling_fn.pass);
        // The projection knows nothing about f and must keep passing.
        let projection = reports
            .iter()
            .find(|r| r.check == "projection-invariance")
            .unwrap();
        assert!(projection.pass);
    }

    struct KineticEnergy;
    impl Smooth for KineticEnergy {
        fn eval<T: Scalar>(&self, inputs: &[T], out: &mut [T]) {
            out[0] = inputs[2] * inputs[2] + inputs[3] * inputs[3];
        }
    }

    #[test]
    fn homogeneity_passes_for_degree_one_and_fails_for_degree_two() {
        // Degree 1: L = ‖q̇‖² with the √s action (lift scales by √s).
        let sys = sqrt_action_system();
        let l_good = LagrangianSystem::new(2, ScalarField::new(4, KineticEnergy)).unwrap();
        let report = check_homogeneity(&l_good, &sys, &first_quadrant_box(3)).unwrap();
        assert!(report.pass, "max rel {}", report.max_rel_residual);

        // Degree 2: same L under ψ(s, q) = s·q fails.
        let vars_psi = ["s", "q0", "q1"];
        let psi_linear = ExprMap::new(vec![
            parse("s*q0", &vars_psi).unwrap(),
            parse("s*q1", &vars_psi).unwrap(),
        ]);
        let f_linear = parse("sqrt(q0^2 + q1^2)", &["q0", "q1"]).unwrap();
        let triv = ExprMap::new(vec![
            parse("s*cos(x)", &["x", "s"]).unwrap(),
            parse("s*sin(x)", &["x", "s"]).unwrap(),
        ]);
        let sys_linear = ScalingSystem::new(
            2,
            SmoothMap::new(3, 2, psi_linear),
            ScalarField::new(2, f_linear),
            sys.projection().clone(),
            SmoothMap::new(2, 2, triv),
            None,
        )
        .unwrap();
        // The linear action's own structure is sound...
        for r in check_scaling_structure(&sys_linear, &first_quadrant_box(5)).unwrap() {
            assert!(r.pass, "{} failed", r.check);
        }
        // ...but the kinetic Lagrangian is homogeneous of degree 2 under it.
        let report = check_homogeneity(&l_good, &sys_linear, &first_quadrant_box(5)).unwrap();
        assert!(!report.pass);
    }

    struct Zero;
    impl Smooth for Zero {
        fn eval<T: Scalar>(&self, _inputs: &[T], out: &mut [T]) {
            out[0] = T::zero();
        }
    }

    #[test]
    fn zero_lagrangian_is_trivially_homogeneous() {
        let sys = sqrt_action_system();
        let l_zero = LagrangianSystem::new(2, ScalarField::new(4, Zero)).unwrap();
        let report = check_homogeneity(&l_zero, &sys, &first_quadrant_box(9)).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_abs_residual, 0.0);
    }

    #[test]
    fn identity_group_element_gives_zero_residuals() {
        let sys = sqrt_action_system();
        let q = [0.8, 0.5];
        let fq = sys.scaling_value(&q).unwrap();
        let scaled = sys.apply_action(1.0, &q).unwrap();
        let f_scaled = sys.scaling_value(&scaled).unwrap();
        assert!((f_scaled - fq).abs() < 1e-15);
        let pi_q = sys.projection().value(&q).unwrap();
        let pi_scaled = sys.projection().value(&scaled).unwrap();
        assert!((pi_q[0] - pi_scaled[0]).abs() < 1e-15);
    }

    #[test]
    fn validators_are_deterministic_in_the_seed() {
        let sys = sqrt_action_system();
        let a = check_scaling_structure(&sys, &first_quadrant_box(42)).unwrap();
        let b = check_scaling_structure(&sys, &first_quadrant_box(42)).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.max_abs_residual, rb.max_abs_residual);
            assert_eq!(ra.max_rel_residual, rb.max_rel_residual);
            assert_eq!(ra.worst_sample, rb.worst_sample);
        }
    }

    #[test]
    fn sampling_box_rejects_bad_bounds() {
        assert!(SamplingBox::new(vec![1.0], vec![0.5], 10, 0).is_err());
        assert!(SamplingBox::new(vec![0.0], vec![1.0], 0, 0).is_err());
    }
}
