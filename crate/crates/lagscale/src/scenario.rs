//! Ready-to-run scenario definitions and a JSON loader.
//!
//! A scenario bundles a Lagrangian system, optionally a scaling structure
//! and/or an action-dependent Lagrangian, default initial data, an
//! integrator configuration and a sampling box for the validators. User
//! scenarios are data: every function is an expression string over the
//! scenario's coordinate names (velocities as `<coord>dot`, the group
//! parameter as `s`, the fiber rate as `y`), so they are portable across
//! implementations.
//!
//! Builtins are defined through the very same schema documents the loader
//! consumes, which makes serialize-then-load a strict round trip.

use crate::autodiff::{ScalarField, SmoothMap};
use crate::dynamics::{HerglotzLagrangian, IntegratorConfig};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, ExprMap};
use crate::reduction::{reduce_lagrangian, ReducedLagrangian};
use crate::systems::{
    check_homogeneity, check_scaling_structure, LagrangianSystem, SamplingBox, ScalingSystem,
    ValidationReport,
};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

/// Current (and only) schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// On-disk scenario document. All structural validation happens in
/// [`compile`]; fields are optional here so that error messages can carry
/// a precise path into the document.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ScenarioDoc {
    pub schema_version: u32,
    pub name: String,
    pub dims: DimsDoc,
    pub coords: Vec<String>,
    pub base_coords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub herglotz: Option<String>,
    pub initial: InitialState,
    pub integrator: IntegratorDoc,
    pub sampling_box: BoxDoc,
    #[serde(default)]
    pub doc: String,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DimsDoc {
    pub ambient: usize,
    pub base: usize,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ScalingDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triv_inv: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<String>>,
}

/// Default initial data; ambient (`q`, `qdot`) for full systems, reduced
/// (`x`, `xdot`, `y`) for reduced or Herglotz integrations.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct InitialState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qdot: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xdot: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct IntegratorDoc {
    pub steps: usize,
    pub horizon: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BoxDoc {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub count: usize,
    pub seed: u64,
}

/// A compiled scenario, ready to validate and integrate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub doc: String,
    pub coords: Vec<String>,
    pub base_coords: Vec<String>,
    pub lagrangian: Option<LagrangianSystem>,
    pub scaling: Option<ScalingSystem>,
    pub herglotz: Option<HerglotzLagrangian>,
    pub initial: InitialState,
    pub integrator: IntegratorConfig,
    pub sampling_box: SamplingBox,
    source: ScenarioDoc,
}

impl Scenario {
    /// The schema document this scenario was compiled from.
    pub fn document(&self) -> &ScenarioDoc {
        &self.source
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.source).expect("scenario documents serialize")
    }

    /// Ambient initial state `(q0, v0)`.
    pub fn ambient_initial(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match (&self.initial.q, &self.initial.qdot) {
            (Some(q), Some(qdot)) => Ok((q.clone(), qdot.clone())),
            _ => Err(Error::Incompatible {
                message: format!("scenario `{}` has no ambient initial state", self.name),
            }),
        }
    }

    /// Reduced initial state `(x0, ẋ0, y0)`, either given directly or
    /// projected from the ambient one.
    pub fn reduced_initial(&self) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        if let (Some(x), Some(xdot), Some(y)) = (&self.initial.x, &self.initial.xdot, self.initial.y)
        {
            return Ok((x.clone(), xdot.clone(), y));
        }
        if let (Ok((q, v)), Some(scaling)) = (self.ambient_initial(), self.scaling.as_ref()) {
            let (x, xdot, y) = crate::reduction::atiyah_forward(scaling, &q, &v)?;
            return Ok((x, xdot, y));
        }
        Err(Error::Incompatible {
            message: format!("scenario `{}` has no reduced initial state", self.name),
        })
    }

    /// Derived reduced Lagrangian (requires both `L` and the scaling
    /// structure).
    pub fn reduced_lagrangian(&self) -> Result<ReducedLagrangian> {
        match (&self.lagrangian, &self.scaling) {
            (Some(l), Some(s)) => reduce_lagrangian(l, s),
            _ => Err(Error::Incompatible {
                message: format!(
                    "scenario `{}` has no Lagrangian + scaling structure to reduce",
                    self.name
                ),
            }),
        }
    }

    /// Runs every applicable validator (homogeneity first, then the
    /// scaling-structure identities). Herglotz-only scenarios have nothing
    /// to validate and return an empty list.
    pub fn validate(&self) -> Result<Vec<ValidationReport>> {
        let mut reports = Vec::new();
        if let Some(scaling) = &self.scaling {
            if let Some(system) = &self.lagrangian {
                reports.push(check_homogeneity(system, scaling, &self.sampling_box)?);
            }
            reports.extend(check_scaling_structure(scaling, &self.sampling_box)?);
        }
        Ok(reports)
    }
}

fn schema_err(path: &str, message: impl core::fmt::Display) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: message.to_string(),
    }
}

fn parse_at(path: &str, source: &str, vars: &[&str]) -> Result<Expr> {
    parse(source, vars).map_err(|e| schema_err(path, e))
}

fn parse_map(
    path: &str,
    sources: &[String],
    vars: &[&str],
    expected_len: usize,
) -> Result<Vec<Expr>> {
    if sources.len() != expected_len {
        return Err(schema_err(
            path,
            format!("expected {expected_len} component expressions, got {}", sources.len()),
        ));
    }
    sources
        .iter()
        .enumerate()
        .map(|(i, s)| parse_at(&format!("{path}[{i}]"), s, vars))
        .collect()
}

fn check_vector_len(path: &str, v: &Option<Vec<f64>>, expected: usize) -> Result<()> {
    if let Some(v) = v {
        if v.len() != expected {
            return Err(schema_err(
                path,
                format!("expected {expected} components, got {}", v.len()),
            ));
        }
    }
    Ok(())
}

/// Compiles a schema document into a runnable scenario, reporting every
/// violation with a path into the document.
pub fn compile(doc: ScenarioDoc) -> Result<Scenario> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(schema_err(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", doc.schema_version),
        ));
    }
    let n = doc.dims.ambient;
    let m = doc.dims.base;
    if n < 2 || m != n - 1 {
        return Err(schema_err(
            "dims",
            format!("need ambient >= 2 and base = ambient - 1, got ambient {n}, base {m}"),
        ));
    }
    if doc.coords.len() != n {
        return Err(schema_err(
            "coords",
            format!("expected {n} names, got {}", doc.coords.len()),
        ));
    }
    if doc.base_coords.len() != m {
        return Err(schema_err(
            "base_coords",
            format!("expected {m} names, got {}", doc.base_coords.len()),
        ));
    }
    for (i, c) in doc.coords.iter().chain(doc.base_coords.iter()).enumerate() {
        if c == "s" || c == "y" || c.is_empty() {
            return Err(schema_err(
                "coords",
                format!("coordinate name #{i} `{c}` collides with a reserved name (`s`, `y`)"),
            ));
        }
    }

    // Variable name tables.
    let coord_names: Vec<&str> = doc.coords.iter().map(String::as_str).collect();
    let coord_dots: Vec<String> = doc.coords.iter().map(|c| format!("{c}dot")).collect();
    let base_names: Vec<&str> = doc.base_coords.iter().map(String::as_str).collect();
    let base_dots: Vec<String> = doc.base_coords.iter().map(|c| format!("{c}dot")).collect();

    let lagrangian_vars: Vec<&str> = coord_names
        .iter()
        .copied()
        .chain(coord_dots.iter().map(String::as_str))
        .collect();
    let psi_vars: Vec<&str> = core::iter::once("s").chain(coord_names.iter().copied()).collect();
    let triv_vars: Vec<&str> = base_names
        .iter()
        .copied()
        .chain(core::iter::once("s"))
        .collect();
    let reduced_vars: Vec<&str> = base_names
        .iter()
        .copied()
        .chain(base_dots.iter().map(String::as_str))
        .chain(core::iter::once("y"))
        .collect();

    let lagrangian = doc
        .lagrangian
        .as_ref()
        .map(|src| -> Result<LagrangianSystem> {
            let e = parse_at("lagrangian", src, &lagrangian_vars)?;
            LagrangianSystem::new(n, ScalarField::new(2 * n, e))
        })
        .transpose()?;

    let scaling = doc
        .scaling
        .as_ref()
        .map(|s| -> Result<ScalingSystem> {
            let psi_src = s
                .psi
                .as_ref()
                .ok_or_else(|| schema_err("scaling.psi", "missing required field"))?;
            let f_src = s
                .f
                .as_ref()
                .ok_or_else(|| schema_err("scaling.f", "missing required field"))?;
            let pi_src = s
                .pi
                .as_ref()
                .ok_or_else(|| schema_err("scaling.pi", "missing required field"))?;
            let triv_src = s
                .triv_inv
                .as_ref()
                .ok_or_else(|| schema_err("scaling.triv_inv", "missing required field"))?;
            let psi = parse_map("scaling.psi", psi_src, &psi_vars, n)?;
            let f = parse_at("scaling.f", f_src, &coord_names)?;
            let pi = parse_map("scaling.pi", pi_src, &coord_names, m)?;
            let triv = parse_map("scaling.triv_inv", triv_src, &triv_vars, n)?;
            let generator = s
                .generator
                .as_ref()
                .map(|g| parse_map("scaling.generator", g, &coord_names, n))
                .transpose()?;
            ScalingSystem::new(
                n,
                SmoothMap::new(n + 1, n, ExprMap::new(psi)),
                ScalarField::new(n, f),
                SmoothMap::new(n, m, ExprMap::new(pi)),
                SmoothMap::new(m + 1, n, ExprMap::new(triv)),
                generator.map(|g| SmoothMap::new(n, n, ExprMap::new(g))),
            )
        })
        .transpose()?;

    let herglotz = doc
        .herglotz
        .as_ref()
        .map(|src| -> Result<HerglotzLagrangian> {
            let e = parse_at("herglotz", src, &reduced_vars)?;
            HerglotzLagrangian::new(m, ScalarField::new(2 * m + 1, e))
        })
        .transpose()?;

    if lagrangian.is_none() && herglotz.is_none() {
        return Err(schema_err(
            "lagrangian",
            "scenario defines neither a Lagrangian nor an action-dependent Lagrangian",
        ));
    }

    check_vector_len("initial.q", &doc.initial.q, n)?;
    check_vector_len("initial.qdot", &doc.initial.qdot, n)?;
    check_vector_len("initial.x", &doc.initial.x, m)?;
    check_vector_len("initial.xdot", &doc.initial.xdot, m)?;

    let integrator = IntegratorConfig::new(doc.integrator.steps, doc.integrator.horizon)
        .map_err(|e| schema_err("integrator", e))?;

    if doc.sampling_box.lower.len() != n || doc.sampling_box.upper.len() != n {
        return Err(schema_err(
            "sampling_box",
            format!("bounds must have {n} components"),
        ));
    }
    let sampling_box = SamplingBox::new(
        doc.sampling_box.lower.clone(),
        doc.sampling_box.upper.clone(),
        doc.sampling_box.count,
        doc.sampling_box.seed,
    )
    .map_err(|e| schema_err("sampling_box", e))?;

    Ok(Scenario {
        name: doc.name.clone(),
        doc: doc.doc.clone(),
        coords: doc.coords.clone(),
        base_coords: doc.base_coords.clone(),
        lagrangian,
        scaling,
        herglotz,
        initial: doc.initial.clone(),
        integrator,
        sampling_box,
        source: doc,
    })
}

/// Parses and compiles a scenario from JSON text.
pub fn from_json(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_str(text)
        .map_err(|e| schema_err("(document)", e))?;
    compile(doc)
}

/// Names of the builtin scenarios, in registry order.
pub fn builtin_names() -> &'static [&'static str] {
    &[
        "jacobi-arctan",
        "harmonic-oscillator",
        "linear-counterexample",
        "herglotz-zero",
        "kinetic-geodesic",
    ]
}

/// Looks up and compiles a builtin scenario.
pub fn builtin(name: &str) -> Result<Scenario> {
    let doc = builtin_doc(name).ok_or_else(|| Error::UnknownScenario {
        name: name.to_string(),
        known: builtin_names().iter().map(|s| s.to_string()).collect(),
    })?;
    compile(doc)
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn builtin_doc(name: &str) -> Option<ScenarioDoc> {
    let polar_box = BoxDoc {
        lower: vec![0.3, 0.3],
        upper: vec![1.5, 1.5],
        count: 300,
        seed: 7,
    };
    match name {
        "jacobi-arctan" => Some(ScenarioDoc {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            dims: DimsDoc { ambient: 2, base: 1 },
            coords: strings(&["a", "b"]),
            base_coords: strings(&["x"]),
            lagrangian: Some("(2 - atan(b/a))*(adot^2 + bdot^2)".to_string()),
            scaling: Some(ScalingDoc {
                psi: Some(strings(&["sqrt(s)*a", "sqrt(s)*b"])),
                f: Some("(a^2 + b^2)/2".to_string()),
                pi: Some(strings(&["atan(b/a)"])),
                triv_inv: Some(strings(&["sqrt(2*s)*cos(x)", "sqrt(2*s)*sin(x)"])),
                generator: Some(strings(&["a/2", "b/2"])),
            }),
            herglotz: None,
            initial: InitialState {
                q: Some(vec![1.0, 1.0]),
                qdot: Some(vec![0.1, -0.2]),
                ..InitialState::default()
            },
            integrator: IntegratorDoc {
                steps: 2000,
                horizon: 2.0,
            },
            sampling_box: BoxDoc {
                lower: vec![0.5, 0.5],
                upper: vec![2.5, 2.5],
                count: 300,
                seed: 7,
            },
            doc: "Jacobi-type Lagrangian on the open positive quadrant: \
                  L = (e - arctan(b/a))*(adot^2 + bdot^2) with e = 2 (any e > pi/2 \
                  keeps the factor positive). Quotient chart x = arctan(b/a), scaling \
                  function f = (a^2 + b^2)/2; the reduced Lagrangian is \
                  2*(e - x)*(xdot^2 + (y/2)^2)."
                .to_string(),
        }),
        "harmonic-oscillator" => Some(ScenarioDoc {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            dims: DimsDoc { ambient: 2, base: 1 },
            coords: strings(&["q0", "q1"]),
            base_coords: strings(&["x"]),
            lagrangian: Some("(q0dot^2 + q1dot^2)/2 - (q0^2 + q1^2)/2".to_string()),
            scaling: Some(ScalingDoc {
                psi: Some(strings(&["sqrt(s)*q0", "sqrt(s)*q1"])),
                f: Some("q0^2 + q1^2".to_string()),
                pi: Some(strings(&["atan2(q1, q0)"])),
                triv_inv: Some(strings(&["sqrt(s)*cos(x)", "sqrt(s)*sin(x)"])),
                generator: Some(strings(&["q0/2", "q1/2"])),
            }),
            herglotz: None,
            initial: InitialState {
                q: Some(vec![1.0, 0.2]),
                qdot: Some(vec![-0.1, 0.9]),
                ..InitialState::default()
            },
            integrator: IntegratorDoc {
                steps: 2000,
                horizon: 2.0,
            },
            sampling_box: polar_box,
            doc: "Planar isotropic harmonic oscillator with unit mass and stiffness: \
                  L = (q0dot^2 + q1dot^2)/2 - (q0^2 + q1^2)/2 on the punctured plane, \
                  scaled by psi(s, q) = sqrt(s)*q with f = |q|^2 and the polar angle \
                  as quotient chart. Reduces to (xdot^2 + y^2/4)/2 - 1/2."
                .to_string(),
        }),
        "linear-counterexample" => Some(ScenarioDoc {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            dims: DimsDoc { ambient: 2, base: 1 },
            coords: strings(&["q0", "q1"]),
            base_coords: strings(&["x"]),
            lagrangian: Some("2*(q0*q0dot + q1*q1dot)".to_string()),
            scaling: Some(ScalingDoc {
                psi: Some(strings(&["sqrt(s)*q0", "sqrt(s)*q1"])),
                f: Some("q0^2 + q1^2".to_string()),
                pi: Some(strings(&["atan2(q1, q0)"])),
                triv_inv: Some(strings(&["sqrt(s)*cos(x)", "sqrt(s)*sin(x)"])),
                generator: Some(strings(&["q0/2", "q1/2"])),
            }),
            herglotz: Some("0".to_string()),
            initial: InitialState {
                q: Some(vec![1.0, 0.2]),
                qdot: Some(vec![-0.1, 0.9]),
                ..InitialState::default()
            },
            integrator: IntegratorDoc {
                steps: 2000,
                horizon: 2.0,
            },
            sampling_box: BoxDoc {
                lower: vec![0.3, 0.3],
                upper: vec![1.5, 1.5],
                count: 300,
                seed: 7,
            },
            doc: "Velocity-linear homogeneous Lagrangian L = 2k<q, qdot> with k = 1 \
                  under the sqrt(s) scaling of the punctured plane. It reduces to \
                  l = k*y, whose scaling equations hold along every curve; the \
                  velocity Hessian vanishes identically, so rate-form integration is \
                  rejected. Ships with Lhat = 0 for the Herglotz comparison."
                .to_string(),
        }),
        "herglotz-zero" => Some(ScenarioDoc {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            dims: DimsDoc { ambient: 2, base: 1 },
            coords: strings(&["q0", "q1"]),
            base_coords: strings(&["x"]),
            lagrangian: None,
            scaling: None,
            herglotz: Some("0".to_string()),
            initial: InitialState {
                x: Some(vec![0.5]),
                xdot: Some(vec![0.1]),
                y: Some(0.0),
                ..InitialState::default()
            },
            integrator: IntegratorDoc {
                steps: 2000,
                horizon: 2.0,
            },
            sampling_box: BoxDoc {
                lower: vec![0.3, 0.3],
                upper: vec![1.5, 1.5],
                count: 300,
                seed: 7,
            },
            doc: "The zero action-dependent Lagrangian Lhat = 0 on a circle chart. \
                  Its Herglotz solutions are exactly the curves (x(t), y0) with \
                  constant y0; curves with non-constant y violate ydot = Lhat."
                .to_string(),
        }),
        "kinetic-geodesic" => Some(ScenarioDoc {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            dims: DimsDoc { ambient: 2, base: 1 },
            coords: strings(&["q0", "q1"]),
            base_coords: strings(&["x"]),
            lagrangian: Some("q0dot^2 + q1dot^2".to_string()),
            scaling: Some(ScalingDoc {
                psi: Some(strings(&["sqrt(s)*q0", "sqrt(s)*q1"])),
                f: Some("(q0^2 + q1^2)/4".to_string()),
                pi: Some(strings(&["atan2(q1, q0)"])),
                triv_inv: Some(strings(&["2*sqrt(s)*cos(x)", "2*sqrt(s)*sin(x)"])),
                generator: Some(strings(&["q0/2", "q1/2"])),
            }),
            herglotz: None,
            initial: InitialState {
                q: Some(vec![1.0, 0.2]),
                qdot: Some(vec![-0.1, 0.4]),
                ..InitialState::default()
            },
            integrator: IntegratorDoc {
                steps: 2000,
                horizon: 2.0,
            },
            sampling_box: BoxDoc {
                lower: vec![0.3, 0.3],
                upper: vec![1.5, 1.5],
                count: 300,
                seed: 7,
            },
            doc: "Kinetic Lagrangian K_g(v) = g(v, v) of the constant Euclidean \
                  metric on the punctured plane; trajectories are straight lines. \
                  The natural scaling function is f(q) = g(D_q, D_q) for the \
                  generator D_q = q/2 of psi(s, q) = sqrt(s)*q, i.e. f = |q|^2/4."
                .to_string(),
        }),
        _ => None,
    }
}
