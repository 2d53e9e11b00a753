//! Numerical toolkit for Lagrangian systems with scaling symmetries.
//!
//! A Lagrangian `L: TQ → ℝ` that is homogeneous of degree one under a
//! principal action of the multiplicative group `ℝ⁺` can be reduced to a
//! function `ℓ(x, ẋ, y)` on the quotient, where `x` charts `Q/ℝ⁺` and
//! `y = d ln f(γ̇)` is the logarithmic fiber rate of a scaling function
//! `f`. This crate provides:
//!
//! * exact forward-mode first and second derivatives ([`autodiff`]),
//! * domain types and validators for scaling structures ([`systems`]),
//! * the quotient map, reduced Lagrangians and trajectory
//!   projection/reconstruction ([`reduction`]),
//! * rate assembly, RK4 integration and residual evaluators for the
//!   Euler-Lagrange, scaling-Lagrange-Poincaré, standard abelian
//!   Lagrange-Poincaré and Herglotz equations ([`dynamics`]),
//! * discrete action functionals and first-variation instruments
//!   ([`variational`]),
//! * ready-made scenarios and a JSON loader ([`scenario`]).
//!
//! The crate is `no_std`-compatible (with `alloc`); the companion CLI
//! crate carries file formats and the command-line front end.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod autodiff;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod quad;
pub mod reduction;
pub mod scenario;
pub mod systems;
pub mod variational;

pub use autodiff::{Dual, HyperDual, Scalar, ScalarField, Smooth, SmoothMap};
pub use error::{Error, Result};
