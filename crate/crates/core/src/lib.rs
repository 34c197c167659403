//! Geometry and path-integral reduction on principal fibre bundles.
//!
//! A [`BundleSpec`] describes a manifold 𝒫 with a free isometric action of a
//! Lie group 𝒢 in one coordinate chart: the metric `G_AB(Q)`, the Killing
//! fields `K^A_μ(Q)` generating the action, gauge functions `χᵅ(Q)` whose zero
//! set Σ meets each orbit once, and the structure constants of 𝒢.
//!
//! From it the crate computes the projectors and connection of the bundle,
//! the nonholonomic curvature decomposition of the scalar curvature of 𝒫, the
//! reduction Jacobian integrand `J̃` by two independent routes, and Monte Carlo
//! estimates that compare diffusion on 𝒫 with the reduced diffusion on Σ.
//!
//! Curvature signs follow the convention in which round spheres have positive
//! scalar curvature.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bundle;
pub mod curvature;
pub mod error;
pub mod field;
pub mod group;
pub mod scenarios;
pub mod stochastic;
pub mod tensor;
pub mod verify;

pub use bundle::{AdaptedDeterminant, BundleSpec, ConnectionData, Frame, ProjectorSet};
pub use curvature::{ChristoffelTable, CurvatureReport, FSign, JacobianRoute, PointGeometry};
pub use error::{Error, Result};
pub use field::{fd_derivative, FdConfig, FnField, SmoothField, Stencil};
pub use scenarios::{make_scenario, OracleEntry, Scenario, SCENARIO_NAMES};
pub use group::{CircleTranslation, GroupChart, StructureConstants, Su2RightAction};
pub use verify::{verify_identities, IdentityResult, IdentityTolerances};
pub use stochastic::{apply_generator, estimate_green, girsanov_log_factor, simulate_original, simulate_reduced, verify_reduction_relation, GirsanovForm, Generator, GreenEstimate, GreenKind, PathSample, PathStatus, ReductionCheck, SdeConfig};
pub use tensor::{inverse_det, sym_factor, Tensor};
