//! Simulation and certification toolkit for projected dynamical systems (PDS)
//! and their continuous control-barrier-function (CBF) approximations.
//!
//! A PDS constrains a nominal flow `ξ̇ = f(ξ)` to a set `S = {x : h(x) ≥ 0}`
//! by projecting the field onto the tangent cone of `S`, which makes the
//! right-hand side discontinuous on the boundary. The CBF construction
//! instead solves, at every state, the quadratic program
//! `min ‖μ − f‖²_P  s.t.  L_μ h + α h ≥ 0`, yielding a locally Lipschitz
//! field that keeps trajectories in `S` and approaches the PDS field as
//! `α → ∞`. This crate simulates both (also in feedback interconnection
//! with a second system `ζ̇ = g(ζ, ξ)`), estimates the constants that
//! quantify how far the CBF field is from the PDS differential inclusion,
//! and measures the sup-norm distance between the two trajectory families
//! across sweeps of `α`.
//!
//! Module map:
//! - [`geometry`]: constraint sets, point classification, tangent/normal cone data;
//! - [`projection`]: the `P`-metric minimizations (tangent-cone projection,
//!   CBF closed form, half-space QP, nearest point in `S`);
//! - [`dynamics`]: interconnected right-hand sides and the normal-cone
//!   inclusion residual;
//! - [`integrate`]: fixed-step schemes producing [`integrate::Trajectory`] records;
//! - [`bounds`]: grid estimation of the perturbation constants
//!   (`α*`, `M₁..M₃`, `L₁`, `σ(α)`, `δ`);
//! - [`analysis`]: α-sweeps, perturbation certificates, inclusion-membership tests;
//! - [`scenarios`]: the shipped experiment setups and the JSON config schema.

pub mod analysis;
pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod projection;
pub mod sampling;
pub mod scenarios;

pub use analysis::{
    perturbation_certificate, run_sweep, sigma_perturbation_member, CertificateSample,
    MembershipOptions, SweepResult,
};
pub use bounds::{estimate_constants, sigma_of_alpha, BoundsReport, GridSpec, SigmaEntry};
pub use dynamics::{di_residual, eval_field, FieldKind, Interconnection};
pub use error::{Error, Result};
pub use geometry::{AxisBox, Classification, ConeData, ConstraintSet, Shape};
pub use integrate::{integrate, refine_check, IntegrationConfig, Scheme, Trajectory};
pub use projection::{
    cbf_field_value, project_point_to_set, project_tangent, qp_oracle, tangent_kkt_certificate,
    KktCertificate, MetricMatrix,
};
pub use scenarios::{
    build_from_config, build_feedback_opt, build_synchronverter, build_synthetic, scenario_by_name,
    DynamicsSpec, ScenarioConfig, SetSpec,
};
