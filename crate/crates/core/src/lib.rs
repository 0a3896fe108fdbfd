//! Numerical laboratory for the semilinear heat flow
//! `u_t - Δu + h(x,t) u^p = 0` with an absorption coefficient that vanishes
//! along a space-time curve.
//!
//! The crate is organised bottom up:
//!
//! * [`geometry`]: degeneracy curves, parabolic and anisotropic distances,
//!   monotonicity classification.
//! * [`potential`]: decay profiles and the absorption coefficient built from
//!   them.
//! * [`barriers`]: closed-form super/subsolutions and a residual verifier.
//! * [`spectral`]: Dirichlet ground states, drift-shifted spectra, decay
//!   envelopes and the blow-up functionals.
//! * [`solver`]: finite-difference time stepping in fixed and moving frames.
//! * [`harness`]: scenarios, sweeps, reports.

pub mod barriers;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod potential;
pub mod quadrature;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
