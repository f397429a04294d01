//! Exact frequency-domain and space-time solution of the scalar wave equation
//! in a three-layer medium.
//!
//! A spacer of width `d` (layer 2, `0 < x < d`) sits between two semi-infinite
//! layers (layer 1 for `x < 0`, layer 3 for `x > d`). Each layer has its own
//! constant phase velocity. The crate provides:
//!
//! - [`media`]: the velocity profile, perpendicular wave vectors, and the
//!   dimensionless scaling (lengths in `d`, times in `d / v2`).
//! - [`step`]: single-interface amplitudes, effective δ-potentials, interface
//!   Green functions and T-matrices.
//! - [`mst`]: the two-interface multiple-scattering assembly of the Green
//!   function from free propagators and T-matrices.
//! - [`green`]: the closed-form piecewise Green function, its amplitudes and
//!   transmission/reflection probabilities.
//! - [`quadrature`]: deterministic panel quadrature for Gaussian-enveloped
//!   oscillatory integrands.
//! - [`packet`]: the time-domain propagator and the Gaussian wave-packet field.
//! - [`cli`]: configuration, output files and the `trilayer` command set.
//! - [`verify`]: the invariant suites run by `trilayer verify`.

// `!(a < b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod exec;
pub mod green;
pub mod media;
pub mod mst;
pub mod packet;
pub mod quadrature;
pub mod step;
pub mod verify;

pub use error::{Error, Result};
pub use media::{Layer, ScaleSystem, SpectralPoint, TrilayerMedium};

/// Complex number type used throughout.
pub type C64 = num_complex::Complex64;

/// Engine version recorded in output metadata.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
