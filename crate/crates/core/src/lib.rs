//! Physics-informed coordinate networks for 2-D incompressible flow.
//!
//! The crate is split along the pipeline a training run follows:
//!
//! * [`network`] - the coordinate MLP with a Fourier-feature input layer, exact
//!   input derivatives (Taylor jets up to second order) and reverse-mode
//!   parameter gradients.
//! * [`geometry`] - case geometries, point classification into FVM / AD /
//!   boundary / initial sets, and control-volume stencils.
//! * [`fvm`] - simplified finite-volume residuals of continuity, momentum and
//!   energy on a nine-point stencil.
//! * [`correction`] - SIMPLE-style velocity/pressure correction terms and the
//!   L1 residual-correction losses built from two consecutive iterates.
//! * [`ad_residual`] - strong-form residuals from network derivatives, and
//!   boundary/initial condition residuals.
//! * [`training`] - loss composition, Adam with warmup-cosine decay, the
//!   training step with its iteration snapshot, metrics and post-processing.
//! * [`cases`] - the benchmark registry.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. File formats and the command line live in the companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ad_residual;
pub mod analytic;
pub mod cases;
pub mod correction;
mod error;
pub mod field;
pub mod fvm;
pub mod geometry;
mod math;
pub mod network;
pub mod physics;
pub mod profile;
pub mod training;

pub use error::{Error, Result};
pub use field::FieldModel;
pub use network::{DerivSpec, Jets, NetworkConfig, NetworkModel, OutputVar};
pub use physics::Physics;
