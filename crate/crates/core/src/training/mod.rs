//! Loss composition, optimisation and evaluation.
//!
//! The total loss is
//!
//! ```text
//! L = l_fc FVM_c + l_fm (FVM_u + FVM_v) + l_fe FVM_T
//!   + l_ac AD_c + l_am (AD_u + AD_v + AD_T)
//!   + l_rc (RC_p + RC_u + RC_v + RC_T) + l_bc BC + l_ic IC
//! ```
//!
//! with mean squared residuals for the FVM, AD, BC and IC terms and mean
//! absolute deviations for the correction terms. Gradients are assembled by
//! hand: every residual supplies its partial derivatives with respect to the
//! sampled outputs and their input derivatives, and one backward pass per
//! point group maps them onto the parameters.

mod loss;
mod metrics;
mod optimizer;
mod postprocess;
mod problem;
mod trainer;

pub use loss::{total_loss, total_loss_and_grad, Batch, LossBreakdown, LossSettings, LossWeights, Snapshot};
pub use metrics::{demean, mse, relative_l2};
pub use optimizer::{Adam, Schedule};
pub use postprocess::{postprocess, pressure_coefficient, velocity_magnitude, DerivedPoint};
pub use problem::{BcPoint, IcPoint, InitialFields, Problem};
pub use trainer::{BatchMode, IterationSnapshot, StepRecord, TrainConfig, Trainer};

#[cfg(test)]
mod tests;
