use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::network::OutputVar;
use crate::{Error, Result};

/// Governing equations of a case.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Physics {
    /// Incompressible Navier-Stokes, conservative convection form.
    NavierStokes { re: f64 },
    /// Boussinesq flow with an energy equation; buoyancy `+T` acts on `v`.
    RayleighTaylor { pr: f64, ra: f64 },
}

impl Physics {
    /// Diffusion coefficient of the momentum equations: `1/Re` or `sqrt(Pr/Ra)`.
    pub fn momentum_diffusivity(&self) -> f64 {
        match *self {
            Physics::NavierStokes { re } => 1.0 / re,
            Physics::RayleighTaylor { pr, ra } => math::sqrt(pr / ra),
        }
    }

    /// Diffusion coefficient of the energy equation, `1/sqrt(Pr Ra)`.
    pub fn thermal_diffusivity(&self) -> Option<f64> {
        match *self {
            Physics::NavierStokes { .. } => None,
            Physics::RayleighTaylor { pr, ra } => Some(1.0 / math::sqrt(pr * ra)),
        }
    }

    pub fn has_temperature(&self) -> bool {
        matches!(self, Physics::RayleighTaylor { .. })
    }

    pub fn outputs(&self) -> Vec<OutputVar> {
        if self.has_temperature() {
            vec![OutputVar::U, OutputVar::V, OutputVar::P, OutputVar::T]
        } else {
            vec![OutputVar::U, OutputVar::V, OutputVar::P]
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Physics::NavierStokes { re } => re.is_finite() && re > 0.0,
            Physics::RayleighTaylor { pr, ra } => {
                pr.is_finite() && ra.is_finite() && pr > 0.0 && ra > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config("physical parameters must be finite and positive"))
        }
    }
}
