//! Prescribed scalar functions of `(x, y)` used as boundary and initial values.

use crate::math;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Profile {
    Constant { value: f64 },
    /// `4 peak (y - lo)(hi - y) / (hi - lo)^2`.
    Parabola { lo: f64, hi: f64, peak: f64 },
    /// `(1 - tanh((y - mean - amplitude cos(wavenumber x)) / width)) / 2`.
    Interface {
        mean: f64,
        amplitude: f64,
        wavenumber: f64,
        width: f64,
    },
}

impl Profile {
    pub const ZERO: Profile = Profile::Constant { value: 0.0 };

    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Parabola { lo, hi, peak } => 4.0 * peak * (y - lo) * (hi - y) / ((hi - lo) * (hi - lo)),
            Profile::Interface {
                mean,
                amplitude,
                wavenumber,
                width,
            } => 0.5 * (1.0 - math::tanh((y - mean - amplitude * math::cos(wavenumber * x)) / width)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Constant { value } => value.is_finite(),
            Profile::Parabola { lo, hi, peak } => hi > lo && peak.is_finite(),
            Profile::Interface { width, .. } => width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config("invalid profile parameters"))
        }
    }
}
