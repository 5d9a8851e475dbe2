use alloc::vec::Vec;

use crate::field::FieldModel;
use crate::math;
use crate::network::{DerivSpec, OutputVar};
use crate::{Error, Result};

/// `sqrt(u^2 + v^2)`, evaluated literally so it can be recomputed bit for bit.
pub fn velocity_magnitude(u: f64, v: f64) -> f64 {
    math::sqrt(u * u + v * v)
}

/// `(p - p_inf) / (rho U^2 / 2)` with `rho = U = 1`.
pub fn pressure_coefficient(p: f64, p_inf: f64) -> f64 {
    (p - p_inf) / 0.5
}

/// Raw outputs and derived quantities at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedPoint {
    /// Outputs in model order.
    pub values: Vec<f64>,
    pub speed: f64,
    /// `v_x - u_y`.
    pub vorticity: f64,
    pub cp: Option<f64>,
}

/// Evaluate a model at flat input points and derive `V`, `omega` and `C_p`.
pub fn postprocess(model: &dyn FieldModel, points: &[f64], p_inf: Option<f64>) -> Result<Vec<DerivedPoint>> {
    let d = model.input_dim();
    let (ix, iy) = if d == 3 { (1, 2) } else { (0, 1) };
    let spec = DerivSpec::new(alloc::vec![ix, iy], alloc::vec![])?;
    let jets = model.evaluate(points, &spec)?;
    let idx = |v| model.output_index(v).ok_or_else(|| Error::config("model lacks a flow output"));
    let (u, v, p) = (idx(OutputVar::U)?, idx(OutputVar::V)?, idx(OutputVar::P)?);
    Ok((0..jets.n_points())
        .map(|k| {
            let values: Vec<f64> = (0..jets.n_outputs()).map(|o| jets.value(k, o)).collect();
            DerivedPoint {
                speed: velocity_magnitude(values[u], values[v]),
                vorticity: jets.d1(k, v, ix) - jets.d1(k, u, iy),
                cp: p_inf.map(|pi| pressure_coefficient(values[p], pi)),
                values,
            }
        })
        .collect())
}
