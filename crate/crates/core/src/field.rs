//! Anything that maps coordinates to flow variables with exact derivatives.

use crate::network::{DerivSpec, Jets, NetworkModel, OutputVar};
use crate::Result;

/// A differentiable coordinate field. Points are flat `n * input_dim` slices
/// ordered `(x, y)` or `(t, x, y)`.
pub trait FieldModel {
    fn input_dim(&self) -> usize;
    fn outputs(&self) -> &[OutputVar];
    fn evaluate(&self, points: &[f64], spec: &DerivSpec) -> Result<Jets>;

    fn output_index(&self, var: OutputVar) -> Option<usize> {
        self.outputs().iter().position(|&o| o == var)
    }
}

impl FieldModel for NetworkModel {
    fn input_dim(&self) -> usize {
        self.config().input_dim
    }

    fn outputs(&self) -> &[OutputVar] {
        NetworkModel::outputs(self)
    }

    fn evaluate(&self, points: &[f64], spec: &DerivSpec) -> Result<Jets> {
        NetworkModel::evaluate(self, points, spec)
    }
}
