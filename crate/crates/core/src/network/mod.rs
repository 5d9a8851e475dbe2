//! Coordinate network `(t, x, y) -> (u, v, p[, T])`.
//!
//! Topology: Fourier-feature input layer, a shared SiLU trunk, then one SiLU
//! head per output variable ending in a linear unit. Parameters live in one
//! flat vector ordered trunk layers first, then heads in output order; each
//! dense layer stores its row-major weight block followed by its bias.

mod embedding;
mod engine;
mod gemm;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use embedding::{anneal_weights, EmbeddingConfig};
pub use engine::{DerivSpec, Jets, Tape};

use embedding::InputMap;
use engine::Layout;

use crate::math;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum OutputVar {
    U,
    V,
    P,
    T,
}

impl OutputVar {
    pub fn name(self) -> &'static str {
        match self {
            OutputVar::U => "u",
            OutputVar::V => "v",
            OutputVar::P => "p",
            OutputVar::T => "T",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "u" => Some(OutputVar::U),
            "v" => Some(OutputVar::V),
            "p" => Some(OutputVar::P),
            "T" | "t" => Some(OutputVar::T),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkConfig {
    /// 2 for `(x, y)`, 3 for `(t, x, y)`.
    pub input_dim: usize,
    pub outputs: Vec<OutputVar>,
    pub shared_widths: Vec<usize>,
    pub head_widths: Vec<usize>,
    pub embedding: EmbeddingConfig,
    /// Bounding box mapped onto `[-1, 1]^d` before the embedding.
    pub input_lower: Vec<f64>,
    pub input_upper: Vec<f64>,
}

impl NetworkConfig {
    /// Two shared layers of width 128 and one 128-wide layer per head.
    pub fn new(input_lower: Vec<f64>, input_upper: Vec<f64>, outputs: Vec<OutputVar>) -> Self {
        NetworkConfig {
            input_dim: input_lower.len(),
            outputs,
            shared_widths: vec![128, 128],
            head_widths: vec![128],
            embedding: EmbeddingConfig {
                num_frequencies: 64,
                sigma: 1.0,
                anneal_steps: 0,
            },
            input_lower,
            input_upper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.input_dim) {
            return Err(Error::config("input dimension must be 2 (x, y) or 3 (t, x, y)"));
        }
        if self.input_lower.len() != self.input_dim || self.input_upper.len() != self.input_dim {
            return Err(Error::config("input bounds must match the input dimension"));
        }
        if self
            .input_lower
            .iter()
            .zip(&self.input_upper)
            .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && hi > lo))
        {
            return Err(Error::config("input bounds must be finite with lower < upper"));
        }
        if self.outputs.is_empty() {
            return Err(Error::config("network needs at least one output"));
        }
        for (k, o) in self.outputs.iter().enumerate() {
            if self.outputs[..k].contains(o) {
                return Err(Error::config("duplicate output variable"));
            }
        }
        if self.shared_widths.iter().chain(&self.head_widths).any(|&w| w == 0) {
            return Err(Error::config("layer widths must be positive"));
        }
        self.embedding.validate()
    }

    /// Indices of the spatial inputs `x, y`.
    pub fn spatial_inputs(&self) -> [usize; 2] {
        if self.input_dim == 3 {
            [1, 2]
        } else {
            [0, 1]
        }
    }

    pub fn time_input(&self) -> Option<usize> {
        (self.input_dim == 3).then_some(0)
    }
}

/// The trainable model plus its fixed embedding matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    config: NetworkConfig,
    frequencies: Vec<f64>,
    params: Vec<f64>,
    layout: Layout,
    center: Vec<f64>,
    inv_half: Vec<f64>,
    anneal_step: u64,
}

/// Derivatives of every output at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialDerivatives {
    pub outputs: Vec<OutputVar>,
    pub values: Vec<f64>,
    /// `[d/dx, d/dy]` per output.
    pub first: Vec<[f64; 2]>,
    /// `[d2/dx2, d2/dxdy, d2/dy2]` per output; empty for order 1.
    pub second: Vec<[f64; 3]>,
    /// `d/dt` per output for unsteady models; empty otherwise.
    pub time: Vec<f64>,
}

impl SpatialDerivatives {
    pub fn index(&self, var: OutputVar) -> Option<usize> {
        self.outputs.iter().position(|&o| o == var)
    }
}

impl NetworkModel {
    /// Glorot-uniform weights, zero biases and a Gaussian frequency matrix, all
    /// drawn from one ChaCha8 stream seeded with `seed`.
    pub fn new(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frequencies = embedding::sample_frequencies(&config.embedding, config.input_dim, &mut rng);
        let layout = Self::layout_for(&config);
        let mut params = vec![0.0; layout.count];
        for dense in layout.shared.iter().chain(layout.heads.iter().flatten()) {
            let limit = math::sqrt(6.0 / (dense.in_dim + dense.out_dim) as f64);
            for w in &mut params[dense.w..dense.w + dense.in_dim * dense.out_dim] {
                *w = rng.random_range(-limit..limit);
            }
        }
        Self::assemble(config, frequencies, params, 0)
    }

    /// Rebuild a model from stored parts.
    pub fn from_parts(config: NetworkConfig, frequencies: Vec<f64>, params: Vec<f64>, anneal_step: u64) -> Result<Self> {
        config.validate()?;
        let expected = config.embedding.num_frequencies * config.input_dim;
        if frequencies.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: frequencies.len(),
            });
        }
        let count = Self::layout_for(&config).count;
        if params.len() != count {
            return Err(Error::LengthMismatch {
                expected: count,
                got: params.len(),
            });
        }
        Self::assemble(config, frequencies, params, anneal_step)
    }

    fn layout_for(config: &NetworkConfig) -> Layout {
        Layout::new(
            config.embedding.feature_dim(config.input_dim),
            &config.shared_widths,
            &config.head_widths,
            config.outputs.len(),
        )
    }

    fn assemble(config: NetworkConfig, frequencies: Vec<f64>, params: Vec<f64>, anneal_step: u64) -> Result<Self> {
        let layout = Self::layout_for(&config);
        let center = config
            .input_lower
            .iter()
            .zip(&config.input_upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect();
        let inv_half = config
            .input_lower
            .iter()
            .zip(&config.input_upper)
            .map(|(lo, hi)| 2.0 / (hi - lo))
            .collect();
        Ok(NetworkModel {
            config,
            frequencies,
            params,
            layout,
            center,
            inv_half,
            anneal_step,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn outputs(&self) -> &[OutputVar] {
        &self.config.outputs
    }

    pub fn output_index(&self, var: OutputVar) -> Option<usize> {
        self.config.outputs.iter().position(|&o| o == var)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn parameter_count(&self) -> usize {
        self.layout.count
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Copy of the flat parameter vector.
    pub fn flatten(&self) -> Vec<f64> {
        self.params.clone()
    }

    /// Overwrite all parameters from a flat vector.
    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.params.len() {
            return Err(Error::LengthMismatch {
                expected: self.params.len(),
                got: flat.len(),
            });
        }
        self.params.copy_from_slice(flat);
        Ok(())
    }

    pub fn anneal_step(&self) -> u64 {
        self.anneal_step
    }

    /// Move the frequency mask to iteration `step`.
    pub fn set_anneal_step(&mut self, step: u64) {
        self.anneal_step = step;
    }

    pub fn anneal_weights(&self) -> Vec<f64> {
        anneal_weights(&self.config.embedding, self.anneal_step)
    }

    /// Mutable `(weights, bias)` of trunk layer `layer`; weights are row-major
    /// `out x in`.
    pub fn shared_layer_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        let d = self.layout.shared[layer];
        Self::split_dense(&mut self.params, d)
    }

    /// Mutable `(weights, bias)` of layer `layer` in the head of `output`; the
    /// last layer of each head is the linear output unit.
    pub fn head_layer_mut(&mut self, output: usize, layer: usize) -> (&mut [f64], &mut [f64]) {
        let d = self.layout.heads[output][layer];
        Self::split_dense(&mut self.params, d)
    }

    fn split_dense(params: &mut [f64], d: engine::Dense) -> (&mut [f64], &mut [f64]) {
        let block = &mut params[d.w..d.w + d.len()];
        block.split_at_mut(d.in_dim * d.out_dim)
    }

    fn input_map(&self) -> InputMap<'_> {
        InputMap {
            center: &self.center,
            inv_half: &self.inv_half,
            frequencies: &self.frequencies,
            weights: self.anneal_weights(),
        }
    }

    fn check_batch(&self, points: &[f64], spec: &DerivSpec) -> Result<usize> {
        let d = self.config.input_dim;
        if points.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: points.len() % d,
            });
        }
        if let Some(i) = spec.max_input() {
            if i >= d {
                return Err(Error::DimensionMismatch { expected: d, got: i + 1 });
            }
        }
        Ok(points.len() / d)
    }

    /// Evaluate jets at a flat batch of points (`n * input_dim` coordinates).
    pub fn evaluate(&self, points: &[f64], spec: &DerivSpec) -> Result<Jets> {
        self.evaluate_with_tape(points, spec).map(|(j, _)| j)
    }

    /// Evaluate jets and keep what the backward pass needs.
    pub fn evaluate_with_tape(&self, points: &[f64], spec: &DerivSpec) -> Result<(Jets, Tape)> {
        let n = self.check_batch(points, spec)?;
        let features = self.input_map().features(points, spec);
        Ok(engine::run(&self.layout, &self.params, features, n, spec))
    }

    /// Accumulate `d loss / d params` into `grad`, given the adjoint of the
    /// loss with respect to every channel of the jets recorded on `tape`.
    pub fn backward(&self, tape: &Tape, adjoint: &Jets, grad: &mut [f64]) -> Result<()> {
        if grad.len() != self.layout.count {
            return Err(Error::LengthMismatch {
                expected: self.layout.count,
                got: grad.len(),
            });
        }
        if adjoint.spec() != tape.spec() || adjoint.n_points() != tape.n_points() || adjoint.n_outputs() != self.outputs().len() {
            return Err(Error::config("adjoint shape does not match the tape"));
        }
        engine::backward(&self.layout, &self.params, tape, adjoint, grad);
        Ok(())
    }

    /// Output values at one point.
    pub fn forward(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                got: coords.len(),
            });
        }
        let jets = self.evaluate(coords, &DerivSpec::values())?;
        Ok((0..self.outputs().len()).map(|o| jets.value(0, o)).collect())
    }

    /// Exact input derivatives of every output at one point.
    pub fn spatial_derivatives(&self, coords: &[f64], order: usize) -> Result<SpatialDerivatives> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        if coords.len() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                got: coords.len(),
            });
        }
        let [ix, iy] = self.config.spatial_inputs();
        let time = self.config.time_input();
        let spec = DerivSpec::spatial(&[ix, iy], time, order)?;
        let jets = self.evaluate(coords, &spec)?;
        let n_out = self.outputs().len();
        let mut out = SpatialDerivatives {
            outputs: self.outputs().to_vec(),
            values: (0..n_out).map(|o| jets.value(0, o)).collect(),
            first: Vec::new(),
            second: Vec::new(),
            time: Vec::new(),
        };
        if order >= 1 {
            out.first = (0..n_out).map(|o| [jets.d1(0, o, ix), jets.d1(0, o, iy)]).collect();
            if let Some(it) = time {
                out.time = (0..n_out).map(|o| jets.d1(0, o, it)).collect();
            }
        }
        if order == 2 {
            out.second = (0..n_out)
                .map(|o| [jets.d2(0, o, ix, ix), jets.d2(0, o, ix, iy), jets.d2(0, o, iy, iy)])
                .collect();
        }
        Ok(out)
    }

    /// Names of the outputs in head order.
    pub fn output_names(&self) -> Vec<String> {
        self.outputs().iter().map(|o| String::from(o.name())).collect()
    }
}

/// Gradient of a scalar loss with respect to all parameters.
///
/// `loss` receives the jets of every batch in `batches` and returns the loss
/// value together with its adjoint for each batch. Batches are processed in
/// order, which fixes the reduction order of the accumulated gradient.
pub fn loss_gradient<F>(model: &NetworkModel, batches: &[(&[f64], DerivSpec)], name: &str, loss: F) -> Result<(f64, Vec<f64>)>
where
    F: FnOnce(&[Jets]) -> (f64, Vec<Jets>),
{
    let mut jets = Vec::with_capacity(batches.len());
    let mut tapes = Vec::with_capacity(batches.len());
    for (points, spec) in batches {
        let (j, t) = model.evaluate_with_tape(points, spec)?;
        jets.push(j);
        tapes.push(t);
    }
    let (value, adjoints) = loss(&jets);
    if !value.is_finite() {
        return Err(Error::non_finite(name, None));
    }
    if adjoints.len() != tapes.len() {
        return Err(Error::LengthMismatch {
            expected: tapes.len(),
            got: adjoints.len(),
        });
    }
    let mut grad = vec![0.0; model.parameter_count()];
    for (tape, adj) in tapes.iter().zip(&adjoints) {
        model.backward(tape, adj, &mut grad)?;
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::non_finite(name, None));
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests;
