//! Batched evaluation of the MLP on Taylor jets and reverse-mode backprop.
//!
//! A jet carries, for every point, the value channel plus the requested
//! first- and second-order input derivatives. Channels are stacked as extra
//! rows of one matrix (`[channel][point][unit]`), so a dense layer on a jet is
//! a single matrix product with the bias applied to the value rows only. The
//! activation mixes channels pointwise by the chain rule. The backward pass
//! runs the same computation in reverse, giving parameter gradients of any
//! loss that depends on outputs and their input derivatives.

use alloc::vec;
use alloc::vec::Vec;

use super::gemm::{gemm, View};
use crate::math;
use crate::{Error, Result};

/// Which derivative channels a jet carries.
///
/// Channel 0 is the value; then one channel per entry of `first`, then one per
/// entry of `second`. A second-order pair `(i, j)` requires first-order
/// channels for both `i` and `j`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DerivSpec {
    pub(crate) first: Vec<usize>,
    pub(crate) second: Vec<(usize, usize)>,
}

impl DerivSpec {
    /// Values only.
    pub fn values() -> Self {
        DerivSpec::default()
    }

    pub fn new(first: Vec<usize>, second: Vec<(usize, usize)>) -> Result<Self> {
        for (k, i) in first.iter().enumerate() {
            if first[..k].contains(i) {
                return Err(Error::config("duplicate first-order derivative channel"));
            }
        }
        let mut norm = Vec::with_capacity(second.len());
        for (i, j) in second {
            let pair = if i <= j { (i, j) } else { (j, i) };
            if !first.contains(&pair.0) || !first.contains(&pair.1) {
                return Err(Error::config(
                    "second-order channel requires both first-order channels",
                ));
            }
            if norm.contains(&pair) {
                return Err(Error::config("duplicate second-order derivative channel"));
            }
            norm.push(pair);
        }
        Ok(DerivSpec { first, second: norm })
    }

    /// Derivatives up to `order` with respect to the spatial inputs, plus the
    /// first derivative in time when `time` is given.
    pub fn spatial(spatial: &[usize], time: Option<usize>, order: usize) -> Result<Self> {
        match order {
            0 => Ok(DerivSpec::values()),
            1 | 2 => {
                let mut first: Vec<usize> = time.into_iter().collect();
                first.extend_from_slice(spatial);
                let mut second = Vec::new();
                if order == 2 {
                    for (a, &i) in spatial.iter().enumerate() {
                        for &j in &spatial[a..] {
                            second.push((i, j));
                        }
                    }
                }
                DerivSpec::new(first, second)
            }
            other => Err(Error::UnsupportedOrder(other)),
        }
    }

    pub fn channels(&self) -> usize {
        1 + self.first.len() + self.second.len()
    }

    pub fn first(&self) -> &[usize] {
        &self.first
    }

    pub fn second(&self) -> &[(usize, usize)] {
        &self.second
    }

    pub fn first_slot(&self, input: usize) -> Option<usize> {
        self.first.iter().position(|&i| i == input).map(|c| 1 + c)
    }

    pub fn second_slot(&self, i: usize, j: usize) -> Option<usize> {
        let pair = if i <= j { (i, j) } else { (j, i) };
        self.second
            .iter()
            .position(|&s| s == pair)
            .map(|c| 1 + self.first.len() + c)
    }

    pub(crate) fn max_input(&self) -> Option<usize> {
        self.first.iter().copied().max()
    }
}

/// Output jets for a batch of points, laid out `[channel][point][output]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jets {
    spec: DerivSpec,
    n_points: usize,
    n_outputs: usize,
    data: Vec<f64>,
}

impl Jets {
    pub fn zeros(spec: DerivSpec, n_points: usize, n_outputs: usize) -> Self {
        let len = spec.channels() * n_points * n_outputs;
        Jets {
            spec,
            n_points,
            n_outputs,
            data: vec![0.0; len],
        }
    }

    /// A zeroed jet of the same shape, typically used as an adjoint.
    pub fn zeros_like(&self) -> Self {
        Jets::zeros(self.spec.clone(), self.n_points, self.n_outputs)
    }

    pub fn spec(&self) -> &DerivSpec {
        &self.spec
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn index(&self, channel: usize, point: usize, output: usize) -> usize {
        debug_assert!(point < self.n_points && output < self.n_outputs);
        (channel * self.n_points + point) * self.n_outputs + output
    }

    #[inline]
    pub fn channel(&self, channel: usize, point: usize, output: usize) -> f64 {
        self.data[self.index(channel, point, output)]
    }

    #[inline]
    pub fn channel_mut(&mut self, channel: usize, point: usize, output: usize) -> &mut f64 {
        let i = self.index(channel, point, output);
        &mut self.data[i]
    }

    #[inline]
    pub fn value(&self, point: usize, output: usize) -> f64 {
        self.channel(0, point, output)
    }

    #[inline]
    pub fn value_mut(&mut self, point: usize, output: usize) -> &mut f64 {
        self.channel_mut(0, point, output)
    }

    /// First derivative of `output` with respect to input `i`.
    ///
    /// Panics if the jet does not carry that channel.
    #[inline]
    pub fn d1(&self, point: usize, output: usize, i: usize) -> f64 {
        let c = self.spec.first_slot(i).expect("missing first-order channel");
        self.channel(c, point, output)
    }

    #[inline]
    pub fn d1_mut(&mut self, point: usize, output: usize, i: usize) -> &mut f64 {
        let c = self.spec.first_slot(i).expect("missing first-order channel");
        self.channel_mut(c, point, output)
    }

    #[inline]
    pub fn d2(&self, point: usize, output: usize, i: usize, j: usize) -> f64 {
        let c = self.spec.second_slot(i, j).expect("missing second-order channel");
        self.channel(c, point, output)
    }

    #[inline]
    pub fn d2_mut(&mut self, point: usize, output: usize, i: usize, j: usize) -> &mut f64 {
        let c = self.spec.second_slot(i, j).expect("missing second-order channel");
        self.channel_mut(c, point, output)
    }
}

/// SiLU and its first three derivatives.
#[inline]
#[cfg(test)]
pub(crate) fn silu_derivs(a: f64) -> (f64, f64, f64, f64) {
    silu_derivs_with(a, sigmoid(a))
}

#[inline]
fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + math::exp(-a))
}

/// Same as [`silu_derivs`] with the sigmoid `s` of `a` already known.
#[inline]
fn silu_derivs_with(a: f64, s: f64) -> (f64, f64, f64, f64) {
    let s1 = s * (1.0 - s);
    let s2 = s1 * (1.0 - 2.0 * s);
    let s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
    (a * s, s + a * s1, 2.0 * s1 + a * s2, 3.0 * s2 + a * s3)
}

#[cfg(test)]
pub(crate) fn silu(a: f64) -> f64 {
    a / (1.0 + math::exp(-a))
}

/// Apply SiLU to a jet of pre-activations (`block` = points x units). Also
/// returns the sigmoid of the value channel for the backward pass.
fn activate(pre: &[f64], block: usize, spec: &DerivSpec) -> (Vec<f64>, Vec<f64>) {
    let mut out = vec![0.0; pre.len()];
    let sig: Vec<f64> = pre[..block].iter().map(|&a| sigmoid(a)).collect();
    if spec.channels() == 1 {
        for ((o, &a), &s) in out.iter_mut().zip(pre).zip(&sig) {
            *o = a * s;
        }
        return (out, sig);
    }
    let nf = spec.first.len();
    for e in 0..block {
        let (f, f1, f2, _) = silu_derivs_with(pre[e], sig[e]);
        out[e] = f;
        for c in 1..=nf {
            out[c * block + e] = f1 * pre[c * block + e];
        }
        for (k, &(i, j)) in spec.second.iter().enumerate() {
            let c = 1 + nf + k;
            let ci = spec.first_slot(i).unwrap();
            let cj = spec.first_slot(j).unwrap();
            out[c * block + e] = f2 * pre[ci * block + e] * pre[cj * block + e] + f1 * pre[c * block + e];
        }
    }
    (out, sig)
}

/// Pull the adjoint of an activated jet back to its pre-activations.
fn activate_backward(pre: &[f64], sig: &[f64], g_out: &[f64], block: usize, spec: &DerivSpec) -> Vec<f64> {
    let nf = spec.first.len();
    if spec.channels() == 1 {
        return (0..block)
            .map(|e| {
                let (a, s) = (pre[e], sig[e]);
                g_out[e] * (s + a * s * (1.0 - s))
            })
            .collect();
    }
    let mut g = vec![0.0; pre.len()];
    for e in 0..block {
        let (_, f1, f2, f3) = silu_derivs_with(pre[e], sig[e]);
        let mut g0 = g_out[e] * f1;
        for c in 1..=nf {
            let gc = g_out[c * block + e];
            let ac = pre[c * block + e];
            g0 += gc * f2 * ac;
            g[c * block + e] += gc * f1;
        }
        for (k, &(i, j)) in spec.second.iter().enumerate() {
            let c = 1 + nf + k;
            let ci = spec.first_slot(i).unwrap();
            let cj = spec.first_slot(j).unwrap();
            let gc = g_out[c * block + e];
            if gc == 0.0 {
                continue;
            }
            let ai = pre[ci * block + e];
            let aj = pre[cj * block + e];
            let ac = pre[c * block + e];
            g0 += gc * (f3 * ai * aj + f2 * ac);
            g[ci * block + e] += gc * f2 * aj;
            g[cj * block + e] += gc * f2 * ai;
            g[c * block + e] += gc * f1;
        }
        g[e] = g0;
    }
    g
}

/// Offsets of one dense layer inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim` weight block.
    pub w: usize,
    pub b: usize,
}

impl Dense {
    pub fn len(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }

    fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.w..self.w + self.in_dim * self.out_dim]
    }

    /// Pre-activations for `rows` jet rows; the bias goes on the first `n` rows.
    fn forward(&self, params: &[f64], input: &[f64], rows: usize, n: usize) -> Vec<f64> {
        // start from the bias on the value rows and accumulate the product
        let bias = &params[self.b..self.b + self.out_dim];
        let mut out = Vec::with_capacity(rows * self.out_dim);
        for _ in 0..n {
            out.extend_from_slice(bias);
        }
        out.resize(rows * self.out_dim, 0.0);
        gemm(
            rows,
            self.in_dim,
            self.out_dim,
            View::row_major(input, self.in_dim),
            View::transposed(self.weights(params), self.in_dim),
            1.0,
            &mut out,
        );
        out
    }

    /// Accumulate parameter gradients and, if asked, return the input adjoint.
    #[allow(clippy::too_many_arguments)]
    fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        g_pre: &[f64],
        rows: usize,
        n: usize,
        grad: &mut [f64],
        want_input: bool,
    ) -> Option<Vec<f64>> {
        gemm(
            self.out_dim,
            rows,
            self.in_dim,
            View::transposed(g_pre, self.out_dim),
            View::row_major(input, self.in_dim),
            1.0,
            &mut grad[self.w..self.w + self.in_dim * self.out_dim],
        );
        let gb = &mut grad[self.b..self.b + self.out_dim];
        for row in g_pre[..n * self.out_dim].chunks_exact(self.out_dim) {
            for (g, r) in gb.iter_mut().zip(row) {
                *g += r;
            }
        }
        if !want_input {
            return None;
        }
        let mut g_in = vec![0.0; rows * self.in_dim];
        gemm(
            rows,
            self.out_dim,
            self.in_dim,
            View::row_major(g_pre, self.out_dim),
            View::row_major(self.weights(params), self.in_dim),
            0.0,
            &mut g_in,
        );
        Some(g_in)
    }
}

/// Shared trunk followed by one head per output; each head ends in a linear
/// layer of width one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub shared: Vec<Dense>,
    pub heads: Vec<Vec<Dense>>,
    pub count: usize,
}

impl Layout {
    pub fn new(feature_dim: usize, shared: &[usize], head: &[usize], n_heads: usize) -> Self {
        let mut count = 0;
        let mut dense = |in_dim: usize, out_dim: usize| {
            let d = Dense {
                in_dim,
                out_dim,
                w: count,
                b: count + in_dim * out_dim,
            };
            count += d.len();
            d
        };
        let mut width = feature_dim;
        let mut shared_layers = Vec::new();
        for &w in shared {
            shared_layers.push(dense(width, w));
            width = w;
        }
        let trunk = width;
        let mut heads = Vec::new();
        for _ in 0..n_heads {
            let mut layers = Vec::new();
            let mut width = trunk;
            for &w in head {
                layers.push(dense(width, w));
                width = w;
            }
            layers.push(dense(width, 1));
            heads.push(layers);
        }
        Layout {
            shared: shared_layers,
            heads,
            count,
        }
    }
}

/// Intermediate values kept from a forward pass for the backward pass.
pub struct Tape {
    spec: DerivSpec,
    n: usize,
    features: Vec<f64>,
    shared_pre: Vec<Vec<f64>>,
    shared_sig: Vec<Vec<f64>>,
    shared_act: Vec<Vec<f64>>,
    head_pre: Vec<Vec<Vec<f64>>>,
    head_sig: Vec<Vec<Vec<f64>>>,
    head_act: Vec<Vec<Vec<f64>>>,
}

impl Tape {
    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &DerivSpec {
        &self.spec
    }
}

pub(crate) fn run(layout: &Layout, params: &[f64], features: Vec<f64>, n: usize, spec: &DerivSpec) -> (Jets, Tape) {
    let rows = spec.channels() * n;
    let mut shared_pre = Vec::with_capacity(layout.shared.len());
    let mut shared_sig = Vec::with_capacity(layout.shared.len());
    let mut shared_act: Vec<Vec<f64>> = Vec::with_capacity(layout.shared.len());
    for layer in &layout.shared {
        let input = shared_act.last().unwrap_or(&features);
        let pre = layer.forward(params, input, rows, n);
        let (act, sig) = activate(&pre, n * layer.out_dim, spec);
        shared_pre.push(pre);
        shared_sig.push(sig);
        shared_act.push(act);
    }
    let n_out = layout.heads.len();
    let mut jets = Jets::zeros(spec.clone(), n, n_out);
    let mut head_pre = Vec::with_capacity(n_out);
    let mut head_sig = Vec::with_capacity(n_out);
    let mut head_act = Vec::with_capacity(n_out);
    for (h, layers) in layout.heads.iter().enumerate() {
        let trunk = shared_act.last().unwrap_or(&features);
        let (last, hidden) = layers.split_last().unwrap();
        let mut pres = Vec::with_capacity(hidden.len());
        let mut sigs = Vec::with_capacity(hidden.len());
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(hidden.len());
        for layer in hidden {
            let input = acts.last().unwrap_or(trunk);
            let pre = layer.forward(params, input, rows, n);
            let (act, sig) = activate(&pre, n * layer.out_dim, spec);
            pres.push(pre);
            sigs.push(sig);
            acts.push(act);
        }
        let out = last.forward(params, acts.last().unwrap_or(trunk), rows, n);
        for (r, v) in out.iter().enumerate() {
            jets.data[r * n_out + h] = *v;
        }
        head_pre.push(pres);
        head_sig.push(sigs);
        head_act.push(acts);
    }
    let tape = Tape {
        spec: spec.clone(),
        n,
        features,
        shared_pre,
        shared_sig,
        shared_act,
        head_pre,
        head_sig,
        head_act,
    };
    (jets, tape)
}

pub(crate) fn backward(layout: &Layout, params: &[f64], tape: &Tape, adjoint: &Jets, grad: &mut [f64]) {
    let spec = &tape.spec;
    let n = tape.n;
    let rows = spec.channels() * n;
    let n_out = layout.heads.len();
    let trunk_dim = layout.shared.last().map(|d| d.out_dim);
    let mut g_trunk: Option<Vec<f64>> = trunk_dim.map(|w| vec![0.0; rows * w]);
    for (h, layers) in layout.heads.iter().enumerate() {
        let trunk = tape.shared_act.last().unwrap_or(&tape.features);
        let acts = &tape.head_act[h];
        let pres = &tape.head_pre[h];
        let (last, hidden) = layers.split_last().unwrap();
        let g_out: Vec<f64> = (0..rows).map(|r| adjoint.data[r * n_out + h]).collect();
        let has_trunk = g_trunk.is_some();
        let mut g = last.backward(params, acts.last().unwrap_or(trunk), &g_out, rows, n, grad, !hidden.is_empty() || has_trunk);
        for (k, layer) in hidden.iter().enumerate().rev() {
            let g_pre = activate_backward(&pres[k], &tape.head_sig[h][k], g.as_deref().unwrap(), n * layer.out_dim, spec);
            let input = if k == 0 { trunk } else { &acts[k - 1] };
            g = layer.backward(params, input, &g_pre, rows, n, grad, k > 0 || has_trunk);
        }
        if let (Some(gt), Some(g)) = (g_trunk.as_mut(), g) {
            for (a, b) in gt.iter_mut().zip(&g) {
                *a += b;
            }
        }
    }
    if let Some(mut g) = g_trunk {
        for (k, layer) in layout.shared.iter().enumerate().rev() {
            let g_pre = activate_backward(&tape.shared_pre[k], &tape.shared_sig[k], &g, n * layer.out_dim, spec);
            let input = if k == 0 { &tape.features } else { &tape.shared_act[k - 1] };
            // The embedding has no trainable parameters, so the first layer
            // needs no input adjoint.
            if let Some(next) = layer.backward(params, input, &g_pre, rows, n, grad, k > 0) {
                g = next;
            }
        }
    }
}
