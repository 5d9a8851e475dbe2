//! Random Fourier-feature input layer with a frequency annealing mask.
//!
//! Coordinates are first mapped affinely onto `[-1, 1]` per axis. The feature
//! vector is `[x~, w_k cos(b_k . x~), w_k sin(b_k . x~)]`, where the rows `b_k`
//! of the frequency matrix are drawn from `N(0, sigma^2)` and ordered by norm.
//! The mask `w_k` opens the bands one after another over `anneal_steps`
//! iterations, lowest frequencies first.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::engine::DerivSpec;
use crate::math;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmbeddingConfig {
    /// Number of random frequencies; zero bypasses the Fourier features.
    pub num_frequencies: usize,
    /// Standard deviation of the frequency entries.
    pub sigma: f64,
    /// Iterations over which the bands are enabled; zero opens every band at once.
    pub anneal_steps: u64,
}

impl EmbeddingConfig {
    /// Raw (normalised) coordinates only.
    pub fn bypass() -> Self {
        EmbeddingConfig {
            num_frequencies: 0,
            sigma: 1.0,
            anneal_steps: 0,
        }
    }

    pub fn feature_dim(&self, input_dim: usize) -> usize {
        input_dim + 2 * self.num_frequencies
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.num_frequencies > 0 && !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::config("embedding sigma must be positive"));
        }
        Ok(())
    }
}

/// Draw an `m x d` Gaussian frequency matrix and sort its rows by norm.
pub(crate) fn sample_frequencies<R: Rng>(cfg: &EmbeddingConfig, input_dim: usize, rng: &mut R) -> Vec<f64> {
    let m = cfg.num_frequencies;
    if m == 0 {
        return Vec::new();
    }
    let normal = Normal::new(0.0, cfg.sigma).expect("sigma validated");
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..input_dim).map(|_| normal.sample(rng)).collect())
        .collect();
    let norm2 = |r: &Vec<f64>| r.iter().map(|v| v * v).sum::<f64>();
    rows.sort_by(|a, b| norm2(a).partial_cmp(&norm2(b)).unwrap_or(core::cmp::Ordering::Equal));
    rows.into_iter().flatten().collect()
}

/// Mask weight of every band at iteration `step`.
pub fn anneal_weights(cfg: &EmbeddingConfig, step: u64) -> Vec<f64> {
    let m = cfg.num_frequencies;
    if cfg.anneal_steps == 0 {
        return alloc::vec![1.0; m];
    }
    let progress = step as f64 * m as f64 / cfg.anneal_steps as f64;
    (0..m).map(|k| (progress - k as f64).clamp(0.0, 1.0)).collect()
}

/// The frozen input map for one evaluation.
pub(crate) struct InputMap<'a> {
    pub center: &'a [f64],
    pub inv_half: &'a [f64],
    pub frequencies: &'a [f64],
    pub weights: Vec<f64>,
}

impl InputMap<'_> {
    pub fn feature_dim(&self) -> usize {
        let d = self.center.len();
        d + 2 * self.weights.len()
    }

    /// Feature jets in channel-major layout `[channel][point][feature]`.
    pub fn features(&self, points: &[f64], spec: &DerivSpec) -> Vec<f64> {
        let d = self.center.len();
        let m = self.weights.len();
        let f_dim = self.feature_dim();
        let n = points.len() / d;
        let k_ch = spec.channels();
        let mut out = alloc::vec![0.0; k_ch * n * f_dim];
        let block = n * f_dim;
        let mut xs = [0.0f64; 3];
        for p in 0..n {
            let x = &points[p * d..(p + 1) * d];
            for q in 0..d {
                xs[q] = (x[q] - self.center[q]) * self.inv_half[q];
                out[p * f_dim + q] = xs[q];
            }
            for (c, &i) in spec.first.iter().enumerate() {
                out[(1 + c) * block + p * f_dim + i] = self.inv_half[i];
            }
            for k in 0..m {
                let w = self.weights[k];
                let b = &self.frequencies[k * d..(k + 1) * d];
                let phase: f64 = (0..d).map(|q| b[q] * xs[q]).sum();
                let (s, co) = math::sin_cos(phase);
                let ic = d + k;
                let is = d + m + k;
                out[p * f_dim + ic] = w * co;
                out[p * f_dim + is] = w * s;
                for (c, &i) in spec.first.iter().enumerate() {
                    let di = b[i] * self.inv_half[i];
                    let base = (1 + c) * block + p * f_dim;
                    out[base + ic] = -w * s * di;
                    out[base + is] = w * co * di;
                }
                let off = 1 + spec.first.len();
                for (c, &(i, j)) in spec.second.iter().enumerate() {
                    let dij = b[i] * self.inv_half[i] * b[j] * self.inv_half[j];
                    let base = (off + c) * block + p * f_dim;
                    out[base + ic] = -w * co * dij;
                    out[base + is] = -w * s * dij;
                }
            }
        }
        out
    }
}
