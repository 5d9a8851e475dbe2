use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;
use crate::{Error, Result};

/// Linear warmup to `init_lr`, then half-cosine decay to zero at `max_steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedule {
    pub init_lr: f64,
    pub warmup_steps: u64,
    pub max_steps: u64,
}

impl Schedule {
    /// Warmup over the first 5% of the steps.
    pub fn with_default_warmup(init_lr: f64, max_steps: u64) -> Self {
        Schedule {
            init_lr,
            warmup_steps: max_steps / 20,
            max_steps,
        }
    }

    pub fn lr(&self, step: u64) -> f64 {
        if step < self.warmup_steps {
            return self.init_lr * step as f64 / self.warmup_steps as f64;
        }
        if step >= self.max_steps {
            return 0.0;
        }
        let frac = (step - self.warmup_steps) as f64 / (self.max_steps - self.warmup_steps) as f64;
        self.init_lr * 0.5 * (1.0 + math::cos(PI * frac))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.init_lr > 0.0 && self.init_lr.is_finite()) {
            return Err(Error::config("initial learning rate must be positive"));
        }
        if self.max_steps == 0 || self.warmup_steps >= self.max_steps {
            return Err(Error::config("warmup must be shorter than the run"));
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    /// `beta1^t` and `beta2^t`.
    b1t: f64,
    b2t: f64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            b1t: 1.0,
            b2t: 1.0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        self.b1t *= self.beta1;
        self.b2t *= self.beta2;
        let c1 = 1.0 - self.b1t;
        let c2 = 1.0 - self.b2t;
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / (math::sqrt(*v / c2) + self.eps);
        }
    }
}
