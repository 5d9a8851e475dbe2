use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{evaluate, Batch, LossBreakdown, LossSettings, LossWeights, Snapshot};
use super::optimizer::{Adam, Schedule};
use super::problem::{build_samples, FvmSamples, Problem};
use crate::correction::Relaxation;
use crate::network::NetworkModel;
use crate::{Error, Result};

/// How points are drawn each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum BatchMode {
    Full,
    /// Per-set batch sizes; zero (or at least the set size) takes the whole set.
    Mini { fvm: usize, ad: usize, bc: usize, ic: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub schedule: Schedule,
    pub weights: LossWeights,
    /// Relaxation factor shared by all correction terms.
    pub alpha: f64,
    pub batch: BatchMode,
    /// Seed of the batch sampler.
    pub seed: u64,
    /// Steps between snapshot refreshes; 1 refreshes every step.
    pub snapshot_every: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.weights.validate()?;
        Relaxation::uniform(self.alpha).validate()?;
        if self.snapshot_every == 0 {
            return Err(Error::config("snapshot cadence must be at least 1"));
        }
        Ok(())
    }

    fn settings(&self) -> LossSettings {
        LossSettings {
            weights: self.weights,
            relaxation: Relaxation::uniform(self.alpha),
        }
    }
}

/// Frozen parameters of an earlier step.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationSnapshot {
    pub model: NetworkModel,
    /// Step whose pre-update parameters are held.
    pub iteration: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub lr: f64,
    pub loss: LossBreakdown,
}

pub struct Trainer {
    model: NetworkModel,
    snapshot: IterationSnapshot,
    adam: Adam,
    step: u64,
    config: TrainConfig,
    problem: Problem,
    rng: ChaCha8Rng,
    full: Option<(Batch, FvmSamples)>,
    /// Current FVM sample outputs of a full-batch step, keyed by step.
    cache: Option<(u64, Vec<f64>)>,
}

impl Trainer {
    pub fn new(model: NetworkModel, problem: Problem, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        problem.validate()?;
        if model.config().input_dim != problem.input_dim {
            return Err(Error::DimensionMismatch {
                expected: problem.input_dim,
                got: model.config().input_dim,
            });
        }
        let full = (config.batch == BatchMode::Full).then(|| {
            let b = Batch::full(&problem);
            let s = build_samples(&problem, &b.fvm);
            (b, s)
        });
        Ok(Trainer {
            snapshot: IterationSnapshot {
                model: model.clone(),
                iteration: 0,
            },
            adam: Adam::new(model.parameter_count()),
            model,
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            problem,
            full,
            cache: None,
        })
    }

    pub fn model(&self) -> &NetworkModel {
        &self.model
    }

    pub fn into_model(self) -> NetworkModel {
        self.model
    }

    pub fn snapshot(&self) -> &IterationSnapshot {
        &self.snapshot
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn optimizer(&self) -> &Adam {
        &self.adam
    }

    /// Steps taken so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    fn draw(&mut self) -> Batch {
        let BatchMode::Mini { fvm, ad, bc, ic } = self.config.batch else {
            unreachable!("full batches are prebuilt")
        };
        let p = &self.problem;
        let mut pick = |len: usize, size: usize| -> Vec<usize> {
            if size == 0 || size >= len {
                return (0..len).collect();
            }
            let mut v = rand::seq::index::sample(&mut self.rng, len, size).into_vec();
            v.sort_unstable();
            v
        };
        Batch {
            fvm: pick(p.fvm.len(), fvm),
            ad: pick(p.ad.len(), ad),
            bc: pick(p.bc.len(), bc),
            ic: pick(p.ic.len(), ic),
        }
    }

    /// One optimizer step. On error the parameters are left untouched.
    pub fn step(&mut self) -> Result<StepRecord> {
        let k = self.step;
        self.model.set_anneal_step(k);
        let settings = self.config.settings();
        let drawn;
        let (batch, samples) = match &self.full {
            Some((b, s)) => (b, s),
            None => {
                let b = self.draw();
                let s = build_samples(&self.problem, &b.fvm);
                drawn = (b, s);
                (&drawn.0, &drawn.1)
            }
        };
        let snapshot = if k == 0 {
            Snapshot::Current
        } else {
            match &self.cache {
                Some((step, v)) if *step == self.snapshot.iteration && self.full.is_some() => Snapshot::Values(v),
                _ => Snapshot::Model(&self.snapshot.model),
            }
        };
        let eval = evaluate(&self.model, snapshot, &self.problem, samples, batch, &settings, true)?;
        let grad = eval.grad.expect("gradient requested");
        if (k + 1) % self.config.snapshot_every == 0 {
            self.snapshot = IterationSnapshot {
                model: self.model.clone(),
                iteration: k,
            };
        }
        if self.full.is_some() {
            self.cache = Some((k, eval.fvm_values));
        }
        let lr = self.config.schedule.lr(k);
        self.adam.update(self.model.params_mut(), &grad, lr);
        self.step += 1;
        Ok(StepRecord { step: k, lr, loss: eval.loss })
    }

    /// Step until `schedule.max_steps`, calling `observe` after every step.
    pub fn run<F: FnMut(&StepRecord, &NetworkModel)>(&mut self, mut observe: F) -> Result<()> {
        while self.step < self.config.schedule.max_steps {
            let r = self.step()?;
            observe(&r, &self.model);
        }
        Ok(())
    }

    /// Loss of the current model on the full problem, without a gradient.
    pub fn full_loss(&self) -> Result<LossBreakdown> {
        let b = Batch::full(&self.problem);
        let s = build_samples(&self.problem, &b.fvm);
        Ok(evaluate(&self.model, Snapshot::Model(&self.snapshot.model), &self.problem, &s, &b, &self.config.settings(), false)?.loss)
    }
}
