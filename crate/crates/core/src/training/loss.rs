use alloc::vec;
use alloc::vec::Vec;

use super::problem::{build_samples, FvmSamples, Problem, Source};
use crate::ad_residual::{self, AdResidual, JetMap, PointFields};
use crate::correction::{self, CorrectionCoefficients, CorrectionTerms, IterateTerms, Relaxation};
use crate::fvm::{self, Component, StencilEvaluation, StencilGrad};
use crate::network::{DerivSpec, Jets, NetworkModel, OutputVar};
use crate::{Error, Result};

/// Weights of the loss components.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossWeights {
    pub fvm_c: f64,
    pub fvm_m: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub fvm_e: f64,
    pub ad_c: f64,
    pub ad_m: f64,
    pub rc: f64,
    pub bc: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub ic: f64,
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.fvm_c, self.fvm_m, self.fvm_e, self.ad_c, self.ad_m, self.rc, self.bc, self.ic];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config("loss weights must be finite and non-negative"));
        }
        if [self.fvm_c, self.fvm_m, self.fvm_e, self.ad_c, self.ad_m].iter().all(|&w| w == 0.0) {
            return Err(Error::config("at least one PDE loss weight must be positive"));
        }
        Ok(())
    }
}

/// Unweighted loss components and the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub fvm_c: f64,
    pub fvm_u: f64,
    pub fvm_v: f64,
    pub fvm_t: f64,
    pub ad_c: f64,
    pub ad_u: f64,
    pub ad_v: f64,
    pub ad_t: f64,
    pub rc_p: f64,
    pub rc_u: f64,
    pub rc_v: f64,
    pub rc_t: f64,
    pub bc: f64,
    pub ic: f64,
    pub total: f64,
    /// Whether the correction terms were part of the loss.
    pub rc_active: bool,
    pub thermal: bool,
}

impl LossBreakdown {
    /// Sum of the mean squared FVM residuals.
    pub fn fvm_residual(&self) -> f64 {
        self.fvm_c + self.fvm_u + self.fvm_v + self.fvm_t
    }

    /// Weighted total of the components.
    pub fn weighted(&self, w: &LossWeights) -> f64 {
        let mut t = w.fvm_c * self.fvm_c + w.fvm_m * (self.fvm_u + self.fvm_v) + w.fvm_e * self.fvm_t;
        t += w.ad_c * self.ad_c + w.ad_m * (self.ad_u + self.ad_v + self.ad_t);
        if self.rc_active {
            t += w.rc * (self.rc_p + self.rc_u + self.rc_v + self.rc_t);
        }
        t + w.bc * self.bc + w.ic * self.ic
    }

    /// Named components present in this run, in a fixed order.
    pub fn components(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("fvm_c", self.fvm_c),
            ("fvm_u", self.fvm_u),
            ("fvm_v", self.fvm_v),
        ];
        if self.thermal {
            out.push(("fvm_t", self.fvm_t));
        }
        out.extend([("ad_c", self.ad_c), ("ad_u", self.ad_u), ("ad_v", self.ad_v)]);
        if self.thermal {
            out.push(("ad_t", self.ad_t));
        }
        if self.rc_active {
            out.extend([("rc_p", self.rc_p), ("rc_u", self.rc_u), ("rc_v", self.rc_v)]);
            if self.thermal {
                out.push(("rc_t", self.rc_t));
            }
        }
        out.extend([("bc", self.bc), ("ic", self.ic)]);
        out
    }
}

/// Indices into the point sets of a [`Problem`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Batch {
    pub fvm: Vec<usize>,
    pub ad: Vec<usize>,
    pub bc: Vec<usize>,
    pub ic: Vec<usize>,
}

impl Batch {
    pub fn full(problem: &Problem) -> Self {
        Batch {
            fvm: (0..problem.fvm.len()).collect(),
            ad: (0..problem.ad.len()).collect(),
            bc: (0..problem.bc.len()).collect(),
            ic: (0..problem.ic.len()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSettings {
    pub weights: LossWeights,
    pub relaxation: Relaxation,
}

/// Source of the previous-iterate (`n-1`) values.
#[derive(Clone, Copy, Debug)]
pub enum Snapshot<'a> {
    /// The snapshot equals the current parameters.
    Current,
    Model(&'a NetworkModel),
    /// Snapshot outputs at the FVM samples, `[sample][output]`.
    Values(&'a [f64]),
}

pub(crate) struct Evaluation {
    pub loss: LossBreakdown,
    pub grad: Option<Vec<f64>>,
    /// Current outputs at the FVM samples, `[sample][output]`.
    pub fvm_values: Vec<f64>,
}

/// Loss of `model` on `batch`.
pub fn total_loss(model: &NetworkModel, snapshot: Snapshot<'_>, problem: &Problem, batch: &Batch, settings: &LossSettings) -> Result<LossBreakdown> {
    let samples = build_samples(problem, &batch.fvm);
    Ok(evaluate(model, snapshot, problem, &samples, batch, settings, false)?.loss)
}

/// Loss and its gradient with respect to the parameters of `model`.
pub fn total_loss_and_grad(
    model: &NetworkModel,
    snapshot: Snapshot<'_>,
    problem: &Problem,
    batch: &Batch,
    settings: &LossSettings,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let samples = build_samples(problem, &batch.fvm);
    let e = evaluate(model, snapshot, problem, &samples, batch, settings, true)?;
    Ok((e.loss, e.grad.expect("gradient requested")))
}

struct Outputs {
    n: usize,
    u: usize,
    v: usize,
    p: usize,
    t: Option<usize>,
}

impl Outputs {
    fn of(model: &NetworkModel) -> Result<Self> {
        let need = |v| model.output_index(v).ok_or_else(|| Error::config("network lacks a flow output"));
        Ok(Outputs {
            n: model.outputs().len(),
            u: need(OutputVar::U)?,
            v: need(OutputVar::V)?,
            p: need(OutputVar::P)?,
            t: model.output_index(OutputVar::T),
        })
    }
}

fn stencil(problem: &Problem, samples: &FvmSamples, slots: &[Source; 14], vals: &[f64], o: &Outputs) -> StencilEvaluation {
    let mut e = StencilEvaluation {
        h: problem.h,
        dt: problem.dt,
        ..Default::default()
    };
    for (k, s) in slots[..9].iter().enumerate() {
        let Source::Net(id) = *s else { unreachable!("spatial samples come from the network") };
        let row = &vals[id as usize * o.n..][..o.n];
        e.u[k] = row[o.u];
        e.v[k] = row[o.v];
        e.p[k] = row[o.p];
        if let Some(t) = o.t {
            e.t[k] = row[t];
        }
    }
    if problem.dt.is_some() {
        for (m, s) in slots[9..].iter().enumerate() {
            let (u, v, t) = match *s {
                Source::Net(id) => {
                    let row = &vals[id as usize * o.n..][..o.n];
                    (row[o.u], row[o.v], o.t.map_or(0.0, |t| row[t]))
                }
                Source::Initial(id) => {
                    let r = samples.initial[id as usize];
                    (r[0], r[1], r[2])
                }
            };
            e.prev_u[m] = u;
            e.prev_v[m] = v;
            e.prev_t[m] = t;
        }
    }
    e
}

fn scatter_stencil(g: &StencilGrad, slots: &[Source; 14], adj: &mut [f64], o: &Outputs, unsteady: bool) {
    for (k, s) in slots[..9].iter().enumerate() {
        if let Source::Net(id) = *s {
            let row = &mut adj[id as usize * o.n..][..o.n];
            row[o.u] += g.u[k];
            row[o.v] += g.v[k];
            row[o.p] += g.p[k];
            if let Some(t) = o.t {
                row[t] += g.t[k];
            }
        }
    }
    if unsteady {
        for (m, s) in slots[9..].iter().enumerate() {
            if let Source::Net(id) = *s {
                let row = &mut adj[id as usize * o.n..][..o.n];
                row[o.u] += g.prev_u[m];
                row[o.v] += g.prev_v[m];
                if let Some(t) = o.t {
                    row[t] += g.prev_t[m];
                }
            }
        }
    }
}

fn finite(x: f64, name: &str, point: usize) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::non_finite(name, Some(point)))
    }
}

pub(crate) fn evaluate(
    model: &NetworkModel,
    snapshot: Snapshot<'_>,
    problem: &Problem,
    samples: &FvmSamples,
    batch: &Batch,
    settings: &LossSettings,
    want_grad: bool,
) -> Result<Evaluation> {
    let o = Outputs::of(model)?;
    let physics = problem.physics;
    let w = &settings.weights;
    let thermal = physics.has_temperature();
    let nu = physics.momentum_diffusivity();
    let mut loss = LossBreakdown {
        thermal,
        rc_active: w.rc > 0.0 && !batch.fvm.is_empty(),
        ..Default::default()
    };
    let mut grad = want_grad.then(|| vec![0.0; model.parameter_count()]);
    let mut fvm_values = Vec::new();

    if !batch.fvm.is_empty() {
        let n_pts = batch.fvm.len();
        let nf = n_pts as f64;
        let (jets, tape) = run(model, &samples.coords, &DerivSpec::values(), want_grad)?;
        let vals = &jets.data()[..samples.n_net() * o.n];
        let stencils: Vec<StencilEvaluation> = samples.slots.iter().map(|s| stencil(problem, samples, s, vals, &o)).collect();
        let mut grads = vec![StencilGrad::default(); if want_grad { n_pts } else { 0 }];
        for (j, e) in stencils.iter().enumerate() {
            let r = fvm::residuals(e, &physics);
            let id = batch.fvm[j];
            loss.fvm_c += sq(finite(r.c, "fvm_c", id)?) / nf;
            loss.fvm_u += sq(finite(r.u, "fvm_u", id)?) / nf;
            loss.fvm_v += sq(finite(r.v, "fvm_v", id)?) / nf;
            loss.fvm_t += sq(finite(r.t, "fvm_t", id)?) / nf;
            if want_grad {
                let g = &mut grads[j];
                fvm::continuity_grad(e, 2.0 * w.fvm_c * r.c / nf, g);
                fvm::momentum_grad(e, Component::U, nu, thermal, 2.0 * w.fvm_m * r.u / nf, g);
                fvm::momentum_grad(e, Component::V, nu, thermal, 2.0 * w.fvm_m * r.v / nf, g);
                if let Some(kappa) = physics.thermal_diffusivity() {
                    fvm::energy_grad(e, kappa, 2.0 * w.fvm_e * r.t / nf, g);
                }
            }
        }
        if loss.rc_active {
            let snap_vals: Vec<f64>;
            let snap_vals: &[f64] = match snapshot {
                Snapshot::Current => vals,
                Snapshot::Values(v) => {
                    if v.len() != vals.len() {
                        return Err(Error::LengthMismatch {
                            expected: vals.len(),
                            got: v.len(),
                        });
                    }
                    v
                }
                Snapshot::Model(m) => {
                    snap_vals = m.evaluate(&samples.coords, &DerivSpec::values())?.data()[..vals.len()].to_vec();
                    &snap_vals
                }
            };
            let coeffs = CorrectionCoefficients::new(problem.h, problem.dt, &physics)?;
            let cur: Vec<IterateTerms> = stencils.iter().map(|e| IterateTerms::from_stencil(e, &physics)).collect();
            let prev: Vec<IterateTerms> = samples
                .slots
                .iter()
                .map(|s| IterateTerms::from_stencil(&stencil(problem, samples, s, snap_vals, &o), &physics))
                .collect();
            let rc = correction::rc_losses(&cur, &prev, &coeffs, &settings.relaxation)?;
            loss.rc_p = finite(rc.p, "rc_p", batch.fvm[0])?;
            loss.rc_u = finite(rc.u, "rc_u", batch.fvm[0])?;
            loss.rc_v = finite(rc.v, "rc_v", batch.fvm[0])?;
            loss.rc_t = if thermal { finite(rc.t, "rc_t", batch.fvm[0])? } else { 0.0 };
            if want_grad {
                let wt = CorrectionTerms {
                    p: w.rc,
                    u: w.rc,
                    v: w.rc,
                    t: if thermal { w.rc } else { 0.0 },
                };
                let adj = correction::rc_adjoints(&cur, &prev, &coeffs, &settings.relaxation, &wt);
                for (j, a) in adj.iter().enumerate() {
                    IterateTerms::backprop(&stencils[j], &physics, a, &mut grads[j]);
                }
            }
        }
        if let (Some(grad), Some(tape)) = (grad.as_mut(), tape) {
            let mut adj = jets.zeros_like();
            {
                let data = &mut adj.data_mut()[..samples.n_net() * o.n];
                for (j, g) in grads.iter().enumerate() {
                    scatter_stencil(g, &samples.slots[j], data, &o, problem.dt.is_some());
                }
            }
            model.backward(&tape, &adj, grad)?;
        }
        fvm_values = vals.to_vec();
    }

    let map = JetMap::new(model.outputs(), model.config().input_dim);
    if !batch.ad.is_empty() {
        let nf = batch.ad.len() as f64;
        let coords = inputs(problem, batch.ad.iter().map(|&i| &problem.ad[i]));
        let (jets, tape) = run(model, &coords, &map.pde_spec(), want_grad)?;
        let mut adj = want_grad.then(|| jets.zeros_like());
        for (j, &id) in batch.ad.iter().enumerate() {
            let f = map.gather(&jets, j);
            let r = ad_residual::pde_residual(&f, &physics);
            loss.ad_c += sq(finite(r.c, "ad_c", id)?) / nf;
            loss.ad_u += sq(finite(r.u, "ad_u", id)?) / nf;
            loss.ad_v += sq(finite(r.v, "ad_v", id)?) / nf;
            loss.ad_t += sq(finite(r.t, "ad_t", id)?) / nf;
            if let Some(adj) = adj.as_mut() {
                let s = 2.0 / nf;
                let wr = AdResidual {
                    c: s * w.ad_c * r.c,
                    u: s * w.ad_m * r.u,
                    v: s * w.ad_m * r.v,
                    t: s * w.ad_m * r.t,
                };
                let g = ad_residual::pde_residual_grad(&f, &physics, &wr);
                map.scatter(&g, adj, j);
            }
        }
        backward(model, tape, adj, grad.as_mut())?;
    }

    if !batch.bc.is_empty() {
        let count: usize = batch.bc.iter().map(|&i| problem.bc[i].spec.arity()).sum();
        let mf = count as f64;
        for deriv in [false, true] {
            let ids: Vec<usize> = batch
                .bc
                .iter()
                .copied()
                .filter(|&i| problem.bc[i].spec.needs_derivatives() == deriv)
                .collect();
            if ids.is_empty() {
                continue;
            }
            let spec = if deriv { map.bc_spec() } else { DerivSpec::values() };
            let coords = inputs(problem, ids.iter().map(|&i| &problem.bc[i].z));
            let (jets, tape) = run(model, &coords, &spec, want_grad)?;
            let mut adj = want_grad.then(|| jets.zeros_like());
            for (j, &id) in ids.iter().enumerate() {
                let b = &problem.bc[id];
                let f = map.gather(&jets, j);
                let r = ad_residual::bc_residual(&f, &b.spec, b.target);
                loss.bc += (sq(finite(r[0], "bc", id)?) + sq(finite(r[1], "bc", id)?)) / mf;
                if let Some(adj) = adj.as_mut() {
                    let mut g = PointFields::default();
                    let s = 2.0 * w.bc / mf;
                    ad_residual::bc_residual_grad(&b.spec, [s * r[0], s * r[1]], &mut g);
                    map.scatter(&g, adj, j);
                }
            }
            backward(model, tape, adj, grad.as_mut())?;
        }
    }

    if !batch.ic.is_empty() {
        let nf = batch.ic.len() as f64;
        let coords = inputs(problem, batch.ic.iter().map(|&i| &problem.ic[i].z));
        let (jets, tape) = run(model, &coords, &DerivSpec::values(), want_grad)?;
        let mut adj = want_grad.then(|| jets.zeros_like());
        for (j, &id) in batch.ic.iter().enumerate() {
            let c = &problem.ic[id];
            let k = model
                .output_index(c.var)
                .ok_or_else(|| Error::config("initial condition on a missing output"))?;
            let r = finite(jets.value(j, k) - c.target, "ic", id)?;
            loss.ic += r * r / nf;
            if let Some(adj) = adj.as_mut() {
                *adj.value_mut(j, k) += 2.0 * w.ic * r / nf;
            }
        }
        backward(model, tape, adj, grad.as_mut())?;
    }

    loss.total = loss.weighted(w);
    if !loss.total.is_finite() {
        return Err(Error::non_finite("total", None));
    }
    if let Some(g) = &grad {
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::non_finite("gradient", None));
        }
    }
    Ok(Evaluation { loss, grad, fvm_values })
}

fn sq(x: f64) -> f64 {
    x * x
}

fn inputs<'a>(problem: &Problem, zs: impl Iterator<Item = &'a [f64; 3]>) -> Vec<f64> {
    let mut out = Vec::new();
    for z in zs {
        problem.push_input(z, &mut out);
    }
    out
}

fn run(model: &NetworkModel, coords: &[f64], spec: &DerivSpec, tape: bool) -> Result<(Jets, Option<crate::network::Tape>)> {
    if tape {
        let (j, t) = model.evaluate_with_tape(coords, spec)?;
        Ok((j, Some(t)))
    } else {
        Ok((model.evaluate(coords, spec)?, None))
    }
}

fn backward(model: &NetworkModel, tape: Option<crate::network::Tape>, adj: Option<Jets>, grad: Option<&mut Vec<f64>>) -> Result<()> {
    if let (Some(t), Some(a), Some(g)) = (tape, adj, grad) {
        model.backward(&t, &a, g)?;
    }
    Ok(())
}
