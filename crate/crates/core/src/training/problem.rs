use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::ad_residual::BcSpec;
use crate::fvm::loc;
use crate::geometry::stencil_coordinates;
use crate::math;
use crate::network::OutputVar;
use crate::physics::Physics;
use crate::profile::Profile;
use crate::{Error, Result};

/// One scalar boundary condition at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BcPoint {
    /// `(t, x, y)`; `t` is ignored by steady models.
    pub z: [f64; 3],
    pub spec: BcSpec,
    /// Target of Dirichlet-type conditions; unused otherwise.
    pub target: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IcPoint {
    pub z: [f64; 3],
    pub var: OutputVar,
    pub target: f64,
}

/// Prescribed fields at `t = 0`, used for the `t - dt` samples of the first
/// time layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialFields {
    pub u: Profile,
    pub v: Profile,
    pub t: Profile,
}

/// Everything a training run evaluates, independent of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub physics: Physics,
    /// 2 for steady `(x, y)` models, 3 for `(t, x, y)`.
    pub input_dim: usize,
    pub h: f64,
    pub dt: Option<f64>,
    /// Grid origin. When set, FVM points sit on the grid and stencil samples
    /// shared between neighbouring control volumes are evaluated once.
    pub origin: Option<[f64; 2]>,
    pub fvm: Vec<[f64; 3]>,
    pub ad: Vec<[f64; 3]>,
    pub bc: Vec<BcPoint>,
    pub ic: Vec<IcPoint>,
    pub initial: Option<InitialFields>,
}

impl Problem {
    pub fn is_unsteady(&self) -> bool {
        self.dt.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        if self.input_dim != if self.is_unsteady() { 3 } else { 2 } {
            return Err(Error::config("unsteady problems need (t, x, y) inputs, steady ones (x, y)"));
        }
        if !(self.h > 0.0) {
            return Err(Error::config("grid spacing must be positive"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::config("time step must be positive"));
            }
            let first_layer = self.fvm.iter().any(|z| z[0] - dt < 0.5 * dt);
            if first_layer && self.initial.is_none() {
                return Err(Error::config("first-layer FVM points need initial fields"));
            }
        }
        if self.fvm.is_empty() && self.ad.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let outputs = self.physics.outputs();
        for b in &self.bc {
            b.spec.validate(&outputs)?;
        }
        Ok(())
    }

    /// Network input for `(t, x, y)`.
    pub fn push_input(&self, z: &[f64; 3], out: &mut Vec<f64>) {
        if self.input_dim == 3 {
            out.extend_from_slice(z);
        } else {
            out.extend_from_slice(&z[1..]);
        }
    }
}

/// Where a stencil sample comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Source {
    /// Row of the network evaluation.
    Net(u32),
    /// Row of the prescribed initial values.
    Initial(u32),
}

/// Deduplicated stencil samples of a set of FVM points: nine spatial slots in
/// `loc` order, then five previous-time slots in `loc::PREV` order.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct FvmSamples {
    /// Network inputs of the unique samples, `dim` values each.
    pub coords: Vec<f64>,
    pub dim: usize,
    pub initial: Vec<[f64; 3]>,
    pub slots: Vec<[Source; 14]>,
    pub points: Vec<usize>,
}

impl FvmSamples {
    pub fn n_net(&self) -> usize {
        self.coords.len() / self.dim
    }
}

pub(crate) fn build_samples(problem: &Problem, points: &[usize]) -> FvmSamples {
    let h = problem.h;
    let dt = problem.dt;
    let lattice = problem.origin.filter(|_| {
        points.iter().all(|&i| {
            let z = problem.fvm[i];
            lattice_key(problem, &z, 0.0, 0.0).is_some()
        })
    });
    let mut map: BTreeMap<[i64; 3], u32> = BTreeMap::new();
    let mut out = FvmSamples {
        coords: Vec::new(),
        dim: problem.input_dim,
        initial: Vec::new(),
        slots: Vec::with_capacity(points.len()),
        points: points.to_vec(),
    };
    let initial = problem.initial;
    let mut net = |key: [i64; 3], c: [f64; 3], out: &mut FvmSamples| -> Source {
        let next = map.len() as u32;
        let id = *map.entry(key).or_insert_with(|| {
            let c = if out.dim == 3 { &c[..] } else { &c[1..] };
            out.coords.extend_from_slice(c);
            next
        });
        Source::Net(id)
    };
    for &i in points {
        let z = problem.fvm[i];
        let st = stencil_coordinates(z, h, dt);
        let mut slots = [Source::Net(0); 14];
        for (k, c) in st.spatial.iter().enumerate() {
            let (dx, dy) = loc::OFFSETS[k];
            let key = match lattice {
                Some(_) => lattice_key(problem, &z, dx, dy).expect("checked"),
                None => exact_key(c),
            };
            let c = match lattice {
                Some(o) => canonical(problem, o, key),
                None => *c,
            };
            slots[k] = net(key, c, &mut out);
        }
        if let (Some(prev), Some(dt)) = (st.prev, dt) {
            for (m, c) in prev.iter().enumerate() {
                if c[0] < 0.5 * dt {
                    // first layer: the previous time is the initial state
                    let ic = initial.expect("validated");
                    out.initial.push([ic.u.eval(c[1], c[2]), ic.v.eval(c[1], c[2]), ic.t.eval(c[1], c[2])]);
                    slots[9 + m] = Source::Initial(out.initial.len() as u32 - 1);
                    continue;
                }
                let (dx, dy) = loc::OFFSETS[loc::PREV[m]];
                let key = match lattice {
                    Some(_) => {
                        let mut k = lattice_key(problem, &z, dx, dy).expect("checked");
                        k[0] -= 1;
                        k
                    }
                    None => exact_key(c),
                };
                let c = match lattice {
                    Some(o) => canonical(problem, o, key),
                    None => *c,
                };
                slots[9 + m] = net(key, c, &mut out);
            }
        }
        out.slots.push(slots);
    }
    out
}

fn exact_key(c: &[f64; 3]) -> [i64; 3] {
    [c[0].to_bits() as i64, c[1].to_bits() as i64, c[2].to_bits() as i64]
}

/// Half-spacing lattice index of `z + (dx, dy) h`, if `z` sits on the grid.
fn lattice_key(problem: &Problem, z: &[f64; 3], dx: f64, dy: f64) -> Option<[i64; 3]> {
    let o = problem.origin?;
    let h = problem.h;
    let snap = |v: f64| {
        let r = math::round(v);
        ((v - r).abs() < 1e-6).then_some(r as i64)
    };
    let k = match problem.dt {
        Some(dt) => snap(z[0] / dt)?,
        None => 0,
    };
    let a = snap((z[1] - o[0]) / h)? * 2 + (2.0 * dx) as i64;
    let b = snap((z[2] - o[1]) / h)? * 2 + (2.0 * dy) as i64;
    Some([k, a, b])
}

fn canonical(problem: &Problem, o: [f64; 2], key: [i64; 3]) -> [f64; 3] {
    let t = problem.dt.map_or(0.0, |dt| key[0] as f64 * dt);
    [t, o[0] + key[1] as f64 * 0.5 * problem.h, o[1] + key[2] as f64 * 0.5 * problem.h]
}
