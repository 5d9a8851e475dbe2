//! Strong-form residuals from exact network derivatives, and boundary /
//! initial condition residuals.
//!
//! Navier-Stokes residuals use the conservative convection form expanded with
//! the product rule, e.g. `d(uu)/dx + d(uv)/dy = 2 u u_x + u v_y + v u_y`.
//! The Boussinesq system uses the advective form.

use crate::network::{DerivSpec, Jets, OutputVar};
use crate::physics::Physics;
use crate::{Error, Result};

/// Slots inside a per-variable derivative array.
pub mod slot {
    pub const VAL: usize = 0;
    pub const DT: usize = 1;
    pub const DX: usize = 2;
    pub const DY: usize = 3;
    pub const DXX: usize = 4;
    pub const DYY: usize = 5;
}

fn var_index(v: OutputVar) -> usize {
    match v {
        OutputVar::U => 0,
        OutputVar::V => 1,
        OutputVar::P => 2,
        OutputVar::T => 3,
    }
}

/// Value and derivatives of `u, v, p, T` at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointFields {
    pub f: [[f64; 6]; 4],
}

impl PointFields {
    pub fn get(&self, v: OutputVar, s: usize) -> f64 {
        self.f[var_index(v)][s]
    }

    pub fn get_mut(&mut self, v: OutputVar, s: usize) -> &mut f64 {
        &mut self.f[var_index(v)][s]
    }
}

/// Where each quantity lives inside a batch of jets.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMap {
    /// Output index per variable `u, v, p, T`.
    pub outputs: [Option<usize>; 4],
    pub x: usize,
    pub y: usize,
    pub t: Option<usize>,
}

impl JetMap {
    pub fn new(outputs: &[OutputVar], input_dim: usize) -> Self {
        let mut map = [None; 4];
        for (k, &o) in outputs.iter().enumerate() {
            map[var_index(o)] = Some(k);
        }
        let (t, x, y) = if input_dim == 3 { (Some(0), 1, 2) } else { (None, 0, 1) };
        JetMap { outputs: map, x, y, t }
    }

    /// Channels the strong-form residuals need.
    pub fn pde_spec(&self) -> DerivSpec {
        DerivSpec::spatial(&[self.x, self.y], self.t, 2).expect("order 2 is supported")
    }

    /// Channels needed by first-derivative boundary conditions.
    pub fn bc_spec(&self) -> DerivSpec {
        DerivSpec::new(alloc::vec![self.x, self.y], alloc::vec![]).expect("distinct inputs")
    }

    fn slots(&self, spec: &DerivSpec) -> [Option<usize>; 6] {
        [
            Some(0),
            self.t.and_then(|t| spec.first_slot(t)),
            spec.first_slot(self.x),
            spec.first_slot(self.y),
            spec.second_slot(self.x, self.x),
            spec.second_slot(self.y, self.y),
        ]
    }

    /// Gather point `k`; channels missing from the jets read as zero.
    pub fn gather(&self, jets: &Jets, k: usize) -> PointFields {
        let slots = self.slots(jets.spec());
        let mut out = PointFields::default();
        for (vi, o) in self.outputs.iter().enumerate() {
            if let Some(o) = *o {
                for (s, c) in slots.iter().enumerate() {
                    if let Some(c) = *c {
                        out.f[vi][s] = jets.channel(c, k, o);
                    }
                }
            }
        }
        out
    }

    /// Add an adjoint on point `k` into adjoint jets.
    pub fn scatter(&self, adj: &PointFields, jets: &mut Jets, k: usize) {
        let slots = self.slots(&jets.spec().clone());
        for (vi, o) in self.outputs.iter().enumerate() {
            if let Some(o) = *o {
                for (s, c) in slots.iter().enumerate() {
                    if let Some(c) = *c {
                        *jets.channel_mut(c, k, o) += adj.f[vi][s];
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AdResidual {
    pub c: f64,
    pub u: f64,
    pub v: f64,
    /// Zero without an energy equation.
    pub t: f64,
}

/// Strong-form residuals; steady fields simply carry zero time derivatives.
pub fn pde_residual(f: &PointFields, physics: &Physics) -> AdResidual {
    use slot::*;
    let [u, v, p, t] = f.f;
    let nu = physics.momentum_diffusivity();
    let lap = |a: &[f64; 6]| a[DXX] + a[DYY];
    match physics.thermal_diffusivity() {
        None => AdResidual {
            c: u[DX] + v[DY],
            u: u[DT] + 2.0 * u[VAL] * u[DX] + v[DY] * u[VAL] + v[VAL] * u[DY] - nu * lap(&u) + p[DX],
            v: v[DT] + u[DX] * v[VAL] + u[VAL] * v[DX] + 2.0 * v[VAL] * v[DY] - nu * lap(&v) + p[DY],
            t: 0.0,
        },
        Some(kappa) => AdResidual {
            c: u[DX] + v[DY],
            u: u[DT] + u[VAL] * u[DX] + v[VAL] * u[DY] + p[DX] - nu * lap(&u),
            v: v[DT] + u[VAL] * v[DX] + v[VAL] * v[DY] + p[DY] - nu * lap(&v) - t[VAL],
            t: t[DT] + u[VAL] * t[DX] + v[VAL] * t[DY] - kappa * lap(&t),
        },
    }
}

/// Adjoint of `w . residual` with respect to the point fields.
pub fn pde_residual_grad(f: &PointFields, physics: &Physics, w: &AdResidual) -> PointFields {
    use slot::*;
    let [u, v, _, t] = f.f;
    let nu = physics.momentum_diffusivity();
    let mut g = PointFields::default();
    let [gu, gv, gp, gt] = &mut g.f;
    // continuity
    gu[DX] += w.c;
    gv[DY] += w.c;
    match physics.thermal_diffusivity() {
        None => {
            let a = w.u;
            gu[DT] += a;
            gu[VAL] += a * (2.0 * u[DX] + v[DY]);
            gu[DX] += a * 2.0 * u[VAL];
            gv[DY] += a * u[VAL];
            gv[VAL] += a * u[DY];
            gu[DY] += a * v[VAL];
            gu[DXX] -= a * nu;
            gu[DYY] -= a * nu;
            gp[DX] += a;
            let b = w.v;
            gv[DT] += b;
            gu[DX] += b * v[VAL];
            gv[VAL] += b * (u[DX] + 2.0 * v[DY]);
            gu[VAL] += b * v[DX];
            gv[DX] += b * u[VAL];
            gv[DY] += b * 2.0 * v[VAL];
            gv[DXX] -= b * nu;
            gv[DYY] -= b * nu;
            gp[DY] += b;
        }
        Some(kappa) => {
            let a = w.u;
            gu[DT] += a;
            gu[VAL] += a * u[DX];
            gu[DX] += a * u[VAL];
            gv[VAL] += a * u[DY];
            gu[DY] += a * v[VAL];
            gp[DX] += a;
            gu[DXX] -= a * nu;
            gu[DYY] -= a * nu;
            let b = w.v;
            gv[DT] += b;
            gu[VAL] += b * v[DX];
            gv[DX] += b * u[VAL];
            gv[VAL] += b * v[DY];
            gv[DY] += b * v[VAL];
            gp[DY] += b;
            gv[DXX] -= b * nu;
            gv[DYY] -= b * nu;
            gt[VAL] -= b;
            let c = w.t;
            gt[DT] += c;
            gu[VAL] += c * t[DX];
            gt[DX] += c * u[VAL];
            gv[VAL] += c * t[DY];
            gt[DY] += c * v[VAL];
            gt[DXX] -= c * kappa;
            gt[DYY] -= c * kappa;
        }
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Axis {
    X,
    Y,
}

/// One boundary condition acting on a boundary point.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum BcSpec {
    /// `var = target` with the target stored on the point.
    Dirichlet { var: OutputVar },
    /// `d var / d axis = 0`.
    NeumannZero { var: OutputVar, axis: Axis },
    /// `u_x / Re - p = 0` and `v_x = 0`.
    OutflowCoupled { re: f64 },
    /// `p = target` at a reference point.
    PressurePin,
}

impl BcSpec {
    /// Number of scalar residuals this condition produces.
    pub fn arity(&self) -> usize {
        match self {
            BcSpec::OutflowCoupled { .. } => 2,
            _ => 1,
        }
    }

    /// Whether derivatives are needed.
    pub fn needs_derivatives(&self) -> bool {
        matches!(self, BcSpec::NeumannZero { .. } | BcSpec::OutflowCoupled { .. })
    }

    pub fn validate(&self, outputs: &[OutputVar]) -> Result<()> {
        let need = |v: OutputVar| {
            if outputs.contains(&v) {
                Ok(())
            } else {
                Err(Error::config("boundary condition refers to a missing output"))
            }
        };
        match *self {
            BcSpec::Dirichlet { var } | BcSpec::NeumannZero { var, .. } => need(var),
            BcSpec::OutflowCoupled { re } if !(re > 0.0) => Err(Error::config("outflow Reynolds number must be positive")),
            BcSpec::OutflowCoupled { .. } => need(OutputVar::U).and(need(OutputVar::V)).and(need(OutputVar::P)),
            BcSpec::PressurePin => need(OutputVar::P),
        }
    }
}

/// Residuals of `bc` at a point; the second entry is zero unless
/// `bc.arity() == 2`.
pub fn bc_residual(f: &PointFields, bc: &BcSpec, target: f64) -> [f64; 2] {
    use slot::*;
    match *bc {
        BcSpec::Dirichlet { var } => [f.get(var, VAL) - target, 0.0],
        BcSpec::PressurePin => [f.get(OutputVar::P, VAL) - target, 0.0],
        BcSpec::NeumannZero { var, axis } => {
            let s = if axis == Axis::X { DX } else { DY };
            [f.get(var, s), 0.0]
        }
        BcSpec::OutflowCoupled { re } => [
            f.get(OutputVar::U, DX) / re - f.get(OutputVar::P, VAL),
            f.get(OutputVar::V, DX),
        ],
    }
}

/// Adjoint of `w[0] r[0] + w[1] r[1]`.
pub fn bc_residual_grad(bc: &BcSpec, w: [f64; 2], g: &mut PointFields) {
    use slot::*;
    match *bc {
        BcSpec::Dirichlet { var } => *g.get_mut(var, VAL) += w[0],
        BcSpec::PressurePin => *g.get_mut(OutputVar::P, VAL) += w[0],
        BcSpec::NeumannZero { var, axis } => {
            let s = if axis == Axis::X { DX } else { DY };
            *g.get_mut(var, s) += w[0];
        }
        BcSpec::OutflowCoupled { re } => {
            *g.get_mut(OutputVar::U, DX) += w[0] / re;
            *g.get_mut(OutputVar::P, VAL) -= w[0];
            *g.get_mut(OutputVar::V, DX) += w[1];
        }
    }
}
