//! Simplified finite-volume residuals on the nine-point control-volume stencil.
//!
//! With `dx = dy = h` the discrete momentum residual reads
//!
//! ```text
//! r_u = (h^2/dt + a_P) u_P + sum a_NB u_NB + sum a_nb u_nb + b_u
//! a_P = 4 nu, a_NB = -nu, a_e = u_e h, a_w = -u_w h, a_n = v_n h, a_s = -v_s h
//! b_u = h (p_e - p_w) - h^2 u_P^{t-dt} / dt
//! ```
//!
//! Steady stencils drop every `dt` term.

use crate::physics::Physics;
use crate::{Error, Result};

/// Positions inside a nine-point sample array.
pub mod loc {
    pub const P: usize = 0;
    pub const E: usize = 1;
    pub const W: usize = 2;
    pub const N: usize = 3;
    pub const S: usize = 4;
    pub const FE: usize = 5;
    pub const FW: usize = 6;
    pub const FN: usize = 7;
    pub const FS: usize = 8;
    /// Offsets `(dx, dy)` in units of `h`, in the order above.
    pub const OFFSETS: [(f64, f64); 9] = [
        (0.0, 0.0),
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (0.5, 0.0),
        (-0.5, 0.0),
        (0.0, 0.5),
        (0.0, -0.5),
    ];
    /// Stencil positions also sampled at `t - dt`, as indices into the
    /// nine-point order; previous-time arrays use this order.
    pub const PREV: [usize; 5] = [P, FE, FW, FN, FS];
}

/// Previous-time array positions.
pub mod prev {
    pub const P: usize = 0;
    pub const E: usize = 1;
    pub const W: usize = 2;
    pub const N: usize = 3;
    pub const S: usize = 4;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    U,
    V,
    P,
    T,
}

/// Field samples around one control volume.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StencilEvaluation {
    pub h: f64,
    /// Time step; `None` for steady problems.
    pub dt: Option<f64>,
    pub u: [f64; 9],
    pub v: [f64; 9],
    pub p: [f64; 9],
    /// Temperature; ignored unless the physics carries an energy equation.
    pub t: [f64; 9],
    pub prev_u: [f64; 5],
    pub prev_v: [f64; 5],
    pub prev_t: [f64; 5],
}

impl StencilEvaluation {
    pub fn steady(h: f64) -> Self {
        StencilEvaluation { h, ..Default::default() }
    }

    pub fn unsteady(h: f64, dt: f64) -> Self {
        StencilEvaluation {
            h,
            dt: Some(dt),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::config("stencil spacing must be positive"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config("time step must be positive"));
            }
        }
        Ok(())
    }

    pub fn field(&self, var: Var) -> &[f64; 9] {
        match var {
            Var::U => &self.u,
            Var::V => &self.v,
            Var::P => &self.p,
            Var::T => &self.t,
        }
    }

    fn prev(&self, var: Var) -> &[f64; 5] {
        match var {
            Var::U => &self.prev_u,
            Var::V => &self.prev_v,
            _ => &self.prev_t,
        }
    }

    /// `h^2 / dt`, zero when steady.
    pub fn time_coefficient(&self) -> f64 {
        self.dt.map_or(0.0, |dt| self.h * self.h / dt)
    }
}

/// Partial derivatives of a scalar with respect to every stencil sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StencilGrad {
    pub u: [f64; 9],
    pub v: [f64; 9],
    pub p: [f64; 9],
    pub t: [f64; 9],
    pub prev_u: [f64; 5],
    pub prev_v: [f64; 5],
    pub prev_t: [f64; 5],
}

impl StencilGrad {
    pub fn field_mut(&mut self, var: Var) -> &mut [f64; 9] {
        match var {
            Var::U => &mut self.u,
            Var::V => &mut self.v,
            Var::P => &mut self.p,
            Var::T => &mut self.t,
        }
    }

    fn prev_mut(&mut self, var: Var) -> &mut [f64; 5] {
        match var {
            Var::U => &mut self.prev_u,
            Var::V => &mut self.prev_v,
            _ => &mut self.prev_t,
        }
    }

    pub fn add_scaled(&mut self, other: &StencilGrad, s: f64) {
        fn axpy<const K: usize>(a: &mut [f64; K], b: &[f64; K], s: f64) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
        axpy(&mut self.u, &other.u, s);
        axpy(&mut self.v, &other.v, s);
        axpy(&mut self.p, &other.p, s);
        axpy(&mut self.t, &other.t, s);
        axpy(&mut self.prev_u, &other.prev_u, s);
        axpy(&mut self.prev_v, &other.prev_v, s);
        axpy(&mut self.prev_t, &other.prev_t, s);
    }
}

/// Coefficients of one transport equation at one control volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilCoefficients {
    pub nu: f64,
    pub a_p: f64,
    /// Shared by E, W, N and S.
    pub a_nb: f64,
    pub a_e: f64,
    pub a_w: f64,
    pub a_n: f64,
    pub a_s: f64,
}

pub fn coefficients(e: &StencilEvaluation, nu: f64) -> StencilCoefficients {
    use loc::*;
    StencilCoefficients {
        nu,
        a_p: 4.0 * nu,
        a_nb: -nu,
        a_e: e.u[FE] * e.h,
        a_w: -e.u[FW] * e.h,
        a_n: e.v[FN] * e.h,
        a_s: -e.v[FS] * e.h,
    }
}

/// `u_e - u_w + v_n - v_s`.
pub fn continuity_residual(e: &StencilEvaluation) -> f64 {
    use loc::*;
    e.u[FE] - e.u[FW] + e.v[FN] - e.v[FS]
}

pub fn continuity_grad(_e: &StencilEvaluation, s: f64, g: &mut StencilGrad) {
    use loc::*;
    g.u[FE] += s;
    g.u[FW] -= s;
    g.v[FN] += s;
    g.v[FS] -= s;
}

/// Generic transport residual of `phi` with diffusivity `nu`, optional
/// pressure gradient along `pressure = (high face, low face)`.
fn transport(e: &StencilEvaluation, phi: Var, nu: f64, pressure: Option<(usize, usize)>) -> f64 {
    use loc::*;
    let f = e.field(phi);
    let h = e.h;
    let conv = h * (e.u[FE] * f[FE] - e.u[FW] * f[FW] + e.v[FN] * f[FN] - e.v[FS] * f[FS]);
    let mut r = (e.time_coefficient() + 4.0 * nu) * f[P] - nu * (f[E] + f[W] + f[N] + f[S]) + conv;
    if let Some((hi, lo)) = pressure {
        r += h * (e.p[hi] - e.p[lo]);
    }
    r - e.time_coefficient() * e.prev(phi)[prev::P]
}

fn transport_grad(e: &StencilEvaluation, phi: Var, nu: f64, pressure: Option<(usize, usize)>, s: f64, g: &mut StencilGrad) {
    use loc::*;
    let h = e.h;
    let tc = e.time_coefficient();
    let f = *e.field(phi);
    {
        let gf = g.field_mut(phi);
        gf[P] += s * (tc + 4.0 * nu);
        for k in [E, W, N, S] {
            gf[k] -= s * nu;
        }
        gf[FE] += s * h * e.u[FE];
        gf[FW] -= s * h * e.u[FW];
        gf[FN] += s * h * e.v[FN];
        gf[FS] -= s * h * e.v[FS];
    }
    g.u[FE] += s * h * f[FE];
    g.u[FW] -= s * h * f[FW];
    g.v[FN] += s * h * f[FN];
    g.v[FS] -= s * h * f[FS];
    if let Some((hi, lo)) = pressure {
        g.p[hi] += s * h;
        g.p[lo] -= s * h;
    }
    g.prev_mut(phi)[prev::P] -= s * tc;
}

/// Velocity component of a momentum equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    U,
    V,
}

impl Component {
    fn var(self) -> Var {
        match self {
            Component::U => Var::U,
            Component::V => Var::V,
        }
    }

    fn pressure_faces(self) -> (usize, usize) {
        match self {
            Component::U => (loc::FE, loc::FW),
            Component::V => (loc::FN, loc::FS),
        }
    }
}

/// Momentum residual with diffusivity `nu`. With `buoyancy` the v-equation
/// carries the source `+T`, which enters the residual as `-T_P h^2`.
pub fn momentum_residual(e: &StencilEvaluation, c: Component, nu: f64, buoyancy: bool) -> f64 {
    let mut r = transport(e, c.var(), nu, Some(c.pressure_faces()));
    if buoyancy && c == Component::V {
        r -= e.t[loc::P] * e.h * e.h;
    }
    r
}

pub fn momentum_grad(e: &StencilEvaluation, c: Component, nu: f64, buoyancy: bool, s: f64, g: &mut StencilGrad) {
    transport_grad(e, c.var(), nu, Some(c.pressure_faces()), s, g);
    if buoyancy && c == Component::V {
        g.t[loc::P] -= s * e.h * e.h;
    }
}

/// Energy residual with diffusivity `kappa`.
pub fn energy_residual(e: &StencilEvaluation, kappa: f64) -> f64 {
    transport(e, Var::T, kappa, None)
}

pub fn energy_grad(e: &StencilEvaluation, kappa: f64, s: f64, g: &mut StencilGrad) {
    transport_grad(e, Var::T, kappa, None, s, g);
}

/// Pressure and time-stepping part of a momentum equation:
/// `h (p_e - p_w) - h^2 u_P^{t-dt} / dt` for u.
pub fn b_source(e: &StencilEvaluation, c: Component) -> f64 {
    let (hi, lo) = c.pressure_faces();
    e.h * (e.p[hi] - e.p[lo]) - e.time_coefficient() * e.prev(c.var())[prev::P]
}

pub fn b_source_grad(e: &StencilEvaluation, c: Component, s: f64, g: &mut StencilGrad) {
    let (hi, lo) = c.pressure_faces();
    g.p[hi] += s * e.h;
    g.p[lo] -= s * e.h;
    g.prev_mut(c.var())[prev::P] -= s * e.time_coefficient();
}

/// Time-stepping part of the energy equation, `-h^2 T_P^{t-dt} / dt`.
pub fn b_source_energy(e: &StencilEvaluation) -> f64 {
    -e.time_coefficient() * e.prev_t[prev::P]
}

pub fn b_source_energy_grad(e: &StencilEvaluation, s: f64, g: &mut StencilGrad) {
    g.prev_t[prev::P] -= s * e.time_coefficient();
}

/// Divergence of the previous-time face velocities times `h^2 / dt`.
pub fn div_prev_time(e: &StencilEvaluation) -> f64 {
    use prev::*;
    let d = e.prev_u[E] - e.prev_u[W] + e.prev_v[N] - e.prev_v[S];
    d * e.time_coefficient()
}

pub fn div_prev_time_grad(e: &StencilEvaluation, s: f64, g: &mut StencilGrad) {
    use prev::*;
    let tc = s * e.time_coefficient();
    g.prev_u[E] += tc;
    g.prev_u[W] -= tc;
    g.prev_v[N] += tc;
    g.prev_v[S] -= tc;
}

/// All discrete residuals at one control volume.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FvmResiduals {
    pub c: f64,
    pub u: f64,
    pub v: f64,
    /// Zero without an energy equation.
    pub t: f64,
}

pub fn residuals(e: &StencilEvaluation, physics: &Physics) -> FvmResiduals {
    let nu = physics.momentum_diffusivity();
    let buoy = physics.has_temperature();
    FvmResiduals {
        c: continuity_residual(e),
        u: momentum_residual(e, Component::U, nu, buoy),
        v: momentum_residual(e, Component::V, nu, buoy),
        t: physics.thermal_diffusivity().map_or(0.0, |k| energy_residual(e, k)),
    }
}

/// Residuals of a batch of stencils, in order.
pub fn batch_residuals(stencils: &[StencilEvaluation], physics: &Physics) -> alloc::vec::Vec<FvmResiduals> {
    stencils.iter().map(|e| residuals(e, physics)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn couette(h: f64) -> StencilEvaluation {
        let mut e = StencilEvaluation::steady(h);
        let y0 = 0.37;
        for (k, &(_, dy)) in loc::OFFSETS.iter().enumerate() {
            e.u[k] = y0 + dy * h;
            e.p[k] = 2.0;
        }
        e
    }

    #[test]
    fn couette_momentum_vanishes() {
        for h in [0.1, 0.013] {
            let e = couette(h);
            for nu in [1.0, 0.01] {
                assert!(momentum_residual(&e, Component::U, nu, false).abs() < 1e-15);
                assert!(momentum_residual(&e, Component::V, nu, false).abs() < 1e-15);
            }
            assert_eq!(continuity_residual(&e), 0.0);
        }
    }

    #[test]
    fn linear_temperature_energy_vanishes() {
        let mut e = StencilEvaluation::steady(0.05);
        for (k, &(_, dy)) in loc::OFFSETS.iter().enumerate() {
            e.t[k] = 1.0 + dy * 0.05;
        }
        assert!(energy_residual(&e, 0.3).abs() < 1e-15);
    }

    #[test]
    fn b_source_examples() {
        let mut e = StencilEvaluation::steady(0.1);
        e.p[loc::FE] = 1.0;
        assert!((b_source(&e, Component::U) - 0.1).abs() < 1e-16);
        let mut e = StencilEvaluation::unsteady(0.1, 0.5);
        e.prev_u[prev::P] = 2.0;
        e.p[loc::FE] = 0.3;
        assert!((b_source(&e, Component::U) - (0.3 * 0.1 - 0.04)).abs() < 1e-15);
    }

    #[test]
    fn div_prev_example() {
        let mut e = StencilEvaluation::unsteady(0.1, 0.05);
        e.prev_u[prev::E] = 0.1;
        assert!((div_prev_time(&e) - 0.02).abs() < 1e-15);
        assert_eq!(div_prev_time(&StencilEvaluation::steady(0.1)), 0.0);
    }

    #[test]
    fn coefficient_identities() {
        let mut e = StencilEvaluation::steady(0.2);
        e.u[loc::FE] = 0.3;
        e.u[loc::FW] = -0.1;
        e.v[loc::FN] = 0.7;
        e.v[loc::FS] = 0.25;
        let c = coefficients(&e, 0.01);
        assert_eq!(c.a_p, 4.0 * 0.01);
        assert_eq!(c.a_nb, -0.01);
        let sum = c.a_e + c.a_w + c.a_n + c.a_s;
        assert!((sum - e.h * continuity_residual(&e)).abs() < 1e-15);
    }

    #[test]
    fn bad_time_step_rejected() {
        assert!(StencilEvaluation::unsteady(0.1, 0.0).validate().is_err());
        assert!(StencilEvaluation::steady(-1.0).validate().is_err());
        assert!(StencilEvaluation::unsteady(0.1, 0.1).validate().is_ok());
    }
}
