//! SIMPLE-style correction terms and the residual-correction (RC) losses.
//!
//! With iterates `n` (current parameters) and `n-1` (snapshot):
//!
//! ```text
//! R_p = [a r_c^n - DIV_P^n - h (sum p_NB^n - sum p_NB^{n-1})] / (-4h)
//! R_u = -[a_NB sum (u_NB^n - u_NB^{n-1}) + (b_u^n - b_u^{n-1}) + r_u^n] / a
//! RC_u = mean |u_P^n - u_P^{n-1} - alpha R_u|
//! ```
//!
//! with `a = h^2/dt + a_P`. Extrapolating the `n+1` iterate as
//! `2 phi^n - phi^{n-1}` is already folded into these expressions.

use alloc::vec::Vec;

use crate::fvm::{self, loc, Component, StencilEvaluation, StencilGrad};
use crate::physics::Physics;
use crate::{Error, Result};

/// Second-order extrapolation of the next iterate.
pub fn extrapolate_next(value_n: f64, value_prev: f64) -> f64 {
    2.0 * value_n - value_prev
}

/// Per-iterate quantities entering the correction terms at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IterateTerms {
    pub u_p: f64,
    pub v_p: f64,
    pub p_p: f64,
    pub t_p: f64,
    /// Sums over the four neighbours E, W, N, S.
    pub nb_u: f64,
    pub nb_v: f64,
    pub nb_p: f64,
    pub nb_t: f64,
    pub b_u: f64,
    pub b_v: f64,
    pub b_t: f64,
    pub r_c: f64,
    pub r_u: f64,
    pub r_v: f64,
    pub r_t: f64,
    pub div: f64,
}

fn nb_sum(f: &[f64; 9]) -> f64 {
    f[loc::E] + f[loc::W] + f[loc::N] + f[loc::S]
}

impl IterateTerms {
    pub fn from_stencil(e: &StencilEvaluation, physics: &Physics) -> Self {
        let r = fvm::residuals(e, physics);
        let thermal = physics.has_temperature();
        IterateTerms {
            u_p: e.u[loc::P],
            v_p: e.v[loc::P],
            p_p: e.p[loc::P],
            t_p: if thermal { e.t[loc::P] } else { 0.0 },
            nb_u: nb_sum(&e.u),
            nb_v: nb_sum(&e.v),
            nb_p: nb_sum(&e.p),
            nb_t: if thermal { nb_sum(&e.t) } else { 0.0 },
            b_u: fvm::b_source(e, Component::U),
            b_v: fvm::b_source(e, Component::V),
            b_t: if thermal { fvm::b_source_energy(e) } else { 0.0 },
            r_c: r.c,
            r_u: r.u,
            r_v: r.v,
            r_t: r.t,
            div: fvm::div_prev_time(e),
        }
    }

    /// Chain an adjoint on these terms back to the stencil samples.
    pub fn backprop(e: &StencilEvaluation, physics: &Physics, adj: &IterateTerms, g: &mut StencilGrad) {
        let nu = physics.momentum_diffusivity();
        let thermal = physics.has_temperature();
        g.u[loc::P] += adj.u_p;
        g.v[loc::P] += adj.v_p;
        g.p[loc::P] += adj.p_p;
        for k in [loc::E, loc::W, loc::N, loc::S] {
            g.u[k] += adj.nb_u;
            g.v[k] += adj.nb_v;
            g.p[k] += adj.nb_p;
        }
        fvm::b_source_grad(e, Component::U, adj.b_u, g);
        fvm::b_source_grad(e, Component::V, adj.b_v, g);
        fvm::continuity_grad(e, adj.r_c, g);
        fvm::momentum_grad(e, Component::U, nu, thermal, adj.r_u, g);
        fvm::momentum_grad(e, Component::V, nu, thermal, adj.r_v, g);
        fvm::div_prev_time_grad(e, adj.div, g);
        if thermal {
            g.t[loc::P] += adj.t_p;
            for k in [loc::E, loc::W, loc::N, loc::S] {
                g.t[k] += adj.nb_t;
            }
            fvm::b_source_energy_grad(e, adj.b_t, g);
            fvm::energy_grad(e, physics.thermal_diffusivity().unwrap_or(0.0), adj.r_t, g);
        }
    }
}

/// Constant coefficients of the correction equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionCoefficients {
    pub h: f64,
    /// `h^2/dt + a_P` of the momentum equations.
    pub a: f64,
    pub a_nb: f64,
    /// Same for the energy equation.
    pub a_t: f64,
    pub a_nb_t: f64,
}

impl CorrectionCoefficients {
    pub fn new(h: f64, dt: Option<f64>, physics: &Physics) -> Result<Self> {
        let nu = physics.momentum_diffusivity();
        let tc = match dt {
            Some(dt) if dt > 0.0 => h * h / dt,
            Some(_) => return Err(Error::config("time step must be positive")),
            None => 0.0,
        };
        // Without an energy equation every temperature term is zero; a unit
        // a_t keeps R_T finite.
        let (a_t, a_nb_t) = match physics.thermal_diffusivity() {
            Some(kappa) => (tc + 4.0 * kappa, -kappa),
            None => (1.0, 0.0),
        };
        let c = CorrectionCoefficients {
            h,
            a: tc + 4.0 * nu,
            a_nb: -nu,
            a_t,
            a_nb_t,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::config("correction spacing h must be positive"));
        }
        if !(self.a > 0.0) {
            return Err(Error::config("correction coefficient a must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CorrectionTerms {
    pub p: f64,
    pub u: f64,
    pub v: f64,
    pub t: f64,
}

pub fn pressure_correction(cur: &IterateTerms, prev: &IterateTerms, k: &CorrectionCoefficients) -> f64 {
    (k.a * cur.r_c - cur.div - k.h * (cur.nb_p - prev.nb_p)) / (-4.0 * k.h)
}

pub fn velocity_correction(cur: &IterateTerms, prev: &IterateTerms, k: &CorrectionCoefficients, c: Component) -> f64 {
    let (dnb, db, r) = match c {
        Component::U => (cur.nb_u - prev.nb_u, cur.b_u - prev.b_u, cur.r_u),
        Component::V => (cur.nb_v - prev.nb_v, cur.b_v - prev.b_v, cur.r_v),
    };
    -(k.a_nb * dnb + db + r) / k.a
}

pub fn temperature_correction(cur: &IterateTerms, prev: &IterateTerms, k: &CorrectionCoefficients) -> f64 {
    -(k.a_nb_t * (cur.nb_t - prev.nb_t) + (cur.b_t - prev.b_t) + cur.r_t) / k.a_t
}

pub fn correction_terms(cur: &IterateTerms, prev: &IterateTerms, k: &CorrectionCoefficients) -> CorrectionTerms {
    CorrectionTerms {
        p: pressure_correction(cur, prev, k),
        u: velocity_correction(cur, prev, k, Component::U),
        v: velocity_correction(cur, prev, k, Component::V),
        t: temperature_correction(cur, prev, k),
    }
}

/// Relaxation factors; the cases use one value for all of them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relaxation {
    pub p: f64,
    pub u: f64,
    pub v: f64,
    pub t: f64,
}

impl Relaxation {
    pub fn uniform(alpha: f64) -> Self {
        Relaxation {
            p: alpha,
            u: alpha,
            v: alpha,
            t: alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for a in [self.p, self.u, self.v, self.t] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::config("relaxation factors must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Signed per-point deviations `phi^n - phi^{n-1} - alpha R_phi`.
pub fn deviations(cur: &IterateTerms, prev: &IterateTerms, k: &CorrectionCoefficients, alpha: &Relaxation) -> CorrectionTerms {
    let r = correction_terms(cur, prev, k);
    CorrectionTerms {
        p: cur.p_p - prev.p_p - alpha.p * r.p,
        u: cur.u_p - prev.u_p - alpha.u * r.u,
        v: cur.v_p - prev.v_p - alpha.v * r.v,
        t: cur.t_p - prev.t_p - alpha.t * r.t,
    }
}

/// Mean absolute deviations over a batch; `RC_T` is zero without an energy
/// equation.
pub fn rc_losses(cur: &[IterateTerms], prev: &[IterateTerms], k: &CorrectionCoefficients, alpha: &Relaxation) -> Result<CorrectionTerms> {
    if cur.is_empty() {
        return Err(Error::EmptyBatch("residual-correction points"));
    }
    if cur.len() != prev.len() {
        return Err(Error::LengthMismatch {
            expected: cur.len(),
            got: prev.len(),
        });
    }
    let mut out = CorrectionTerms::default();
    for (c, p) in cur.iter().zip(prev) {
        let d = deviations(c, p, k, alpha);
        out.p += d.p.abs();
        out.u += d.u.abs();
        out.v += d.v.abs();
        out.t += d.t.abs();
    }
    let n = cur.len() as f64;
    out.p /= n;
    out.u /= n;
    out.v /= n;
    out.t /= n;
    Ok(out)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Adjoint of `w.p RC_p + w.u RC_u + w.v RC_v + w.t RC_t` with respect to the
/// current-iterate terms of every point. The snapshot terms are constants.
pub fn rc_adjoints(
    cur: &[IterateTerms],
    prev: &[IterateTerms],
    k: &CorrectionCoefficients,
    alpha: &Relaxation,
    w: &CorrectionTerms,
) -> Vec<IterateTerms> {
    let n = cur.len() as f64;
    cur.iter()
        .zip(prev)
        .map(|(c, p)| {
            let d = deviations(c, p, k, alpha);
            let sp = w.p * sign(d.p) / n;
            let su = w.u * sign(d.u) / n;
            let sv = w.v * sign(d.v) / n;
            let st = w.t * sign(d.t) / n;
            // d/dx (phi_P - alpha R_phi)
            let gp = -alpha.p * sp;
            let gu = -alpha.u * su;
            let gv = -alpha.v * sv;
            let gt = -alpha.t * st;
            IterateTerms {
                p_p: sp,
                u_p: su,
                v_p: sv,
                t_p: st,
                r_c: gp * k.a / (-4.0 * k.h),
                div: gp / (4.0 * k.h),
                nb_p: gp * 0.25,
                nb_u: -gu * k.a_nb / k.a,
                b_u: -gu / k.a,
                r_u: -gu / k.a,
                nb_v: -gv * k.a_nb / k.a,
                b_v: -gv / k.a,
                r_v: -gv / k.a,
                nb_t: -gt * k.a_nb_t / k.a_t,
                b_t: -gt / k.a_t,
                r_t: -gt / k.a_t,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(a: f64, h: f64) -> CorrectionCoefficients {
        CorrectionCoefficients {
            h,
            a,
            a_nb: -0.5,
            a_t: a,
            a_nb_t: -0.5,
        }
    }

    #[test]
    fn pressure_correction_example() {
        let cur = IterateTerms {
            r_c: 0.4,
            ..Default::default()
        };
        let r = correction_terms(&cur, &cur, &coeffs(2.0, 0.1));
        assert!((r.p + 2.0).abs() < 1e-15);
        assert_eq!((r.u, r.v), (0.0, 0.0));
    }

    #[test]
    fn stationary_state_has_no_correction() {
        let s = IterateTerms {
            u_p: 0.3,
            nb_u: 1.2,
            nb_p: 0.4,
            b_u: 0.1,
            ..Default::default()
        };
        let k = coeffs(1.5, 0.05);
        assert_eq!(correction_terms(&s, &s, &k), CorrectionTerms::default());
        let l = rc_losses(&[s, s], &[s, s], &k, &Relaxation::uniform(0.7)).unwrap();
        assert_eq!(l, CorrectionTerms::default());
    }

    #[test]
    fn temperature_correction_example() {
        let cur = IterateTerms {
            r_t: 0.5,
            ..Default::default()
        };
        let l = rc_losses(&[cur], &[IterateTerms::default()], &coeffs(2.0, 0.1), &Relaxation::uniform(1.0)).unwrap();
        assert!((l.t - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_point_rc_u() {
        // u^n - u^{n-1} = 0.3 and R_u = 0.2 (r_u = -0.2 a).
        let k = coeffs(2.0, 0.1);
        let prev = IterateTerms::default();
        let cur = IterateTerms {
            u_p: 0.3,
            r_u: -0.4,
            ..Default::default()
        };
        assert!((velocity_correction(&cur, &prev, &k, Component::U) - 0.2).abs() < 1e-15);
        let l = rc_losses(&[cur], &[prev], &k, &Relaxation::uniform(0.9)).unwrap();
        assert!((l.u - 0.12).abs() < 1e-15);
    }

    #[test]
    fn extrapolation() {
        assert_eq!(extrapolate_next(2.0, 1.0), 3.0);
        assert_eq!(extrapolate_next(-0.7, -0.7), -0.7);
    }

    #[test]
    fn empty_batch_rejected() {
        let r = rc_losses(&[], &[], &coeffs(1.0, 0.1), &Relaxation::uniform(0.5));
        assert!(matches!(r, Err(Error::EmptyBatch(_))));
    }

    #[test]
    fn invalid_coefficients_rejected() {
        let ns = Physics::NavierStokes { re: 100.0 };
        assert!(CorrectionCoefficients::new(0.0, None, &ns).is_err());
        assert!(CorrectionCoefficients::new(0.1, Some(0.0), &ns).is_err());
        assert!(Relaxation::uniform(1.5).validate().is_err());
    }
}
