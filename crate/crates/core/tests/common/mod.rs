//! Independent oracles shared by the integration tests and the acceptance
//! suite. Everything here is written out longhand from the discrete
//! formulas, without calling the library code it checks.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simple_pinn_core::analytic::AnalyticField;
use simple_pinn_core::correction::{self, CorrectionCoefficients, IterateTerms, Relaxation};
use simple_pinn_core::fvm::{self, Component, StencilEvaluation};
use simple_pinn_core::geometry::{classify_points, stencil_coordinates, Geometry, GridSpec, Rect, Solid};
use simple_pinn_core::network::EmbeddingConfig;
use simple_pinn_core::training::{
    mse, relative_l2, total_loss, total_loss_and_grad, Batch, BcPoint, InitialFields, LossSettings, LossWeights, Problem,
    Snapshot,
};
use simple_pinn_core::ad_residual::BcSpec;
use simple_pinn_core::profile::Profile;
use simple_pinn_core::{NetworkConfig, NetworkModel, OutputVar, Physics};

// ---------------------------------------------------------------- stencils

pub fn random_stencil(rng: &mut ChaCha8Rng, unsteady: bool) -> StencilEvaluation {
    let h = rng.random_range(0.02..0.2);
    let mut e = if unsteady {
        StencilEvaluation::unsteady(h, rng.random_range(0.01..1.0))
    } else {
        StencilEvaluation::steady(h)
    };
    let mut fill = |a: &mut [f64]| a.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    fill(&mut e.u);
    fill(&mut e.v);
    fill(&mut e.p);
    fill(&mut e.t);
    if unsteady {
        fill(&mut e.prev_u);
        fill(&mut e.prev_v);
        fill(&mut e.prev_t);
    }
    e
}

/// Named samples of one stencil.
struct S {
    h: f64,
    tc: f64,
    up: f64, ue_: f64, uw_: f64, un_: f64, us_: f64,
    ue: f64, uw: f64, un: f64, us: f64,
    vp: f64, ve_: f64, vw_: f64, vn_: f64, vs_: f64,
    ve: f64, vw: f64, vn: f64, vs: f64,
    pp: f64, pe_: f64, pw_: f64, pn_: f64, ps_: f64,
    pe: f64, pw: f64, pn: f64, ps: f64,
    tp: f64, te_: f64, tw_: f64, tn_: f64, ts_: f64,
    te: f64, tw: f64, tn: f64, ts: f64,
    up0: f64, ue0: f64, uw0: f64,
    vp0: f64, vn0: f64, vs0: f64,
    tp0: f64,
}

fn named(e: &StencilEvaluation) -> S {
    // index order: P E W N S e w n s; previous: P e w n s
    let dt_coef = match e.dt {
        Some(dt) => e.h * e.h / dt,
        None => 0.0,
    };
    S {
        h: e.h,
        tc: dt_coef,
        up: e.u[0], ue_: e.u[1], uw_: e.u[2], un_: e.u[3], us_: e.u[4],
        ue: e.u[5], uw: e.u[6], un: e.u[7], us: e.u[8],
        vp: e.v[0], ve_: e.v[1], vw_: e.v[2], vn_: e.v[3], vs_: e.v[4],
        ve: e.v[5], vw: e.v[6], vn: e.v[7], vs: e.v[8],
        pp: e.p[0], pe_: e.p[1], pw_: e.p[2], pn_: e.p[3], ps_: e.p[4],
        pe: e.p[5], pw: e.p[6], pn: e.p[7], ps: e.p[8],
        tp: e.t[0], te_: e.t[1], tw_: e.t[2], tn_: e.t[3], ts_: e.t[4],
        te: e.t[5], tw: e.t[6], tn: e.t[7], ts: e.t[8],
        up0: e.prev_u[0], ue0: e.prev_u[1], uw0: e.prev_u[2],
        vp0: e.prev_v[0], vn0: e.prev_v[3], vs0: e.prev_v[4],
        tp0: e.prev_t[0],
    }
}

pub fn o_continuity(e: &StencilEvaluation) -> f64 {
    let s = named(e);
    s.ue - s.uw + s.vn - s.vs
}

pub fn o_momentum_u(e: &StencilEvaluation, nu: f64) -> f64 {
    let s = named(e);
    let ap = s.tc + 4.0 * nu;
    let diff = ap * s.up - nu * (s.ue_ + s.uw_ + s.un_ + s.us_);
    let conv = s.h * (s.ue * s.ue - s.uw * s.uw + s.vn * s.un - s.vs * s.us);
    let pres = s.h * (s.pe - s.pw);
    diff + conv + pres - s.tc * s.up0
}

pub fn o_momentum_v(e: &StencilEvaluation, nu: f64, buoyancy: bool) -> f64 {
    let s = named(e);
    let ap = s.tc + 4.0 * nu;
    let diff = ap * s.vp - nu * (s.ve_ + s.vw_ + s.vn_ + s.vs_);
    let conv = s.h * (s.ue * s.ve - s.uw * s.vw + s.vn * s.vn - s.vs * s.vs);
    let pres = s.h * (s.pn - s.ps);
    let src = if buoyancy { s.tp * s.h * s.h } else { 0.0 };
    diff + conv + pres - s.tc * s.vp0 - src
}

pub fn o_energy(e: &StencilEvaluation, kappa: f64) -> f64 {
    let s = named(e);
    let ap = s.tc + 4.0 * kappa;
    let diff = ap * s.tp - kappa * (s.te_ + s.tw_ + s.tn_ + s.ts_);
    let conv = s.h * (s.ue * s.te - s.uw * s.tw + s.vn * s.tn - s.vs * s.ts);
    diff + conv - s.tc * s.tp0
}

pub fn o_b_u(e: &StencilEvaluation) -> f64 {
    let s = named(e);
    s.h * (s.pe - s.pw) - s.tc * s.up0
}

pub fn o_b_v(e: &StencilEvaluation) -> f64 {
    let s = named(e);
    s.h * (s.pn - s.ps) - s.tc * s.vp0
}

pub fn o_div(e: &StencilEvaluation) -> f64 {
    let s = named(e);
    s.tc * (s.ue0 - s.uw0 + s.vn0 - s.vs0)
}

/// `R_p`, `R_u`, `R_v` between iterate `n` (`cur`) and `n-1` (`old`).
pub fn o_corrections(cur: &StencilEvaluation, old: &StencilEvaluation, nu: f64, buoyancy: bool) -> [f64; 3] {
    let c = named(cur);
    let o = named(old);
    let h = c.h;
    let a = c.tc + 4.0 * nu;
    let a_nb = -nu;
    let rc = o_continuity(cur);
    let sum_p = c.pe_ + c.pw_ + c.pn_ + c.ps_;
    let sum_p_old = o.pe_ + o.pw_ + o.pn_ + o.ps_;
    let r_p = (a * rc - o_div(cur) - h * (sum_p - sum_p_old)) / (-4.0 * h);
    let d_u = (c.ue_ + c.uw_ + c.un_ + c.us_) - (o.ue_ + o.uw_ + o.un_ + o.us_);
    let r_u = -(a_nb * d_u + (o_b_u(cur) - o_b_u(old)) + o_momentum_u(cur, nu)) / a;
    let d_v = (c.ve_ + c.vw_ + c.vn_ + c.vs_) - (o.ve_ + o.vw_ + o.vn_ + o.vs_);
    let r_v = -(a_nb * d_v + (o_b_v(cur) - o_b_v(old)) + o_momentum_v(cur, nu, buoyancy)) / a;
    [r_p, r_u, r_v]
}

/// Mean `|phi^n - phi^{n-1} - alpha R|` for p, u, v over a batch.
pub fn o_rc_losses(cur: &[StencilEvaluation], old: &[StencilEvaluation], nu: f64, buoyancy: bool, alpha: f64) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for (c, o) in cur.iter().zip(old) {
        let r = o_corrections(c, o, nu, buoyancy);
        acc[0] += (c.p[0] - o.p[0] - alpha * r[0]).abs();
        acc[1] += (c.u[0] - o.u[0] - alpha * r[1]).abs();
        acc[2] += (c.v[0] - o.v[0] - alpha * r[2]).abs();
    }
    let n = cur.len() as f64;
    acc.map(|x| x / n)
}

/// Max |library - oracle| over every formula on `n` random stencil pairs.
pub fn formula_oracle_max_diff(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut chk = |a: f64, b: f64| worst = worst.max((a - b).abs());
    for k in 0..n {
        let unsteady = k % 2 == 1;
        let thermal = k % 4 == 3;
        let cur = random_stencil(&mut rng, unsteady);
        let mut old = random_stencil(&mut rng, unsteady);
        old.h = cur.h;
        old.dt = cur.dt;
        let physics = if thermal {
            Physics::RayleighTaylor {
                pr: rng.random_range(0.5..2.0),
                ra: rng.random_range(1e2..1e4),
            }
        } else {
            Physics::NavierStokes { re: rng.random_range(1.0..1000.0) }
        };
        let nu = physics.momentum_diffusivity();
        chk(fvm::continuity_residual(&cur), o_continuity(&cur));
        chk(fvm::momentum_residual(&cur, Component::U, nu, thermal), o_momentum_u(&cur, nu));
        chk(fvm::momentum_residual(&cur, Component::V, nu, thermal), o_momentum_v(&cur, nu, thermal));
        if let Some(kappa) = physics.thermal_diffusivity() {
            chk(fvm::energy_residual(&cur, kappa), o_energy(&cur, kappa));
        }
        chk(fvm::b_source(&cur, Component::U), o_b_u(&cur));
        chk(fvm::b_source(&cur, Component::V), o_b_v(&cur));
        chk(fvm::div_prev_time(&cur), o_div(&cur));
        let r = fvm::residuals(&cur, &physics);
        chk(r.c, o_continuity(&cur));
        chk(r.u, o_momentum_u(&cur, nu));
        chk(r.v, o_momentum_v(&cur, nu, thermal));

        let kc = CorrectionCoefficients::new(cur.h, cur.dt, &physics).unwrap();
        let tc = IterateTerms::from_stencil(&cur, &physics);
        let to = IterateTerms::from_stencil(&old, &physics);
        let lib = correction::correction_terms(&tc, &to, &kc);
        let ora = o_corrections(&cur, &old, nu, thermal);
        chk(lib.p, ora[0]);
        chk(lib.u, ora[1]);
        chk(lib.v, ora[2]);
    }
    // batched RC losses
    for unsteady in [false, true] {
        let physics = Physics::NavierStokes { re: 50.0 };
        let nu = physics.momentum_diffusivity();
        let h = 0.05;
        let mut cur = Vec::new();
        let mut old = Vec::new();
        for _ in 0..64 {
            let mut c = random_stencil(&mut rng, unsteady);
            let mut o = random_stencil(&mut rng, unsteady);
            c.h = h;
            o.h = h;
            c.dt = unsteady.then_some(0.1);
            o.dt = c.dt;
            cur.push(c);
            old.push(o);
        }
        let kc = CorrectionCoefficients::new(h, cur[0].dt, &physics).unwrap();
        let tc: Vec<_> = cur.iter().map(|e| IterateTerms::from_stencil(e, &physics)).collect();
        let to: Vec<_> = old.iter().map(|e| IterateTerms::from_stencil(e, &physics)).collect();
        let alpha = 0.7;
        let lib = correction::rc_losses(&tc, &to, &kc, &Relaxation::uniform(alpha)).unwrap();
        let ora = o_rc_losses(&cur, &old, nu, false, alpha);
        chk(lib.p, ora[0]);
        chk(lib.u, ora[1]);
        chk(lib.v, ora[2]);
    }
    worst
}

// ------------------------------------------------------ discretisation order

/// Stencil of an analytic field at `(x, y)`.
pub fn clamp(field: &AnalyticField, x: f64, y: f64, h: f64, dt: Option<f64>, t: f64) -> StencilEvaluation {
    let c = stencil_coordinates([t, x, y], h, dt);
    let mut e = match dt {
        Some(dt) => StencilEvaluation::unsteady(h, dt),
        None => StencilEvaluation::steady(h),
    };
    for (k, z) in c.spatial.iter().enumerate() {
        let v = field.values_at(*z);
        e.u[k] = v[0];
        e.v[k] = v[1];
        e.p[k] = v[2];
    }
    if let Some(pz) = c.prev {
        for (k, z) in pz.iter().enumerate() {
            let v = field.values_at(*z);
            e.prev_u[k] = v[0];
            e.prev_v[k] = v[1];
        }
    }
    e
}

/// Max of `|r_u| / h^2` and `|r_v| / h^2` over fixed interior points of the
/// Kovasznay flow, for each spacing.
pub fn kovasznay_scaled_residuals(re: f64, hs: &[f64]) -> Vec<f64> {
    let field = AnalyticField::kovasznay(re);
    let nu = 1.0 / re;
    hs.iter()
        .map(|&h| {
            let mut worst: f64 = 0.0;
            for i in 0..5 {
                for j in 0..5 {
                    let x = -0.3 + 0.3 * i as f64;
                    let y = -0.2 + 0.35 * j as f64;
                    let e = clamp(&field, x, y, h, None, 0.0);
                    let ru = fvm::momentum_residual(&e, Component::U, nu, false) / (h * h);
                    let rv = fvm::momentum_residual(&e, Component::V, nu, false) / (h * h);
                    worst = worst.max(ru.abs()).max(rv.abs());
                }
            }
            worst
        })
        .collect()
}

/// Observed orders between consecutive spacings (each half the previous).
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Max |discrete continuity| of the Taylor-Green field over a grid of points
/// and spacings.
pub fn taylor_green_max_continuity() -> f64 {
    let field = AnalyticField::taylor_green(0.01, 2).unwrap();
    let mut worst: f64 = 0.0;
    for h in [0.04, 0.02, 0.01] {
        for i in 0..20 {
            for j in 0..20 {
                let x = 0.31 * i as f64;
                let y = 0.29 * j as f64;
                let e = clamp(&field, x, y, h, None, 0.0);
                worst = worst.max(fvm::continuity_residual(&e).abs());
            }
        }
    }
    worst
}

// ---------------------------------------------------------- classification

/// Enumeration oracle for a rectangle with one axis-aligned square solid.
/// All coordinates are integers in units of `unit`, so every comparison is
/// exact. Grid points sit at multiples of `2 * half`, stencil companions at
/// odd multiples of `half`. Returns (fvm, ad) as sorted (i, j) lists.
pub fn square_oracle(n: (i64, i64), half: i64, sq: (i64, i64, i64, i64)) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let (x1, y1) = ((n.0 - 1) * 2 * half, (n.1 - 1) * 2 * half);
    let (sx0, sx1, sy0, sy1) = sq;
    // 0 solid, 1 boundary, 2 fluid
    let class = |x: i64, y: i64| -> u8 {
        let in_sq = x >= sx0 && x <= sx1 && y >= sy0 && y <= sy1;
        let on_sq = in_sq && (x == sx0 || x == sx1 || y == sy0 || y == sy1);
        if on_sq {
            return 1;
        }
        if in_sq {
            return 0;
        }
        if x < 0 || y < 0 || x > x1 || y > y1 {
            return 0;
        }
        if x == 0 || y == 0 || x == x1 || y == y1 {
            return 1;
        }
        2
    };
    let mut fvm = Vec::new();
    let mut ad = Vec::new();
    for j in 0..n.1 {
        for i in 0..n.0 {
            let (x, y) = (2 * half * i, 2 * half * j);
            if class(x, y) != 2 {
                continue;
            }
            let d = 2 * half;
            let companions = [(d, 0), (-d, 0), (0, d), (0, -d), (half, 0), (-half, 0), (0, half), (0, -half)];
            if companions.iter().all(|&(dx, dy)| class(x + dx, y + dy) == 2) {
                fvm.push((i as usize, j as usize));
            } else {
                ad.push((i as usize, j as usize));
            }
        }
    }
    fvm.sort();
    ad.sort();
    (fvm, ad)
}

/// Library classification of the same configuration, as grid indices.
pub fn square_library(n: (usize, usize), h: f64, sq: [f64; 4]) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let dom = Rect::new(0.0, (n.0 - 1) as f64 * h, 0.0, (n.1 - 1) as f64 * h);
    let mut g = Geometry::rectangle(dom);
    g.solids.push(Solid::Polygon {
        vertices: vec![[sq[0], sq[2]], [sq[1], sq[2]], [sq[1], sq[3]], [sq[0], sq[3]]],
    });
    let set = classify_points(&g, &GridSpec { nx: n.0, ny: n.1 }, None).unwrap();
    let idx = |z: &[f64; 3]| ((z[1] / h).round() as usize, (z[2] / h).round() as usize);
    let mut fvm: Vec<_> = set.fvm.iter().map(idx).collect();
    let mut ad: Vec<_> = set.ad.iter().map(idx).collect();
    fvm.sort();
    ad.sort();
    (fvm, ad)
}

/// Unit-square counts and two square-solid layouts; `Err` names the first
/// mismatch.
pub fn classification_check() -> Result<(), String> {
    let set = classify_points(&Geometry::rectangle(Rect::new(0.0, 1.0, 0.0, 1.0)), &GridSpec { nx: 11, ny: 11 }, None)
        .map_err(|e| e.to_string())?;
    if (set.fvm.len(), set.ad.len()) != (49, 32) {
        return Err(format!("unit square gave {} FVM / {} AD", set.fvm.len(), set.ad.len()));
    }
    // 21x21 over [0,1]^2 (h = 0.05). Units of 1/400: h = 20, half = 10.
    // Grid-aligned square [0.35, 0.65]^2 and an off-grid one [0.33, 0.67]^2.
    for (sq_units, sq) in [((140, 260, 140, 260), [0.35, 0.65, 0.35, 0.65]), ((132, 268, 132, 268), [0.33, 0.67, 0.33, 0.67])] {
        let want = square_oracle((21, 21), 10, sq_units);
        let got = square_library((21, 21), 0.05, sq);
        if want != got {
            return Err(format!("square {sq:?}: oracle {}/{} vs library {}/{}", want.0.len(), want.1.len(), got.0.len(), got.1.len()));
        }
    }
    Ok(())
}

// -------------------------------------------------------------- stationarity

/// Largest RC loss over exact discrete solutions with a stationary snapshot.
pub fn stationarity_max_rc() -> f64 {
    let fields = [
        AnalyticField::couette(),
        AnalyticField::rigid_rotation(),
        AnalyticField::constant(2, vec![OutputVar::U, OutputVar::V, OutputVar::P], &[0.7, -0.3, 1.2]).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for f in &fields {
        for (re, dt) in [(100.0, None), (7.0, Some(0.01)), (1000.0, Some(0.5))] {
            let physics = Physics::NavierStokes { re };
            let h = 0.05;
            let stencils: Vec<_> = (0..40)
                .map(|k| clamp(f, 0.1 + 0.023 * k as f64, 0.9 - 0.017 * k as f64, h, dt, 1.0))
                .collect();
            let terms: Vec<_> = stencils.iter().map(|e| IterateTerms::from_stencil(e, &physics)).collect();
            let kc = CorrectionCoefficients::new(h, dt, &physics).unwrap();
            let rc = correction::rc_losses(&terms, &terms, &kc, &Relaxation::uniform(0.8)).unwrap();
            worst = worst.max(rc.p).max(rc.u).max(rc.v);
        }
    }
    worst
}

// ----------------------------------------------------------------- metrics

/// Hand-worked metric examples; `Err` names the first mismatch.
pub fn metric_examples() -> Result<(), String> {
    let cases: [(&[f64], &[f64], f64, f64); 4] = [
        // diff (0, 1); |ref|^2 = 10
        (&[1.0, 2.0], &[1.0, 3.0], 0.1f64.sqrt(), 0.5),
        // diff (-3, -4, 0); |ref|^2 = 25
        (&[0.0, 0.0, 0.0], &[3.0, 4.0, 0.0], 1.0, 25.0 / 3.0),
        // exact match
        (&[0.5, -0.25], &[0.5, -0.25], 0.0, 0.0),
        // diff (1, 1, 1, 1); |ref|^2 = 4
        (&[2.0, 2.0, 0.0, 0.0], &[1.0, 1.0, -1.0, -1.0], 1.0, 1.0),
    ];
    for (p, r, rl2, m) in cases {
        let got_rl2 = relative_l2(p, r).map_err(|e| e.to_string())?;
        let got_mse = mse(p, r).map_err(|e| e.to_string())?;
        if got_rl2 != rl2 || got_mse != m {
            return Err(format!("{p:?} vs {r:?}: rel {got_rl2} (want {rl2}), mse {got_mse} (want {m})"));
        }
    }
    if relative_l2(&[1.0], &[0.0]).is_ok() {
        return Err("zero reference must be rejected".into());
    }
    if mse(&[1.0], &[1.0, 2.0]).is_ok() || mse(&[], &[]).is_ok() {
        return Err("length mismatch / empty input must be rejected".into());
    }
    Ok(())
}

// ---------------------------------------------------------------- gradient

fn small_model(lo: Vec<f64>, hi: Vec<f64>, outputs: Vec<OutputVar>, seed: u64) -> NetworkModel {
    let mut cfg = NetworkConfig::new(lo, hi, outputs);
    cfg.shared_widths = vec![8];
    cfg.head_widths = vec![4];
    cfg.embedding = EmbeddingConfig {
        num_frequencies: 3,
        sigma: 1.0,
        anneal_steps: 0,
    };
    NetworkModel::new(cfg, seed).unwrap()
}

/// Five-point problems (3 FVM, 1 AD, 1 BC; unsteady NS and unsteady
/// Boussinesq) with every loss term switched on.
pub fn gradient_problems() -> Vec<(Problem, NetworkModel, LossSettings)> {
    let mut out = Vec::new();
    for thermal in [false, true] {
        let physics = if thermal {
            Physics::RayleighTaylor { pr: 0.71, ra: 1e3 }
        } else {
            Physics::NavierStokes { re: 20.0 }
        };
        let outputs = physics.outputs();
        let model = small_model(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0], outputs, 11 + thermal as u64);
        let dt = 0.1;
        let problem = Problem {
            physics,
            input_dim: 3,
            h: 0.1,
            dt: Some(dt),
            origin: None,
            fvm: vec![[0.1, 0.4, 0.5], [0.5, 0.6, 0.3], [0.8, 0.35, 0.65]],
            ad: vec![[0.6, 0.12, 0.4]],
            bc: vec![BcPoint {
                z: [0.3, 0.0, 0.5],
                spec: BcSpec::OutflowCoupled { re: 20.0 },
                target: 0.0,
            }],
            ic: vec![],
            initial: Some(InitialFields {
                u: Profile::Constant { value: 0.3 },
                v: Profile::Constant { value: -0.1 },
                t: Profile::Constant { value: 0.2 },
            }),
        };
        let settings = LossSettings {
            weights: LossWeights {
                fvm_c: 3.0,
                fvm_m: 50.0,
                fvm_e: 40.0,
                ad_c: 0.5,
                ad_m: 0.7,
                rc: 2.0,
                bc: 1.5,
                ic: 1.0,
            },
            relaxation: Relaxation::uniform(0.6),
        };
        out.push((problem, model, settings));
    }
    out
}

/// Worst per-component relative error of the analytic gradient against
/// central differences. Components whose magnitude is below `1e-6` of the
/// largest one are compared on that floor instead.
pub fn gradient_check() -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut max_params = 0;
    for (problem, model, settings) in gradient_problems() {
        let n = model.parameter_count();
        max_params = max_params.max(n);
        let mut snap = model.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for p in snap.params_mut() {
            *p += rng.random_range(-0.05..0.05);
        }
        let batch = Batch::full(&problem);
        let (_, grad) = total_loss_and_grad(&model, Snapshot::Model(&snap), &problem, &batch, &settings).unwrap();
        let eps = 1e-6;
        let mut fd = vec![0.0; n];
        for k in 0..n {
            let mut m = model.clone();
            m.params_mut()[k] += eps;
            let lp = total_loss(&m, Snapshot::Model(&snap), &problem, &batch, &settings).unwrap().total;
            m.params_mut()[k] -= 2.0 * eps;
            let lm = total_loss(&m, Snapshot::Model(&snap), &problem, &batch, &settings).unwrap().total;
            fd[k] = (lp - lm) / (2.0 * eps);
        }
        let scale = fd.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        for (g, f) in grad.iter().zip(&fd) {
            let den = g.abs().max(f.abs()).max(1e-6 * scale);
            worst = worst.max((g - f).abs() / den);
        }
    }
    (worst, max_params)
}
