//! Benchmark registry.
//!
//! [`build_case`] returns a fully populated [`CaseConfig`] with the published
//! training defaults; [`CaseConfig::build_problem`] turns it into collocation
//! sets and loss targets.

use alloc::vec;
use alloc::vec::Vec;

use crate::ad_residual::{Axis, BcSpec};
use crate::geometry::{classify_points, CollocationSet, Geometry, GridSpec, Rect, Segment, Solid, TimeGrid, WavyWalls};
use crate::network::{EmbeddingConfig, NetworkConfig, OutputVar};
use crate::physics::Physics;
use crate::profile::Profile;
use crate::training::{BatchMode, BcPoint, IcPoint, InitialFields, LossWeights, Problem, Schedule, TrainConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CaseId {
    Ldc,
    Wavy,
    Airfoil,
    SquaresOpen,
    SquaresChannel,
    CylinderSteady,
    CylinderUnsteady,
    RayleighTaylor,
}

impl CaseId {
    pub const ALL: [CaseId; 8] = [
        CaseId::Ldc,
        CaseId::Wavy,
        CaseId::Airfoil,
        CaseId::SquaresOpen,
        CaseId::SquaresChannel,
        CaseId::CylinderSteady,
        CaseId::CylinderUnsteady,
        CaseId::RayleighTaylor,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CaseId::Ldc => "ldc",
            CaseId::Wavy => "wavy",
            CaseId::Airfoil => "airfoil",
            CaseId::SquaresOpen => "squares_open",
            CaseId::SquaresChannel => "squares_channel",
            CaseId::CylinderSteady => "cylinder_steady",
            CaseId::CylinderUnsteady => "cylinder_unsteady",
            CaseId::RayleighTaylor => "rayleigh_taylor",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCase(s.into()))
    }

    pub fn description(&self) -> &'static str {
        match self {
            CaseId::Ldc => "lid-driven cavity, unit square",
            CaseId::Wavy => "channel between sinusoidal walls, parabolic inlet",
            CaseId::Airfoil => "NACA0012 in an open domain",
            CaseId::SquaresOpen => "three square cylinders, open domain",
            CaseId::SquaresChannel => "three square cylinders in a channel",
            CaseId::CylinderSteady => "steady flow past a cylinder in a channel",
            CaseId::CylinderUnsteady => "unsteady flow past a cylinder in a channel",
            CaseId::RayleighTaylor => "Boussinesq Rayleigh-Taylor instability",
        }
    }

    pub fn is_unsteady(&self) -> bool {
        matches!(self, CaseId::CylinderUnsteady | CaseId::RayleighTaylor)
    }
}

/// One scalar condition with its target profile.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Condition {
    pub bc: BcSpec,
    #[cfg_attr(feature = "serde", serde(default = "zero_profile"))]
    pub target: Profile,
}

#[cfg(feature = "serde")]
fn zero_profile() -> Profile {
    Profile::ZERO
}

impl Condition {
    pub fn dirichlet(var: OutputVar, target: Profile) -> Self {
        Condition {
            bc: BcSpec::Dirichlet { var },
            target,
        }
    }

    pub fn fixed(var: OutputVar, value: f64) -> Self {
        Self::dirichlet(var, Profile::constant(value))
    }

    pub fn zero_gradient(var: OutputVar, axis: Axis) -> Self {
        Condition {
            bc: BcSpec::NeumannZero { var, axis },
            target: Profile::ZERO,
        }
    }
}

/// All conditions imposed on one boundary segment.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryCondition {
    pub segment: Segment,
    pub conditions: Vec<Condition>,
}

/// Soft gauge condition `p = value` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PressurePin {
    pub point: [f64; 2],
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitialCondition {
    pub u: Profile,
    pub v: Profile,
    #[cfg_attr(feature = "serde", serde(default = "zero_profile"))]
    pub t: Profile,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelConfig {
    pub shared_widths: Vec<usize>,
    pub head_widths: Vec<usize>,
    pub num_frequencies: usize,
    pub sigma: f64,
    /// Frequency annealing length; unset means 20% of the iterations.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub anneal_steps: Option<u64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            shared_widths: vec![128, 128],
            head_widths: vec![128],
            num_frequencies: 64,
            sigma: 1.0,
            anneal_steps: None,
        }
    }
}

/// Everything needed to train one case.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CaseConfig {
    pub case_id: CaseId,
    pub physics: Physics,
    pub geometry: Geometry,
    pub grid: GridSpec,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub time: Option<TimeGrid>,
    pub boundary: Vec<BoundaryCondition>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub pressure_pin: Option<PressurePin>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub initial: Option<InitialCondition>,
    pub weights: LossWeights,
    pub alpha: f64,
    pub schedule: Schedule,
    pub batch: BatchMode,
    pub model: ModelConfig,
    pub seed: u64,
    pub snapshot_every: u64,
    /// Free-stream pressure used for `C_p`.
    pub p_inf: f64,
    /// Sub-region used for evaluation; the whole domain when unset.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub eval_window: Option<Rect>,
}

/// Optional changes applied on top of a case's defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub re: Option<f64>,
    pub aoa_deg: Option<f64>,
    pub grid: Option<GridSpec>,
    pub time: Option<TimeGrid>,
    pub max_iter: Option<u64>,
    pub lr: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub weights: Option<LossWeights>,
    pub rc_weight: Option<f64>,
    pub batch: Option<BatchMode>,
    pub model: Option<ModelConfig>,
    pub snapshot_every: Option<u64>,
}

/// Published training parameters of a case.
struct Defaults {
    lr: f64,
    max_iter: u64,
    alpha: f64,
    weights: LossWeights,
}

fn weights(fvm_c: f64, fvm_m: f64, fvm_e: f64, ad_c: f64, ad_m: f64, rc: f64, ic: f64) -> LossWeights {
    LossWeights {
        fvm_c,
        fvm_m,
        fvm_e,
        ad_c,
        ad_m,
        rc,
        bc: 1.0,
        ic,
    }
}

fn defaults(id: CaseId) -> Defaults {
    // The cavity and Rayleigh-Taylor rows leave the AD weights blank; their
    // wall rings still need a small AD weight.
    let (lr, max_iter, alpha, weights) = match id {
        CaseId::Ldc => (1e-3, 100_000, 0.65, weights(3.0, 3.0, 0.0, 1e-3, 1e-3, 3.0, 0.0)),
        CaseId::Wavy => (5e-3, 50_000, 0.95, weights(1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0)),
        CaseId::Airfoil => (5e-3, 50_000, 0.95, weights(10.0, 1.0, 0.0, 1e-3, 1e-3, 10.0, 0.0)),
        CaseId::SquaresOpen | CaseId::SquaresChannel => {
            (5e-3, 50_000, 0.85, weights(10.0, 1.0, 0.0, 1e-2, 1e-3, 15.0, 0.0))
        }
        CaseId::CylinderSteady => (5e-3, 100_000, 0.90, weights(1.0, 1.0, 0.0, 1e-3, 1e-3, 50.0, 0.0)),
        CaseId::CylinderUnsteady => (5e-3, 100_000, 0.90, weights(1.0, 1.0, 0.0, 1e-3, 1e-3, 50.0, 50.0)),
        CaseId::RayleighTaylor => (3e-3, 150_000, 0.95, weights(1.0, 1.0, 1.0, 1e-3, 1e-3, 5.0, 5.0)),
    };
    Defaults {
        lr,
        max_iter,
        alpha,
        weights,
    }
}

fn no_slip() -> Vec<Condition> {
    vec![Condition::fixed(OutputVar::U, 0.0), Condition::fixed(OutputVar::V, 0.0)]
}

fn inflow(u: Profile) -> Vec<Condition> {
    vec![Condition::dirichlet(OutputVar::U, u), Condition::fixed(OutputVar::V, 0.0)]
}

/// Zero streamwise gradient of the velocity with a fixed pressure.
fn pressure_outlet(p: f64) -> Vec<Condition> {
    vec![
        Condition::zero_gradient(OutputVar::U, Axis::X),
        Condition::zero_gradient(OutputVar::V, Axis::X),
        Condition::fixed(OutputVar::P, p),
    ]
}

fn bc(segment: Segment, conditions: Vec<Condition>) -> BoundaryCondition {
    BoundaryCondition { segment, conditions }
}

fn solid_walls(n: usize) -> impl Iterator<Item = BoundaryCondition> {
    (0..n).map(|k| bc(Segment::Solid(k), no_slip()))
}

/// Channel of height 4.1 with a cylinder of diameter 1 centred at (2, 2).
fn cylinder_geometry() -> Geometry {
    Geometry {
        domain: Rect::new(0.0, 22.0, 0.0, 4.1),
        solids: vec![Solid::Circle {
            center: [2.0, 2.0],
            radius: 0.5,
        }],
        walls: None,
    }
}

fn cylinder_boundary(re: f64) -> Vec<BoundaryCondition> {
    let inlet = Profile::Parabola {
        lo: 0.0,
        hi: 4.1,
        peak: 0.3,
    };
    let mut out = vec![
        bc(Segment::Left, inflow(inlet)),
        bc(Segment::Right, vec![Condition {
            bc: BcSpec::OutflowCoupled { re },
            target: Profile::ZERO,
        }]),
        bc(Segment::Bottom, no_slip()),
        bc(Segment::Top, no_slip()),
    ];
    out.extend(solid_walls(1));
    out
}

/// Build a case with its published defaults and apply `overrides`.
pub fn build_case(id: CaseId, overrides: &Overrides) -> Result<CaseConfig> {
    let d = defaults(id);
    let aoa = 7.0;
    let physics = match id {
        CaseId::RayleighTaylor => Physics::RayleighTaylor { pr: 0.71, ra: 1e6 },
        _ => {
            let re = match id {
                CaseId::Ldc => 20_000.0,
                CaseId::Wavy => 100.0,
                CaseId::Airfoil => 1000.0,
                CaseId::SquaresOpen => 25.0,
                CaseId::SquaresChannel => 40.0,
                CaseId::CylinderSteady => 20.0,
                _ => 100.0,
            };
            Physics::NavierStokes { re }
        }
    };
    let re = match physics {
        Physics::NavierStokes { re } => re,
        Physics::RayleighTaylor { .. } => 0.0,
    };

    let mut pressure_pin = None;
    let mut initial = None;
    let mut time = None;
    let mut p_inf = 0.0;
    let mut eval_window = None;
    let (geometry, grid, boundary) = match id {
        CaseId::Ldc => {
            pressure_pin = Some(PressurePin {
                point: [0.5, 0.5],
                value: 0.0,
            });
            (
                Geometry::rectangle(Rect::new(0.0, 1.0, 0.0, 1.0)),
                GridSpec { nx: 258, ny: 258 },
                vec![
                    bc(Segment::Left, no_slip()),
                    bc(Segment::Right, no_slip()),
                    bc(Segment::Bottom, no_slip()),
                    bc(Segment::Top, vec![Condition::fixed(OutputVar::U, 1.0), Condition::fixed(OutputVar::V, 0.0)]),
                ],
            )
        }
        CaseId::Wavy => {
            let inlet = Profile::Parabola {
                lo: -1.0,
                hi: 1.0,
                peak: 1.5,
            };
            (
                Geometry {
                    domain: Rect::new(0.0, 6.0, -1.2, 1.2),
                    solids: Vec::new(),
                    walls: Some(WavyWalls {
                        base: 1.0,
                        amplitude: 0.2,
                        shift: 3.0,
                    }),
                },
                GridSpec { nx: 151, ny: 61 },
                vec![
                    bc(Segment::Left, inflow(inlet)),
                    bc(Segment::Right, pressure_outlet(0.0)),
                    bc(Segment::LowerWall, no_slip()),
                    bc(Segment::UpperWall, no_slip()),
                ],
            )
        }
        CaseId::Airfoil => {
            p_inf = 1.0;
            eval_window = Some(Rect::new(-0.2, 1.2, -0.4, 0.4));
            let free = || inflow(Profile::constant(1.0));
            let mut b = vec![
                bc(Segment::Left, free()),
                bc(Segment::Right, pressure_outlet(p_inf)),
                bc(Segment::Bottom, free()),
                bc(Segment::Top, free()),
            ];
            b.extend(solid_walls(1));
            (
                Geometry {
                    domain: Rect::new(-1.0, 3.0, -1.0, 1.0),
                    solids: vec![Solid::Airfoil {
                        leading_edge: [0.0, 0.0],
                        chord: 1.0,
                        aoa_deg: aoa,
                    }],
                    walls: None,
                },
                GridSpec { nx: 201, ny: 101 },
                b,
            )
        }
        CaseId::SquaresOpen => {
            let free = || inflow(Profile::constant(1.0));
            let mut b = vec![
                bc(Segment::Left, free()),
                bc(Segment::Right, pressure_outlet(0.0)),
                bc(Segment::Bottom, free()),
                bc(Segment::Top, free()),
            ];
            b.extend(solid_walls(3));
            (
                Geometry {
                    domain: Rect::new(0.0, 20.0, 0.0, 10.0),
                    solids: vec![Solid::square(5.5, 4.5, 1.0), Solid::square(8.5, 3.0, 1.0), Solid::square(8.5, 6.0, 1.0)],
                    walls: None,
                },
                GridSpec { nx: 1001, ny: 501 },
                b,
            )
        }
        CaseId::SquaresChannel => {
            let inlet = Profile::Parabola {
                lo: 0.0,
                hi: 4.1,
                peak: 1.5,
            };
            let mut b = vec![
                bc(Segment::Left, inflow(inlet)),
                bc(Segment::Right, pressure_outlet(0.0)),
                bc(Segment::Bottom, no_slip()),
                bc(Segment::Top, no_slip()),
            ];
            b.extend(solid_walls(3));
            (
                Geometry {
                    domain: Rect::new(0.0, 22.0, 0.0, 4.1),
                    solids: vec![Solid::square(1.75, 1.8, 0.5), Solid::square(3.75, 1.8, 0.5), Solid::square(5.75, 1.8, 0.5)],
                    walls: None,
                },
                GridSpec { nx: 881, ny: 165 },
                b,
            )
        }
        CaseId::CylinderSteady => (cylinder_geometry(), GridSpec { nx: 441, ny: 83 }, cylinder_boundary(re)),
        CaseId::CylinderUnsteady => {
            time = Some(TimeGrid {
                t_end: 100.0,
                layers: 401,
            });
            initial = Some(InitialCondition {
                u: Profile::constant(1.0),
                v: Profile::ZERO,
                t: Profile::ZERO,
            });
            (cylinder_geometry(), GridSpec { nx: 441, ny: 83 }, cylinder_boundary(re))
        }
        CaseId::RayleighTaylor => {
            time = Some(TimeGrid {
                t_end: 6.0,
                layers: 301,
            });
            initial = Some(InitialCondition {
                u: Profile::ZERO,
                v: Profile::ZERO,
                t: Profile::Interface {
                    mean: 1.0,
                    amplitude: 0.1,
                    wavenumber: 2.0 * core::f64::consts::PI,
                    width: 0.02,
                },
            });
            pressure_pin = Some(PressurePin {
                point: [0.5, 2.0],
                value: 0.0,
            });
            let wall = |t: Condition| {
                let mut c = no_slip();
                c.push(t);
                c
            };
            (
                Geometry::rectangle(Rect::new(0.0, 1.0, 0.0, 2.0)),
                GridSpec { nx: 129, ny: 257 },
                vec![
                    bc(Segment::Left, wall(Condition::zero_gradient(OutputVar::T, Axis::X))),
                    bc(Segment::Right, wall(Condition::zero_gradient(OutputVar::T, Axis::X))),
                    bc(Segment::Bottom, wall(Condition::fixed(OutputVar::T, 1.0))),
                    bc(Segment::Top, wall(Condition::fixed(OutputVar::T, 0.0))),
                ],
            )
        }
    };

    let mut cfg = CaseConfig {
        case_id: id,
        physics,
        geometry,
        grid,
        time,
        boundary,
        pressure_pin,
        initial,
        weights: d.weights,
        alpha: d.alpha,
        schedule: Schedule::with_default_warmup(d.lr, d.max_iter),
        batch: BatchMode::Full,
        model: ModelConfig::default(),
        seed: 0,
        snapshot_every: 1,
        p_inf,
        eval_window,
    };
    cfg.apply(overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Every registered case with a one-line description.
pub fn registry() -> Vec<(CaseId, &'static str)> {
    CaseId::ALL.iter().map(|c| (*c, c.description())).collect()
}

impl CaseConfig {
    pub fn is_unsteady(&self) -> bool {
        self.time.is_some()
    }

    /// Apply `o` in place. A new Reynolds number also reaches the outflow
    /// conditions; a new iteration count resets the warmup to 5%.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(re) = o.re {
            match &mut self.physics {
                Physics::NavierStokes { re: r } => *r = re,
                Physics::RayleighTaylor { .. } => {
                    return Err(Error::config("the Rayleigh-Taylor case has no Reynolds number"))
                }
            }
            for c in self.boundary.iter_mut().flat_map(|b| b.conditions.iter_mut()) {
                if let BcSpec::OutflowCoupled { re: r } = &mut c.bc {
                    *r = re;
                }
            }
        }
        if let Some(aoa) = o.aoa_deg {
            let mut found = false;
            for s in &mut self.geometry.solids {
                if let Solid::Airfoil { aoa_deg, .. } = s {
                    *aoa_deg = aoa;
                    found = true;
                }
            }
            if !found {
                return Err(Error::config("angle of attack given for a case without an airfoil"));
            }
        }
        if let Some(g) = o.grid {
            self.grid = g;
        }
        if let Some(t) = o.time {
            if self.time.is_none() {
                return Err(Error::config("steady cases take no time grid"));
            }
            self.time = Some(t);
        }
        if let Some(n) = o.max_iter {
            self.schedule = Schedule::with_default_warmup(self.schedule.init_lr, n);
        }
        if let Some(lr) = o.lr {
            self.schedule.init_lr = lr;
        }
        if let Some(a) = o.alpha {
            self.alpha = a;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.weights {
            self.weights = w;
        }
        if let Some(rc) = o.rc_weight {
            self.weights.rc = rc;
        }
        if let Some(b) = o.batch {
            self.batch = b;
        }
        if let Some(m) = &o.model {
            self.model = m.clone();
        }
        if let Some(k) = o.snapshot_every {
            self.snapshot_every = k;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.geometry.validate()?;
        self.grid.spacing(&self.geometry.domain)?;
        if let Some(t) = &self.time {
            t.dt()?;
        }
        if self.time.is_some() != self.initial.is_some() {
            return Err(Error::config("unsteady cases need both a time grid and an initial condition"));
        }
        if self.case_id.is_unsteady() != self.time.is_some() {
            return Err(Error::config("time grid does not match the case"));
        }
        if self.physics.has_temperature() != (self.case_id == CaseId::RayleighTaylor) {
            return Err(Error::config("physics does not match the case"));
        }
        let outputs = self.physics.outputs();
        let segments = self.geometry.segments();
        for s in &segments {
            let n = self.boundary.iter().filter(|b| b.segment == *s).count();
            if n != 1 {
                return Err(Error::config(alloc::format!(
                    "segment `{}` must carry exactly one boundary condition, found {n}",
                    s.name()
                )));
            }
        }
        for b in &self.boundary {
            if !segments.contains(&b.segment) {
                return Err(Error::config(alloc::format!("segment `{}` is not part of the geometry", b.segment.name())));
            }
            if b.conditions.is_empty() {
                return Err(Error::config(alloc::format!("segment `{}` has no conditions", b.segment.name())));
            }
            for c in &b.conditions {
                c.bc.validate(&outputs)?;
                c.target.validate()?;
            }
        }
        if let Some(pin) = &self.pressure_pin {
            let d = &self.geometry.domain;
            let [x, y] = pin.point;
            if !(x >= d.x0 && x <= d.x1 && y >= d.y0 && y <= d.y1 && pin.value.is_finite()) {
                return Err(Error::config("pressure pin must lie in the domain"));
            }
        }
        if let Some(ic) = &self.initial {
            ic.u.validate()?;
            ic.v.validate()?;
            ic.t.validate()?;
        }
        if self.model.shared_widths.is_empty() || self.model.shared_widths.iter().chain(&self.model.head_widths).any(|&w| w == 0) {
            return Err(Error::config("layer widths must be positive and at least one shared layer is needed"));
        }
        if !(self.p_inf.is_finite()) {
            return Err(Error::config("free-stream pressure must be finite"));
        }
        self.train_config().validate()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            schedule: self.schedule,
            weights: self.weights,
            alpha: self.alpha,
            batch: self.batch,
            seed: self.seed,
            snapshot_every: self.snapshot_every,
        }
    }

    /// Network inputs are `(x, y)` for steady cases and `(t, x, y)` otherwise,
    /// normalised over the domain (and time span).
    pub fn network_config(&self) -> NetworkConfig {
        let d = &self.geometry.domain;
        let (lo, hi) = match &self.time {
            Some(t) => (vec![0.0, d.x0, d.y0], vec![t.t_end, d.x1, d.y1]),
            None => (vec![d.x0, d.y0], vec![d.x1, d.y1]),
        };
        let m = &self.model;
        NetworkConfig {
            input_dim: lo.len(),
            outputs: self.physics.outputs(),
            shared_widths: m.shared_widths.clone(),
            head_widths: m.head_widths.clone(),
            embedding: EmbeddingConfig {
                num_frequencies: m.num_frequencies,
                sigma: m.sigma,
                anneal_steps: m.anneal_steps.unwrap_or(self.schedule.max_steps / 5),
            },
            input_lower: lo,
            input_upper: hi,
        }
    }

    pub fn collocation(&self) -> Result<CollocationSet> {
        classify_points(&self.geometry, &self.grid, self.time.as_ref())
    }

    /// Collocation sets and loss targets.
    pub fn build_problem(&self) -> Result<(Problem, CollocationSet)> {
        self.validate()?;
        let set = self.collocation()?;
        let mut bcs = Vec::new();
        for b in &set.boundary {
            let entry = self
                .boundary
                .iter()
                .find(|e| e.segment == b.segment)
                .ok_or_else(|| Error::config(alloc::format!("no condition for segment `{}`", b.segment.name())))?;
            for c in &entry.conditions {
                bcs.push(BcPoint {
                    z: b.z,
                    spec: c.bc,
                    target: c.target.eval(b.z[1], b.z[2]),
                });
            }
        }
        if let Some(pin) = &self.pressure_pin {
            let layers = match &self.time {
                Some(t) => (0..t.layers).map(|k| k as f64 * set.dt.unwrap_or(0.0)).collect(),
                None => vec![0.0],
            };
            for t in layers {
                bcs.push(BcPoint {
                    z: [t, pin.point[0], pin.point[1]],
                    spec: BcSpec::PressurePin,
                    target: pin.value,
                });
            }
        }
        let mut ics = Vec::new();
        if let Some(ic) = &self.initial {
            let mut vars = vec![(OutputVar::U, ic.u), (OutputVar::V, ic.v)];
            if self.physics.has_temperature() {
                vars.push((OutputVar::T, ic.t));
            }
            for z in &set.initial {
                for &(var, prof) in &vars {
                    ics.push(IcPoint {
                        z: *z,
                        var,
                        target: prof.eval(z[1], z[2]),
                    });
                }
            }
        }
        let problem = Problem {
            physics: self.physics,
            input_dim: if self.is_unsteady() { 3 } else { 2 },
            h: set.h,
            dt: set.dt,
            origin: Some(set.origin),
            fvm: set.fvm.clone(),
            ad: set.ad.clone(),
            bc: bcs,
            ic: ics,
            initial: self.initial.map(|ic| InitialFields {
                u: ic.u,
                v: ic.v,
                t: ic.t,
            }),
        };
        problem.validate()?;
        Ok((problem, set))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse(id: CaseId) -> Overrides {
        let (grid, time) = match id {
            CaseId::Ldc => (GridSpec { nx: 11, ny: 11 }, None),
            CaseId::Wavy => (GridSpec { nx: 31, ny: 13 }, None),
            CaseId::Airfoil => (GridSpec { nx: 41, ny: 21 }, None),
            CaseId::SquaresOpen => (GridSpec { nx: 41, ny: 21 }, None),
            CaseId::SquaresChannel | CaseId::CylinderSteady => (GridSpec { nx: 221, ny: 42 }, None),
            CaseId::CylinderUnsteady => (GridSpec { nx: 221, ny: 42 }, Some(TimeGrid { t_end: 0.5, layers: 3 })),
            CaseId::RayleighTaylor => (GridSpec { nx: 9, ny: 17 }, Some(TimeGrid { t_end: 0.1, layers: 3 })),
        };
        Overrides {
            grid: Some(grid),
            time,
            ..Overrides::default()
        }
    }

    #[test]
    fn ldc_high_re_defaults() {
        let c = build_case(CaseId::Ldc, &Overrides { re: Some(20_000.0), ..Overrides::default() }).unwrap();
        assert_eq!(c.alpha, 0.65);
        assert_eq!(c.schedule.max_steps, 100_000);
        assert_eq!(c.schedule.init_lr, 1e-3);
        assert_eq!((c.weights.fvm_c, c.weights.fvm_m, c.weights.rc, c.weights.bc), (3.0, 3.0, 3.0, 1.0));
        assert!(c.time.is_none() && c.initial.is_none());
    }

    #[test]
    fn rayleigh_taylor_defaults() {
        let c = build_case(CaseId::RayleighTaylor, &Overrides::default()).unwrap();
        assert_eq!(c.physics, Physics::RayleighTaylor { pr: 0.71, ra: 1e6 });
        assert_eq!((c.weights.rc, c.weights.ic), (5.0, 5.0));
        assert!(c.initial.is_some());
    }

    #[test]
    fn every_case_covers_its_segments() {
        for id in CaseId::ALL {
            let c = build_case(id, &coarse(id)).unwrap();
            for s in c.geometry.segments() {
                assert_eq!(c.boundary.iter().filter(|b| b.segment == s).count(), 1, "{id:?} {s:?}");
            }
            let (p, set) = c.build_problem().unwrap();
            assert!(!p.bc.is_empty());
            assert_eq!(p.fvm.len(), set.fvm.len());
            assert_eq!(p.is_unsteady(), id.is_unsteady());
        }
    }

    #[test]
    fn missing_segment_is_rejected() {
        let mut c = build_case(CaseId::Ldc, &coarse(CaseId::Ldc)).unwrap();
        c.boundary.pop();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = build_case(CaseId::Ldc, &coarse(CaseId::Ldc)).unwrap();
        let dup = c.boundary[0].clone();
        c.boundary.push(dup);
        assert!(c.validate().is_err());
    }

    #[test]
    fn bad_overrides() {
        assert!(build_case(CaseId::Ldc, &Overrides { alpha: Some(1.5), ..Overrides::default() }).is_err());
        assert!(build_case(CaseId::Ldc, &Overrides { grid: Some(GridSpec { nx: 11, ny: 21 }), ..Overrides::default() }).is_err());
        assert!(build_case(CaseId::RayleighTaylor, &Overrides { re: Some(10.0), ..Overrides::default() }).is_err());
        assert!(matches!(CaseId::parse("nope"), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn pressure_pin_per_layer() {
        let c = build_case(CaseId::RayleighTaylor, &coarse(CaseId::RayleighTaylor)).unwrap();
        let (p, _) = c.build_problem().unwrap();
        let pins = p.bc.iter().filter(|b| b.spec == BcSpec::PressurePin).count();
        assert_eq!(pins, 3);
        // u, v, T at every initial point
        assert_eq!(p.ic.len() % 3, 0);
    }
}
