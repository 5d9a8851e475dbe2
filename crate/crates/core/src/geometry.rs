//! Case geometry, collocation grids and point classification.
//!
//! A grid point is `Solid` when it lies outside the fluid, `Boundary` when it
//! is within `1e-9 * diagonal` of a boundary curve, and `Fluid` otherwise.
//! Fluid points whose eight stencil companions (`+-h` and `+-h/2` along each
//! axis) are all fluid get FVM residuals; the remaining fluid points get AD
//! residuals.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::fvm::loc;
use crate::math;
use crate::{Error, Result};

const TOL_FACTOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn diagonal(&self) -> f64 {
        math::hypot(self.x1 - self.x0, self.y1 - self.y0)
    }

    fn strictly_contains(&self, p: [f64; 2]) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }
}

/// NACA 0012 half thickness at chord fraction `x` (closed trailing edge).
pub fn naca0012_half_thickness(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    0.6 * (0.2969 * math::sqrt(x) - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x - 0.1036 * x * x * x * x)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "snake_case"))]
pub enum Solid {
    Circle { center: [f64; 2], radius: f64 },
    /// Simple polygon, vertices in either orientation.
    Polygon { vertices: Vec<[f64; 2]> },
    /// NACA 0012 with its leading edge at `leading_edge`; a positive angle of
    /// attack (degrees) pitches the nose up.
    Airfoil { leading_edge: [f64; 2], chord: f64, aoa_deg: f64 },
}

/// Where a point sits relative to one solid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Outside,
    On,
    Inside,
}

impl Solid {
    /// Axis-aligned square with lower-left corner `(x, y)`.
    pub fn square(x: f64, y: f64, side: f64) -> Self {
        Solid::Polygon {
            vertices: alloc::vec![[x, y], [x + side, y], [x + side, y + side], [x, y + side]],
        }
    }

    fn airfoil_frame(le: [f64; 2], chord: f64, aoa_deg: f64, p: [f64; 2]) -> (f64, f64) {
        let (s, c) = math::sin_cos(aoa_deg * PI / 180.0);
        let r = [p[0] - le[0], p[1] - le[1]];
        ((r[0] * c - r[1] * s) / chord, (r[0] * s + r[1] * c) / chord)
    }

    fn airfoil_point(le: [f64; 2], chord: f64, aoa_deg: f64, xi: f64, eta: f64) -> [f64; 2] {
        let (s, c) = math::sin_cos(aoa_deg * PI / 180.0);
        let (a, b) = (xi * chord, eta * chord);
        [le[0] + a * c + b * s, le[1] - a * s + b * c]
    }

    fn side(&self, p: [f64; 2], tol: f64) -> Side {
        match self {
            Solid::Circle { center, radius } => {
                let d = math::hypot(p[0] - center[0], p[1] - center[1]) - radius;
                if d.abs() <= tol {
                    Side::On
                } else if d < 0.0 {
                    Side::Inside
                } else {
                    Side::Outside
                }
            }
            Solid::Polygon { vertices } => {
                let n = vertices.len();
                let mut inside = false;
                for k in 0..n {
                    let a = vertices[k];
                    let b = vertices[(k + 1) % n];
                    if segment_distance(p, a, b) <= tol {
                        return Side::On;
                    }
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                }
                if inside {
                    Side::Inside
                } else {
                    Side::Outside
                }
            }
            Solid::Airfoil { leading_edge, chord, aoa_deg } => {
                let (xi, eta) = Self::airfoil_frame(*leading_edge, *chord, *aoa_deg, p);
                let t = tol / chord;
                if xi < -t || xi > 1.0 + t {
                    return Side::Outside;
                }
                let d = eta.abs() - naca0012_half_thickness(xi);
                if d.abs() <= t {
                    Side::On
                } else if d < 0.0 && xi > 0.0 && xi < 1.0 {
                    Side::Inside
                } else {
                    Side::Outside
                }
            }
        }
    }

    /// Strict containment (boundary points excluded).
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.side(p, tol) == Side::Inside
    }

    pub fn on_boundary(&self, p: [f64; 2], tol: f64) -> bool {
        self.side(p, tol) == Side::On
    }

    /// Bounding box of the solid.
    pub fn bounds(&self) -> Rect {
        let pts: Vec<[f64; 2]> = match self {
            Solid::Circle { center, radius } => {
                return Rect::new(center[0] - radius, center[0] + radius, center[1] - radius, center[1] + radius)
            }
            Solid::Polygon { vertices } => vertices.clone(),
            Solid::Airfoil { .. } => self.boundary_samples(0.0, 400),
        };
        let mut r = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in pts {
            r.x0 = r.x0.min(p[0]);
            r.x1 = r.x1.max(p[0]);
            r.y0 = r.y0.min(p[1]);
            r.y1 = r.y1.max(p[1]);
        }
        r
    }

    fn perimeter(&self) -> f64 {
        match self {
            Solid::Circle { radius, .. } => 2.0 * PI * radius,
            Solid::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|k| dist(vertices[k], vertices[(k + 1) % n])).sum()
            }
            Solid::Airfoil { chord, .. } => 2.0397 * chord,
        }
    }

    /// Surface samples spaced about `h` apart; `count` overrides the number.
    pub fn boundary_samples(&self, h: f64, count: usize) -> Vec<[f64; 2]> {
        let n = if count > 0 { count } else { math::ceil(self.perimeter() / h).max(3.0) as usize };
        match self {
            Solid::Circle { center, radius } => (0..n)
                .map(|m| {
                    let (s, c) = math::sin_cos(2.0 * PI * m as f64 / n as f64);
                    [center[0] + radius * c, center[1] + radius * s]
                })
                .collect(),
            Solid::Polygon { vertices } => {
                let mut out = Vec::new();
                let k = vertices.len();
                for e in 0..k {
                    let a = vertices[e];
                    let b = vertices[(e + 1) % k];
                    let pieces = if count > 0 {
                        (n / k).max(1)
                    } else {
                        (math::ceil(dist(a, b) / h) as usize).max(1)
                    };
                    for m in 0..pieces {
                        let s = m as f64 / pieces as f64;
                        out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
                    }
                }
                out
            }
            Solid::Airfoil { leading_edge, chord, aoa_deg } => (0..n)
                .map(|m| {
                    let th = 2.0 * PI * m as f64 / n as f64;
                    let xi = 0.5 * (1.0 + math::cos(th));
                    let y = naca0012_half_thickness(xi);
                    let eta = if th < PI { y } else { -y };
                    Self::airfoil_point(*leading_edge, *chord, *aoa_deg, xi, eta)
                })
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Solid::Circle { radius, .. } if !(*radius > 0.0) => Err(Error::config("circle radius must be positive")),
            Solid::Polygon { vertices } if vertices.len() < 3 => Err(Error::config("polygon needs at least 3 vertices")),
            Solid::Airfoil { chord, .. } if !(*chord > 0.0) => Err(Error::config("airfoil chord must be positive")),
            _ => Ok(()),
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    math::hypot(a[0] - b[0], a[1] - b[1])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + s * d[0], a[1] + s * d[1]])
}

/// Channel walls `y = +-(base + amplitude sin(pi (x - shift)))`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WavyWalls {
    pub base: f64,
    pub amplitude: f64,
    pub shift: f64,
}

impl WavyWalls {
    pub fn height(&self, x: f64) -> f64 {
        self.base + self.amplitude * math::sin(PI * (x - self.shift))
    }
}

/// Named piece of the fluid boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Left,
    Right,
    Bottom,
    Top,
    UpperWall,
    LowerWall,
    Solid(usize),
}

impl Segment {
    pub fn name(&self) -> String {
        match self {
            Segment::Left => "left".into(),
            Segment::Right => "right".into(),
            Segment::Bottom => "bottom".into(),
            Segment::Top => "top".into(),
            Segment::UpperWall => "upper_wall".into(),
            Segment::LowerWall => "lower_wall".into(),
            Segment::Solid(k) => format!("solid{k}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "left" => Segment::Left,
            "right" => Segment::Right,
            "bottom" => Segment::Bottom,
            "top" => Segment::Top,
            "upper_wall" => Segment::UpperWall,
            "lower_wall" => Segment::LowerWall,
            _ => match s.strip_prefix("solid").and_then(|k| k.parse().ok()) {
                Some(k) => Segment::Solid(k),
                None => return Err(Error::config(format!("unknown boundary segment `{s}`"))),
            },
        })
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Segment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Segment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Segment::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Fluid,
    Boundary(Segment),
    Solid,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Geometry {
    pub domain: Rect,
    #[cfg_attr(feature = "serde", serde(default))]
    pub solids: Vec<Solid>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub walls: Option<WavyWalls>,
}

impl Geometry {
    pub fn rectangle(domain: Rect) -> Self {
        Geometry {
            domain,
            solids: Vec::new(),
            walls: None,
        }
    }

    pub fn tolerance(&self) -> f64 {
        TOL_FACTOR * self.domain.diagonal()
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if !(d.x1 > d.x0 && d.y1 > d.y0) || !d.diagonal().is_finite() {
            return Err(Error::config("domain must be a non-degenerate rectangle"));
        }
        for s in &self.solids {
            s.validate()?;
            let b = s.bounds();
            if !(d.strictly_contains([b.x0, b.y0]) && d.strictly_contains([b.x1, b.y1])) {
                return Err(Error::config("solids must lie strictly inside the domain"));
            }
        }
        Ok(())
    }

    /// Segments that bound the fluid.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out = alloc::vec![Segment::Left, Segment::Right];
        if self.walls.is_some() {
            out.extend([Segment::LowerWall, Segment::UpperWall]);
        } else {
            out.extend([Segment::Bottom, Segment::Top]);
        }
        out.extend((0..self.solids.len()).map(Segment::Solid));
        out
    }

    pub fn classify(&self, p: [f64; 2]) -> PointClass {
        let tol = self.tolerance();
        if let Some(w) = &self.walls {
            let d = p[1].abs() - w.height(p[0]);
            if d > tol {
                return PointClass::Solid;
            }
            if d.abs() <= tol {
                let seg = if p[1] > 0.0 { Segment::UpperWall } else { Segment::LowerWall };
                return PointClass::Boundary(seg);
            }
        }
        for (k, s) in self.solids.iter().enumerate() {
            match s.side(p, tol) {
                Side::On => return PointClass::Boundary(Segment::Solid(k)),
                Side::Inside => return PointClass::Solid,
                Side::Outside => {}
            }
        }
        let d = &self.domain;
        if p[0] < d.x0 - tol || p[0] > d.x1 + tol || p[1] < d.y0 - tol || p[1] > d.y1 + tol {
            return PointClass::Solid;
        }
        if (p[0] - d.x0).abs() <= tol {
            return PointClass::Boundary(Segment::Left);
        }
        if (p[0] - d.x1).abs() <= tol {
            return PointClass::Boundary(Segment::Right);
        }
        if (p[1] - d.y0).abs() <= tol {
            return PointClass::Boundary(Segment::Bottom);
        }
        if (p[1] - d.y1).abs() <= tol {
            return PointClass::Boundary(Segment::Top);
        }
        PointClass::Fluid
    }

    pub fn is_fluid(&self, p: [f64; 2]) -> bool {
        self.classify(p) == PointClass::Fluid
    }
}

/// Uniform spatial grid covering the domain, `nx * ny` points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Uniform spacing; fails unless both axes give the same `h`.
    pub fn spacing(&self, domain: &Rect) -> Result<f64> {
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::config("grid needs at least 3x3 points"));
        }
        let hx = (domain.x1 - domain.x0) / (self.nx - 1) as f64;
        let hy = (domain.y1 - domain.y0) / (self.ny - 1) as f64;
        if (hx - hy).abs() > 1e-9 * hx.max(hy) {
            return Err(Error::config(format!("grid spacing differs between axes ({hx} vs {hy})")));
        }
        Ok(hx)
    }
}

/// Uniform time layers `t_k = k dt`, `k = 0..layers`, ending at `t_end`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeGrid {
    pub t_end: f64,
    pub layers: usize,
}

impl TimeGrid {
    pub fn dt(&self) -> Result<f64> {
        if self.layers < 2 || !(self.t_end > 0.0) {
            return Err(Error::config("time grid needs t_end > 0 and at least 2 layers"));
        }
        Ok(self.t_end / (self.layers - 1) as f64)
    }
}

/// Grid coordinates of a collocation point: time layer `k`, column `i`, row `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex {
    pub k: usize,
    pub i: usize,
    pub j: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    /// `(t, x, y)`; `t = 0` for steady problems.
    pub z: [f64; 3],
    pub segment: Segment,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollocationSet {
    pub h: f64,
    pub dt: Option<f64>,
    pub origin: [f64; 2],
    pub grid: GridSpec,
    /// `(t, x, y)` of every FVM point, with its grid index alongside.
    pub fvm: Vec<[f64; 3]>,
    pub fvm_index: Vec<GridIndex>,
    pub ad: Vec<[f64; 3]>,
    pub boundary: Vec<BoundaryPoint>,
    /// Fluid and boundary grid points at `t = 0`.
    pub initial: Vec<[f64; 3]>,
    /// Solid grid points per time layer.
    pub solid_count: usize,
}

impl CollocationSet {
    pub fn is_unsteady(&self) -> bool {
        self.dt.is_some()
    }

    /// Points at which correction losses are evaluated.
    pub fn n_rc(&self) -> usize {
        self.fvm.len()
    }
}

/// Spatial stencil of a point, in `loc` order, plus the previous-time samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilCoords {
    pub spatial: [[f64; 3]; 9],
    pub prev: Option<[[f64; 3]; 5]>,
}

pub fn stencil_coordinates(z: [f64; 3], h: f64, dt: Option<f64>) -> StencilCoords {
    let mut spatial = [[0.0; 3]; 9];
    for (k, &(dx, dy)) in loc::OFFSETS.iter().enumerate() {
        spatial[k] = [z[0], z[1] + dx * h, z[2] + dy * h];
    }
    let prev = dt.map(|dt| {
        let mut out = [[0.0; 3]; 5];
        for (m, &k) in loc::PREV.iter().enumerate() {
            out[m] = [z[0] - dt, spatial[k][1], spatial[k][2]];
        }
        out
    });
    StencilCoords { spatial, prev }
}

/// Classify the grid and collect the collocation sets.
pub fn classify_points(geometry: &Geometry, grid: &GridSpec, time: Option<&TimeGrid>) -> Result<CollocationSet> {
    geometry.validate()?;
    let d = geometry.domain;
    let h = grid.spacing(&d)?;
    let dt = time.map(|t| t.dt()).transpose()?;
    let layers = time.map_or(1, |t| t.layers);
    let at = |i: usize, j: usize| [d.x0 + i as f64 * h, d.y0 + j as f64 * h];

    let mut fvm2 = Vec::new();
    let mut ad2 = Vec::new();
    let mut bnd2 = Vec::new();
    let mut solid = 0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = at(i, j);
            match geometry.classify(p) {
                PointClass::Solid => solid += 1,
                PointClass::Boundary(s) => bnd2.push((p, s)),
                PointClass::Fluid => {
                    let full = loc::OFFSETS[1..]
                        .iter()
                        .all(|&(dx, dy)| geometry.is_fluid([p[0] + dx * h, p[1] + dy * h]));
                    if full {
                        fvm2.push((i, j));
                    } else {
                        ad2.push(p);
                    }
                }
            }
        }
    }
    if fvm2.is_empty() && ad2.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if let Some(w) = &geometry.walls {
        for i in 0..grid.nx {
            let x = at(i, 0)[0];
            let y = w.height(x);
            for (p, s) in [([x, y], Segment::UpperWall), ([x, -y], Segment::LowerWall)] {
                if !bnd2.iter().any(|(q, _)| *q == p) {
                    bnd2.push((p, s));
                }
            }
        }
    }
    for (k, s) in geometry.solids.iter().enumerate() {
        for p in s.boundary_samples(h, 0) {
            bnd2.push((p, Segment::Solid(k)));
        }
    }

    let t_of = |k: usize| dt.map_or(0.0, |dt| k as f64 * dt);
    let first = if dt.is_some() { 1 } else { 0 };
    let mut set = CollocationSet {
        h,
        dt,
        origin: [d.x0, d.y0],
        grid: *grid,
        fvm: Vec::new(),
        fvm_index: Vec::new(),
        ad: Vec::new(),
        boundary: Vec::new(),
        initial: Vec::new(),
        solid_count: solid,
    };
    for k in first..layers {
        let t = t_of(k);
        for &(i, j) in &fvm2 {
            let p = at(i, j);
            set.fvm.push([t, p[0], p[1]]);
            set.fvm_index.push(GridIndex { k, i, j });
        }
        set.ad.extend(ad2.iter().map(|p| [t, p[0], p[1]]));
    }
    for k in 0..layers {
        let t = t_of(k);
        set.boundary
            .extend(bnd2.iter().map(|&(p, segment)| BoundaryPoint { z: [t, p[0], p[1]], segment }));
    }
    if dt.is_some() {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let p = at(i, j);
                if geometry.classify(p) != PointClass::Solid {
                    set.initial.push([0.0, p[0], p[1]]);
                }
            }
        }
    }
    Ok(set)
}
