//! Closed-form flow fields with exact derivatives, used as oracles and as
//! clamped models.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::field::FieldModel;
use crate::math;
use crate::network::{DerivSpec, Jets, OutputVar};
use crate::{Error, Result};

/// Value, gradient and Hessian of one scalar over `(t, x, y)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Local {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

/// `c + g.z + z.H.z / 2` over `z = (t, x, y)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quadratic {
    pub c: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Quadratic {
    pub fn constant(c: f64) -> Self {
        Quadratic { c, ..Default::default() }
    }

    /// `c + gx x + gy y`.
    pub fn linear(c: f64, gx: f64, gy: f64) -> Self {
        Quadratic {
            c,
            g: [0.0, gx, gy],
            ..Default::default()
        }
    }

    fn local(&self, z: [f64; 3]) -> Local {
        let mut out = Local {
            value: self.c,
            grad: self.g,
            hess: self.h,
        };
        for i in 0..3 {
            out.value += self.g[i] * z[i];
            for j in 0..3 {
                out.value += 0.5 * z[i] * self.h[i][j] * z[j];
                out.grad[i] += self.h[i][j] * z[j];
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Kind {
    /// Steady Kovasznay flow at the given Reynolds number.
    Kovasznay { re: f64 },
    /// Decaying Taylor-Green vortex with viscosity `nu`.
    TaylorGreen { nu: f64 },
    /// One polynomial per output.
    Polynomial(Vec<Quadratic>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticField {
    kind: Kind,
    input_dim: usize,
    outputs: Vec<OutputVar>,
}

impl AnalyticField {
    /// `u = 1 - e^{lx} cos 2 pi y`, `v = l/(2 pi) e^{lx} sin 2 pi y`,
    /// `p = (1 - e^{2lx}) / 2` with `l = Re/2 - sqrt(Re^2/4 + 4 pi^2)`.
    pub fn kovasznay(re: f64) -> Self {
        AnalyticField {
            kind: Kind::Kovasznay { re },
            input_dim: 2,
            outputs: vec![OutputVar::U, OutputVar::V, OutputVar::P],
        }
    }

    /// `u = F sin x cos y`, `v = -F cos x sin y`, `p = F^2 (cos 2x + cos 2y) / 4`
    /// with `F = e^{-2 nu t}`. Steady when `input_dim == 2`.
    pub fn taylor_green(nu: f64, input_dim: usize) -> Result<Self> {
        Self::checked(Kind::TaylorGreen { nu }, input_dim, vec![OutputVar::U, OutputVar::V, OutputVar::P])
    }

    pub fn polynomial(input_dim: usize, outputs: Vec<OutputVar>, parts: Vec<Quadratic>) -> Result<Self> {
        if parts.len() != outputs.len() {
            return Err(Error::LengthMismatch {
                expected: outputs.len(),
                got: parts.len(),
            });
        }
        Self::checked(Kind::Polynomial(parts), input_dim, outputs)
    }

    pub fn constant(input_dim: usize, outputs: Vec<OutputVar>, values: &[f64]) -> Result<Self> {
        let parts = values.iter().map(|&c| Quadratic::constant(c)).collect();
        Self::polynomial(input_dim, outputs, parts)
    }

    /// Plane Couette flow `u = y`, `v = 0`, `p = 0`.
    pub fn couette() -> Self {
        Self::polynomial(
            2,
            vec![OutputVar::U, OutputVar::V, OutputVar::P],
            vec![Quadratic::linear(0.0, 0.0, 1.0), Quadratic::constant(0.0), Quadratic::constant(0.0)],
        )
        .expect("valid")
    }

    /// Solid-body rotation `u = -y`, `v = x`, `p = (x^2 + y^2) / 2`.
    pub fn rigid_rotation() -> Self {
        let mut p = Quadratic::constant(0.0);
        p.h[1][1] = 1.0;
        p.h[2][2] = 1.0;
        Self::polynomial(
            2,
            vec![OutputVar::U, OutputVar::V, OutputVar::P],
            vec![Quadratic::linear(0.0, 0.0, -1.0), Quadratic::linear(0.0, 1.0, 0.0), p],
        )
        .expect("valid")
    }

    fn checked(kind: Kind, input_dim: usize, outputs: Vec<OutputVar>) -> Result<Self> {
        if !(2..=3).contains(&input_dim) {
            return Err(Error::config("input dimension must be 2 or 3"));
        }
        Ok(AnalyticField { kind, input_dim, outputs })
    }

    /// Same field with a different input dimension (time ignored or added).
    pub fn with_input_dim(mut self, input_dim: usize) -> Result<Self> {
        if !(2..=3).contains(&input_dim) {
            return Err(Error::config("input dimension must be 2 or 3"));
        }
        self.input_dim = input_dim;
        Ok(self)
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Local expansion of output `o` at `(t, x, y)`.
    pub fn local(&self, o: usize, z: [f64; 3]) -> Local {
        let var = self.outputs[o];
        match &self.kind {
            Kind::Polynomial(parts) => parts[o].local(z),
            Kind::Kovasznay { re } => kovasznay(*re, var, z[1], z[2]),
            Kind::TaylorGreen { nu } => {
                let nu = if self.input_dim == 3 { *nu } else { 0.0 };
                taylor_green(nu, var, z)
            }
        }
    }

    /// Values of every output at `(t, x, y)`.
    pub fn values_at(&self, z: [f64; 3]) -> Vec<f64> {
        (0..self.outputs.len()).map(|o| self.local(o, z).value).collect()
    }

    fn axes(&self) -> [usize; 3] {
        // input index -> axis of (t, x, y)
        if self.input_dim == 3 {
            [0, 1, 2]
        } else {
            [1, 2, 0]
        }
    }
}

fn kovasznay(re: f64, var: OutputVar, x: f64, y: f64) -> Local {
    let l = re / 2.0 - math::sqrt(re * re / 4.0 + 4.0 * PI * PI);
    let k = 2.0 * PI;
    let e = math::exp(l * x);
    let (s, c) = math::sin_cos(k * y);
    let mut out = Local::default();
    let (v0, gx, gy, hxx, hxy, hyy) = match var {
        OutputVar::U => (1.0 - e * c, -l * e * c, k * e * s, -l * l * e * c, l * k * e * s, k * k * e * c),
        OutputVar::V => (
            l / k * e * s,
            l * l / k * e * s,
            l * e * c,
            l * l * l / k * e * s,
            l * l * e * c,
            -l * k * e * s,
        ),
        OutputVar::P => (0.5 * (1.0 - e * e), -l * e * e, 0.0, -2.0 * l * l * e * e, 0.0, 0.0),
        OutputVar::T => (0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    };
    out.value = v0;
    out.grad = [0.0, gx, gy];
    out.hess = [[0.0; 3], [0.0, hxx, hxy], [0.0, hxy, hyy]];
    out
}

fn taylor_green(nu: f64, var: OutputVar, z: [f64; 3]) -> Local {
    let [t, x, y] = z;
    let f = math::exp(-2.0 * nu * t);
    let (sx, cx) = math::sin_cos(x);
    let (sy, cy) = math::sin_cos(y);
    let mut out = Local::default();
    match var {
        OutputVar::U => {
            let base = [sx * cy, cx * cy, -sx * sy];
            let hs = [[-sx * cy, -cx * sy], [-cx * sy, -sx * cy]];
            fill_separable(&mut out, f, -2.0 * nu, base, hs);
        }
        OutputVar::V => {
            let base = [-cx * sy, sx * sy, -cx * cy];
            let hs = [[cx * sy, sx * cy], [sx * cy, cx * sy]];
            fill_separable(&mut out, f, -2.0 * nu, base, hs);
        }
        OutputVar::P => {
            let g = f * f;
            let (s2x, c2x) = math::sin_cos(2.0 * x);
            let (s2y, c2y) = math::sin_cos(2.0 * y);
            let q = 0.25 * (c2x + c2y);
            let base = [q, -0.5 * s2x, -0.5 * s2y];
            let hs = [[-c2x, 0.0], [0.0, -c2y]];
            fill_separable(&mut out, g, -4.0 * nu, base, hs);
        }
        OutputVar::T => {}
    }
    out
}

/// `phi = a(t) q(x, y)` with `a' = r a`; `base = [q, q_x, q_y]`, `hs` the
/// spatial Hessian of `q`.
fn fill_separable(out: &mut Local, a: f64, r: f64, base: [f64; 3], hs: [[f64; 2]; 2]) {
    out.value = a * base[0];
    out.grad = [r * a * base[0], a * base[1], a * base[2]];
    out.hess[0][0] = r * r * a * base[0];
    for i in 0..2 {
        out.hess[0][i + 1] = r * a * base[i + 1];
        out.hess[i + 1][0] = r * a * base[i + 1];
        for j in 0..2 {
            out.hess[i + 1][j + 1] = a * hs[i][j];
        }
    }
}

impl FieldModel for AnalyticField {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn outputs(&self) -> &[OutputVar] {
        &self.outputs
    }

    fn evaluate(&self, points: &[f64], spec: &DerivSpec) -> Result<Jets> {
        let d = self.input_dim;
        if points.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: points.len() % d,
            });
        }
        if spec.first().iter().any(|&i| i >= d) {
            return Err(Error::config("derivative input out of range"));
        }
        let n = points.len() / d;
        let axes = self.axes();
        let mut jets = Jets::zeros(spec.clone(), n, self.outputs.len());
        for k in 0..n {
            let mut z = [0.0; 3];
            for i in 0..d {
                z[axes[i]] = points[k * d + i];
            }
            for o in 0..self.outputs.len() {
                let loc = self.local(o, z);
                *jets.value_mut(k, o) = loc.value;
                for &i in spec.first() {
                    *jets.d1_mut(k, o, i) = loc.grad[axes[i]];
                }
                for &(i, j) in spec.second() {
                    *jets.d2_mut(k, o, i, j) = loc.hess[axes[i]][axes[j]];
                }
            }
        }
        Ok(jets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_fd(field: &AnalyticField, z: [f64; 3]) {
        let h = 1e-5;
        for o in 0..field.outputs.len() {
            let loc = field.local(o, z);
            for i in 0..3 {
                let mut a = z;
                let mut b = z;
                a[i] += h;
                b[i] -= h;
                let la = field.local(o, a);
                let lb = field.local(o, b);
                let fd = (la.value - lb.value) / (2.0 * h);
                assert!((loc.grad[i] - fd).abs() < 1e-7 * (1.0 + fd.abs()), "grad {o} {i}");
                for j in 0..3 {
                    let fd2 = (la.grad[j] - lb.grad[j]) / (2.0 * h);
                    assert!((loc.hess[i][j] - fd2).abs() < 1e-6 * (1.0 + fd2.abs()), "hess {o} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        check_fd(&AnalyticField::kovasznay(40.0), [0.0, 0.3, 0.7]);
        check_fd(&AnalyticField::taylor_green(0.05, 3).unwrap(), [0.4, 0.9, -1.3]);
        check_fd(&AnalyticField::rigid_rotation(), [0.0, 0.2, -0.5]);
    }

    #[test]
    fn jets_follow_input_layout() {
        let f = AnalyticField::taylor_green(0.1, 3).unwrap();
        let spec = DerivSpec::new(vec![0, 1, 2], vec![(0, 1), (2, 2)]).unwrap();
        let j = f.evaluate(&[0.5, 0.2, 0.3], &spec).unwrap();
        let loc = f.local(0, [0.5, 0.2, 0.3]);
        assert_eq!(j.d1(0, 0, 0), loc.grad[0]);
        assert_eq!(j.d2(0, 0, 0, 1), loc.hess[0][1]);
        assert_eq!(j.d2(0, 0, 2, 2), loc.hess[2][2]);
        let s = AnalyticField::kovasznay(40.0);
        let spec = DerivSpec::new(vec![0, 1], vec![]).unwrap();
        let j = s.evaluate(&[0.1, 0.2], &spec).unwrap();
        assert_eq!(j.d1(0, 1, 1), s.local(1, [0.0, 0.1, 0.2]).grad[2]);
    }
}
