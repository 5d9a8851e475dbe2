//! Field export on regular grids: CSV and legacy VTK.

use std::fmt::Write as _;
use std::path::Path;

use simple_pinn_core::geometry::Rect;
use simple_pinn_core::training::postprocess;
use simple_pinn_core::NetworkModel;

use crate::checkpoint::write_atomic;
use crate::error::{CliError, Result};

/// Where to sample: an `nx * ny` lattice over `window` at each time in `times`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExportSpec {
    pub nx: usize,
    pub ny: usize,
    pub window: Rect,
    /// Empty for steady models.
    pub times: Vec<f64>,
    /// Free-stream pressure; adds a `cp` column when set.
    pub p_inf: Option<f64>,
}

/// Sampled fields, one row per point, rows ordered by `(t, y, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTable {
    pub columns: Vec<String>,
    pub data: Vec<f64>,
}

impl FieldTable {
    pub fn n_rows(&self) -> usize {
        self.data.len() / self.columns.len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.columns.len();
        &self.data[k * w..(k + 1) * w]
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some((0..self.n_rows()).map(|k| self.row(k)[c]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for k in 0..self.n_rows() {
            for (i, x) in self.row(k).iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{x:.16e}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

const CHUNK: usize = 4096;

pub fn sample_fields(model: &NetworkModel, spec: &ExportSpec) -> Result<FieldTable> {
    let cfg = model.config();
    let unsteady = cfg.input_dim == 3;
    if spec.nx == 0 || spec.ny == 0 {
        return Err(CliError::Config("export grid needs at least one point per axis".into()));
    }
    let w = spec.window;
    if !(w.x0 <= w.x1 && w.y0 <= w.y1) || [w.x0, w.x1, w.y0, w.y1].iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config("export window must be finite with x0 <= x1 and y0 <= y1".into()));
    }
    let [ix, iy] = cfg.spatial_inputs();
    let slack = 1e-9 * (cfg.input_upper[ix] - cfg.input_lower[ix]).max(cfg.input_upper[iy] - cfg.input_lower[iy]);
    if w.x0 < cfg.input_lower[ix] - slack
        || w.x1 > cfg.input_upper[ix] + slack
        || w.y0 < cfg.input_lower[iy] - slack
        || w.y1 > cfg.input_upper[iy] + slack
    {
        return Err(CliError::Config("export window lies outside the model domain".into()));
    }
    let times: Vec<Option<f64>> = match (unsteady, spec.times.is_empty()) {
        (false, true) => vec![None],
        (false, false) => return Err(CliError::Config("times given for a steady model".into())),
        (true, true) => return Err(CliError::Config("unsteady models need at least one export time".into())),
        (true, false) => {
            let (lo, hi) = (cfg.input_lower[0], cfg.input_upper[0]);
            if spec.times.iter().any(|t| !(*t >= lo - slack && *t <= hi + slack)) {
                return Err(CliError::Config(format!("export times must lie in [{lo}, {hi}]")));
            }
            spec.times.iter().map(|&t| Some(t)).collect()
        }
    };

    let mut columns: Vec<String> = vec!["x".into(), "y".into()];
    if unsteady {
        columns.push("t".into());
    }
    columns.extend(model.output_names());
    columns.extend(["V".into(), "omega".into()]);
    if spec.p_inf.is_some() {
        columns.push("cp".into());
    }

    let xs = axis(w.x0, w.x1, spec.nx);
    let ys = axis(w.y0, w.y1, spec.ny);
    let mut coords = Vec::with_capacity(times.len() * xs.len() * ys.len());
    for t in &times {
        for &y in &ys {
            for &x in &xs {
                coords.push((*t, x, y));
            }
        }
    }
    let mut data = Vec::with_capacity(coords.len() * columns.len());
    let mut input = Vec::new();
    for chunk in coords.chunks(CHUNK) {
        input.clear();
        for &(t, x, y) in chunk {
            if let Some(t) = t {
                input.push(t);
            }
            input.extend([x, y]);
        }
        let derived = postprocess(model, &input, spec.p_inf)?;
        for (&(t, x, y), d) in chunk.iter().zip(derived) {
            data.extend([x, y]);
            if let Some(t) = t {
                data.push(t);
            }
            data.extend(&d.values);
            data.extend([d.speed, d.vorticity]);
            if let Some(cp) = d.cp {
                data.push(cp);
            }
        }
    }
    if let Some(k) = data.iter().position(|v| !v.is_finite()) {
        let row = k / columns.len();
        return Err(CliError::NonFinite(format!("non-finite `{}` in exported row {row}", columns[k % columns.len()])));
    }
    Ok(FieldTable { columns, data })
}

pub fn write_csv(table: &FieldTable, path: &Path) -> Result<()> {
    write_atomic(path, table.to_csv().as_bytes())
}

/// Legacy VTK structured points, one file per time layer. Returns the paths.
pub fn write_vtk(table: &FieldTable, spec: &ExportSpec, stem: &Path) -> Result<Vec<std::path::PathBuf>> {
    let per_layer = spec.nx * spec.ny;
    let layers = table.n_rows() / per_layer;
    let dx = if spec.nx > 1 { (spec.window.x1 - spec.window.x0) / (spec.nx - 1) as f64 } else { 1.0 };
    let dy = if spec.ny > 1 { (spec.window.y1 - spec.window.y0) / (spec.ny - 1) as f64 } else { 1.0 };
    let skip = if spec.times.is_empty() { 2 } else { 3 };
    let mut paths = Vec::new();
    for l in 0..layers {
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\n");
        match spec.times.get(l) {
            Some(t) => writeln!(s, "simple-pinn fields t={t:.16e}").unwrap(),
            None => s.push_str("simple-pinn fields\n"),
        }
        s.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
        writeln!(s, "DIMENSIONS {} {} 1", spec.nx, spec.ny).unwrap();
        writeln!(s, "ORIGIN {:.16e} {:.16e} 0", spec.window.x0, spec.window.y0).unwrap();
        writeln!(s, "SPACING {dx:.16e} {dy:.16e} 1").unwrap();
        writeln!(s, "POINT_DATA {per_layer}").unwrap();
        for (c, name) in table.columns.iter().enumerate().skip(skip) {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for k in l * per_layer..(l + 1) * per_layer {
                writeln!(s, "{:.16e}", table.row(k)[c]).unwrap();
            }
        }
        let path = if layers == 1 {
            stem.with_extension("vtk")
        } else {
            let name = format!("{}_{l:04}.vtk", stem.file_stem().and_then(|s| s.to_str()).unwrap_or("fields"));
            stem.with_file_name(name)
        };
        write_atomic(&path, s.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}
