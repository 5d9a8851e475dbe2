//! Error metrics of a model against reference data.

use serde::{Deserialize, Serialize};
use simple_pinn_core::training::{demean, mse, postprocess, relative_l2};
use simple_pinn_core::NetworkModel;

use crate::error::{CliError, Result};
use crate::reference::Reference;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableError {
    pub name: String,
    /// `None` when the reference is identically zero.
    pub relative_l2: Option<f64>,
    pub mse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n_points: usize,
    /// Pressure is compared after removing the mean of each field.
    pub pressure_demeaned: bool,
    pub variables: Vec<VariableError>,
}

/// Model predictions at the reference points for each reference variable.
pub fn predict(model: &NetworkModel, reference: &Reference, p_inf: Option<f64>) -> Result<Vec<(String, Vec<f64>)>> {
    let cfg = model.config();
    let dim = cfg.input_dim;
    if reference.has_time != (dim == 3) {
        return Err(CliError::Reference(if dim == 3 {
            "unsteady model needs a `t` column".into()
        } else {
            "steady model given a reference with a `t` column".into()
        }));
    }
    for pt in reference.points.chunks(dim) {
        for (d, &c) in pt.iter().enumerate() {
            let (lo, hi) = (cfg.input_lower[d], cfg.input_upper[d]);
            let slack = 1e-9 * (hi - lo);
            if c < lo - slack || c > hi + slack {
                return Err(CliError::Reference(format!(
                    "reference point {pt:?} lies outside the model domain [{lo}, {hi}] on axis {d}"
                )));
            }
        }
    }
    let derived = postprocess(model, &reference.points, p_inf)?;
    let names = model.output_names();
    reference
        .variables
        .iter()
        .map(|(name, _)| {
            let pick: Box<dyn Fn(&simple_pinn_core::training::DerivedPoint) -> Option<f64>> = match name.as_str() {
                "V" => Box::new(|d| Some(d.speed)),
                "omega" => Box::new(|d| Some(d.vorticity)),
                "cp" => Box::new(|d| d.cp),
                n => {
                    let k = names.iter().position(|m| m == n);
                    Box::new(move |d| k.map(|k| d.values[k]))
                }
            };
            let vals = derived
                .iter()
                .map(|d| pick(d).ok_or_else(|| CliError::Reference(format!("model cannot predict `{name}`"))))
                .collect::<Result<Vec<f64>>>()?;
            Ok((name.clone(), vals))
        })
        .collect()
}

pub fn evaluate(model: &NetworkModel, reference: &Reference, p_inf: Option<f64>) -> Result<Report> {
    let pred = predict(model, reference, p_inf)?;
    let mut variables = Vec::new();
    for ((name, p), (_, r)) in pred.iter().zip(&reference.variables) {
        let (p, r) = if name == "p" { (demean(p), demean(r)) } else { (p.clone(), r.clone()) };
        variables.push(VariableError {
            name: name.clone(),
            relative_l2: relative_l2(&p, &r).ok(),
            mse: mse(&p, &r)?,
        });
    }
    Ok(Report {
        n_points: reference.len(),
        pressure_demeaned: true,
        variables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::export::{sample_fields, ExportSpec};
    use simple_pinn_core::geometry::Rect;
    use simple_pinn_core::{NetworkConfig, OutputVar};

    fn model() -> NetworkModel {
        let mut cfg = NetworkConfig::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![OutputVar::U, OutputVar::V, OutputVar::P]);
        cfg.shared_widths = vec![6];
        cfg.head_widths = vec![4];
        cfg.embedding.num_frequencies = 3;
        NetworkModel::new(cfg, 5).unwrap()
    }

    fn exported(m: &NetworkModel) -> String {
        let spec = ExportSpec {
            nx: 4,
            ny: 3,
            window: Rect::new(0.0, 1.0, 0.0, 1.0),
            times: vec![],
            p_inf: Some(0.0),
        };
        sample_fields(m, &spec).unwrap().to_csv()
    }

    #[test]
    fn own_export_has_zero_error() {
        let m = model();
        let r = Reference::parse(&exported(&m)).unwrap();
        let rep = evaluate(&m, &r, Some(0.0)).unwrap();
        assert_eq!(rep.n_points, 12);
        let names: Vec<_> = rep.variables.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["u", "v", "p", "V", "omega", "cp"]);
        for v in &rep.variables {
            assert_eq!(v.mse, 0.0, "{}", v.name);
            assert_eq!(v.relative_l2, Some(0.0), "{}", v.name);
        }
    }

    #[test]
    fn one_perturbed_row() {
        let m = model();
        let mut r = Reference::parse(&exported(&m)).unwrap();
        let u = &mut r.variables[0].1;
        u[5] += 0.25;
        let pert_norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rep = evaluate(&m, &r, None).unwrap_err();
        assert!(rep.to_string().contains("cp"));
        r.variables.retain(|(n, _)| n != "cp");
        let rep = evaluate(&m, &r, None).unwrap();
        let e = &rep.variables[0];
        assert_eq!(e.mse, 0.0625 / 12.0);
        assert!((e.relative_l2.unwrap() - 0.25 / pert_norm).abs() <= 1e-15);
        assert!(rep.variables[1..].iter().all(|v| v.mse == 0.0));
    }

    #[test]
    fn pressure_gauge_is_removed() {
        let m = model();
        let mut r = Reference::parse(&exported(&m)).unwrap();
        r.variables.retain(|(n, _)| n == "p");
        for p in &mut r.variables[0].1 {
            *p += 3.0;
        }
        let rep = evaluate(&m, &r, None).unwrap();
        assert!(rep.variables[0].mse < 1e-28);
    }

    #[test]
    fn domain_mismatch() {
        let r = Reference::parse("x,y,u\n0.5,1.5,0\n").unwrap();
        assert!(matches!(evaluate(&model(), &r, None), Err(CliError::Reference(_))));
        let r = Reference::parse("t,x,y,u\n0,0.5,0.5,0\n").unwrap();
        assert!(evaluate(&model(), &r, None).is_err());
    }
}
