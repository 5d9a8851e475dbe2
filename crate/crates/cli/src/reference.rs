//! Reference data ingest: CSV with `x,y[,t]` coordinate columns and any of
//! the variable columns `u, v, p, T, V, omega, cp`. Lines starting with `#`
//! are comments.

use std::path::Path;

use crate::error::{CliError, Result};

pub const VARIABLES: [&str; 7] = ["u", "v", "p", "T", "V", "omega", "cp"];

#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    /// Flat `(x, y)` or `(t, x, y)` tuples in model input order.
    pub points: Vec<f64>,
    pub has_time: bool,
    /// `(name, values)` in file column order.
    pub variables: Vec<(String, Vec<f64>)>,
}

impl Reference {
    pub fn len(&self) -> usize {
        self.points.len() / if self.has_time { 3 } else { 2 }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: String| CliError::Reference(m);
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
        let find = |name: &str| header.iter().position(|h| h == name);
        for (i, h) in header.iter().enumerate() {
            if header[..i].contains(h) {
                return Err(bad(format!("duplicate column `{h}`")));
            }
            if !(["x", "y", "t"].contains(&h.as_str()) || VARIABLES.contains(&h.as_str())) {
                return Err(bad(format!("unknown column `{h}`")));
            }
        }
        let (Some(cx), Some(cy)) = (find("x"), find("y")) else {
            return Err(bad("reference needs `x` and `y` columns".into()));
        };
        let ct = find("t");
        let vars: Vec<(usize, String)> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| VARIABLES.contains(&h.as_str()))
            .map(|(i, h)| (i, h.clone()))
            .collect();
        if vars.is_empty() {
            return Err(bad("reference has no variable columns".into()));
        }
        let mut points = Vec::new();
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); vars.len()];
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let num = |c: usize| -> Result<f64> {
                let s = rec.get(c).unwrap_or("");
                let v: f64 = s.parse().map_err(|_| bad(format!("row {}: `{s}` is not a number", r + 1)))?;
                if !v.is_finite() {
                    return Err(bad(format!("row {}: non-finite value", r + 1)));
                }
                Ok(v)
            };
            if let Some(ct) = ct {
                points.push(num(ct)?);
            }
            points.extend([num(cx)?, num(cy)?]);
            for (k, (c, _)) in vars.iter().enumerate() {
                values[k].push(num(*c)?);
            }
        }
        if points.is_empty() {
            return Err(bad("reference has no data rows".into()));
        }
        Ok(Reference {
            points,
            has_time: ct.is_some(),
            variables: vars.into_iter().map(|(_, n)| n).zip(values).collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Reference(m) => CliError::Reference(format!("{}: {m}", path.display())),
            e => e,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_field_file() {
        let r = Reference::parse("# comment\nx, y, u ,p\n0,1,2,3\n0.5,0.25,-1,4e-1\n").unwrap();
        assert!(!r.has_time);
        assert_eq!(r.points, [0.0, 1.0, 0.5, 0.25]);
        assert_eq!(r.variables, [("u".to_string(), vec![2.0, -1.0]), ("p".to_string(), vec![3.0, 0.4])]);
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn time_goes_first() {
        let r = Reference::parse("x,y,t,v\n1,2,3,4\n").unwrap();
        assert!(r.has_time);
        assert_eq!(r.points, [3.0, 1.0, 2.0]);
    }

    #[test]
    fn schema_errors() {
        for text in ["", "x,y,u\n", "x,u\n1,2\n", "x,y\n1,2\n", "x,y,q\n1,2,3\n", "x,y,u,u\n1,2,3,4\n", "x,y,u\n1,2,abc\n", "x,y,u\n1,2,NaN\n", "x,y,u\n1,2\n"] {
            assert!(matches!(Reference::parse(text), Err(CliError::Reference(_))), "{text:?}");
        }
    }
}
