//! Trajectory files.
//!
//! CSV: header `t,f,penalty,residual,x_0_0,x_0_1,...,x_{n-1}_{p-1}` (entries
//! of `X` row-major), one line per sample, values printed with Rust's
//! shortest round-trip `f64` formatting (`{:?}`), `\n` line endings.
//!
//! JSON: `{"field","lambda","n","p","terminated_by","samples":[{"t","f",
//! "penalty","residual","x":[row-major entries]}]}` written compactly by
//! `serde_json`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Sample, Termination, Trajectory};
use crate::error::{Error, Result};
use crate::landing::FieldKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryFormat {
    Csv,
    Json,
}

impl TrajectoryFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TrajectoryFormat::Csv => "csv",
            TrajectoryFormat::Json => "json",
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(TrajectoryFormat::Csv),
            "json" => Some(TrajectoryFormat::Json),
            _ => None,
        }
    }
}

impl std::str::FromStr for TrajectoryFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TrajectoryFormat::Csv),
            "json" => Ok(TrajectoryFormat::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

fn row_major(x: &DMatrix<f64>) -> Vec<f64> {
    let (n, p) = x.shape();
    let mut out = Vec::with_capacity(n * p);
    for i in 0..n {
        for j in 0..p {
            out.push(x[(i, j)]);
        }
    }
    out
}

pub fn write_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let (n, p) = traj.shape();
    let mut w = BufWriter::new(w);
    write!(w, "t,f,penalty,residual")?;
    for i in 0..n {
        for j in 0..p {
            write!(w, ",x_{i}_{j}")?;
        }
    }
    writeln!(w)?;
    for s in &traj.samples {
        write!(w, "{:?},{:?},{:?},{:?}", s.t, s.f, s.penalty, s.residual)?;
        for v in row_major(&s.x) {
            write!(w, ",{v:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_header(header: &csv::StringRecord) -> Result<(usize, usize)> {
    let fixed = ["t", "f", "penalty", "residual"];
    if header.len() < 5 || header.iter().take(4).ne(fixed.iter().copied()) {
        return Err(Error::Parse("CSV header must start with t,f,penalty,residual,x_0_0".into()));
    }
    let last = header.get(header.len() - 1).unwrap_or_default();
    let dims: Vec<usize> = last
        .strip_prefix("x_")
        .map(|rest| rest.split('_').filter_map(|d| d.parse().ok()).collect())
        .unwrap_or_default();
    let (n, p) = match dims.as_slice() {
        [i, j] => (i + 1, j + 1),
        _ => return Err(Error::Parse(format!("bad matrix column '{last}'"))),
    };
    let expected = (0..n).flat_map(|i| (0..p).map(move |j| format!("x_{i}_{j}")));
    if header.len() != 4 + n * p || !header.iter().skip(4).eq(expected) {
        return Err(Error::Parse("matrix columns are not x_0_0..x_{n-1}_{p-1} row-major".into()));
    }
    Ok((n, p))
}

/// CSV does not record the field or `λ`; the caller supplies them.
pub fn read_csv<R: Read>(r: R, field: FieldKind, lambda: f64) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let (n, p) = parse_header(reader.headers()?)?;
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let vals: Vec<f64> = record
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("'{v}': {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() != 4 + n * p {
            return Err(Error::Parse("row length does not match header".into()));
        }
        samples.push(Sample {
            t: vals[0],
            f: vals[1],
            penalty: vals[2],
            residual: vals[3],
            x: DMatrix::from_row_slice(n, p, &vals[4..]),
        });
    }
    if samples.is_empty() {
        return Err(Error::Parse("trajectory has no samples".into()));
    }
    Ok(Trajectory {
        field,
        lambda,
        samples,
        terminated_by: None,
    })
}

#[derive(Serialize, Deserialize)]
struct JsonSample {
    t: f64,
    f: f64,
    penalty: f64,
    residual: f64,
    x: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonTrajectory {
    field: FieldKind,
    lambda: f64,
    n: usize,
    p: usize,
    terminated_by: Option<Termination>,
    samples: Vec<JsonSample>,
}

pub fn write_json<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let (n, p) = traj.shape();
    let doc = JsonTrajectory {
        field: traj.field,
        lambda: traj.lambda,
        n,
        p,
        terminated_by: traj.terminated_by,
        samples: traj
            .samples
            .iter()
            .map(|s| JsonSample {
                t: s.t,
                f: s.f,
                penalty: s.penalty,
                residual: s.residual,
                x: row_major(&s.x),
            })
            .collect(),
    };
    let mut w = BufWriter::new(w);
    serde_json::to_writer(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<R: Read>(r: R) -> Result<Trajectory> {
    let doc: JsonTrajectory = serde_json::from_reader(r)?;
    let samples = doc
        .samples
        .into_iter()
        .map(|s| {
            if s.x.len() != doc.n * doc.p {
                return Err(Error::Parse("sample matrix size does not match n×p".into()));
            }
            Ok(Sample {
                t: s.t,
                f: s.f,
                penalty: s.penalty,
                residual: s.residual,
                x: DMatrix::from_row_slice(doc.n, doc.p, &s.x),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if samples.is_empty() {
        return Err(Error::Parse("trajectory has no samples".into()));
    }
    Ok(Trajectory {
        field: doc.field,
        lambda: doc.lambda,
        samples,
        terminated_by: doc.terminated_by,
    })
}

pub fn write_trajectory_file(traj: &Trajectory, path: &Path, format: TrajectoryFormat) -> Result<()> {
    let file = File::create(path)?;
    match format {
        TrajectoryFormat::Csv => write_csv(traj, file),
        TrajectoryFormat::Json => write_json(traj, file),
    }
}

/// Reads by extension; `field` and `lambda` are used for CSV only.
pub fn read_trajectory_file(path: &Path, field: FieldKind, lambda: f64) -> Result<Trajectory> {
    let format = TrajectoryFormat::from_path(path)
        .ok_or_else(|| Error::Config(format!("cannot infer format of {}", path.display())))?;
    let file = BufReader::new(File::open(path)?);
    match format {
        TrajectoryFormat::Csv => read_csv(file, field, lambda),
        TrajectoryFormat::Json => read_json(file),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Trajectory {
        Trajectory {
            field: FieldKind::Landing,
            lambda: 0.5,
            samples: vec![
                Sample {
                    t: 0.0,
                    x: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 0.1]),
                    f: -1.25,
                    penalty: 3.0e-17,
                    residual: 1.0 / 3.0,
                },
                Sample {
                    t: 0.01,
                    x: DMatrix::from_row_slice(2, 2, &[1.0, 2.5, 3.0, 1e-300]),
                    f: 2.0,
                    penalty: 0.0,
                    residual: 1e20,
                },
            ],
            terminated_by: Some(Termination::TMax),
        }
    }

    #[test]
    fn csv_layout_is_exact() {
        let mut buf = Vec::new();
        write_csv(&tiny(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,f,penalty,residual,x_0_0,x_0_1,x_1_0,x_1_1");
        assert_eq!(lines.next().unwrap(), "0.0,-1.25,3e-17,0.3333333333333333,1.0,2.0,3.0,0.1");
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn csv_header_errors() {
        let bad = "t,f,penalty,residual,x_0_0,x_1_1\n0,0,0,0,1,1\n";
        assert!(read_csv(bad.as_bytes(), FieldKind::Landing, 1.0).is_err());
        let bad = "a,b\n1,2\n";
        assert!(read_csv(bad.as_bytes(), FieldKind::Landing, 1.0).is_err());
    }

    #[test]
    fn json_keeps_metadata() {
        let mut buf = Vec::new();
        write_json(&tiny(), &mut buf).unwrap();
        let back = read_json(buf.as_slice()).unwrap();
        assert_eq!(back, tiny());
    }
}
