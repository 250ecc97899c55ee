//! Observation containers, CSV ingestion, and sphere normalization.
//!
//! Normalization divides each covariate row and its response by the row's
//! Euclidean norm, so that `Yt_i = <beta_i, Xt_i>` whenever the raw data came
//! from the linear model exactly.

use crate::error::{Error, Result};
use crate::sphere::norm2;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Raw observations: covariate rows `x` (n by d) and responses `y` (length n).
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::data("dataset has no rows"));
        }
        if x.len() != y.len() {
            return Err(Error::data(format!(
                "covariate rows ({}) and responses ({}) disagree",
                x.len(),
                y.len()
            )));
        }
        let d = x[0].len();
        if d < 2 {
            return Err(Error::data(format!("covariate dimension must be >= 2, got {d}")));
        }
        for (i, row) in x.iter().enumerate() {
            if row.len() != d {
                return Err(Error::data(format!("row {i} has {} columns, expected {d}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::data(format!("row {i} has a non-finite covariate")));
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("row {i} has a non-finite response")));
        }
        Ok(Dataset { x, y })
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }
}

/// Normalized observations: unit-norm covariate rows `xt` and rescaled
/// responses `yt`.
#[derive(Debug, Clone)]
pub struct NormalizedDataset {
    xt: Vec<Vec<f64>>,
    yt: Vec<f64>,
}

impl NormalizedDataset {
    pub fn xt(&self) -> &[Vec<f64>] {
        &self.xt
    }

    pub fn yt(&self) -> &[f64] {
        &self.yt
    }

    pub fn len(&self) -> usize {
        self.yt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.yt.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xt[0].len()
    }

    /// The pseudo-points `Yt_i * Xt_i`; with k = n these are the exact
    /// minimizer support of the sliced objective.
    pub fn pseudo_points(&self) -> Vec<Vec<f64>> {
        self.xt
            .iter()
            .zip(&self.yt)
            .map(|(row, &yt)| row.iter().map(|&x| yt * x).collect())
            .collect()
    }
}

/// Divides each row and its response by the row norm. Rows with norm below
/// 1e-300 are reported as errors rather than dropped: silently removing them
/// would bias every downstream neighbor measure.
pub fn normalize(ds: &Dataset) -> Result<NormalizedDataset> {
    let mut xt = Vec::with_capacity(ds.len());
    let mut yt = Vec::with_capacity(ds.len());
    for (i, (row, &y)) in ds.x().iter().zip(ds.y()).enumerate() {
        let n = norm2(row);
        if n < 1e-300 {
            return Err(Error::data(format!("row {i} has zero-norm covariates")));
        }
        xt.push(row.iter().map(|&v| v / n).collect());
        yt.push(y / n);
    }
    Ok(NormalizedDataset { xt, yt })
}

/// Reads observations from a CSV file with mandatory header `x1,...,xd,y`.
pub fn read_observations_csv(path: &Path, d: usize) -> Result<Dataset> {
    if d < 2 {
        return Err(Error::invalid(format!("covariate dimension must be >= 2, got {d}")));
    }
    let mut expected: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    expected.push("y".to_string());
    let (x_and_y, _) = read_numeric_csv(path, &expected)?;
    let mut x = Vec::with_capacity(x_and_y.len());
    let mut y = Vec::with_capacity(x_and_y.len());
    for mut row in x_and_y {
        let yv = row.pop().expect("row width checked during parse");
        x.push(row);
        y.push(yv);
    }
    Dataset::new(x, y)
}

/// Parses a CSV file whose header must equal `expected` exactly and whose
/// cells must all be finite numbers. Returns the rows and the header line
/// count (always 1) for error reporting by callers.
pub(crate) fn read_numeric_csv(path: &Path, expected: &[String]) -> Result<(Vec<Vec<f64>>, u64)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::data(format!("cannot open {}: {e}", path.display())),
            _ => Error::Parse { line: 1, msg: e.to_string() },
        })?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
        let got: Vec<&str> = headers.iter().collect();
        if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header is {:?}, expected {:?}", got.join(","), expected.join(",")),
            });
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != expected.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", expected.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(expected.len());
        for (name, cell) in expected.iter().zip(record.iter()) {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("column {name}: cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("column {name}: non-finite value {cell:?}"),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok((rows, 1))
}

/// Formats a float with 17 significant digits, enough for exact f64
/// round-trips through text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes points as CSV with header `w1,...,wd` at full round-trip precision.
pub fn write_points_csv(points: &[Vec<f64>], path: &Path) -> Result<()> {
    let d = points.first().map_or(0, |p| p.len());
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::invalid("points have mixed dimensions"));
    }
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    let header: Vec<String> = (1..=d.max(1)).map(|j| format!("w{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in points {
        let cells: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a points file written by [`write_points_csv`].
pub fn read_points_csv(path: &Path, d: usize) -> Result<Vec<Vec<f64>>> {
    let expected: Vec<String> = (1..=d).map(|j| format!("w{j}")).collect();
    let (rows, _) = read_numeric_csv(path, &expected)?;
    Ok(rows)
}
