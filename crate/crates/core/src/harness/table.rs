//! Error tables, order estimation and their CSV and metadata files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Which discretization parameter the rows are indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abscissa {
    Dt,
    MeshSize,
}

impl Abscissa {
    pub fn column(self) -> &'static str {
        match self {
            Abscissa::Dt => "dt",
            Abscissa::MeshSize => "h",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    /// `dt` or `h`.
    pub step: f64,
    pub rms_error: f64,
    /// `log2(e_{k-1} / e_k) / log2(step_{k-1} / step_k)`; absent on the first row.
    pub pairwise_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub abscissa: Abscissa,
    pub rows: Vec<ErrorRow>,
    /// Least-squares slope over the rows with positive error.
    pub global_order: Option<f64>,
    pub samples_used: usize,
    /// `key = value` pairs written to the metadata file.
    pub metadata: Vec<(String, String)>,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `sqrt(mean(e^2))` with compensated summation in the given order.
pub fn root_mean_square(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return f64::NAN;
    }
    let mut acc = CompensatedSum::default();
    for e in errors {
        acc.add(e * e);
    }
    (acc.value() / errors.len() as f64).sqrt()
}

/// Least-squares slope of `log2(error)` against `log2(step)`.
pub fn estimate_order(rows: &[(f64, f64)]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::DegenerateRegression(format!("{} rows, need at least 2", rows.len())));
    }
    if let Some(&(s, e)) = rows.iter().find(|&&(s, e)| !(s > 0.0 && e > 0.0)) {
        return Err(Error::DegenerateRegression(format!(
            "nonpositive entry (step {s}, error {e})"
        )));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.0.log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-24 * xs.iter().map(|x| x * x).sum::<f64>().max(1.0) {
        return Err(Error::DegenerateRegression("all step sizes are equal".into()));
    }
    Ok(sxy / sxx)
}

impl ErrorTable {
    /// Rows sorted by decreasing step, pairwise orders and the global slope.
    pub fn from_errors(abscissa: Abscissa, mut points: Vec<(f64, f64)>, samples_used: usize) -> Self {
        points.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut rows: Vec<ErrorRow> = Vec::with_capacity(points.len());
        for (k, &(step, e)) in points.iter().enumerate() {
            let pairwise_order = (k > 0)
                .then(|| points[k - 1])
                .filter(|&(s0, e0)| e0 > 0.0 && e > 0.0 && s0 > step)
                .map(|(s0, e0)| (e0 / e).log2() / (s0 / step).log2());
            rows.push(ErrorRow {
                step,
                rms_error: e,
                pairwise_order,
            });
        }
        let positive: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 > 0.0).collect();
        Self {
            abscissa,
            rows,
            global_order: estimate_order(&positive).ok(),
            samples_used,
            metadata: Vec::new(),
        }
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    /// Header `dt,rms_error,pairwise_order` (or `h,...`); missing orders are empty.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},rms_error,pairwise_order\n", self.abscissa.column());
        for r in &self.rows {
            let order = r.pairwise_order.map(|o| format!("{o:.17e}")).unwrap_or_default();
            let _ = writeln!(s, "{:.17e},{:.17e},{order}", r.step, r.rms_error);
        }
        s
    }

    pub fn metadata_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Writes `<stem>.csv` and `<stem>.meta` into `dir`; returns the CSV path.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        fs::write(&csv, self.to_csv())?;
        fs::write(dir.join(format!("{stem}.meta")), self.metadata_text())?;
        Ok(csv)
    }

    /// Parses a CSV written by [`Self::to_csv`]; orders and metadata are recomputed.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let abscissa = match header.split(',').next() {
            Some("dt") => Abscissa::Dt,
            Some("h") => Abscissa::MeshSize,
            _ => return Err(Error::Io(format!("unexpected CSV header `{header}`"))),
        };
        let mut points = Vec::new();
        for l in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = l.split(',').collect();
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Io(format!("bad CSV row `{l}`")));
            if f.len() != 3 {
                return Err(Error::Io(format!("bad CSV row `{l}`")));
            }
            points.push((parse(f[0])?, parse(f[1])?));
        }
        Ok(Self::from_errors(abscissa, points, 0))
    }
}
