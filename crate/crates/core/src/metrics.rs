//! Reconstruction scores. `n_s` is the total entry count of the compared
//! matrices and `|.|` is the complex modulus throughout.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use faer::MatRef;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Default relative threshold for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    None,
    Adm,
    Ialm,
    Tls,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::None, Method::Adm, Method::Ialm, Method::Tls];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Adm => "adm",
            Method::Ialm => "ialm",
            Method::Tls => "tls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Method::None),
            "adm" => Ok(Method::Adm),
            "ialm" => Ok(Method::Ialm),
            "tls" => Ok(Method::Tls),
            other => Err(Error::Config(format!("unknown method `{other}` (expected none|adm|ialm|tls)"))),
        }
    }
}

fn same_shape(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> Result<()> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if a.nrows() * a.ncols() == 0 {
        return Err(Error::Shape("empty matrices".into()));
    }
    Ok(())
}

fn entries(m: MatRef<'_, Complex64>) -> impl Iterator<Item = Complex64> + '_ {
    (0..m.ncols()).flat_map(move |j| (0..m.nrows()).map(move |i| m[(i, j)]))
}

/// `sqrt(sum |pred - truth|^2 / n_s)`.
pub fn rmse(pred: MatRef<'_, Complex64>, truth: MatRef<'_, Complex64>) -> Result<f64> {
    same_shape(pred, truth)?;
    let n = (pred.nrows() * pred.ncols()) as f64;
    let sum: f64 = entries(pred).zip(entries(truth)).map(|(p, t)| (p - t).norm_sqr()).sum();
    Ok((sum / n).sqrt())
}

/// Mean absolute deviation from the (complex) mean.
fn mean_abs_deviation(m: MatRef<'_, Complex64>) -> f64 {
    let n = (m.nrows() * m.ncols()) as f64;
    // shifted by the first entry so a constant matrix gives exactly 0
    let pivot = m[(0, 0)];
    let mean = pivot + entries(m).map(|v| v - pivot).sum::<Complex64>() / n;
    entries(m).map(|v| (v - mean).norm()).sum::<f64>() / n
}

/// The radicand `1 - MAD(pred) / MAD(truth)` of [`cc_paper`].
pub fn cc_paper_radicand(pred: MatRef<'_, Complex64>, truth: MatRef<'_, Complex64>) -> Result<f64> {
    same_shape(pred, truth)?;
    let denom = mean_abs_deviation(truth);
    if denom == 0.0 {
        return Err(Error::Degenerate("ground truth has zero mean absolute deviation".into()));
    }
    Ok(1.0 - mean_abs_deviation(pred) / denom)
}

/// `sqrt(1 - MAD(pred) / MAD(truth))` evaluated literally, so a perfect
/// prediction scores 0 and a constant one scores 1. A negative radicand
/// yields NaN; check [`cc_paper_radicand`] to tell it apart.
pub fn cc_paper(pred: MatRef<'_, Complex64>, truth: MatRef<'_, Complex64>) -> Result<f64> {
    let radicand = cc_paper_radicand(pred, truth)?;
    Ok(if radicand < 0.0 { f64::NAN } else { radicand.sqrt() })
}

/// Sample correlation of the flattened data: real parts when `truth` is
/// real, moduli otherwise.
pub fn cc_pearson(pred: MatRef<'_, Complex64>, truth: MatRef<'_, Complex64>) -> Result<f64> {
    same_shape(pred, truth)?;
    let project: fn(Complex64) -> f64 = if linalg::is_real(truth) { |v| v.re } else { |v| v.norm() };
    let a: Vec<f64> = entries(pred).map(project).collect();
    let b: Vec<f64> = entries(truth).map(project).collect();
    pearson(&a, &b)
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("correlation of a constant sequence".into()));
    }
    Ok(sab / (saa.sqrt() * sbb.sqrt()))
}

/// `#{s_i > tol * s_1}`; zero for the zero matrix.
pub fn numerical_rank(x: MatRef<'_, Complex64>, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Value(format!("rank tolerance must lie in (0, 1), got {tol}")));
    }
    let s = linalg::singular_values(x)?;
    let s1 = s.first().copied().unwrap_or(0.0);
    if s1 == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|v| **v > tol * s1).count())
}

/// One row of the experiment CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub dataset: String,
    pub method: Method,
    pub snr_db: f64,
    pub seed: u64,
    pub rank_used: Option<usize>,
    pub rmse: Option<f64>,
    pub cc_paper: Option<f64>,
    pub cc_pearson: Option<f64>,
    pub filtered_rank: Option<usize>,
    pub error_series_path: String,
    /// Empty on success; the failure message of a cell otherwise.
    pub error: String,
}

pub const METRICS_HEADER: &str =
    "dataset,method,snr_db,seed,rank_used,rmse,cc_paper,cc_pearson,filtered_rank,error_series_path,error";

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl MetricsRecord {
    pub fn failed(&self) -> bool {
        !self.error.is_empty()
    }

    fn fields(&self) -> [String; 11] {
        [
            self.dataset.clone(),
            self.method.to_string(),
            self.snr_db.to_string(),
            self.seed.to_string(),
            fmt_opt(&self.rank_used),
            fmt_opt(&self.rmse),
            fmt_opt(&self.cc_paper),
            fmt_opt(&self.cc_pearson),
            fmt_opt(&self.filtered_rank),
            self.error_series_path.clone(),
            self.error.clone(),
        ]
    }
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER.split(','))?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

fn parse_opt<T: FromStr>(s: &str, col: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Schema(format!("cannot parse `{s}` in column {col}")))
}

pub fn read_metrics_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<&str> = METRICS_HEADER.split(',').collect();
    if header.len() < expected.len() - 1 || header.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(Error::Schema(format!("expected metrics header `{METRICS_HEADER}`, got `{}`", header.join(","))));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let get = |k: usize| row.get(k).unwrap_or("");
        out.push(MetricsRecord {
            dataset: get(0).to_string(),
            method: get(1).parse().map_err(|_| Error::Schema(format!("bad method `{}`", get(1))))?,
            snr_db: parse_opt(get(2), "snr_db")?.unwrap_or(f64::NAN),
            seed: parse_opt(get(3), "seed")?.unwrap_or(0),
            rank_used: parse_opt(get(4), "rank_used")?,
            rmse: parse_opt(get(5), "rmse")?,
            cc_paper: parse_opt(get(6), "cc_paper")?,
            cc_pearson: parse_opt(get(7), "cc_pearson")?,
            filtered_rank: parse_opt(get(8), "filtered_rank")?,
            error_series_path: get(9).to_string(),
            error: get(10).to_string(),
        });
    }
    Ok(out)
}

/// `t,epsilon` rows.
pub fn write_error_series_csv<W: Write>(times: &[f64], eps: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "epsilon"])?;
    for (t, e) in times.iter().zip(eps) {
        w.write_record([t.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,epsilon` file back as `(t, epsilon)` pairs.
pub fn read_error_series_csv<R: std::io::Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != ["t", "epsilon"] {
        return Err(Error::Schema(format!("expected header `t,epsilon`, got `{}`", header.join(","))));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let t = parse_opt(row.get(0).unwrap_or(""), "t")?.unwrap_or(f64::NAN);
        let e = parse_opt(row.get(1).unwrap_or(""), "epsilon")?.unwrap_or(f64::NAN);
        out.push((t, e));
    }
    Ok(out)
}
