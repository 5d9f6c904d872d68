//! Exact DMD.
//!
//! With `X1 = U S V*` truncated to rank `r`, the projected operator is
//! `A~ = U* X2 V S^-1`; its eigenpairs `A~ W = W L` give the modes
//! `Phi = X2 V S^-1 W`, the amplitudes `b = pinv(Phi) x1` and the
//! continuous exponents `omega = ln(lambda) / dt`. The model evaluates
//! `x(t) = Phi exp(omega (t - t0)) b`.

use faer::MatRef;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::snapshots::SplitPair;

/// Singular values below this fraction of the largest make the fit singular.
pub const SINGULAR_CUTOFF: f64 = 1e-12;
/// Default cumulative-energy fraction for automatic rank selection.
pub const DEFAULT_ENERGY: f64 = 0.999;

#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

impl SvdTriple {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> CMat {
        let us = CMat::from_fn(self.u.nrows(), self.rank(), |i, j| self.u[(i, j)] * self.s[j]);
        &us * self.v.adjoint()
    }
}

/// The `r` dominant singular triplets of `x`.
pub fn truncated_svd(x: MatRef<'_, Complex64>, r: usize) -> Result<SvdTriple> {
    let max = x.nrows().min(x.ncols());
    if r == 0 || r > max {
        return Err(Error::Rank(format!("rank {r} outside 1..={max}")));
    }
    let svd = linalg::thin_svd(x)?;
    Ok(SvdTriple {
        u: svd.u.subcols(0, r).to_owned(),
        s: svd.s[..r].to_vec(),
        v: svd.v.subcols(0, r).to_owned(),
    })
}

/// How the truncation rank is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankRule {
    /// Smallest `r` holding at least this fraction of the squared singular values.
    Energy(f64),
    Fixed(usize),
}

impl Default for RankRule {
    fn default() -> Self {
        RankRule::Energy(DEFAULT_ENERGY)
    }
}

impl std::str::FromStr for RankRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(RankRule::default());
        }
        s.parse::<usize>()
            .map(RankRule::Fixed)
            .map_err(|_| Error::Config(format!("rank must be `auto` or a positive integer, got `{s}`")))
    }
}

impl RankRule {
    /// Resolves against the singular values of the matrix being truncated.
    /// The energy rule never keeps values below the singular cutoff.
    pub fn resolve(&self, singular_values: &[f64]) -> usize {
        match *self {
            RankRule::Fixed(r) => r,
            RankRule::Energy(fraction) => {
                let squared: Vec<f64> = singular_values.iter().map(|s| s * s).collect();
                let r = linalg::energy_rank(&squared, fraction);
                let s1 = singular_values.first().copied().unwrap_or(0.0);
                let usable = singular_values.iter().filter(|s| **s >= SINGULAR_CUTOFF * s1 && **s > 0.0).count();
                r.min(usable).max(1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmdModel {
    #[serde(with = "serde_cmat_columns")]
    pub phi: CMat,
    #[serde(with = "serde_complex_vec")]
    pub lambda: Vec<Complex64>,
    #[serde(with = "serde_complex_vec")]
    pub omega: Vec<Complex64>,
    #[serde(with = "serde_complex_vec")]
    pub b: Vec<Complex64>,
    pub rank: usize,
    pub dt: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(with = "serde_cmat_columns", default = "empty_mat")]
    pub w_eigvecs: CMat,
}

fn empty_mat() -> CMat {
    CMat::zeros(0, 0)
}

impl DmdModel {
    /// Condition number of the eigenvector matrix of the projected operator.
    pub fn eigvec_condition(&self) -> f64 {
        match linalg::singular_values(self.w_eigvecs.as_ref()) {
            Ok(s) if !s.is_empty() && *s.last().unwrap() > 0.0 => s[0] / s[s.len() - 1],
            _ => f64::INFINITY,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Exact DMD of the shifted pair at rank `r`.
pub fn fit(pair: &SplitPair, r: usize) -> Result<DmdModel> {
    fit_matrices(pair.x1.as_ref(), pair.x2.as_ref(), r, pair.dt, pair.t0)
}

pub fn fit_matrices(
    x1: MatRef<'_, Complex64>,
    x2: MatRef<'_, Complex64>,
    r: usize,
    dt: f64,
    t0: f64,
) -> Result<DmdModel> {
    if x1.nrows() != x2.nrows() || x1.ncols() != x2.ncols() {
        return Err(Error::Shape(format!(
            "X1 is {}x{} but X2 is {}x{}",
            x1.nrows(),
            x1.ncols(),
            x2.nrows(),
            x2.ncols()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Value(format!("time step must be positive, got {dt}")));
    }
    let svd = truncated_svd(x1, r)?;
    let s1 = svd.s[0];
    if !(s1 > 0.0) || svd.s[r - 1] < SINGULAR_CUTOFF * s1 {
        return Err(Error::Singular(format!(
            "singular value {} of {} is below {SINGULAR_CUTOFF:e} * s1 ({s1:e})",
            r,
            svd.s[r - 1]
        )));
    }

    // X2 V S^-1, shared by the projected operator and the modes
    let x2v = x2 * &svd.v;
    let x2vs = CMat::from_fn(x2v.nrows(), r, |i, j| x2v[(i, j)] / svd.s[j]);
    let a_tilde = svd.u.adjoint() * &x2vs;
    let (vals, vecs) = linalg::eigen(a_tilde.as_ref())?;

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        vals[b]
            .norm()
            .total_cmp(&vals[a].norm())
            .then(vals[b].arg().total_cmp(&vals[a].arg()))
    });
    let lambda: Vec<Complex64> = order.iter().map(|&k| vals[k]).collect();
    let w = CMat::from_fn(r, r, |i, j| vecs[(i, order[j])]);

    let phi = &x2vs * &w;
    let omega = lambda.iter().map(|l| l.ln() / dt).collect();
    let first = x1.subcols(0, 1);
    let b = linalg::lstsq(phi.as_ref(), first)?;
    let b = (0..r).map(|i| b[(i, 0)]).collect();
    Ok(DmdModel { phi, lambda, omega, b, rank: r, dt, t0, w_eigvecs: w })
}

fn mode_factor(lambda: Complex64, omega: Complex64, tau: f64) -> Complex64 {
    if lambda == Complex64::new(0.0, 0.0) {
        return if tau == 0.0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    (omega * tau).exp()
}

/// Evaluates the model at absolute times (measured on the data's clock).
pub fn reconstruct(model: &DmdModel, times: &[f64]) -> Result<CMat> {
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::Value(format!("non-finite time {t}")));
    }
    let q = model.phi.nrows();
    let r = model.rank;
    let mut coeffs = CMat::zeros(r, times.len());
    for (j, t) in times.iter().enumerate() {
        let tau = t - model.t0;
        for k in 0..r {
            coeffs[(k, j)] = mode_factor(model.lambda[k], model.omega[k], tau) * model.b[k];
        }
    }
    let out = &model.phi * &coeffs;
    debug_assert_eq!(out.nrows(), q);
    Ok(out)
}

/// Per-column `||pred - truth||_2 / ||truth||_2`.
pub fn relative_error_series(pred: MatRef<'_, Complex64>, truth: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    if pred.nrows() != truth.nrows() || pred.ncols() != truth.ncols() {
        return Err(Error::Shape(format!(
            "prediction is {}x{} but truth is {}x{}",
            pred.nrows(),
            pred.ncols(),
            truth.nrows(),
            truth.ncols()
        )));
    }
    (0..truth.ncols())
        .map(|j| {
            let denom = linalg::frobenius(truth.subcols(j, 1));
            if denom == 0.0 {
                return Err(Error::ZeroNorm(j));
            }
            let num: f64 = (0..truth.nrows())
                .map(|i| (pred[(i, j)] - truth[(i, j)]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            Ok(num / denom)
        })
        .collect()
}

mod serde_complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

mod serde_cmat_columns {
    use num_complex::Complex64;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::CMat;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        let cols: Vec<Vec<[f64; 2]>> = (0..m.ncols())
            .map(|j| (0..m.nrows()).map(|i| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        cols.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let cols = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(D::Error::custom("ragged column list"));
        }
        Ok(CMat::from_fn(rows, cols.len(), |i, j| Complex64::new(cols[j][i][0], cols[j][i][1])))
    }
}
