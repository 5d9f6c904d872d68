//! Robust PCA: `D = L + S` with `L` low rank and `S` sparse, solving
//! `min ||L||_* + lambda ||S||_1  s.t.  D = L + S`.
//!
//! Both solvers alternate the two proximal kernels, singular value
//! thresholding for `L` and elementwise shrinkage for `S`, around a running
//! Lagrange multiplier `Y`. ADM keeps the penalty `mu` fixed; inexact ALM
//! grows it geometrically and starts from the scaled dual point
//! `Y = D / max(||D||_2, ||D||_inf / lambda)`.

use std::io::Write;

use faer::MatRef;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::metrics::{numerical_rank, Method};

/// Elementwise soft threshold `sign(x) max(|x| - tau, 0)`; complex entries keep their phase.
pub fn shrink(x: MatRef<'_, Complex64>, tau: f64) -> Result<CMat> {
    if !(tau >= 0.0) {
        return Err(Error::Value(format!("threshold must be nonnegative, got {tau}")));
    }
    Ok(shrink_unchecked(x, tau))
}

fn shrink_unchecked(x: MatRef<'_, Complex64>, tau: f64) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| shrink_scalar(x[(i, j)], tau))
}

fn shrink_scalar(v: Complex64, tau: f64) -> Complex64 {
    if tau == 0.0 {
        return v;
    }
    if v.im == 0.0 {
        let m = (v.re.abs() - tau).max(0.0);
        return Complex64::new(v.re.signum() * m, 0.0);
    }
    let mag = v.norm();
    if mag <= tau {
        Complex64::new(0.0, 0.0)
    } else {
        v * ((mag - tau) / mag)
    }
}

/// Singular value thresholding `U shrink(S, tau) V*`.
pub fn svt(x: MatRef<'_, Complex64>, tau: f64) -> Result<CMat> {
    if !(tau >= 0.0) {
        return Err(Error::Value(format!("threshold must be nonnegative, got {tau}")));
    }
    Ok(svt_with_spectrum(x, tau)?.0)
}

/// SVT returning the kept (already shrunk) singular values too.
fn svt_with_spectrum(x: MatRef<'_, Complex64>, tau: f64) -> Result<(CMat, Vec<f64>)> {
    let svd = linalg::thin_svd(x)?;
    let kept: Vec<f64> = svd.s.iter().map(|s| s - tau).take_while(|s| *s > 0.0).collect();
    let r = kept.len();
    if r == 0 {
        return Ok((CMat::zeros(x.nrows(), x.ncols()), kept));
    }
    if linalg::is_real(svd.u.as_ref()) && linalg::is_real(svd.v.as_ref()) {
        let us = faer::Mat::<f64>::from_fn(x.nrows(), r, |i, j| svd.u[(i, j)].re * kept[j]);
        let v = faer::Mat::<f64>::from_fn(x.ncols(), r, |i, j| svd.v[(i, j)].re);
        return Ok((linalg::complexify((&us * v.transpose()).as_ref()), kept));
    }
    let us = CMat::from_fn(x.nrows(), r, |i, j| svd.u[(i, j)] * kept[j]);
    Ok((&us * svd.v.subcols(0, r).adjoint(), kept))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub residual: f64,
    pub rank_l: usize,
    pub objective: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct RpcaResult {
    pub method: Method,
    pub l: CMat,
    pub s: CMat,
    pub iterations: usize,
    pub converged: bool,
    /// Final `||D - L - S||_F / ||D||_F`.
    pub residual: f64,
    pub lambda: f64,
    pub trace: Vec<TraceRow>,
}

impl RpcaResult {
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.trace {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmParams {
    /// Fixed penalty; `None` selects `n m / (4 ||D||_1)`.
    pub mu: Option<f64>,
    pub lambda_coef: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AdmParams {
    fn default() -> Self {
        AdmParams { mu: None, lambda_coef: 1.0, tol: 1e-7, max_iter: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IalmParams {
    /// Initial penalty; `None` selects `1.25 / ||D||_2`.
    pub mu0: Option<f64>,
    pub rho: f64,
    /// Penalty ceiling; `None` selects `mu0 * 1e7`.
    pub mu_cap: Option<f64>,
    pub lambda_coef: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IalmParams {
    fn default() -> Self {
        IalmParams { mu0: None, rho: 1.5, mu_cap: None, lambda_coef: 1.0, tol: 1e-7, max_iter: 1000 }
    }
}

fn check_input(d: MatRef<'_, Complex64>, tol: f64, lambda_coef: f64) -> Result<()> {
    if d.nrows() == 0 || d.ncols() == 0 {
        return Err(Error::Shape("empty matrix".into()));
    }
    if linalg::max_abs(d).is_nan() || (0..d.ncols()).any(|j| (0..d.nrows()).any(|i| !d[(i, j)].is_finite())) {
        return Err(Error::Value("input contains non-finite entries".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Value(format!("tolerance must be positive, got {tol}")));
    }
    if !(lambda_coef > 0.0) {
        return Err(Error::Value(format!("lambda coefficient must be positive, got {lambda_coef}")));
    }
    Ok(())
}

fn default_lambda(d: MatRef<'_, Complex64>, coef: f64) -> f64 {
    coef / (d.nrows().max(d.ncols()) as f64).sqrt()
}

fn zero_result(method: Method, d: MatRef<'_, Complex64>, lambda: f64) -> RpcaResult {
    RpcaResult {
        method,
        l: CMat::zeros(d.nrows(), d.ncols()),
        s: CMat::zeros(d.nrows(), d.ncols()),
        iterations: 0,
        converged: true,
        residual: 0.0,
        lambda,
        trace: Vec::new(),
    }
}

/// Shared alternation; `schedule` maps the current penalty to the next one.
struct Alternation<'a> {
    method: Method,
    d: MatRef<'a, Complex64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
}

impl Alternation<'_> {
    fn run(&self, mut mu: f64, mut y: CMat, schedule: impl Fn(f64) -> f64) -> Result<RpcaResult> {
        let d = self.d;
        let (n, m) = (d.nrows(), d.ncols());
        let d_norm = linalg::frobenius(d);
        let mut s = CMat::zeros(n, m);
        let mut l = CMat::zeros(n, m);
        let mut best: Option<(f64, CMat, CMat)> = None;
        let mut trace = Vec::new();
        let mut residual = f64::INFINITY;
        for k in 1..=self.max_iter {
            let inv_mu = 1.0 / mu;
            let target = CMat::from_fn(n, m, |i, j| d[(i, j)] - s[(i, j)] + y[(i, j)] * inv_mu);
            let (new_l, kept) = svt_with_spectrum(target.as_ref(), inv_mu)?;
            l = new_l;
            let target = CMat::from_fn(n, m, |i, j| d[(i, j)] - l[(i, j)] + y[(i, j)] * inv_mu);
            s = shrink_unchecked(target.as_ref(), self.lambda * inv_mu);
            let z = CMat::from_fn(n, m, |i, j| d[(i, j)] - l[(i, j)] - s[(i, j)]);
            residual = linalg::frobenius(z.as_ref()) / d_norm;
            if !residual.is_finite() {
                return Err(Error::Numerical(format!("{:?} residual became non-finite at iteration {k}", self.method)));
            }
            let objective = kept.iter().sum::<f64>() + self.lambda * linalg::sum_abs(s.as_ref());
            trace.push(TraceRow { iteration: k, residual, rank_l: kept.len(), objective, mu });
            if residual <= self.tol {
                return Ok(RpcaResult {
                    method: self.method,
                    l,
                    s,
                    iterations: k,
                    converged: true,
                    residual,
                    lambda: self.lambda,
                    trace,
                });
            }
            if best.as_ref().is_none_or(|(r, _, _)| residual < *r) {
                best = Some((residual, l.clone(), s.clone()));
            }
            for j in 0..m {
                for i in 0..n {
                    y[(i, j)] += z[(i, j)] * mu;
                }
            }
            mu = schedule(mu);
        }
        let (residual, l, s) = best.unwrap_or((residual, l, s));
        Ok(RpcaResult {
            method: self.method,
            l,
            s,
            iterations: self.max_iter,
            converged: false,
            residual,
            lambda: self.lambda,
            trace,
        })
    }
}

/// Principal component pursuit by alternating directions with a fixed penalty.
///
/// Returns the best iterate with `converged = false` when `max_iter` is exhausted.
pub fn rpca_adm(d: MatRef<'_, Complex64>, params: &AdmParams) -> Result<RpcaResult> {
    check_input(d, params.tol, params.lambda_coef)?;
    let lambda = default_lambda(d, params.lambda_coef);
    let l1 = linalg::sum_abs(d);
    if l1 == 0.0 {
        return Ok(zero_result(Method::Adm, d, lambda));
    }
    let mu = match params.mu {
        Some(mu) if mu > 0.0 => mu,
        Some(mu) => return Err(Error::Value(format!("mu must be positive, got {mu}"))),
        None => (d.nrows() * d.ncols()) as f64 / (4.0 * l1),
    };
    let alt = Alternation { method: Method::Adm, d, lambda, tol: params.tol, max_iter: params.max_iter };
    alt.run(mu, CMat::zeros(d.nrows(), d.ncols()), |mu| mu)
}

/// Inexact augmented Lagrange multiplier method: one low-rank and one sparse
/// update per outer step, penalty growing by `rho` up to `mu_cap`.
pub fn rpca_ialm(d: MatRef<'_, Complex64>, params: &IalmParams) -> Result<RpcaResult> {
    check_input(d, params.tol, params.lambda_coef)?;
    if !(params.rho > 1.0) {
        return Err(Error::Value(format!("rho must exceed 1, got {}", params.rho)));
    }
    let lambda = default_lambda(d, params.lambda_coef);
    let spectral = linalg::singular_values(d)?.first().copied().unwrap_or(0.0);
    if spectral == 0.0 {
        return Ok(zero_result(Method::Ialm, d, lambda));
    }
    let mu0 = match params.mu0 {
        Some(mu) if mu > 0.0 => mu,
        Some(mu) => return Err(Error::Value(format!("mu0 must be positive, got {mu}"))),
        None => 1.25 / spectral,
    };
    let mu_cap = params.mu_cap.unwrap_or(mu0 * 1e7);
    let dual = spectral.max(linalg::max_abs(d) / lambda);
    let y = CMat::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)] / dual);
    let alt = Alternation { method: Method::Ialm, d, lambda, tol: params.tol, max_iter: params.max_iter };
    let rho = params.rho;
    alt.run(mu0, y, move |mu| (mu * rho).min(mu_cap))
}

/// Denoised matrix, the method that produced it and its numerical rank.
#[derive(Debug, Clone)]
pub struct FilterReport {
    pub method: Method,
    pub filtered: CMat,
    pub rank: usize,
}

pub fn filter_report(d: MatRef<'_, Complex64>, result: &RpcaResult, rank_tol: f64) -> Result<FilterReport> {
    if d.nrows() != result.l.nrows() || d.ncols() != result.l.ncols() {
        return Err(Error::Shape("decomposition does not match the input shape".into()));
    }
    Ok(FilterReport {
        method: result.method,
        filtered: result.l.clone(),
        rank: numerical_rank(result.l.as_ref(), rank_tol)?,
    })
}
