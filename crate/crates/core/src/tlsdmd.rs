//! Total-least-squares DMD.
//!
//! Both halves of the shifted pair are projected onto the dominant
//! eigenvectors `Vn` of `Z = X1* X1 + X2* X2` (the right singular subspace of
//! the stacked data `[X1; X2]`) before the ordinary exact-DMD fit.

use faer::MatRef;
use num_complex::Complex64;

use crate::dmd::{self, DmdModel, RankRule, SINGULAR_CUTOFF};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::snapshots::SplitPair;

#[derive(Debug, Clone)]
pub struct TlsProjection {
    /// `(P-1) x r`, orthonormal columns.
    pub vn: CMat,
    pub r: usize,
    /// The `r` dominant eigenvalues of `Z`, descending.
    pub eigenvalues: Vec<f64>,
}

impl TlsProjection {
    /// The orthogonal projector `Vn Vn*`.
    pub fn projector(&self) -> CMat {
        &self.vn * self.vn.adjoint()
    }
}

/// `Z = X1* X1 + X2* X2`.
pub fn gram_sum(pair: &SplitPair) -> Result<CMat> {
    check_pair(pair)?;
    Ok(pair.x1.adjoint() * &pair.x1 + pair.x2.adjoint() * &pair.x2)
}

fn check_pair(pair: &SplitPair) -> Result<()> {
    if pair.x1.nrows() != pair.x2.nrows() || pair.x1.ncols() != pair.x2.ncols() {
        return Err(Error::Shape("X1 and X2 must have identical shapes".into()));
    }
    Ok(())
}

/// Eigenvalues of `Z`, descending (the squared singular values of `[X1; X2]`).
pub fn gram_spectrum(pair: &SplitPair) -> Result<Vec<f64>> {
    Ok(linalg::hermitian_eigen_desc(gram_sum(pair)?.as_ref())?.0)
}

/// Resolves a rank rule against the spectrum of `Z`: the energy rule is
/// applied to `sqrt(eig(Z))`, i.e. to the stacked data's singular values.
pub fn resolve_rank(pair: &SplitPair, rule: RankRule) -> Result<usize> {
    match rule {
        RankRule::Fixed(r) => Ok(r),
        RankRule::Energy(_) => {
            let sv: Vec<f64> = gram_spectrum(pair)?.iter().map(|e| e.max(0.0).sqrt()).collect();
            Ok(rule.resolve(&sv))
        }
    }
}

pub fn tls_project(pair: &SplitPair, r: usize) -> Result<(CMat, CMat, TlsProjection)> {
    let m = pair.x1.ncols();
    if r == 0 || r > m {
        return Err(Error::Rank(format!("rank {r} outside 1..={m}")));
    }
    let z = gram_sum(pair)?;
    let (vals, vecs) = linalg::hermitian_eigen_desc(z.as_ref())?;
    let proj = TlsProjection {
        vn: vecs.subcols(0, r).to_owned(),
        r,
        eigenvalues: vals[..r].to_vec(),
    };
    let p = proj.projector();
    Ok((&pair.x1 * &p, &pair.x2 * &p, proj))
}

/// Cross-check route: the same subspace from the SVD of `[X1; X2]`.
/// Returns `(Vn, squared singular values)`.
pub fn stacked_right_subspace(pair: &SplitPair, r: usize) -> Result<(CMat, Vec<f64>)> {
    check_pair(pair)?;
    let (q, m) = (pair.x1.nrows(), pair.x1.ncols());
    let stacked = CMat::from_fn(2 * q, m, |i, j| if i < q { pair.x1[(i, j)] } else { pair.x2[(i - q, j)] });
    let svd = linalg::thin_svd(stacked.as_ref())?;
    if r == 0 || r > svd.s.len() {
        return Err(Error::Rank(format!("rank {r} outside 1..={}", svd.s.len())));
    }
    Ok((svd.v.subcols(0, r).to_owned(), svd.s.iter().map(|s| s * s).collect()))
}

/// Projection followed by exact DMD on `(X1 Vn Vn*, X2 Vn Vn*)`.
pub fn tls_dmd(pair: &SplitPair, r: usize) -> Result<DmdModel> {
    let (x1p, x2p, _) = tls_project(pair, r)?;
    fit_projected(x1p.as_ref(), x2p.as_ref(), r, pair.dt, pair.t0)
}

fn fit_projected(x1: MatRef<'_, Complex64>, x2: MatRef<'_, Complex64>, r: usize, dt: f64, t0: f64) -> Result<DmdModel> {
    match dmd::fit_matrices(x1, x2, r, dt, t0) {
        Err(Error::Singular(msg)) => Err(Error::Singular(format!(
            "projected data has fewer than {r} significant directions ({msg}; cutoff {SINGULAR_CUTOFF:e})"
        ))),
        other => other,
    }
}
