//! Thin wrappers over faer's dense decompositions, specialised to complex
//! matrices, plus a few elementwise helpers shared by the solvers.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

/// Thin SVD `x = U diag(s) V*` with singular values in descending order.
pub struct ThinSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn thin_svd(x: MatRef<'_, Complex64>) -> Result<ThinSvd> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Ok(ThinSvd {
            u: CMat::zeros(x.nrows(), 0),
            s: Vec::new(),
            v: CMat::zeros(x.ncols(), 0),
        });
    }
    let out = match real_part(x) {
        // real arithmetic is several times cheaper and exact for real input
        Some(re) => {
            let svd = re.thin_svd().map_err(svd_failed)?;
            let s = svd.S().column_vector();
            ThinSvd {
                u: complexify(svd.U()),
                s: (0..s.nrows()).map(|i| s[i]).collect(),
                v: complexify(svd.V()),
            }
        }
        None => {
            let svd = x.thin_svd().map_err(svd_failed)?;
            let s = svd.S().column_vector();
            ThinSvd {
                u: svd.U().to_owned(),
                s: (0..s.nrows()).map(|i| s[i].re).collect(),
                v: svd.V().to_owned(),
            }
        }
    };
    check_finite(&out.s)?;
    Ok(out)
}

fn svd_failed(e: impl std::fmt::Debug) -> Error {
    Error::Numerical(format!("SVD did not converge: {e:?}"))
}

fn check_finite(s: &[f64]) -> Result<()> {
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SVD produced non-finite singular values".into()));
    }
    Ok(())
}

/// Singular values only, descending.
pub fn singular_values(x: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Ok(Vec::new());
    }
    let s = match real_part(x) {
        Some(re) => re.singular_values().map_err(svd_failed)?,
        None => x.singular_values().map_err(svd_failed)?,
    };
    check_finite(&s)?;
    Ok(s)
}

/// The real part as a real matrix when every imaginary part is zero.
pub fn real_part(x: MatRef<'_, Complex64>) -> Option<Mat<f64>> {
    is_real(x).then(|| Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)].re))
}

pub fn complexify(x: MatRef<'_, f64>) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| Complex64::new(x[(i, j)], 0.0))
}

/// Eigendecomposition of a general square matrix: `(eigenvalues, eigenvectors)`.
pub fn eigen(x: MatRef<'_, Complex64>) -> Result<(Vec<Complex64>, CMat)> {
    let evd = x
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let vals: Vec<Complex64> = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Hermitian eigendecomposition, eigenvalues sorted in descending order.
pub fn hermitian_eigen_desc(x: MatRef<'_, Complex64>) -> Result<(Vec<f64>, CMat)> {
    let evd = x
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let n = s.nrows();
    let u = evd.U();
    // faer returns ascending order
    let vals = (0..n).rev().map(|i| s[i].re).collect();
    let vecs = CMat::from_fn(u.nrows(), n, |i, j| u[(i, n - 1 - j)]);
    Ok((vals, vecs))
}

pub fn frobenius(x: MatRef<'_, Complex64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            acc += x[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn sum_abs(x: MatRef<'_, Complex64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            acc += x[(i, j)].norm();
        }
    }
    acc
}

pub fn max_abs(x: MatRef<'_, Complex64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            m = m.max(x[(i, j)].norm());
        }
    }
    m
}

/// Minimum-norm least-squares solution of `a x = rhs` via the SVD of `a`.
pub fn lstsq(a: MatRef<'_, Complex64>, rhs: MatRef<'_, Complex64>) -> Result<CMat> {
    let svd = thin_svd(a)?;
    let cutoff = svd.s.first().copied().unwrap_or(0.0) * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    let utb = svd.u.adjoint() * rhs;
    let scaled = CMat::from_fn(utb.nrows(), utb.ncols(), |i, j| {
        if svd.s[i] > cutoff {
            utb[(i, j)] / svd.s[i]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(&svd.v * &scaled)
}

/// Smallest `r` whose leading squared values hold at least `fraction` of the total energy.
pub fn energy_rank(squared: &[f64], fraction: f64) -> usize {
    let total: f64 = squared.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return 0;
    }
    let mut acc = 0.0;
    for (i, v) in squared.iter().enumerate() {
        acc += v.max(0.0);
        if acc >= fraction * total {
            return i + 1;
        }
    }
    squared.len()
}

pub fn real_mat(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CMat {
    CMat::from_fn(rows, cols, |i, j| Complex64::new(f(i, j), 0.0))
}

pub fn is_real(x: MatRef<'_, Complex64>) -> bool {
    (0..x.ncols()).all(|j| (0..x.nrows()).all(|i| x[(i, j)].im == 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_rank_rule() {
        assert_eq!(energy_rank(&[9.0, 0.9, 0.1], 0.9), 1);
        assert_eq!(energy_rank(&[9.0, 0.9, 0.1], 0.99), 2);
        assert_eq!(energy_rank(&[9.0, 0.9, 0.1], 0.999), 3);
        assert_eq!(energy_rank(&[0.0, 0.0], 0.999), 0);
    }

    #[test]
    fn hermitian_eigen_is_descending() {
        let a = real_mat(3, 3, |i, j| if i == j { [1.0, 5.0, 3.0][i] } else { 0.0 });
        let (vals, vecs) = hermitian_eigen_desc(a.as_ref()).unwrap();
        for (got, want) in vals.iter().zip([5.0, 3.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lstsq_solves_overdetermined_consistent_system() {
        let a = real_mat(4, 2, |i, j| (i + 2 * j) as f64 + if i == j { 1.0 } else { 0.0 });
        let x = real_mat(2, 1, |i, _| [1.5, -2.0][i]);
        let b = &a * &x;
        let got = lstsq(a.as_ref(), b.as_ref()).unwrap();
        for i in 0..2 {
            assert!((got[(i, 0)] - x[(i, 0)]).norm() < 1e-12);
        }
    }
}
