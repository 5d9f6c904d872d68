#![allow(dead_code)]

use noisydmd::faer::linalg::solvers::DenseSolveCore;
use noisydmd::faer::Mat;
use noisydmd::linalg::CMat;
use noisydmd::snapshots::{split, SnapshotMatrix, SplitPair};
use noisydmd::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(StandardNormal.sample(rng)))
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}

/// Snapshots `x_k = M^k x0` by direct recursion, `k = 0..p`.
pub fn recursion(m: &CMat, x0: &[Complex64], p: usize) -> CMat {
    let n = x0.len();
    let mut out = CMat::zeros(n, p);
    let mut x = CMat::from_fn(n, 1, |i, _| x0[i]);
    for k in 0..p {
        for i in 0..n {
            out[(i, k)] = x[(i, 0)];
        }
        x = m * &x;
    }
    out
}

pub fn diag(values: &[f64]) -> CMat {
    CMat::from_fn(values.len(), values.len(), |i, j| if i == j { c(values[i]) } else { c(0.0) })
}

pub fn pair_of(values: CMat, dt: f64) -> SplitPair {
    split(&SnapshotMatrix::from_real_columns(values, dt).unwrap()).unwrap()
}

/// Mean absolute eigenvalue error under the best assignment (brute force over permutations).
pub fn matched_error(estimated: &[Complex64], truth: &[Complex64]) -> f64 {
    assert_eq!(estimated.len(), truth.len());
    let n = truth.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let e: f64 = p.iter().enumerate().map(|(i, &j)| (estimated[j] - truth[i]).norm()).sum();
        best = best.min(e);
    });
    best / n as f64
}

/// Max error under greedy nearest matching; fine when the spectrum is well separated.
pub fn max_nearest_error(estimated: &[Complex64], truth: &[Complex64]) -> f64 {
    let mut used = vec![false; estimated.len()];
    let mut worst: f64 = 0.0;
    for t in truth {
        let (k, e) = estimated
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, v)| (k, (v - t).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(e);
    }
    worst
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// A random diagonalizable `n x n` system with distinct eigenvalues inside the unit disk.
/// Returns `(M, eigenvalues)` with `M = T diag(lambda) T^-1`.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize) -> (CMat, Vec<Complex64>) {
    let lambdas: Vec<Complex64> = loop {
        let cand: Vec<Complex64> = (0..n)
            .map(|_| Complex64::from_polar(rng.random_range(0.5..0.98), rng.random_range(-3.0..3.0)))
            .collect();
        let separated = (0..n).all(|i| (0..i).all(|j| (cand[i] - cand[j]).norm() > 0.1));
        if separated {
            break cand;
        }
    };
    let t = complex_gaussian(rng, n, n);
    let t_inv = t.partial_piv_lu().inverse();
    let d = CMat::from_fn(n, n, |i, j| if i == j { lambdas[i] } else { c(0.0) });
    let m: Mat<Complex64> = &t * &d * &t_inv;
    (m, lambdas)
}

pub fn frob(m: &CMat) -> f64 {
    noisydmd::linalg::frobenius(m.as_ref())
}
