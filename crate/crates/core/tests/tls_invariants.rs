mod common;

use common::*;
use noisydmd::dmd;
use noisydmd::linalg::{self, CMat};
use noisydmd::snapshots::{add_noise, split, NoiseSpec, SnapshotMatrix};
use noisydmd::tlsdmd::{gram_spectrum, gram_sum, stacked_right_subspace, tls_dmd, tls_project};

fn noisy_pair(seed: u64) -> noisydmd::SplitPair {
    let mut rng = rng(seed);
    split(&SnapshotMatrix::from_real_columns(gaussian(&mut rng, 12, 9), 0.5).unwrap()).unwrap()
}

#[test]
fn projector_is_orthogonal() {
    for seed in 0..10 {
        let pair = noisy_pair(seed);
        for r in 1..=8 {
            let (_, _, proj) = tls_project(&pair, r).unwrap();
            let p = proj.projector();
            assert!(frob(&(&(&p * &p) - &p)) < 1e-12);
            assert!(frob(&(&p - &p.adjoint().to_owned())) < 1e-12);
        }
    }
}

#[test]
fn gram_sum_is_hermitian_psd_and_matches_stacked_svd() {
    let mut rng = rng(21);
    let x = complex_gaussian(&mut rng, 15, 11);
    let pair = split(&SnapshotMatrix::from_real_columns(x, 1.0).unwrap()).unwrap();
    let z = gram_sum(&pair).unwrap();
    assert!(frob(&(&z - &z.adjoint().to_owned())) <= 1e-10 * frob(&z));
    let eig = gram_spectrum(&pair).unwrap();
    assert!(eig.iter().all(|e| *e >= -1e-10 * eig[0]));
    let (_, sq) = stacked_right_subspace(&pair, 10).unwrap();
    for (e, s) in eig.iter().zip(&sq) {
        assert!((e - s).abs() <= 1e-8 * eig[0]);
    }
}

#[test]
fn subspace_matches_stacked_route() {
    let pair = noisy_pair(5);
    let (_, _, proj) = tls_project(&pair, 3).unwrap();
    let (v, _) = stacked_right_subspace(&pair, 3).unwrap();
    let other = &v * v.adjoint();
    assert!(frob(&(&proj.projector() - &other)) < 1e-8);
}

#[test]
fn full_rank_projection_is_identity() {
    let pair = noisy_pair(3);
    let (x1p, x2p, _) = tls_project(&pair, 8).unwrap();
    assert!(frob(&(&x1p - &pair.x1)) < 1e-10);
    assert!(frob(&(&x2p - &pair.x2)) < 1e-10);
}

#[test]
fn reprojection_is_unchanged() {
    let pair = noisy_pair(4);
    let (x1p, x2p, _) = tls_project(&pair, 3).unwrap();
    let again = noisydmd::SplitPair { x1: x1p.clone(), x2: x2p.clone(), dt: pair.dt, t0: pair.t0 };
    let (y1, y2, _) = tls_project(&again, 3).unwrap();
    assert!(frob(&(&y1 - &x1p)) < 1e-12 * frob(&x1p).max(1.0));
    assert!(frob(&(&y2 - &x2p)) < 1e-12 * frob(&x2p).max(1.0));
}

#[test]
fn noise_free_system_agrees_with_plain_dmd() {
    let x = recursion(&diag(&[0.9, 0.5]), &[c(1.0), c(1.0)], 20);
    let pair = pair_of(x, 1.0);
    let (x1p, _, _) = tls_project(&pair, 2).unwrap();
    assert!(frob(&(&x1p - &pair.x1)) < 1e-8 * frob(&pair.x1));
    let tls = tls_dmd(&pair, 2).unwrap();
    let plain = dmd::fit(&pair, 2).unwrap();
    assert!(max_nearest_error(&tls.lambda, &[c(0.9), c(0.5)]) < 1e-8);
    assert!(max_nearest_error(&tls.lambda, &plain.lambda) < 1e-8);

    // lifted 3-mode system in higher dimension
    let mut rng = rng(8);
    let (m, _) = random_system(&mut rng, 3);
    let x = &gaussian(&mut rng, 9, 3) * &recursion(&m, &[c(1.0), c(2.0), c(-1.0)], 14);
    let pair = split(&SnapshotMatrix::from_real_columns(x, 1.0).unwrap()).unwrap();
    let a = tls_dmd(&pair, 3).unwrap();
    let b = dmd::fit(&pair, 3).unwrap();
    assert!(max_nearest_error(&a.lambda, &b.lambda) < 1e-8);
}

#[test]
fn single_mode_matches_plain_dmd() {
    let q = [1.0, -2.0, 0.5, 3.0];
    let x = CMat::from_fn(4, 10, |i, k| c(q[i] * 2f64.powi(k as i32)));
    let pair = pair_of(x, 1.0);
    let tls = tls_dmd(&pair, 1).unwrap();
    let plain = dmd::fit(&pair, 1).unwrap();
    assert!((tls.lambda[0] - plain.lambda[0]).norm() < 1e-10);
    assert!((tls.lambda[0] - c(2.0)).norm() < 1e-10);
}

#[test]
fn debiases_noisy_eigenvalues() {
    let x = recursion(&diag(&[0.9, 0.5]), &[c(1.0), c(1.0)], 20);
    let clean = SnapshotMatrix::from_real_columns(x, 1.0).unwrap();
    let truth = [c(0.9), c(0.5)];
    let (mut tls_err, mut dmd_err) = (0.0, 0.0);
    for seed in 0..50 {
        let noisy = add_noise(&clean, NoiseSpec { snr_db: 20.0, seed }).unwrap();
        let pair = split(&noisy).unwrap();
        tls_err += matched_error(&tls_dmd(&pair, 2).unwrap().lambda, &truth);
        dmd_err += matched_error(&dmd::fit(&pair, 2).unwrap().lambda, &truth);
    }
    assert!(tls_err < dmd_err, "tls {tls_err} vs dmd {dmd_err}");
}

#[test]
fn rank_beyond_columns_is_rejected() {
    let pair = noisy_pair(1);
    assert!(matches!(tls_project(&pair, 0), Err(noisydmd::Error::Rank(_))));
    assert!(matches!(tls_project(&pair, 9), Err(noisydmd::Error::Rank(_))));
    let _ = linalg::frobenius(pair.x1.as_ref());
}
