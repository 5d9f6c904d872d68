mod common;

use noisydmd::pde::{solve_fne, solve_nlse, solve_swe, FneConfig, FneInitial, NlseConfig, NlseInitial, SweConfig};
use noisydmd::snapshots::split;
use noisydmd::Complex64;

fn nlse_mass(x: &noisydmd::SnapshotMatrix, dw: f64, col: usize) -> f64 {
    (0..x.nrows()).map(|i| x.values()[(i, col)].norm_sqr()).sum::<f64>() * dw
}

#[test]
fn soliton_matches_analytic_solution() {
    let cfg = NlseConfig {
        n_w: 512,
        n_t: 100,
        initial_profile: NlseInitial::SolitonSech { amplitude: 1.0 },
        ..Default::default()
    };
    let x = solve_nlse(&cfg).unwrap();
    let w = cfg.grid();
    let mut worst: f64 = 0.0;
    for (k, t) in x.times().iter().enumerate() {
        for (i, wi) in w.iter().enumerate() {
            let exact = Complex64::from_polar(1.0 / wi.cosh(), t / 2.0);
            worst = worst.max((x.values()[(i, k)] - exact).norm());
        }
    }
    assert!(worst < 1e-6, "max error {worst:e}");

    let dw = w[1] - w[0];
    let m0 = nlse_mass(&x, dw, 0);
    for k in 0..x.ncols() {
        assert!((nlse_mass(&x, dw, k) - m0).abs() <= 1e-8 * m0);
    }
}

#[test]
fn default_nlse_split_shapes() {
    let x = solve_nlse(&NlseConfig::default()).unwrap();
    assert_eq!((x.nrows(), x.ncols()), (512, 200));
    let pair = split(&x).unwrap();
    assert_eq!((pair.x1.nrows(), pair.x1.ncols()), (512, 199));
    assert_eq!((pair.x2.nrows(), pair.x2.ncols()), (512, 199));
}

#[test]
fn swe_mass_over_150_steps() {
    let cfg = SweConfig::default();
    let x = solve_swe(&cfg).unwrap();
    assert_eq!((x.nrows(), x.ncols()), (4096, 150));
    let mass = |k: usize| (0..x.nrows()).map(|i| x.values()[(i, k)].re).sum::<f64>();
    let m0 = mass(0);
    for k in 0..x.ncols() {
        assert!((mass(k) - m0).abs() <= 1e-8 * m0.abs());
    }
}

#[test]
fn fne_zero_state_is_exact() {
    let cfg = FneConfig { initial: FneInitial::Constant { v: 0.0, w: 0.0 }, t_max: 50.0, n_t: 40, ..Default::default() };
    let x = solve_fne(&cfg).unwrap();
    assert!(x.values().col_iter().all(|c| c.iter().all(|v| *v == Complex64::new(0.0, 0.0))));
}

#[test]
fn fne_default_is_bounded() {
    let x = solve_fne(&FneConfig::default()).unwrap();
    assert_eq!(x.nrows(), 512);
    let peak = noisydmd::linalg::max_abs(x.values().as_ref());
    assert!(peak.is_finite() && peak < 10.0, "peak {peak}");
}
