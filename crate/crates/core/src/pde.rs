//! Ground-truth dataset generators.
//!
//! * NLSE `p_t = (i/2) p_ww + i|p|^2 p`: Strang split-step Fourier on a periodic grid.
//! * FitzHugh-Nagumo `V_t = D V_xx + V(a-V)(V-1) - W`, `W_t = bV - cW`: second-order
//!   central differences with ghost-point Neumann closure, classical RK4 sub-steps.
//! * Shallow water in conservative variables `(k, ku, kv)`: finite-volume form with
//!   a local Lax-Friedrichs (Rusanov) interface flux, Heun (SSP-RK2) time stepping,
//!   reflective walls. The constant density cancels from every equation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::snapshots::{GridMeta, SnapshotMatrix};

const BLOWUP: f64 = 1e6;
const MAX_SUBSTEPS: u64 = 100_000;

fn check_blowup(t: f64, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut worst: f64 = 0.0;
    for v in values {
        if !v.is_finite() {
            return Err(Error::Blowup { t, magnitude: f64::INFINITY });
        }
        worst = worst.max(v.abs());
    }
    if worst > BLOWUP {
        return Err(Error::Blowup { t, magnitude: worst });
    }
    Ok(())
}

fn output_dt(t_max: f64, n_t: usize) -> f64 {
    t_max / (n_t - 1) as f64
}

fn substeps(interval: f64, max_step: f64) -> Result<usize> {
    let n = (interval / max_step).ceil().max(1.0);
    if n > MAX_SUBSTEPS as f64 {
        return Err(Error::Cfl { substeps: n as u64 });
    }
    Ok(n as usize)
}

// ---------------------------------------------------------------------------
// Nonlinear Schroedinger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NlseInitial {
    /// `amplitude * sech(w)`
    SolitonSech { amplitude: f64 },
    /// One `[re, im]` pair per grid point.
    Samples(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlseConfig {
    pub w_min: f64,
    pub w_max: f64,
    pub n_w: usize,
    pub t_max: f64,
    pub n_t: usize,
    pub initial_profile: NlseInitial,
    /// Upper bound on the internal split-step size.
    pub max_step: f64,
}

impl Default for NlseConfig {
    fn default() -> Self {
        NlseConfig {
            w_min: -15.0,
            w_max: 15.0,
            n_w: 512,
            t_max: 8.0 * PI,
            n_t: 200,
            initial_profile: NlseInitial::SolitonSech { amplitude: 2.0 },
            max_step: 5e-4,
        }
    }
}

impl NlseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_min < self.w_max) {
            return Err(Error::Config(format!("w_min {} must be below w_max {}", self.w_min, self.w_max)));
        }
        if self.n_w < 2 || !self.n_w.is_power_of_two() {
            return Err(Error::Config(format!("n_w must be a power of two, got {}", self.n_w)));
        }
        if self.n_t < 3 {
            return Err(Error::Config(format!("n_t must be at least 3, got {}", self.n_t)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::Config("max_step must be positive".into()));
        }
        if let NlseInitial::Samples(s) = &self.initial_profile {
            if s.len() != self.n_w {
                return Err(Error::Config(format!("{} initial samples for n_w = {}", s.len(), self.n_w)));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let dw = (self.w_max - self.w_min) / self.n_w as f64;
        (0..self.n_w).map(|k| self.w_min + k as f64 * dw).collect()
    }
}

pub fn solve_nlse(cfg: &NlseConfig) -> Result<SnapshotMatrix> {
    cfg.validate()?;
    let n = cfg.n_w;
    let length = cfg.w_max - cfg.w_min;
    let grid = cfg.grid();
    let mut p: Vec<Complex64> = match &cfg.initial_profile {
        NlseInitial::SolitonSech { amplitude } => {
            grid.iter().map(|w| Complex64::new(amplitude / w.cosh(), 0.0)).collect()
        }
        NlseInitial::Samples(s) => s.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
    };

    let dt_out = output_dt(cfg.t_max, cfg.n_t);
    let steps = substeps(dt_out, cfg.max_step)?;
    let h = dt_out / steps as f64;

    let wavenumbers: Vec<f64> = (0..n)
        .map(|k| {
            let m = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * m / length
        })
        .collect();
    // exp(-i k^2/2 * h/2), with the 1/n inverse-FFT normalisation folded in
    let half_linear: Vec<Complex64> = wavenumbers
        .iter()
        .map(|k| Complex64::from_polar(1.0 / n as f64, -0.25 * k * k * h))
        .collect();

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];

    let mut half_step = |p: &mut [Complex64]| {
        fwd.process_with_scratch(p, &mut scratch);
        for (v, f) in p.iter_mut().zip(&half_linear) {
            *v *= f;
        }
        inv.process_with_scratch(p, &mut scratch);
    };

    let mut out = CMat::zeros(n, cfg.n_t);
    for (i, v) in p.iter().enumerate() {
        out[(i, 0)] = *v;
    }
    for col in 1..cfg.n_t {
        for _ in 0..steps {
            half_step(&mut p);
            for v in p.iter_mut() {
                *v *= Complex64::from_polar(1.0, v.norm_sqr() * h);
            }
            half_step(&mut p);
        }
        check_blowup(col as f64 * dt_out, p.iter().map(|v| v.norm()))?;
        for (i, v) in p.iter().enumerate() {
            out[(i, col)] = *v;
        }
    }
    SnapshotMatrix::new(out, true, dt_out, 0.0, GridMeta::line(n, cfg.w_min, cfg.w_max))
}

// ---------------------------------------------------------------------------
// FitzHugh-Nagumo
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FneInitial {
    /// `V = exp(-x^2)`, `W = 0.2 exp(-(x+2)^2)`.
    Gaussian,
    Constant { v: f64, w: f64 },
    Samples { v: Vec<f64>, w: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FneConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub t_max: f64,
    pub n_t: usize,
    pub d_coeff: f64,
    pub a_param: f64,
    pub b_param: f64,
    pub c_param: f64,
    /// Export `V` stacked over `W` (true) or `V` alone.
    pub stacked: bool,
    pub initial: FneInitial,
    pub max_step: f64,
}

impl Default for FneConfig {
    fn default() -> Self {
        FneConfig {
            x_min: -10.0,
            x_max: 10.0,
            n_x: 256,
            t_max: 400.0,
            n_t: 300,
            d_coeff: 0.01,
            a_param: 0.1,
            b_param: 0.01,
            c_param: 0.02,
            stacked: true,
            initial: FneInitial::Gaussian,
            max_step: 0.05,
        }
    }
}

impl FneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) {
            return Err(Error::Config(format!("x_min {} must be below x_max {}", self.x_min, self.x_max)));
        }
        if self.n_x < 3 {
            return Err(Error::Config(format!("n_x must be at least 3, got {}", self.n_x)));
        }
        if self.n_t < 3 {
            return Err(Error::Config(format!("n_t must be at least 3, got {}", self.n_t)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.d_coeff >= 0.0) {
            return Err(Error::Config(format!("diffusion coefficient must be nonnegative, got {}", self.d_coeff)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::Config("max_step must be positive".into()));
        }
        if let FneInitial::Samples { v, w } = &self.initial {
            if v.len() != self.n_x || w.len() != self.n_x {
                return Err(Error::Config("initial samples must have n_x entries each".into()));
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_x - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_x).map(|i| self.x_min + i as f64 * dx).collect()
    }
}

struct FneRhs<'a> {
    cfg: &'a FneConfig,
    inv_dx2: f64,
}

impl FneRhs<'_> {
    /// `state` is `[V; W]`, each of length `n`.
    fn eval(&self, state: &[f64], out: &mut [f64]) {
        let n = self.cfg.n_x;
        let (v, w) = state.split_at(n);
        let (dv, dw) = out.split_at_mut(n);
        let (a, b, c, d) = (self.cfg.a_param, self.cfg.b_param, self.cfg.c_param, self.cfg.d_coeff);
        for i in 0..n {
            // ghost points mirror the first interior neighbour
            let left = if i == 0 { v[1] } else { v[i - 1] };
            let right = if i == n - 1 { v[n - 2] } else { v[i + 1] };
            let lap = (left - 2.0 * v[i] + right) * self.inv_dx2;
            dv[i] = d * lap + v[i] * (a - v[i]) * (v[i] - 1.0) - w[i];
            dw[i] = b * v[i] - c * w[i];
        }
    }
}

pub fn solve_fne(cfg: &FneConfig) -> Result<SnapshotMatrix> {
    cfg.validate()?;
    let n = cfg.n_x;
    let x = cfg.grid();
    let mut state = vec![0.0; 2 * n];
    match &cfg.initial {
        FneInitial::Gaussian => {
            for i in 0..n {
                state[i] = (-x[i] * x[i]).exp();
                state[n + i] = 0.2 * (-(x[i] + 2.0) * (x[i] + 2.0)).exp();
            }
        }
        FneInitial::Constant { v, w } => {
            state[..n].fill(*v);
            state[n..].fill(*w);
        }
        FneInitial::Samples { v, w } => {
            state[..n].copy_from_slice(v);
            state[n..].copy_from_slice(w);
        }
    }

    let dx = cfg.dx();
    let rhs = FneRhs { cfg, inv_dx2: 1.0 / (dx * dx) };
    let dt_out = output_dt(cfg.t_max, cfg.n_t);
    // RK4 reaches about 2.78 on the negative real axis; the Laplacian spectrum ends at -4D/dx^2
    let stable = if cfg.d_coeff > 0.0 { 0.5 * dx * dx / cfg.d_coeff } else { f64::INFINITY };
    let steps = substeps(dt_out, cfg.max_step.min(stable))?;
    let h = dt_out / steps as f64;

    let rows = if cfg.stacked { 2 * n } else { n };
    let mut out = CMat::zeros(rows, cfg.n_t);
    let store = |out: &mut CMat, col: usize, state: &[f64]| {
        for i in 0..rows {
            out[(i, col)] = Complex64::new(state[i], 0.0);
        }
    };
    store(&mut out, 0, &state);

    let len = 2 * n;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for col in 1..cfg.n_t {
        for _ in 0..steps {
            rhs.eval(&state, &mut k1);
            for i in 0..len {
                tmp[i] = state[i] + 0.5 * h * k1[i];
            }
            rhs.eval(&tmp, &mut k2);
            for i in 0..len {
                tmp[i] = state[i] + 0.5 * h * k2[i];
            }
            rhs.eval(&tmp, &mut k3);
            for i in 0..len {
                tmp[i] = state[i] + h * k3[i];
            }
            rhs.eval(&tmp, &mut k4);
            for i in 0..len {
                state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        check_blowup(col as f64 * dt_out, state.iter().copied())?;
        store(&mut out, col, &state);
    }

    let grid = if cfg.stacked {
        // V then W on the same axis; the grid records the stacked length
        GridMeta::line(2 * n, cfg.x_min, cfg.x_max)
    } else {
        GridMeta::line(n, cfg.x_min, cfg.x_max)
    };
    SnapshotMatrix::new(out, false, dt_out, 0.0, grid)
}

// ---------------------------------------------------------------------------
// Shallow water
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drop {
    pub center_x: f64,
    pub center_y: f64,
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub g: f64,
    pub rho: f64,
    /// Undisturbed column height.
    pub depth: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub initial_drop: Drop,
    /// Courant number used to size the internal steps.
    pub cfl: f64,
}

impl Default for SweConfig {
    fn default() -> Self {
        SweConfig {
            nx: 64,
            ny: 64,
            lx: 1.0,
            ly: 1.0,
            g: 9.81,
            rho: 1.0,
            depth: 1.0,
            t_max: 1.0,
            n_t: 150,
            initial_drop: Drop { center_x: 0.5, center_y: 0.5, width: 0.1, amplitude: 0.2 },
            cfl: 0.4,
        }
    }
}

impl SweConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 8 || self.ny < 8 {
            return Err(Error::Config(format!("grid must be at least 8x8, got {}x{}", self.nx, self.ny)));
        }
        if !(self.g > 0.0) || !(self.rho > 0.0) {
            return Err(Error::Config("g and rho must be positive".into()));
        }
        if !(self.lx > 0.0 && self.ly > 0.0) {
            return Err(Error::Config("domain extents must be positive".into()));
        }
        if !(self.depth > 0.0) {
            return Err(Error::Config("depth must be positive".into()));
        }
        if self.n_t < 3 {
            return Err(Error::Config(format!("n_t must be at least 3, got {}", self.n_t)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.initial_drop.width > 0.0) {
            return Err(Error::Config("drop width must be positive".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }
}

/// Conserved variables per cell, row index (x) fastest.
#[derive(Clone)]
struct SweState {
    h: Vec<f64>,
    hu: Vec<f64>,
    hv: Vec<f64>,
}

struct SweSolver<'a> {
    cfg: &'a SweConfig,
}

impl SweSolver<'_> {
    fn idx(&self, i: usize, j: usize) -> usize {
        i + self.cfg.nx * j
    }

    fn max_speed(&self, s: &SweState) -> f64 {
        let g = self.cfg.g;
        s.h.iter()
            .zip(&s.hu)
            .zip(&s.hv)
            .map(|((h, hu), hv)| {
                let c = (g * h).sqrt();
                (hu / h).abs().max((hv / h).abs()) + c
            })
            .fold(0.0, f64::max)
    }

    /// Rusanov flux through an interface with normal velocity carried by
    /// `(hn, ht)` = (normal, tangential) momentum.
    fn flux(g: f64, left: [f64; 3], right: [f64; 3]) -> [f64; 3] {
        let phys = |[h, hn, ht]: [f64; 3]| {
            let un = hn / h;
            [hn, hn * un + 0.5 * g * h * h, ht * un]
        };
        let speed = |[h, hn, _]: [f64; 3]| (hn / h).abs() + (g * h).sqrt();
        let alpha = speed(left).max(speed(right));
        let (fl, fr) = (phys(left), phys(right));
        [
            0.5 * (fl[0] + fr[0]) - 0.5 * alpha * (right[0] - left[0]),
            0.5 * (fl[1] + fr[1]) - 0.5 * alpha * (right[1] - left[1]),
            0.5 * (fl[2] + fr[2]) - 0.5 * alpha * (right[2] - left[2]),
        ]
    }

    fn rhs(&self, s: &SweState, out: &mut SweState) {
        let (nx, ny, g) = (self.cfg.nx, self.cfg.ny, self.cfg.g);
        let (dx, dy) = (self.cfg.dx(), self.cfg.dy());
        let xstate = |k: usize| [s.h[k], s.hu[k], s.hv[k]];
        let ystate = |k: usize| [s.h[k], s.hv[k], s.hu[k]];
        for j in 0..ny {
            for i in 0..nx {
                let k = self.idx(i, j);
                // x faces: walls reflect the normal momentum
                let c = xstate(k);
                let west = if i == 0 { [c[0], -c[1], c[2]] } else { xstate(self.idx(i - 1, j)) };
                let east = if i == nx - 1 { [c[0], -c[1], c[2]] } else { xstate(self.idx(i + 1, j)) };
                let fw = Self::flux(g, west, c);
                let fe = Self::flux(g, c, east);
                let c = ystate(k);
                let south = if j == 0 { [c[0], -c[1], c[2]] } else { ystate(self.idx(i, j - 1)) };
                let north = if j == ny - 1 { [c[0], -c[1], c[2]] } else { ystate(self.idx(i, j + 1)) };
                let gs = Self::flux(g, south, c);
                let gn = Self::flux(g, c, north);
                let xh = -(fe[0] - fw[0]) / dx;
                let yh = -(gn[0] - gs[0]) / dy;
                out.h[k] = xh + yh;
                // x-momentum: normal in x, tangential in y
                out.hu[k] = -(fe[1] - fw[1]) / dx + -(gn[2] - gs[2]) / dy;
                out.hv[k] = -(fe[2] - fw[2]) / dx + -(gn[1] - gs[1]) / dy;
            }
        }
    }
}

pub fn solve_swe(cfg: &SweConfig) -> Result<SnapshotMatrix> {
    cfg.validate()?;
    let (nx, ny) = (cfg.nx, cfg.ny);
    let (dx, dy) = (cfg.dx(), cfg.dy());
    let n = nx * ny;
    let solver = SweSolver { cfg };
    let drop = cfg.initial_drop;
    let mut state = SweState { h: vec![0.0; n], hu: vec![0.0; n], hv: vec![0.0; n] };
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 + 0.5) * dx - drop.center_x;
            let y = (j as f64 + 0.5) * dy - drop.center_y;
            let r2 = x * x + y * y;
            state.h[solver.idx(i, j)] = cfg.depth + drop.amplitude * (-r2 / (drop.width * drop.width)).exp();
        }
    }
    if state.h.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Config("initial column height must stay positive".into()));
    }

    let dt_out = output_dt(cfg.t_max, cfg.n_t);
    let mut out = CMat::zeros(n, cfg.n_t);
    let store = |out: &mut CMat, col: usize, s: &SweState| {
        for k in 0..n {
            out[(k, col)] = Complex64::new(s.h[k], 0.0);
        }
    };
    store(&mut out, 0, &state);

    let mut k1 = state.clone();
    let mut k2 = state.clone();
    let mut stage = state.clone();
    for col in 1..cfg.n_t {
        let speed = solver.max_speed(&state);
        let dt_cfl = cfg.cfl * dx.min(dy) / speed;
        let steps = substeps(dt_out, dt_cfl)?;
        let h = dt_out / steps as f64;
        for _ in 0..steps {
            solver.rhs(&state, &mut k1);
            for k in 0..n {
                stage.h[k] = state.h[k] + h * k1.h[k];
                stage.hu[k] = state.hu[k] + h * k1.hu[k];
                stage.hv[k] = state.hv[k] + h * k1.hv[k];
            }
            solver.rhs(&stage, &mut k2);
            for k in 0..n {
                state.h[k] = 0.5 * state.h[k] + 0.5 * (stage.h[k] + h * k2.h[k]);
                state.hu[k] = 0.5 * state.hu[k] + 0.5 * (stage.hu[k] + h * k2.hu[k]);
                state.hv[k] = 0.5 * state.hv[k] + 0.5 * (stage.hv[k] + h * k2.hv[k]);
            }
        }
        let t = col as f64 * dt_out;
        check_blowup(t, state.h.iter().chain(&state.hu).chain(&state.hv).copied())?;
        if state.h.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Numerical(format!("column height became non-positive at t = {t}")));
        }
        store(&mut out, col, &state);
    }
    SnapshotMatrix::new(out, false, dt_out, 0.0, GridMeta::plane(nx, ny, (0.0, cfg.lx), (0.0, cfg.ly)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_max_diff(a: &CMat, b: &CMat, col: usize) -> f64 {
        (0..a.nrows()).map(|i| (a[(i, col)] - b[(i, col)]).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn nlse_zero_is_fixed_point() {
        let cfg = NlseConfig {
            n_w: 64,
            n_t: 5,
            initial_profile: NlseInitial::Samples(vec![[0.0, 0.0]; 64]),
            ..Default::default()
        };
        let x = solve_nlse(&cfg).unwrap();
        assert!(x.values().col_iter().all(|c| c.iter().all(|v| *v == Complex64::new(0.0, 0.0))));
    }

    #[test]
    fn nlse_rejects_bad_config() {
        for cfg in [
            NlseConfig { n_w: 500, ..Default::default() },
            NlseConfig { n_t: 2, ..Default::default() },
            NlseConfig { w_min: 1.0, w_max: 1.0, ..Default::default() },
            NlseConfig { t_max: 0.0, ..Default::default() },
        ] {
            assert!(matches!(solve_nlse(&cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn nlse_default_mass_conserved() {
        let cfg = NlseConfig { n_t: 50, ..Default::default() };
        let x = solve_nlse(&cfg).unwrap();
        let mass = |j: usize| x.values().col(j).iter().map(|v| v.norm_sqr()).sum::<f64>();
        let m0 = mass(0);
        for j in 1..x.ncols() {
            assert!((mass(j) - m0).abs() / m0 < 1e-8);
        }
    }

    #[test]
    fn nlse_strang_converges_at_second_order() {
        let base = NlseConfig {
            n_w: 256,
            t_max: 2.0,
            n_t: 3,
            ..Default::default()
        };
        let run = |h: f64| solve_nlse(&NlseConfig { max_step: h, ..base.clone() }).unwrap().into_values();
        let reference = run(1e-4 / 4.0);
        let e1 = col_max_diff(&run(1e-2), &reference, 2);
        let e2 = col_max_diff(&run(5e-3), &reference, 2);
        assert!(e1 / e2 >= 1.8, "ratio {}", e1 / e2);
    }

    #[test]
    fn fne_first_column_matches_initial_data() {
        let cfg = FneConfig { n_t: 3, t_max: 1.0, ..Default::default() };
        let x = solve_fne(&cfg).unwrap();
        assert_eq!(x.nrows(), 2 * cfg.n_x);
        for (i, xi) in cfg.grid().iter().enumerate() {
            assert_eq!(x.values()[(i, 0)].re, (-xi * xi).exp());
            assert_eq!(x.values()[(cfg.n_x + i, 0)].re, 0.2 * (-(xi + 2.0) * (xi + 2.0)).exp());
        }
    }

    #[test]
    fn fne_voltage_only() {
        let cfg = FneConfig { n_t: 3, t_max: 1.0, stacked: false, ..Default::default() };
        assert_eq!(solve_fne(&cfg).unwrap().nrows(), cfg.n_x);
    }

    #[test]
    fn fne_zero_state_is_equilibrium() {
        let cfg = FneConfig { initial: FneInitial::Constant { v: 0.0, w: 0.0 }, n_t: 20, ..Default::default() };
        let x = solve_fne(&cfg).unwrap();
        assert!(x.values().col_iter().all(|c| c.iter().all(|v| *v == Complex64::new(0.0, 0.0))));
    }

    #[test]
    fn fne_reaction_fixed_points() {
        for v in [0.0, 0.1, 1.0] {
            let cfg = FneConfig {
                d_coeff: 0.0,
                b_param: 0.0,
                c_param: 0.0,
                initial: FneInitial::Constant { v, w: 0.0 },
                n_x: 16,
                n_t: 10,
                t_max: 50.0,
                ..Default::default()
            };
            let x = solve_fne(&cfg).unwrap();
            for j in 0..x.ncols() {
                for i in 0..16 {
                    assert!((x.values()[(i, j)].re - v).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn fne_paper_defaults_bounded() {
        let x = solve_fne(&FneConfig::default()).unwrap();
        assert!(crate::linalg::max_abs(x.values().as_ref()) < 2.0);
    }

    #[test]
    fn fne_rk4_converges() {
        let base = FneConfig { n_x: 64, t_max: 20.0, n_t: 3, ..Default::default() };
        let run = |h: f64| solve_fne(&FneConfig { max_step: h, ..base.clone() }).unwrap().into_values();
        let reference = run(0.01);
        let e1 = col_max_diff(&run(0.4), &reference, 2);
        let e2 = col_max_diff(&run(0.2), &reference, 2);
        assert!(e1 / e2 >= 1.8, "ratio {}", e1 / e2);
    }

    #[test]
    fn swe_flat_surface_is_steady() {
        let cfg = SweConfig {
            nx: 16,
            ny: 16,
            n_t: 10,
            initial_drop: Drop { amplitude: 0.0, ..SweConfig::default().initial_drop },
            ..Default::default()
        };
        let x = solve_swe(&cfg).unwrap();
        for v in x.values().col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()) {
            assert_eq!(v.re, 1.0);
        }
    }

    #[test]
    fn swe_centered_drop_is_transpose_symmetric_and_conserves_mass() {
        let cfg = SweConfig { nx: 32, ny: 32, n_t: 40, ..Default::default() };
        let x = solve_swe(&cfg).unwrap();
        assert_eq!(x.nrows(), 32 * 32);
        let v = x.values();
        let m0: f64 = v.col(0).iter().map(|z| z.re).sum();
        for col in 0..x.ncols() {
            for j in 0..32 {
                for i in 0..32 {
                    assert!((v[(i + 32 * j, col)].re - v[(j + 32 * i, col)].re).abs() <= 1e-10);
                }
            }
            let m: f64 = v.col(col).iter().map(|z| z.re).sum();
            assert!((m - m0).abs() / m0 < 1e-8);
        }
    }

    #[test]
    fn swe_heun_converges_in_time() {
        let base = SweConfig { nx: 16, ny: 16, n_t: 3, t_max: 0.1, ..Default::default() };
        let run = |cfl: f64| solve_swe(&SweConfig { cfl, ..base.clone() }).unwrap().into_values();
        let reference = run(0.4 / 32.0);
        let e1 = col_max_diff(&run(0.4), &reference, 2);
        let e2 = col_max_diff(&run(0.2), &reference, 2);
        assert!(e1 / e2 >= 1.8, "ratio {}", e1 / e2);
    }

    #[test]
    fn swe_rejects_small_grid() {
        assert!(matches!(solve_swe(&SweConfig { nx: 4, ..Default::default() }), Err(Error::Config(_))));
    }

    #[test]
    fn cfl_limit_reported() {
        assert!(matches!(substeps(1.0, 1e-6), Err(Error::Cfl { .. })));
    }
}
