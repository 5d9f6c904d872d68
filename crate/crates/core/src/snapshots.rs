//! Snapshot data model: the `Q x P` matrix of spatial states, the shifted
//! pair used for operator fitting, seeded Gaussian corruption at a target
//! SNR, and the `DMDS v1` binary file format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, CMat};

const MAGIC: &[u8; 4] = b"DMDS";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Line1d,
    Plane2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub count: u64,
    pub min: f64,
    pub max: f64,
}

/// Spatial layout of a snapshot column. For `Plane2d` the first axis is x,
/// the second y, and the row (x) index varies fastest in the flattened column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub kind: GridKind,
    pub axes: Vec<Axis>,
}

impl GridMeta {
    pub fn line(count: usize, min: f64, max: f64) -> Self {
        GridMeta {
            kind: GridKind::Line1d,
            axes: vec![Axis { count: count as u64, min, max }],
        }
    }

    pub fn plane(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Self {
        GridMeta {
            kind: GridKind::Plane2d,
            axes: vec![
                Axis { count: nx as u64, min: x.0, max: x.1 },
                Axis { count: ny as u64, min: y.0, max: y.1 },
            ],
        }
    }

    pub fn points(&self) -> u64 {
        self.axes.iter().map(|a| a.count).product()
    }

    fn validate(&self) -> Result<()> {
        let expected = match self.kind {
            GridKind::Line1d => 1,
            GridKind::Plane2d => 2,
        };
        if self.axes.len() != expected {
            return Err(Error::Shape(format!(
                "{:?} grid needs {expected} axes, got {}",
                self.kind,
                self.axes.len()
            )));
        }
        Ok(())
    }
}

/// Snapshots as columns of a complex matrix with a uniform time step.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    values: CMat,
    complex: bool,
    dt: f64,
    t0: f64,
    grid: GridMeta,
}

impl SnapshotMatrix {
    /// Validates shape, finiteness, time step and grid consistency.
    /// `complex = false` declares the data real; imaginary parts must then be zero.
    pub fn new(values: CMat, complex: bool, dt: f64, t0: f64, grid: GridMeta) -> Result<Self> {
        grid.validate()?;
        if values.nrows() < 2 {
            return Err(Error::Shape(format!("need Q >= 2 grid points, got {}", values.nrows())));
        }
        if values.ncols() < 1 {
            return Err(Error::Shape("snapshot matrix has no columns".into()));
        }
        if grid.points() != values.nrows() as u64 {
            return Err(Error::Shape(format!(
                "grid has {} points but matrix has {} rows",
                grid.points(),
                values.nrows()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(Error::Value(format!("time step must be positive and finite, got {dt}")));
        }
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                let v = values[(i, j)];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::Value(format!("non-finite entry at ({i}, {j})")));
                }
                if !complex && v.im != 0.0 {
                    return Err(Error::Value(format!("real dataset has imaginary part at ({i}, {j})")));
                }
            }
        }
        Ok(SnapshotMatrix { values, complex, dt, t0, grid })
    }

    /// Real data on a 1-D grid spanning `[0, Q-1]`; handy for synthetic systems.
    pub fn from_real_columns(values: CMat, dt: f64) -> Result<Self> {
        let q = values.nrows();
        let complex = !crate::linalg::is_real(values.as_ref());
        Self::new(values, complex, dt, 0.0, GridMeta::line(q, 0.0, q.saturating_sub(1) as f64))
    }

    pub fn values(&self) -> &CMat {
        &self.values
    }

    pub fn into_values(self) -> CMat {
        self.values
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn grid(&self) -> &GridMeta {
        &self.grid
    }

    /// Number of grid points `Q`.
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    /// Number of snapshots `P`.
    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.ncols()).map(|k| self.t0 + k as f64 * self.dt).collect()
    }

    /// Same metadata, new values (same shape required).
    pub fn with_values(&self, values: CMat) -> Result<Self> {
        if values.nrows() != self.nrows() || values.ncols() != self.ncols() {
            return Err(Error::Shape(format!(
                "expected {}x{}, got {}x{}",
                self.nrows(),
                self.ncols(),
                values.nrows(),
                values.ncols()
            )));
        }
        let complex = self.complex || !crate::linalg::is_real(values.as_ref());
        Self::new(values, complex, self.dt, self.t0, self.grid.clone())
    }

    /// Writes the CSV export: one row per snapshot, `t` then every grid point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.nrows()).map(|i| format!("point_{i}")));
        w.write_record(&header)?;
        for (j, t) in self.times().into_iter().enumerate() {
            let mut row = vec![t.to_string()];
            for i in 0..self.nrows() {
                let v = self.values[(i, j)];
                row.push(if self.complex { format!("{}{:+}i", v.re, v.im) } else { v.re.to_string() });
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The shifted pair `(X1, X2)`: columns `1..P-1` and `2..P` of the parent.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub x1: CMat,
    pub x2: CMat,
    pub dt: f64,
    pub t0: f64,
}

pub fn split(x: &SnapshotMatrix) -> Result<SplitPair> {
    split_values(x.values(), x.dt(), x.t0())
}

pub(crate) fn split_values(v: &CMat, dt: f64, t0: f64) -> Result<SplitPair> {
    let p = v.ncols();
    if p < 3 {
        return Err(Error::Shape(format!("splitting needs P >= 3 snapshots, got {p}")));
    }
    Ok(SplitPair {
        x1: v.subcols(0, p - 1).to_owned(),
        x2: v.subcols(1, p - 1).to_owned(),
        dt,
        t0,
    })
}

/// Target SNR in decibels and RNG seed. `snr_db = +inf` means no corruption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn clean() -> Self {
        NoiseSpec { snr_db: f64::INFINITY, seed: 0 }
    }
}

/// Adds white Gaussian noise whose expected power is `||x||_F^2 / 10^(snr/10)`.
/// Complex data receives circularly symmetric noise (variance split evenly
/// between real and imaginary parts).
pub fn add_noise(x: &SnapshotMatrix, spec: NoiseSpec) -> Result<SnapshotMatrix> {
    if spec.snr_db.is_nan() || spec.snr_db == f64::NEG_INFINITY {
        return Err(Error::Value(format!("SNR must be finite or +inf, got {}", spec.snr_db)));
    }
    if spec.snr_db == f64::INFINITY {
        return Ok(x.clone());
    }
    let (q, p) = (x.nrows(), x.ncols());
    let signal_power = frobenius(x.values().as_ref()).powi(2);
    let variance = signal_power / ((q * p) as f64 * 10f64.powf(spec.snr_db / 10.0));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let complex = x.is_complex();
    let sigma = if complex { (variance / 2.0).sqrt() } else { variance.sqrt() };
    let mut values = x.values().clone();
    for j in 0..p {
        for i in 0..q {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = if complex { StandardNormal.sample(&mut rng) } else { 0.0 };
            values[(i, j)] += Complex64::new(sigma * re, sigma * im);
        }
    }
    SnapshotMatrix::new(values, complex, x.dt, x.t0, x.grid.clone())
}

/// Measured SNR `10 log10(||clean||^2 / ||noisy - clean||^2)` in decibels.
pub fn empirical_snr_db(clean: &CMat, noisy: &CMat) -> f64 {
    let diff = noisy - clean;
    10.0 * (frobenius(clean.as_ref()).powi(2) / frobenius(diff.as_ref()).powi(2)).log10()
}

pub fn save(x: &SnapshotMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dmds(x, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<SnapshotMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    read_dmds(&mut r)
}

pub fn write_dmds<W: Write>(x: &SnapshotMatrix, w: &mut W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[u8::from(x.complex)])?;
    w.write_all(&[match x.grid.kind {
        GridKind::Line1d => 0u8,
        GridKind::Plane2d => 1u8,
    }])?;
    w.write_all(&0u16.to_le_bytes())?;
    w.write_all(&(x.nrows() as u64).to_le_bytes())?;
    w.write_all(&(x.ncols() as u64).to_le_bytes())?;
    w.write_all(&x.dt.to_le_bytes())?;
    w.write_all(&x.t0.to_le_bytes())?;
    for axis in &x.grid.axes {
        w.write_all(&axis.count.to_le_bytes())?;
        w.write_all(&axis.min.to_le_bytes())?;
        w.write_all(&axis.max.to_le_bytes())?;
    }
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let v = x.values[(i, j)];
            w.write_all(&v.re.to_le_bytes())?;
            if x.complex {
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated while reading {what}")),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<_, 8>(r, what)?))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<_, 8>(r, what)?))
}

pub fn read_dmds<R: Read>(r: &mut R) -> Result<SnapshotMatrix> {
    let magic = read_exact::<_, 4>(r, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic bytes {magic:?}")));
    }
    let version = u32::from_le_bytes(read_exact::<_, 4>(r, "version")?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let [complex_flag] = read_exact::<_, 1>(r, "complex flag")?;
    let [kind] = read_exact::<_, 1>(r, "grid kind")?;
    let _reserved = read_exact::<_, 2>(r, "reserved")?;
    let complex = match complex_flag {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("complex flag must be 0 or 1, got {other}"))),
    };
    let (kind, n_axes) = match kind {
        0 => (GridKind::Line1d, 1),
        1 => (GridKind::Plane2d, 2),
        other => return Err(Error::Format(format!("unknown grid kind {other}"))),
    };
    let q = read_u64(r, "Q")?;
    let p = read_u64(r, "P")?;
    let dt = read_f64(r, "dt")?;
    let t0 = read_f64(r, "t0")?;
    let mut axes = Vec::with_capacity(n_axes);
    for _ in 0..n_axes {
        axes.push(Axis {
            count: read_u64(r, "axis count")?,
            min: read_f64(r, "axis min")?,
            max: read_f64(r, "axis max")?,
        });
    }
    let grid = GridMeta { kind, axes };
    if grid.points() != q {
        return Err(Error::Format(format!("grid has {} points but header says Q = {q}", grid.points())));
    }
    let entries = q
        .checked_mul(p)
        .filter(|n| *n <= (1 << 40))
        .ok_or_else(|| Error::Format(format!("implausible dimensions {q}x{p}")))?;
    let width = if complex { 16 } else { 8 };
    let mut payload = Vec::new();
    r.take(entries * width).read_to_end(&mut payload)?;
    if payload.len() as u64 != entries * width {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header requires {}",
            payload.len(),
            entries * width
        )));
    }
    let (q, p) = (q as usize, p as usize);
    let at = |k: usize| f64::from_le_bytes(payload[8 * k..8 * k + 8].try_into().unwrap());
    let values = CMat::from_fn(q, p, |i, j| {
        let k = j * q + i;
        if complex {
            Complex64::new(at(2 * k), at(2 * k + 1))
        } else {
            Complex64::new(at(k), 0.0)
        }
    });
    SnapshotMatrix::new(values, complex, dt, t0, grid).map_err(|e| Error::Format(e.to_string()))
}
