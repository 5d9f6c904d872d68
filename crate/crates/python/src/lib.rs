//! Python bindings: `import pynoisydmd`.
//!
//! Arrays cross the boundary as `complex128` NumPy arrays; any array-like
//! input is passed through `numpy.asarray(x, dtype=complex128)` first.
//! Configurations are plain keyword arguments or dicts with the same keys
//! as the JSON configuration files of the command-line tool.

use numpy::ndarray::Array2;
use numpy::{Complex64, IntoPyArray, PyArray1, PyArray2, PyReadonlyArray2, PyUntypedArrayMethods};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use noisydmd::dmd::{self, RankRule};
use noisydmd::experiment::{self, ExperimentConfig};
use noisydmd::linalg::{self, CMat};
use noisydmd::metrics::{self, Method};
use noisydmd::rpca::{self, AdmParams, IalmParams};
use noisydmd::snapshots::{self, NoiseSpec};
use noisydmd::{pde, tlsdmd, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Value(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for noisydmd::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Coerces an array-like to a 2-D complex matrix; reports whether the input was complex.
fn to_cmat(obj: &Bound<'_, PyAny>) -> PyResult<(CMat, bool)> {
    let np = obj.py().import("numpy")?;
    let complex = np.call_method1("iscomplexobj", (obj,))?.extract::<bool>()?;
    let kwargs = PyDict::new(obj.py());
    kwargs.set_item("dtype", np.getattr("complex128")?)?;
    let arr = np.call_method("asarray", (obj,), Some(&kwargs))?;
    let arr: PyReadonlyArray2<'_, Complex64> = arr
        .extract()
        .map_err(|_| PyValueError::new_err("expected a 2-D array"))?;
    let [q, p] = [arr.shape()[0], arr.shape()[1]];
    let view = arr.as_array();
    Ok((CMat::from_fn(q, p, |i, j| view[(i, j)]), complex))
}

fn to_numpy<'py>(py: Python<'py>, m: &CMat) -> Bound<'py, PyArray2<Complex64>> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)]).into_pyarray(py)
}

fn to_json_value(obj: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    match obj {
        None => Ok("{}".to_string()),
        Some(d) => d.py().import("json")?.call_method1("dumps", (d,))?.extract(),
    }
}

fn config<T: serde::de::DeserializeOwned>(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<T> {
    serde_json::from_str(&to_json_value(kwargs)?).map_err(|e| PyValueError::new_err(format!("invalid configuration: {e}")))
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rank_rule(rank: Option<usize>) -> PyResult<RankRule> {
    match rank {
        None => Ok(RankRule::default()),
        Some(0) => Err(PyValueError::new_err("rank must be positive")),
        Some(r) => Ok(RankRule::Fixed(r)),
    }
}

/// Snapshot matrix: columns are snapshots at `t0 + k dt`.
#[pyclass(name = "SnapshotMatrix", module = "pynoisydmd", frozen)]
#[derive(Clone)]
struct PySnapshots {
    inner: snapshots::SnapshotMatrix,
}

#[pymethods]
impl PySnapshots {
    /// Builds a 1-D snapshot matrix. Real inputs stay flagged as real.
    #[new]
    #[pyo3(signature = (values, dt, t0 = 0.0, x_min = 0.0, x_max = 1.0))]
    fn new(values: &Bound<'_, PyAny>, dt: f64, t0: f64, x_min: f64, x_max: f64) -> PyResult<Self> {
        let (m, complex) = to_cmat(values)?;
        let grid = snapshots::GridMeta::line(m.nrows(), x_min, x_max);
        let inner = snapshots::SnapshotMatrix::new(m, complex, dt, t0, grid).py()?;
        Ok(PySnapshots { inner })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PySnapshots { inner: snapshots::load(path).py()? })
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        snapshots::save(&self.inner, path).py()
    }

    #[getter]
    fn values<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<Complex64>> {
        to_numpy(py, self.inner.values())
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.nrows(), self.inner.ncols())
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0()
    }

    #[getter]
    fn is_complex(&self) -> bool {
        self.inner.is_complex()
    }

    fn times<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        PyArray1::from_vec(py, self.inner.times())
    }

    /// The shifted pair `(X1, X2)` as arrays.
    fn split<'py>(&self, py: Python<'py>) -> PyResult<(Bound<'py, PyArray2<Complex64>>, Bound<'py, PyArray2<Complex64>>)> {
        let pair = snapshots::split(&self.inner).py()?;
        Ok((to_numpy(py, &pair.x1), to_numpy(py, &pair.x2)))
    }

    /// White Gaussian noise at `snr_db`; `inf` returns an unchanged copy.
    #[pyo3(signature = (snr_db, seed = 0))]
    fn add_noise(&self, snr_db: f64, seed: u64) -> PyResult<Self> {
        let inner = snapshots::add_noise(&self.inner, NoiseSpec { snr_db, seed }).py()?;
        Ok(PySnapshots { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.ncols()
    }

    fn __repr__(&self) -> String {
        format!(
            "SnapshotMatrix(shape=({}, {}), dt={}, complex={})",
            self.inner.nrows(),
            self.inner.ncols(),
            self.inner.dt(),
            self.inner.is_complex()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn solve_nlse(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<PySnapshots> {
    let cfg: pde::NlseConfig = config(kwargs)?;
    Ok(PySnapshots { inner: py.detach(|| pde::solve_nlse(&cfg)).py()? })
}

#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn solve_fne(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<PySnapshots> {
    let cfg: pde::FneConfig = config(kwargs)?;
    Ok(PySnapshots { inner: py.detach(|| pde::solve_fne(&cfg)).py()? })
}

#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn solve_swe(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<PySnapshots> {
    let cfg: pde::SweConfig = config(kwargs)?;
    Ok(PySnapshots { inner: py.detach(|| pde::solve_swe(&cfg)).py()? })
}

/// Fitted DMD model.
#[pyclass(name = "DmdModel", module = "pynoisydmd", frozen)]
struct PyDmdModel {
    inner: dmd::DmdModel,
}

#[pymethods]
impl PyDmdModel {
    /// Exact DMD (or TLS-DMD with `tls=True`). `rank=None` applies the energy rule.
    #[staticmethod]
    #[pyo3(signature = (x, rank = None, tls = false))]
    fn fit(py: Python<'_>, x: &PySnapshots, rank: Option<usize>, tls: bool) -> PyResult<Self> {
        let rule = rank_rule(rank)?;
        let pair = snapshots::split(&x.inner).py()?;
        let inner = py
            .detach(|| {
                if tls {
                    tlsdmd::tls_dmd(&pair, tlsdmd::resolve_rank(&pair, rule)?)
                } else {
                    dmd::fit(&pair, rule.resolve(&linalg::singular_values(pair.x1.as_ref())?))
                }
            })
            .py()?;
        Ok(PyDmdModel { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyDmdModel { inner: dmd::DmdModel::from_json(text).py()? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    /// Evaluates the model at the given times.
    fn reconstruct<'py>(&self, py: Python<'py>, times: Vec<f64>) -> PyResult<Bound<'py, PyArray2<Complex64>>> {
        Ok(to_numpy(py, &dmd::reconstruct(&self.inner, &times).py()?))
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0
    }

    #[getter]
    fn modes<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<Complex64>> {
        to_numpy(py, &self.inner.phi)
    }

    #[getter]
    fn eigenvalues<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<Complex64>> {
        PyArray1::from_slice(py, &self.inner.lambda)
    }

    #[getter]
    fn omega<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<Complex64>> {
        PyArray1::from_slice(py, &self.inner.omega)
    }

    #[getter]
    fn amplitudes<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<Complex64>> {
        PyArray1::from_slice(py, &self.inner.b)
    }

    fn __repr__(&self) -> String {
        format!("DmdModel(rank={}, dt={})", self.inner.rank, self.inner.dt)
    }
}

/// Low-rank plus sparse split `D = L + S`.
#[pyclass(name = "RpcaResult", module = "pynoisydmd", frozen)]
struct PyRpcaResult {
    inner: rpca::RpcaResult,
}

#[pymethods]
impl PyRpcaResult {
    #[getter]
    fn low_rank<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<Complex64>> {
        to_numpy(py, &self.inner.l)
    }

    #[getter]
    fn sparse<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<Complex64>> {
        to_numpy(py, &self.inner.s)
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    /// Per-iteration diagnostics as a list of dicts.
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.trace)
    }

    fn __repr__(&self) -> String {
        format!(
            "RpcaResult(method={}, iterations={}, converged={}, residual={:e})",
            self.inner.method, self.inner.iterations, self.inner.converged, self.inner.residual
        )
    }
}

#[pyfunction]
fn shrink<'py>(py: Python<'py>, x: &Bound<'py, PyAny>, tau: f64) -> PyResult<Bound<'py, PyArray2<Complex64>>> {
    let (m, _) = to_cmat(x)?;
    Ok(to_numpy(py, &rpca::shrink(m.as_ref(), tau).py()?))
}

#[pyfunction]
fn svt<'py>(py: Python<'py>, x: &Bound<'py, PyAny>, tau: f64) -> PyResult<Bound<'py, PyArray2<Complex64>>> {
    let (m, _) = to_cmat(x)?;
    Ok(to_numpy(py, &py.detach(|| rpca::svt(m.as_ref(), tau)).py()?))
}

/// Keyword arguments: `mu`, `lambda_coef`, `tol`, `max_iter`.
#[pyfunction]
#[pyo3(signature = (d, **kwargs))]
fn rpca_adm(py: Python<'_>, d: &Bound<'_, PyAny>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<PyRpcaResult> {
    let params: AdmParams = config(kwargs)?;
    let (m, _) = to_cmat(d)?;
    Ok(PyRpcaResult { inner: py.detach(|| rpca::rpca_adm(m.as_ref(), &params)).py()? })
}

/// Keyword arguments: `mu0`, `rho`, `mu_cap`, `lambda_coef`, `tol`, `max_iter`.
#[pyfunction]
#[pyo3(signature = (d, **kwargs))]
fn rpca_ialm(py: Python<'_>, d: &Bound<'_, PyAny>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<PyRpcaResult> {
    let params: IalmParams = config(kwargs)?;
    let (m, _) = to_cmat(d)?;
    Ok(PyRpcaResult { inner: py.detach(|| rpca::rpca_ialm(m.as_ref(), &params)).py()? })
}

/// TLS-projected pair `(X1, X2)` at rank `rank` (energy rule when `None`).
#[pyfunction]
#[pyo3(signature = (x, rank = None))]
fn tls_project<'py>(
    py: Python<'py>,
    x: &PySnapshots,
    rank: Option<usize>,
) -> PyResult<(Bound<'py, PyArray2<Complex64>>, Bound<'py, PyArray2<Complex64>>)> {
    let rule = rank_rule(rank)?;
    let pair = snapshots::split(&x.inner).py()?;
    let (x1, x2, _) = py.detach(|| tlsdmd::tls_project(&pair, tlsdmd::resolve_rank(&pair, rule)?)).py()?;
    Ok((to_numpy(py, &x1), to_numpy(py, &x2)))
}

#[pyfunction]
#[pyo3(signature = (x, rank = None))]
fn tls_dmd(py: Python<'_>, x: &PySnapshots, rank: Option<usize>) -> PyResult<PyDmdModel> {
    PyDmdModel::fit(py, x, rank, true)
}

#[pyfunction]
fn rmse(pred: &Bound<'_, PyAny>, truth: &Bound<'_, PyAny>) -> PyResult<f64> {
    let ((p, _), (t, _)) = (to_cmat(pred)?, to_cmat(truth)?);
    metrics::rmse(p.as_ref(), t.as_ref()).py()
}

#[pyfunction]
fn cc_paper(pred: &Bound<'_, PyAny>, truth: &Bound<'_, PyAny>) -> PyResult<f64> {
    let ((p, _), (t, _)) = (to_cmat(pred)?, to_cmat(truth)?);
    metrics::cc_paper(p.as_ref(), t.as_ref()).py()
}

#[pyfunction]
fn cc_pearson(pred: &Bound<'_, PyAny>, truth: &Bound<'_, PyAny>) -> PyResult<f64> {
    let ((p, _), (t, _)) = (to_cmat(pred)?, to_cmat(truth)?);
    metrics::cc_pearson(p.as_ref(), t.as_ref()).py()
}

#[pyfunction]
#[pyo3(signature = (x, tol = metrics::DEFAULT_RANK_TOL))]
fn numerical_rank(x: &Bound<'_, PyAny>, tol: f64) -> PyResult<usize> {
    let (m, _) = to_cmat(x)?;
    metrics::numerical_rank(m.as_ref(), tol).py()
}

/// Per-snapshot relative error `||pred_k - truth_k|| / ||truth_k||`.
#[pyfunction]
fn relative_error_series<'py>(py: Python<'py>, pred: &Bound<'py, PyAny>, truth: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyArray1<f64>>> {
    let ((p, _), (t, _)) = (to_cmat(pred)?, to_cmat(truth)?);
    Ok(PyArray1::from_vec(py, dmd::relative_error_series(p.as_ref(), t.as_ref()).py()?))
}

fn experiment_config(cfg: Option<&Bound<'_, PyDict>>) -> PyResult<ExperimentConfig> {
    let cfg: ExperimentConfig = config(cfg)?;
    cfg.validate().py()?;
    Ok(cfg)
}

/// Runs every (method, SNR, seed) cell, writes the outputs under
/// `output_dir` and returns the metrics rows as dicts.
#[pyfunction]
#[pyo3(signature = (config = None, threads = None))]
fn run_pipeline<'py>(py: Python<'py>, config: Option<&Bound<'py, PyDict>>, threads: Option<usize>) -> PyResult<Bound<'py, PyList>> {
    let cfg = experiment_config(config)?;
    let records = py.detach(|| experiment::run_pipeline(&cfg, threads)).py()?;
    PyList::new(py, records.iter().map(|r| json_to_py(py, r)).collect::<PyResult<Vec<_>>>()?)
}

/// Pipeline plus per-method means over seeds; returns the summary rows.
#[pyfunction]
#[pyo3(signature = (config = None, threads = None))]
fn run_sweep<'py>(py: Python<'py>, config: Option<&Bound<'py, PyDict>>, threads: Option<usize>) -> PyResult<Bound<'py, PyList>> {
    let cfg = experiment_config(config)?;
    let rows = py.detach(|| experiment::run_sweep(&cfg, threads)).py()?;
    PyList::new(py, rows.iter().map(|r| json_to_py(py, r)).collect::<PyResult<Vec<_>>>()?)
}

#[pymodule]
fn pynoisydmd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("METHODS", Method::ALL.iter().map(|x| x.as_str()).collect::<Vec<_>>())?;
    m.add_class::<PySnapshots>()?;
    m.add_class::<PyDmdModel>()?;
    m.add_class::<PyRpcaResult>()?;
    m.add_function(wrap_pyfunction!(solve_nlse, m)?)?;
    m.add_function(wrap_pyfunction!(solve_fne, m)?)?;
    m.add_function(wrap_pyfunction!(solve_swe, m)?)?;
    m.add_function(wrap_pyfunction!(shrink, m)?)?;
    m.add_function(wrap_pyfunction!(svt, m)?)?;
    m.add_function(wrap_pyfunction!(rpca_adm, m)?)?;
    m.add_function(wrap_pyfunction!(rpca_ialm, m)?)?;
    m.add_function(wrap_pyfunction!(tls_project, m)?)?;
    m.add_function(wrap_pyfunction!(tls_dmd, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(cc_paper, m)?)?;
    m.add_function(wrap_pyfunction!(cc_pearson, m)?)?;
    m.add_function(wrap_pyfunction!(numerical_rank, m)?)?;
    m.add_function(wrap_pyfunction!(relative_error_series, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
