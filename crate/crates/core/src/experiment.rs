//! Experiment driver: corrupt, filter, fit, reconstruct and score every
//! `(method, snr, seed)` cell against the clean dataset.
//!
//! Cells are independent and run on a rayon pool; results are returned and
//! written in canonical order (method, snr, seed) so output does not depend
//! on scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmd::{self, DmdModel, RankRule, DEFAULT_ENERGY, SINGULAR_CUTOFF};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::metrics::{self, Method, MetricsRecord, DEFAULT_RANK_TOL};
use crate::pde::{self, FneConfig, NlseConfig, SweConfig};
use crate::rpca::{self, AdmParams, IalmParams};
use crate::snapshots::{self, NoiseSpec, SnapshotMatrix, SplitPair};
use crate::tlsdmd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Nlse,
    Fne,
    Swe,
}

impl DatasetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetKind::Nlse => "nlse",
            DatasetKind::Fne => "fne",
            DatasetKind::Swe => "swe",
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nlse" => Ok(DatasetKind::Nlse),
            "fne" => Ok(DatasetKind::Fne),
            "swe" => Ok(DatasetKind::Swe),
            other => Err(Error::Config(format!("unknown dataset `{other}` (expected nlse|fne|swe)"))),
        }
    }
}

fn default_sweep() -> Vec<f64> {
    (1..=8).map(|k| 5.0 * k as f64).collect()
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub nlse: NlseConfig,
    pub fne: FneConfig,
    pub swe: SweConfig,
    /// SNR values in dB, strictly increasing.
    pub snr_db: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub rank: RankRule,
    pub rank_tol: f64,
    pub adm: AdmParams,
    pub ialm: IalmParams,
    /// Skip corruption entirely (the `+inf` SNR sentinel).
    pub clean: bool,
    /// Run the RPCA filters on X1 and X2 separately instead of on the full matrix.
    pub filter_splits: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetKind::Nlse,
            nlse: NlseConfig::default(),
            fne: FneConfig::default(),
            swe: SweConfig::default(),
            snr_db: default_sweep(),
            seeds: default_seeds(),
            methods: default_methods(),
            rank: RankRule::default(),
            rank_tol: DEFAULT_RANK_TOL,
            adm: AdmParams::default(),
            ialm: IalmParams::default(),
            clean: false,
            filter_splits: false,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("at least one SNR value is required".into()));
        }
        if self.snr_db.iter().any(|s| s.is_nan()) || self.snr_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(format!("SNR list must be strictly increasing: {:?}", self.snr_db)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("seeds must be distinct: {:?}", self.seeds)));
        }
        let mut methods = self.methods.clone();
        methods.sort();
        if methods.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("methods must be distinct".into()));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::Config(format!("rank_tol must lie in (0, 1), got {}", self.rank_tol)));
        }
        match self.rank {
            RankRule::Fixed(0) => return Err(Error::Config("rank must be positive".into())),
            RankRule::Energy(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::Config(format!("energy fraction must lie in (0, 1], got {f}")))
            }
            _ => {}
        }
        Ok(())
    }
}

pub fn generate(kind: DatasetKind, cfg: &ExperimentConfig) -> Result<SnapshotMatrix> {
    match kind {
        DatasetKind::Nlse => pde::solve_nlse(&cfg.nlse),
        DatasetKind::Fne => pde::solve_fne(&cfg.fne),
        DatasetKind::Swe => pde::solve_swe(&cfg.swe),
    }
}

/// Filtered data, its numerical rank and the pair handed to the fit.
pub struct Filtered {
    pub method: Method,
    pub data: CMat,
    pub rank: usize,
    pub pair: SplitPair,
    /// Truncation rank chosen for the fit.
    pub fit_rank: usize,
    pub rpca_converged: Option<bool>,
}

fn rpca_filter(method: Method, d: &CMat, cfg: &ExperimentConfig) -> Result<CMat> {
    let res = match method {
        Method::Adm => rpca::rpca_adm(d.as_ref(), &cfg.adm)?,
        Method::Ialm => rpca::rpca_ialm(d.as_ref(), &cfg.ialm)?,
        _ => unreachable!("not an RPCA method"),
    };
    Ok(res.l)
}

fn exact_rank(pair: &SplitPair, rule: RankRule) -> Result<usize> {
    Ok(rule.resolve(&linalg::singular_values(pair.x1.as_ref())?))
}

/// Applies one filtering method to (possibly corrupted) data.
pub fn filter(method: Method, x: &SnapshotMatrix, cfg: &ExperimentConfig) -> Result<Filtered> {
    let (data, pair, fit_rank, converged) = match method {
        Method::None => {
            let pair = snapshots::split(x)?;
            let r = exact_rank(&pair, cfg.rank)?;
            (x.values().clone(), pair, r, None)
        }
        Method::Adm | Method::Ialm if cfg.filter_splits => {
            let raw = snapshots::split(x)?;
            let x1 = rpca_filter(method, &raw.x1, cfg)?;
            let x2 = rpca_filter(method, &raw.x2, cfg)?;
            let p = x.ncols();
            let data = CMat::from_fn(x.nrows(), p, |i, j| if j < p - 1 { x1[(i, j)] } else { x2[(i, p - 2)] });
            let pair = SplitPair { x1, x2, dt: x.dt(), t0: x.t0() };
            let r = exact_rank(&pair, cfg.rank)?;
            (data, pair, r, None)
        }
        Method::Adm | Method::Ialm => {
            let res = match method {
                Method::Adm => rpca::rpca_adm(x.values().as_ref(), &cfg.adm)?,
                _ => rpca::rpca_ialm(x.values().as_ref(), &cfg.ialm)?,
            };
            let pair = snapshots::split_values(&res.l, x.dt(), x.t0())?;
            let r = exact_rank(&pair, cfg.rank)?;
            (res.l, pair, r, Some(res.converged))
        }
        Method::Tls => {
            let raw = snapshots::split(x)?;
            let r = tlsdmd::resolve_rank(&raw, cfg.rank)?;
            let (x1, x2, _) = tlsdmd::tls_project(&raw, r)?;
            let p = x.ncols();
            let data = CMat::from_fn(x.nrows(), p, |i, j| if j < p - 1 { x1[(i, j)] } else { x2[(i, p - 2)] });
            (data, SplitPair { x1, x2, dt: x.dt(), t0: x.t0() }, r, None)
        }
    };
    let rank = metrics::numerical_rank(data.as_ref(), cfg.rank_tol)?;
    Ok(Filtered { method, data, rank, pair, fit_rank, rpca_converged: converged })
}

/// Fits the model that goes with a filtered pair (the TLS pair is already projected).
pub fn fit_filtered(f: &Filtered) -> Result<DmdModel> {
    dmd::fit(&f.pair, f.fit_rank)
}

/// Outcome of one cell, including the error series for the CSV side file.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub record: MetricsRecord,
    pub times: Vec<f64>,
    pub epsilon: Vec<f64>,
}

pub fn error_series_name(dataset: &str, method: Method, snr_db: f64, seed: u64) -> String {
    format!("eps/{dataset}_{method}_snr{snr_db}_seed{seed}.csv")
}

pub fn run_cell(clean: &SnapshotMatrix, dataset: &str, method: Method, snr_db: f64, seed: u64, cfg: &ExperimentConfig) -> CellResult {
    let snr = if cfg.clean { f64::INFINITY } else { snr_db };
    let mut record = MetricsRecord {
        dataset: dataset.to_string(),
        method,
        snr_db: snr,
        seed,
        rank_used: None,
        rmse: None,
        cc_paper: None,
        cc_pearson: None,
        filtered_rank: None,
        error_series_path: String::new(),
        error: String::new(),
    };
    let outcome = (|| -> Result<(Vec<f64>, Vec<f64>)> {
        let noisy = snapshots::add_noise(clean, NoiseSpec { snr_db: snr, seed })?;
        let filtered = filter(method, &noisy, cfg)?;
        record.filtered_rank = Some(filtered.rank);
        record.rank_used = Some(filtered.fit_rank);
        let model = fit_filtered(&filtered)?;
        let times = clean.times();
        let pred = dmd::reconstruct(&model, &times)?;
        let truth = clean.values().as_ref();
        record.rmse = Some(metrics::rmse(pred.as_ref(), truth)?);
        record.cc_paper = Some(metrics::cc_paper(pred.as_ref(), truth)?);
        record.cc_pearson = metrics::cc_pearson(pred.as_ref(), truth).ok();
        let eps = dmd::relative_error_series(pred.as_ref(), truth)?;
        record.error_series_path = error_series_name(dataset, method, snr, seed);
        Ok((times, eps))
    })();
    match outcome {
        Ok((times, epsilon)) => CellResult { record, times, epsilon },
        Err(e) => {
            record.error = e.to_string();
            CellResult { record, times: Vec::new(), epsilon: Vec::new() }
        }
    }
}

/// Runs all cells (optionally on a dedicated pool of `threads` workers), canonical order.
pub fn run_cells(clean: &SnapshotMatrix, cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let dataset = cfg.dataset.as_str();
    let mut methods = cfg.methods.clone();
    methods.sort();
    let snrs: Vec<f64> = if cfg.clean { vec![f64::INFINITY] } else { cfg.snr_db.clone() };
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    let mut cells: Vec<(Method, f64, u64)> = Vec::new();
    for &m in &methods {
        for &s in &snrs {
            cells.extend(seeds.iter().map(|&seed| (m, s, seed)));
        }
    }
    let work = || -> Vec<CellResult> {
        cells
            .par_iter()
            .map(|&(m, s, seed)| run_cell(clean, dataset, m, s, seed, cfg))
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(results)
}

/// Mean scores per (method, snr) over the seeds that succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: Method,
    pub snr_db: f64,
    pub n_seeds: usize,
    pub n_failed: usize,
    pub mean_rmse: f64,
    pub mean_cc_paper: f64,
    pub mean_cc_pearson: f64,
    pub mean_filtered_rank: f64,
}

pub const SUMMARY_HEADER: &str =
    "dataset,method,snr_db,n_seeds,n_failed,mean_rmse,mean_cc_paper,mean_cc_pearson,mean_filtered_rank";

pub fn summarize(records: &[MetricsRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Method, u64), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.snr_db.to_bits())).or_default().push(r);
    }
    let mean = |v: Vec<f64>| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mut rows: Vec<SummaryRow> = groups
        .into_values()
        .map(|group| {
            let ok: Vec<&&MetricsRecord> = group.iter().filter(|r| !r.failed()).collect();
            SummaryRow {
                dataset: group[0].dataset.clone(),
                method: group[0].method,
                snr_db: group[0].snr_db,
                n_seeds: ok.len(),
                n_failed: group.len() - ok.len(),
                mean_rmse: mean(ok.iter().filter_map(|r| r.rmse).collect()),
                mean_cc_paper: mean(ok.iter().filter_map(|r| r.cc_paper).collect()),
                mean_cc_pearson: mean(ok.iter().filter_map(|r| r.cc_pearson).collect()),
                mean_filtered_rank: mean(ok.iter().filter_map(|r| r.filtered_rank.map(|k| k as f64)).collect()),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.snr_db.total_cmp(&b.snr_db)));
    rows
}

pub fn write_summary_csv<W: std::io::Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.method.to_string(),
            r.snr_db.to_string(),
            r.n_seeds.to_string(),
            r.n_failed.to_string(),
            r.mean_rmse.to_string(),
            r.mean_cc_paper.to_string(),
            r.mean_cc_pearson.to_string(),
            r.mean_filtered_rank.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: std::io::Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != SUMMARY_HEADER {
        return Err(Error::Schema(format!("expected summary header `{SUMMARY_HEADER}`, got `{}`", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::Schema(format!("bad number in column {k}")))
        };
        rows.push(SummaryRow {
            dataset: rec.get(0).unwrap_or("").to_string(),
            method: rec.get(1).unwrap_or("").parse().map_err(|e: Error| Error::Schema(e.to_string()))?,
            snr_db: num(2)?,
            n_seeds: num(3)? as usize,
            n_failed: num(4)? as usize,
            mean_rmse: num(5)?,
            mean_cc_paper: num(6)?,
            mean_cc_pearson: num(7)?,
            mean_filtered_rank: num(8)?,
        });
    }
    Ok(rows)
}

/// Every resolved default a run depends on.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    pub snr_convention: &'static str,
    pub noise: &'static str,
    pub rank_rule: String,
    pub default_energy_fraction: f64,
    pub singular_cutoff: f64,
    pub rank_tol: f64,
    pub adm_mu_rule: &'static str,
    pub ialm_schedule: &'static str,
    pub rpca_lambda_rule: &'static str,
    pub ground_truth: &'static str,
    pub seeds_per_point: usize,
    pub dataset_shape: [usize; 2],
    pub dataset_dt: f64,
}

pub fn manifest<'a>(cfg: &'a ExperimentConfig, clean: &SnapshotMatrix) -> Manifest<'a> {
    Manifest {
        tool: "noisydmd",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        snr_convention: "10*log10(||X||_F^2 / E||C||_F^2), measured signal power",
        noise: "white Gaussian; complex data gets circular noise (variance split between re and im); corrupt full matrix then split",
        rank_rule: match cfg.rank {
            RankRule::Energy(f) => format!("smallest r with cumulative squared singular values >= {f}"),
            RankRule::Fixed(r) => format!("fixed r = {r}"),
        },
        default_energy_fraction: DEFAULT_ENERGY,
        singular_cutoff: SINGULAR_CUTOFF,
        rank_tol: cfg.rank_tol,
        adm_mu_rule: "mu = n*m / (4 ||D||_1) unless set",
        ialm_schedule: "mu0 = 1.25/||D||_2, mu <- min(rho*mu, mu0*1e7), Y0 = D / max(||D||_2, ||D||_inf/lambda)",
        rpca_lambda_rule: "lambda = lambda_coef / sqrt(max(n, m))",
        ground_truth: "clean dataset before corruption",
        seeds_per_point: cfg.seeds.len(),
        dataset_shape: [clean.nrows(), clean.ncols()],
        dataset_dt: clean.dt(),
    }
}

/// Writes `metrics.csv`, the `eps/` series and `manifest.json` under `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, clean: &SnapshotMatrix, cells: &[CellResult]) -> Result<Vec<MetricsRecord>> {
    fs::create_dir_all(dir.join("eps"))?;
    for c in cells.iter().filter(|c| !c.record.failed()) {
        let f = fs::File::create(dir.join(&c.record.error_series_path))?;
        metrics::write_error_series_csv(&c.times, &c.epsilon, f)?;
    }
    let records: Vec<MetricsRecord> = cells.iter().map(|c| c.record.clone()).collect();
    metrics::write_metrics_csv(&records, fs::File::create(dir.join("metrics.csv"))?)?;
    let manifest = serde_json::to_string_pretty(&manifest(cfg, clean))?;
    fs::write(dir.join("manifest.json"), manifest + "\n")?;
    Ok(records)
}

/// Generates the dataset, runs every cell and writes all outputs.
pub fn run_pipeline(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    let clean = generate(cfg.dataset, cfg)?;
    let cells = run_cells(&clean, cfg, threads)?;
    write_outputs(&cfg.output_dir, cfg, &clean, &cells)
}

/// Pipeline plus `summary.csv` of per-method means over seeds.
pub fn run_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<SummaryRow>> {
    let records = run_pipeline(cfg, threads)?;
    let rows = summarize(&records);
    write_summary_csv(&rows, fs::File::create(cfg.output_dir.join("summary.csv"))?)?;
    Ok(rows)
}
