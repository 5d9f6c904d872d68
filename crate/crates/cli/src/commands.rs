use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use noisydmd::dmd::{self, DmdModel, RankRule};
use noisydmd::experiment::{self, DatasetKind, ExperimentConfig};
use noisydmd::linalg::{self, CMat};
use noisydmd::metrics::{self, Method, MetricsRecord};
use noisydmd::rpca;
use noisydmd::snapshots::{self, NoiseSpec, SnapshotMatrix};
use noisydmd::{plot, tlsdmd, Error, Result};

use crate::{Cli, Command, DatasetArg, FilterMethod, PlotKind, RunArgs};

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match &cli.command {
        Command::Generate(a) => {
            let kind = dataset(a.dataset);
            let mut cfg = cfg;
            apply_grid(&mut cfg, kind, a.nx, a.ny, a.nw, a.nt);
            if let Some(t) = a.t_max {
                match kind {
                    DatasetKind::Nlse => cfg.nlse.t_max = t,
                    DatasetKind::Fne => cfg.fne.t_max = t,
                    DatasetKind::Swe => cfg.swe.t_max = t,
                }
            }
            if a.v_only {
                cfg.fne.stacked = false;
            }
            let x = experiment::generate(kind, &cfg)?;
            let out = a.out.clone().unwrap_or_else(|| cfg.output_dir.join(format!("{}.dmds", kind.as_str())));
            ensure_parent(&out)?;
            snapshots::save(&x, &out)?;
            if let Some(csv) = &a.csv {
                ensure_parent(csv)?;
                x.write_csv(BufWriter::new(File::create(csv)?))?;
            }
            say(format!("Q={} P={} dt={} -> {}", x.nrows(), x.ncols(), x.dt(), out.display()));
        }
        Command::Corrupt(a) => {
            let x = snapshots::load(&a.input)?;
            let spec = if a.clean { NoiseSpec::clean() } else { NoiseSpec { snr_db: a.snr_db.unwrap_or(f64::INFINITY), seed: a.seed } };
            let noisy = snapshots::add_noise(&x, spec)?;
            ensure_parent(&a.out)?;
            snapshots::save(&noisy, &a.out)?;
            let snr = snapshots::empirical_snr_db(x.values(), noisy.values());
            say(format!("empirical SNR {snr:.3} dB (seed {}) -> {}", spec.seed, a.out.display()));
        }
        Command::Filter(a) => {
            let x = snapshots::load(&a.input)?;
            let (data, rank, note) = match a.method {
                FilterMethod::Adm | FilterMethod::Ialm => {
                    let res = if a.method == FilterMethod::Adm {
                        rpca::rpca_adm(x.values().as_ref(), &cfg.adm)?
                    } else {
                        rpca::rpca_ialm(x.values().as_ref(), &cfg.ialm)?
                    };
                    if let Some(path) = &a.trace {
                        ensure_parent(path)?;
                        res.write_trace_csv(File::create(path)?)?;
                    }
                    let report = rpca::filter_report(x.values().as_ref(), &res, cfg.rank_tol)?;
                    let note = format!("iterations {} converged {} residual {:.3e}", res.iterations, res.converged, res.residual);
                    (report.filtered, report.rank, note)
                }
                FilterMethod::Tls => {
                    let mut cfg = cfg.clone();
                    if let Some(r) = &a.rank {
                        cfg.rank = r.parse()?;
                    }
                    let f = experiment::filter(Method::Tls, &x, &cfg)?;
                    let note = format!("projection rank {}", f.fit_rank);
                    (f.data, f.rank, note)
                }
            };
            let out = x.with_values(data)?;
            ensure_parent(&a.out)?;
            snapshots::save(&out, &a.out)?;
            say(format!("filtered rank {rank}; {note} -> {}", a.out.display()));
        }
        Command::Fit(a) => {
            let x = snapshots::load(&a.input)?;
            let rule: RankRule = a.rank.parse()?;
            if rule == RankRule::Fixed(0) {
                return Err(Error::Config("rank must be positive".into()));
            }
            let pair = snapshots::split(&x)?;
            let model = if a.tls {
                tlsdmd::tls_dmd(&pair, tlsdmd::resolve_rank(&pair, rule)?)?
            } else {
                dmd::fit(&pair, rule.resolve(&linalg::singular_values(pair.x1.as_ref())?))?
            };
            ensure_parent(&a.out)?;
            fs::write(&a.out, model.to_json()? + "\n")?;
            say(format!("rank {} eigenvector condition {:.3e} -> {}", model.rank, model.eigvec_condition(), a.out.display()));
        }
        Command::Evaluate(a) => evaluate(a, &cfg, &say)?,
        Command::Pipeline(a) | Command::Sweep(a) => {
            let mut cfg = cfg;
            apply_run_args(&mut cfg, a)?;
            if let Some(dir) = &cli.out_dir {
                cfg.output_dir = dir.clone();
            }
            if matches!(cli.command, Command::Sweep(_)) {
                let rows = experiment::run_sweep(&cfg, cli.threads)?;
                for r in &rows {
                    say(format!(
                        "{} {:>4} snr {:>5}: rmse {:.4e} cc {:.4} rank {:.1} ({} failed)",
                        r.dataset, r.method, r.snr_db, r.mean_rmse, r.mean_cc_paper, r.mean_filtered_rank, r.n_failed
                    ));
                }
            } else {
                let records = experiment::run_pipeline(&cfg, cli.threads)?;
                let failed = records.iter().filter(|r| r.failed()).count();
                say(format!("{} cells ({failed} failed) -> {}", records.len(), cfg.output_dir.join("metrics.csv").display()));
            }
        }
        Command::Plot(a) => {
            let title = a.title.clone().unwrap_or_else(|| default_title(a.kind).to_string());
            let svg = match a.kind {
                PlotKind::Surface => {
                    let x = snapshots::load(single(&a.input)?)?;
                    plot::surface_svg(&x, a.column, &title)
                }
                PlotKind::Sweep => {
                    let rows = experiment::read_summary_csv(File::open(single(&a.input)?)?)?;
                    plot::sweep_svg(&rows, &title)
                }
                PlotKind::ErrorT => {
                    let mut series = Vec::new();
                    for path in &a.input {
                        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        series.push((label, metrics::read_error_series_csv(File::open(path)?)?));
                    }
                    plot::error_t_svg(&series, &title)
                }
                PlotKind::RankBar => {
                    let records = metrics::read_metrics_csv(File::open(single(&a.input)?)?)?;
                    plot::rank_bar_svg(&records, &title)
                }
            };
            ensure_parent(&a.out)?;
            fs::write(&a.out, svg)?;
            say(format!("wrote {}", a.out.display()));
        }
    }
    Ok(())
}

fn evaluate(a: &crate::EvaluateArgs, cfg: &ExperimentConfig, say: &dyn Fn(String)) -> Result<()> {
    let model = DmdModel::from_json(&fs::read_to_string(&a.model)?)?;
    let truth = snapshots::load(&a.truth)?;
    let times = truth.times();
    let pred = dmd::reconstruct(&model, &times)?;
    let t = truth.values().as_ref();
    let filtered_rank = match &a.filtered {
        Some(path) => Some(metrics::numerical_rank(snapshots::load(path)?.values().as_ref(), cfg.rank_tol)?),
        None => None,
    };
    let method: Method = a.method.parse()?;
    let record = MetricsRecord {
        dataset: a.dataset.clone(),
        method,
        snr_db: a.snr_db.unwrap_or(f64::INFINITY),
        seed: a.seed,
        rank_used: Some(model.rank),
        rmse: Some(metrics::rmse(pred.as_ref(), t)?),
        cc_paper: Some(metrics::cc_paper(pred.as_ref(), t)?),
        cc_pearson: metrics::cc_pearson(pred.as_ref(), t).ok(),
        filtered_rank,
        error_series_path: a.eps.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        error: String::new(),
    };
    if let Some(path) = &a.eps {
        ensure_parent(path)?;
        let eps = dmd::relative_error_series(pred.as_ref(), t)?;
        metrics::write_error_series_csv(&times, &eps, File::create(path)?)?;
    }
    if let Some(path) = &a.metrics {
        ensure_parent(path)?;
        metrics::write_metrics_csv(std::slice::from_ref(&record), File::create(path)?)?;
    }
    if let Some(path) = &a.pred {
        let n = truth.ncols() + a.forecast;
        let all: Vec<f64> = (0..n).map(|k| truth.t0() + k as f64 * truth.dt()).collect();
        let mut values = dmd::reconstruct(&model, &all)?;
        // real data: store the real part of the reconstruction
        if !truth.is_complex() {
            values = CMat::from_fn(values.nrows(), values.ncols(), |i, j| values[(i, j)].re.into());
        }
        let out = SnapshotMatrix::new(values, truth.is_complex(), truth.dt(), truth.t0(), truth.grid().clone())?;
        ensure_parent(path)?;
        snapshots::save(&out, path)?;
    }
    say(format!(
        "rmse {:.6e} cc_paper {:.6} cc_pearson {} rank {}",
        record.rmse.unwrap_or(f64::NAN),
        record.cc_paper.unwrap_or(f64::NAN),
        record.cc_pearson.map(|c| format!("{c:.6}")).unwrap_or_else(|| "n/a".into()),
        model.rank
    ));
    Ok(())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    Ok(cfg)
}

fn dataset(d: DatasetArg) -> DatasetKind {
    match d {
        DatasetArg::Nlse => DatasetKind::Nlse,
        DatasetArg::Fne => DatasetKind::Fne,
        DatasetArg::Swe => DatasetKind::Swe,
    }
}

fn apply_grid(cfg: &mut ExperimentConfig, kind: DatasetKind, nx: Option<usize>, ny: Option<usize>, nw: Option<usize>, nt: Option<usize>) {
    match kind {
        DatasetKind::Nlse => {
            if let Some(n) = nw.or(nx) {
                cfg.nlse.n_w = n;
            }
            if let Some(n) = nt {
                cfg.nlse.n_t = n;
            }
        }
        DatasetKind::Fne => {
            if let Some(n) = nx {
                cfg.fne.n_x = n;
            }
            if let Some(n) = nt {
                cfg.fne.n_t = n;
            }
        }
        DatasetKind::Swe => {
            if let Some(n) = nx {
                cfg.swe.nx = n;
            }
            if let Some(n) = ny {
                cfg.swe.ny = n;
            }
            if let Some(n) = nt {
                cfg.swe.n_t = n;
            }
        }
    }
}

fn apply_run_args(cfg: &mut ExperimentConfig, a: &RunArgs) -> Result<()> {
    if let Some(d) = a.dataset {
        cfg.dataset = dataset(d);
    }
    if let Some(s) = &a.snr_db {
        cfg.snr_db = s.clone();
    }
    if let Some(s) = &a.seeds {
        cfg.seeds = s.clone();
    }
    if let Some(m) = &a.methods {
        cfg.methods = m.iter().filter(|s| !s.is_empty()).map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if let Some(r) = &a.rank {
        cfg.rank = r.parse()?;
    }
    if a.clean {
        cfg.clean = true;
    }
    let kind = cfg.dataset;
    apply_grid(cfg, kind, a.nx, a.ny, a.nw, a.nt);
    cfg.validate()
}

fn single(paths: &[std::path::PathBuf]) -> Result<&Path> {
    match paths {
        [p] => Ok(p),
        _ => Err(Error::Config(format!("expected exactly one input file, got {}", paths.len()))),
    }
}

fn default_title(kind: PlotKind) -> &'static str {
    match kind {
        PlotKind::Surface => "snapshot matrix",
        PlotKind::Sweep => "error and correlation against SNR",
        PlotKind::ErrorT => "relative error over time",
        PlotKind::RankBar => "rank of the filtered data",
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}
