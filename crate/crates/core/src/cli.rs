//! Command-line front end. Every command writes CSV/JSON files into `--out`
//! and is deterministic under `--seed`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::boost::boost_fit;
use crate::dataset::{load_covariates_csv, load_csv, split_holdout, Dataset};
use crate::error::{Error, Result};
use crate::family::{Family, K};
use crate::metrics::{brier_curve, coefficient_table, default_grid, integrate_curve, write_coefficient_table, INTERCEPT_LABEL};
use crate::model::{FitConfig, FitTrace, FittedModel};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::simulation::{run_study, write_rows, StudyConfig};
use crate::step::Preset;
use crate::tuning::{default_max_m, repeat_seed, repeated_cv};

#[derive(Debug, Parser)]
#[command(name = "gamlss-boost", version, about = "Non-cyclical gradient boosting for two-parameter GAMLSS")]
pub struct Cli {
    /// Worker threads for folds, repeats and replicates.
    #[arg(long, global = true, env = "GAMLSS_BOOST_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model and write coefficients, trace and model JSON.
    Fit(FitArgs),
    /// Predict natural-scale parameters for new data from a saved model.
    Predict(PredictArgs),
    /// Cross-validate the stopping iteration.
    Cv(CvArgs),
    /// Run a multi-replicate simulation study.
    Simulate(SimulateArgs),
    /// Brier and integrated Brier scores of Weibull fits on random splits.
    Brier(BrierArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub response: String,
    #[arg(long)]
    pub family: Family,
    /// Z-score covariates before fitting; coefficients are reported on the raw scale.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub scheme: Preset,
    #[arg(long)]
    pub mstop: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_s: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// `model.json` written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV containing (at least) the model's covariate columns.
    #[arg(long)]
    pub data: PathBuf,
    /// Report linear predictors instead of natural-scale parameters.
    #[arg(long)]
    pub eta: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub scheme: Preset,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Defaults to 2000 for fixed-reference schemes, 500 otherwise.
    #[arg(long)]
    pub max_mstop: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_s: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub setting: Family,
    /// Comma-separated presets; defaults to every preset valid for the setting.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<Preset>>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,10,150")]
    pub noise: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub max_mstop: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_s: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Record wall-clock seconds (outputs are then no longer reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BrierArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub response: String,
    #[arg(long, default_value = "weibull")]
    pub family: Family,
    #[arg(long)]
    pub scheme: Preset,
    /// Fraction of rows held out for validation.
    #[arg(long, default_value_t = 0.333)]
    pub split: f64,
    /// Number of equispaced time points on [0, max validation time].
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub max_mstop: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_s: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a parsed command line, on a dedicated thread pool when `--jobs` is set.
pub fn run(cli: Cli) -> Result<()> {
    match cli.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start {jobs} workers: {e}")))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Fit(a) => match a.data.precision {
            Precision::F64 => cmd_fit::<f64>(&a),
            Precision::F32 => cmd_fit::<f32>(&a),
        },
        Command::Predict(a) => cmd_predict(&a),
        Command::Cv(a) => match a.data.precision {
            Precision::F64 => cmd_cv::<f64>(&a),
            Precision::F32 => cmd_cv::<f32>(&a),
        },
        Command::Simulate(a) => match a.precision {
            Precision::F64 => cmd_simulate::<f64>(&a),
            Precision::F32 => cmd_simulate::<f32>(&a),
        },
        Command::Brier(a) => match a.precision {
            Precision::F64 => cmd_brier::<f64>(&a),
            Precision::F32 => cmd_brier::<f32>(&a),
        },
    }
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidData(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_for_family<T: Scalar>(path: &Path, response: &str, family: Family) -> Result<Dataset<T>> {
    let d = load_csv::<T>(path, response)?;
    family.validate_response(d.y())?;
    Ok(d)
}

fn fit_config<T: Scalar>(family: Family, scheme: Preset, m_stop: usize, lambda_s: f64, seed: u64) -> Result<FitConfig<T>> {
    let mut cfg = FitConfig::new(family, scheme, m_stop.max(1))?;
    cfg.m_stop = m_stop;
    cfg.lambda_s = T::lit(lambda_s);
    cfg.rng_seed = seed;
    cfg.validate()?;
    Ok(cfg)
}

/// Fits on standardized covariates when requested and reports on the raw scale.
fn fit_maybe_standardized<T: Scalar>(
    d: &Dataset<T>,
    cfg: &FitConfig<T>,
    standardize: bool,
) -> Result<(FittedModel<T>, FitTrace<T>)> {
    if standardize {
        let (s, scaling) = d.standardized();
        let (model, trace) = boost_fit(&s, cfg)?;
        Ok((model.unstandardize(&scaling), trace))
    } else {
        boost_fit(d, cfg)
    }
}

pub fn write_trace_csv<T: Scalar>(trace: &FitTrace<T>, names: &[String], path: &Path) -> Result<()> {
    let header = [
        "iteration",
        "parameter",
        "covariate",
        "nu",
        "nu_star",
        "step_source",
        "boundary",
        "sqnorm",
        "zeta",
        "loss",
        "applied",
        "bl_intercept",
        "bl_slope",
    ]
    .map(String::from);
    let params = trace.family.parameter_names();
    let rows = trace.records.iter().flat_map(|r| {
        (0..K).map(move |k| {
            let c = &r.candidates[k];
            vec![
                r.iteration.to_string(),
                params[k].to_string(),
                c.covariate.map_or(INTERCEPT_LABEL.to_string(), |j| names[j].clone()),
                c.nu.to_string(),
                c.nu_star.map(|v| v.to_string()).unwrap_or_default(),
                c.source.label().to_string(),
                format!("{:?}", c.boundary).to_lowercase(),
                c.sqnorm.to_string(),
                c.zeta.to_string(),
                c.loss.to_string(),
                (r.applied == k).to_string(),
                c.bl_intercept.to_string(),
                c.bl_slope.to_string(),
            ]
        })
    });
    write_rows(path, &header, rows)
}

fn cmd_fit<T: Scalar>(a: &FitArgs) -> Result<()> {
    let family = a.data.family;
    let cfg = fit_config::<T>(family, a.scheme, a.mstop, a.lambda_s, a.seed)?;
    let d = load_for_family::<T>(&a.data.data, &a.data.response, family)?;
    let (model, trace) = fit_maybe_standardized(&d, &cfg, a.data.standardize)?;
    create_dir(&a.out)?;
    write_coefficient_table(&coefficient_table(&model, None), a.out.join("coefficients.csv"))?;
    write_trace_csv(&trace, d.names(), &a.out.join("trace.csv"))?;
    write_json(&a.out.join("model.json"), &model)
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let text = fs::read_to_string(&a.model).map_err(|source| Error::Io {
        path: a.model.clone(),
        source,
    })?;
    let model: FittedModel<f64> =
        serde_json::from_str(&text).map_err(|e| Error::InvalidData(format!("bad model file: {e}")))?;
    let columns = load_covariates_csv::<f64>(&a.data, &model.names)?;
    let values = if a.eta { model.predict_eta(&columns)? } else { model.predict(&columns)? };
    let params = model.family.parameter_names();
    let header: Vec<String> = std::iter::once("row".to_string())
        .chain(params.iter().map(|p| if a.eta { format!("eta_{p}") } else { p.to_string() }))
        .collect();
    let rows = (0..values[0].len()).map(|i| vec![(i + 1).to_string(), values[0][i].to_string(), values[1][i].to_string()]);
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_rows(&a.out, &header, rows)
}

#[derive(Serialize)]
struct MstopReport {
    m_stop: usize,
    q1: f64,
    median: f64,
    q3: f64,
    m_stops: Vec<usize>,
    first_repeat_m_stop: usize,
    folds: usize,
    repeats: usize,
    max_mstop: usize,
}

fn cmd_cv<T: Scalar>(a: &CvArgs) -> Result<()> {
    let family = a.data.family;
    let max_m = a.max_mstop.unwrap_or_else(|| default_max_m(a.scheme));
    let cfg = fit_config::<T>(family, a.scheme, max_m, a.lambda_s, a.seed)?;
    let d = load_for_family::<T>(&a.data.data, &a.data.response, family)?;
    if a.folds > d.n() {
        return Err(Error::InvalidArgument(format!("{} folds exceed {} rows", a.folds, d.n())));
    }
    let d = if a.data.standardize { d.standardized().0 } else { d };
    let r = repeated_cv(&d, &cfg, a.folds, max_m, a.repeats, a.seed)?;
    create_dir(&a.out)?;
    let rows = r
        .first
        .risk_curve
        .iter()
        .enumerate()
        .map(|(m, v)| vec![(m + 1).to_string(), v.to_string()]);
    write_rows(a.out.join("risk_curve.csv"), &["iteration".into(), "mean_risk".into()], rows)?;
    write_json(
        &a.out.join("mstop.json"),
        &MstopReport {
            m_stop: r.m_stop_median,
            q1: r.quartiles.q1,
            median: r.quartiles.median,
            q3: r.quartiles.q3,
            m_stops: r.m_stops.clone(),
            first_repeat_m_stop: r.first.m_stop,
            folds: a.folds,
            repeats: a.repeats,
            max_mstop: max_m,
        },
    )
}

fn cmd_simulate<T: Scalar>(a: &SimulateArgs) -> Result<()> {
    let presets = a.schemes.clone().unwrap_or_else(|| Preset::valid_presets(a.setting));
    let mut cfg = StudyConfig::new(a.setting, presets, a.replicates, a.n, a.noise.clone());
    cfg.folds = a.folds;
    cfg.seed = a.seed;
    cfg.max_m = a.max_mstop;
    cfg.lambda_s = a.lambda_s;
    cfg.timing = a.timing;
    let study = run_study::<T>(&cfg)?;
    create_dir(&a.out)?;
    study.write_coefficients_csv(a.out.join("study_coefficients.csv"))?;
    study.write_metrics_csv(a.out.join("study_metrics.csv"))?;
    study.write_summary_csv(a.out.join("study_summary.csv"))
}

struct BrierRepeat<T: Scalar> {
    m_stop: usize,
    ibs: T,
    curve: Vec<(T, T)>,
}

fn cmd_brier<T: Scalar>(a: &BrierArgs) -> Result<()> {
    if a.family != Family::WeibullSs {
        return Err(Error::InvalidArgument(format!(
            "brier scores need the weibull family, got {}",
            a.family
        )));
    }
    if a.repeats == 0 {
        return Err(Error::InvalidArgument("need at least one repeat".into()));
    }
    let max_m = a.max_mstop.unwrap_or_else(|| default_max_m(a.scheme));
    let cfg = fit_config::<T>(a.family, a.scheme, max_m, a.lambda_s, a.seed)?;
    let d = load_for_family::<T>(&a.data, &a.response, a.family)?;
    let results: Vec<BrierRepeat<T>> = (0..a.repeats)
        .into_par_iter()
        .map(|r| {
            let seed = repeat_seed(a.seed, r);
            let (train, validation) = split_holdout(&d, a.split, derive_seed(seed, &[0]))?;
            let cv = repeated_cv(&train, &cfg, a.folds, max_m, 1, derive_seed(seed, &[1]))?;
            let (model, _) = boost_fit(&train, &cfg.with_m_stop(cv.m_stop_median))?;
            let grid = default_grid(&validation, a.grid);
            let curve = brier_curve(&model, &validation, &grid)?;
            let scores: Vec<T> = curve.iter().map(|&(_, s)| s).collect();
            Ok(BrierRepeat {
                m_stop: cv.m_stop_median,
                ibs: integrate_curve(&grid, &scores)?,
                curve,
            })
        })
        .collect::<Result<_>>()?;
    create_dir(&a.out)?;
    let curve_rows = results[0].curve.iter().map(|(t, s)| vec![t.to_string(), s.to_string()]);
    write_rows(a.out.join("brier_curve.csv"), &["t".into(), "bs".into()], curve_rows)?;
    let ibs_rows = results
        .iter()
        .enumerate()
        .map(|(r, b)| vec![(r + 1).to_string(), b.ibs.to_string(), b.m_stop.to_string()]);
    write_rows(a.out.join("ibs.csv"), &["repeat".into(), "ibs".into(), "m_stop".into()], ibs_rows)
}
