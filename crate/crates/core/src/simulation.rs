//! Synthetic data for the three settings and multi-replicate studies that
//! compare step-length schemes on them.

use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Normal, Open01, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::boost_fit;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::family::{Family, K};
use crate::metrics::{coefficient_table, selection_metrics, CoefficientRecord, SelectionMetrics};
use crate::model::{FitConfig, FittedModel};
use crate::rng::{derive_seed, rng_from, Rng};
use crate::scalar::Scalar;
use crate::step::Preset;
use crate::tuning::{default_max_m, kfold_cv, Quartiles};

/// Number of covariates in every setting before noise columns are appended.
pub const BASE_COVARIATES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SimTruth<T: Scalar> {
    pub intercepts: [T; K],
    pub slopes: [Vec<T>; K],
}

impl<T: Scalar> SimTruth<T> {
    fn new(intercepts: [f64; K], base: [[f64; BASE_COVARIATES]; K], extra_noise: usize) -> Self {
        let widen = |b: &[f64; BASE_COVARIATES]| {
            b.iter()
                .copied()
                .chain(std::iter::repeat_n(0.0, extra_noise))
                .map(T::lit)
                .collect()
        };
        Self {
            intercepts: intercepts.map(T::lit),
            slopes: [widen(&base[0]), widen(&base[1])],
        }
    }

    pub fn p(&self) -> usize {
        self.slopes[0].len()
    }

    /// Indices of covariates with a non-zero true effect on parameter `k`.
    pub fn informative(&self, k: usize) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.slopes[k][j] != T::zero()).collect()
    }

    /// Linear predictor of parameter `k` at one row of covariates.
    pub fn eta(&self, k: usize, x: &[f64]) -> f64 {
        self.intercepts[k].as_f64()
            + self.slopes[k].iter().zip(x).map(|(b, xi)| b.as_f64() * xi).sum::<f64>()
    }
}

fn uniform_columns(rng: &mut Rng, count: usize, n: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

fn bernoulli_columns(rng: &mut Rng, count: usize, n: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn row(columns: &[Vec<f64>], i: usize) -> Vec<f64> {
    columns.iter().map(|c| c[i]).collect()
}

/// Informative columns, responses and noise columns use separate streams so
/// the informative part of a replicate does not depend on the noise level.
fn assemble<T: Scalar>(mut columns: Vec<Vec<f64>>, y: Vec<f64>, extra_noise: usize, seed: u64) -> Result<Dataset<T>> {
    let n = y.len();
    columns.extend(uniform_columns(&mut rng_from(derive_seed(seed, &[2])), extra_noise, n));
    let names = (1..=columns.len()).map(|j| format!("x{j}")).collect();
    let cv = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
    Dataset::new(cv(y), columns.into_iter().map(cv).collect(), names)
}

pub fn gaussian_truth<T: Scalar>(extra_noise: usize) -> SimTruth<T> {
    SimTruth::new(
        [0.0, 2.0],
        [[1.0, 2.0, 0.5, -1.0, 0.0, 0.0], [0.0, 0.0, 0.2, 0.1, -0.1, -0.2]],
        extra_noise,
    )
}

pub fn negbin_truth<T: Scalar>(extra_noise: usize) -> SimTruth<T> {
    SimTruth::new(
        [-0.5, 0.0],
        [[-0.5, 0.3, 0.0, 0.5, -0.3, 0.0], [0.0, 0.6, -0.6, 0.0, -0.4, 0.4]],
        extra_noise,
    )
}

pub fn weibull_truth<T: Scalar>(extra_noise: usize) -> SimTruth<T> {
    SimTruth::new(
        [0.6, 0.0],
        [[0.15, -0.2, 0.4, -0.25, 0.0, 0.0], [0.0, 0.0, -0.15, 0.15, -0.1, 0.1]],
        extra_noise,
    )
}

pub fn simulate_gaussian<T: Scalar>(n: usize, extra_noise: usize, seed: u64) -> (Dataset<T>, SimTruth<T>) {
    let truth = gaussian_truth::<T>(0);
    let columns = uniform_columns(&mut rng_from(derive_seed(seed, &[0])), BASE_COVARIATES, n);
    let mut rng = rng_from(derive_seed(seed, &[1]));
    let y = (0..n)
        .map(|i| {
            let x = row(&columns, i);
            let sd = truth.eta(1, &x).exp();
            Normal::new(truth.eta(0, &x), sd).expect("finite sd").sample(&mut rng)
        })
        .collect();
    let d = assemble(columns, y, extra_noise, seed).expect("simulated data is finite");
    (d, gaussian_truth(extra_noise))
}

/// One NB2 draw via the Gamma-Poisson mixture.
pub fn sample_negbin(rng: &mut Rng, mu: f64, alpha: f64) -> f64 {
    let g = Gamma::new(1.0 / alpha, alpha).expect("positive shape and scale").sample(rng);
    let rate = mu * g;
    if !(rate > 0.0) || !rate.is_finite() {
        return 0.0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng)
}

pub fn simulate_negbin<T: Scalar>(n: usize, extra_noise: usize, seed: u64) -> (Dataset<T>, SimTruth<T>) {
    simulate_negbin_with(n, extra_noise, seed, None)
}

/// `alpha_override` replaces every observation's overdispersion, for
/// checking the Poisson limit.
pub fn simulate_negbin_with<T: Scalar>(
    n: usize,
    extra_noise: usize,
    seed: u64,
    alpha_override: Option<f64>,
) -> (Dataset<T>, SimTruth<T>) {
    let truth = negbin_truth::<T>(0);
    let mut xrng = rng_from(derive_seed(seed, &[0]));
    let mut columns = uniform_columns(&mut xrng, 3, n);
    columns.extend(bernoulli_columns(&mut xrng, 3, n));
    let mut rng = rng_from(derive_seed(seed, &[1]));
    let y = (0..n)
        .map(|i| {
            let x = row(&columns, i);
            let alpha = alpha_override.unwrap_or_else(|| truth.eta(1, &x).exp());
            sample_negbin(&mut rng, truth.eta(0, &x).exp(), alpha)
        })
        .collect();
    let d = assemble(columns, y, extra_noise, seed).expect("simulated data is finite");
    (d, negbin_truth(extra_noise))
}

/// Inverse-CDF Weibull draw `λ(−ln U)^{1/k}`.
pub fn sample_weibull(rng: &mut Rng, lambda: f64, k: f64) -> f64 {
    let u: f64 = Open01.sample(rng);
    lambda * (-u.ln()).powf(1.0 / k)
}

pub fn simulate_weibull<T: Scalar>(n: usize, extra_noise: usize, seed: u64) -> (Dataset<T>, SimTruth<T>) {
    let truth = weibull_truth::<T>(0);
    let columns = uniform_columns(&mut rng_from(derive_seed(seed, &[0])), BASE_COVARIATES, n);
    let mut rng = rng_from(derive_seed(seed, &[1]));
    let y = (0..n)
        .map(|i| {
            let x = row(&columns, i);
            sample_weibull(&mut rng, truth.eta(0, &x).exp(), truth.eta(1, &x).exp())
        })
        .collect();
    let d = assemble(columns, y, extra_noise, seed).expect("simulated data is finite");
    (d, weibull_truth(extra_noise))
}

pub fn simulate<T: Scalar>(family: Family, n: usize, extra_noise: usize, seed: u64) -> (Dataset<T>, SimTruth<T>) {
    match family {
        Family::GaussianLs => simulate_gaussian(n, extra_noise, seed),
        Family::NegBinLs => simulate_negbin(n, extra_noise, seed),
        Family::WeibullSs => simulate_weibull(n, extra_noise, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub family: Family,
    pub presets: Vec<Preset>,
    pub replicates: usize,
    pub n: usize,
    pub noise_levels: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
    /// Per-scheme default when `None`.
    pub max_m: Option<usize>,
    pub lambda_s: f64,
    /// Record wall-clock seconds per run; off keeps outputs reproducible.
    pub timing: bool,
}

impl StudyConfig {
    pub fn new(family: Family, presets: Vec<Preset>, replicates: usize, n: usize, noise_levels: Vec<usize>) -> Self {
        Self {
            family,
            presets,
            replicates,
            n,
            noise_levels,
            folds: 10,
            seed: 1,
            max_m: None,
            lambda_s: crate::model::DEFAULT_LAMBDA_S,
            timing: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("need at least one replicate".into()));
        }
        if self.presets.is_empty() || self.noise_levels.is_empty() {
            return Err(Error::InvalidArgument("need at least one scheme and one noise level".into()));
        }
        for p in &self.presets {
            p.expand::<f64>(self.family)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ReplicateOutcome<T: Scalar> {
    pub scheme: Preset,
    pub noise: usize,
    pub replicate: usize,
    pub m_stop: usize,
    pub seconds: Option<f64>,
    pub metrics: SelectionMetrics,
    pub coefficients: Vec<CoefficientRecord<T>>,
    pub model: FittedModel<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StudyResult<T: Scalar> {
    pub config: StudyConfig,
    pub outcomes: Vec<ReplicateOutcome<T>>,
}

/// Seed shared by every scheme within one (noise level, replicate) cell.
pub fn cell_seed(seed: u64, noise: usize, replicate: usize) -> u64 {
    derive_seed(seed, &[noise as u64, replicate as u64])
}

fn run_one<T: Scalar>(
    cfg: &StudyConfig,
    preset: Preset,
    d: &Dataset<T>,
    truth: &SimTruth<T>,
    noise: usize,
    replicate: usize,
    cv_seed: u64,
) -> Result<ReplicateOutcome<T>> {
    let start = Instant::now();
    let mut fit_cfg = FitConfig::new(cfg.family, preset, 1)?;
    fit_cfg.lambda_s = T::lit(cfg.lambda_s);
    fit_cfg.rng_seed = cv_seed;
    let max_m = cfg.max_m.unwrap_or_else(|| default_max_m(preset));
    let cv = kfold_cv(d, &fit_cfg, cfg.folds, max_m, cv_seed)?;
    let (model, _) = boost_fit(d, &fit_cfg.with_m_stop(cv.m_stop))?;
    let seconds = cfg.timing.then(|| start.elapsed().as_secs_f64());
    Ok(ReplicateOutcome {
        scheme: preset,
        noise,
        replicate,
        m_stop: cv.m_stop,
        seconds,
        metrics: selection_metrics(&model, truth)?,
        coefficients: coefficient_table(&model, Some(truth)),
        model,
    })
}

/// Every scheme is run on the same simulated data and folds within a cell.
pub fn run_study<T: Scalar>(cfg: &StudyConfig) -> Result<StudyResult<T>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .noise_levels
        .iter()
        .flat_map(|&noise| (0..cfg.replicates).map(move |r| (noise, r)))
        .collect();
    let per_cell: Vec<Vec<ReplicateOutcome<T>>> = cells
        .par_iter()
        .map(|&(noise, replicate)| {
            let seed = cell_seed(cfg.seed, noise, replicate);
            let (d, truth) = simulate::<T>(cfg.family, cfg.n, noise, seed);
            let cv_seed = derive_seed(seed, &[3]);
            cfg.presets
                .iter()
                .map(|&preset| {
                    run_one(cfg, preset, &d, &truth, noise, replicate, cv_seed).map_err(|e| Error::Replicate {
                        scheme: preset.label().to_string(),
                        replicate: replicate + 1,
                        source: Box::new(e),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(StudyResult {
        config: cfg.clone(),
        outcomes: per_cell.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: Preset,
    pub noise: usize,
    pub statistic: String,
    pub quartiles: Quartiles,
}

impl<T: Scalar> StudyResult<T> {
    pub fn cell(&self, scheme: Preset, noise: usize) -> impl Iterator<Item = &ReplicateOutcome<T>> {
        self.outcomes
            .iter()
            .filter(move |o| o.scheme == scheme && o.noise == noise)
    }

    pub fn m_stops(&self, scheme: Preset, noise: usize) -> Vec<f64> {
        self.cell(scheme, noise).map(|o| o.m_stop as f64).collect()
    }

    pub fn scrs(&self, scheme: Preset, noise: usize) -> Vec<f64> {
        self.cell(scheme, noise).map(|o| o.metrics.scr).collect()
    }

    /// Estimates of one coefficient across replicates, in replicate order.
    pub fn estimates(&self, scheme: Preset, noise: usize, parameter: &str, covariate: &str) -> Vec<f64> {
        self.cell(scheme, noise)
            .filter_map(|o| {
                o.coefficients
                    .iter()
                    .find(|c| c.parameter == parameter && c.covariate == covariate)
                    .map(|c| c.estimate.as_f64())
            })
            .collect()
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let params = self.config.family.parameter_names();
        let mut rows = Vec::new();
        for &noise in &self.config.noise_levels {
            for &scheme in &self.config.presets {
                let cell: Vec<&ReplicateOutcome<T>> = self.cell(scheme, noise).collect();
                let mut push = |statistic: String, values: Vec<f64>| {
                    rows.push(SummaryRow {
                        scheme,
                        noise,
                        statistic,
                        quartiles: Quartiles::of(&values),
                    })
                };
                push("m_stop".into(), cell.iter().map(|o| o.m_stop as f64).collect());
                push("scr".into(), cell.iter().map(|o| o.metrics.scr).collect());
                for k in 0..K {
                    push(
                        format!("selected_{}", params[k]),
                        cell.iter().map(|o| o.metrics.selected[k] as f64).collect(),
                    );
                    push(
                        format!("fp_{}", params[k]),
                        cell.iter().map(|o| o.metrics.false_positives[k] as f64).collect(),
                    );
                    push(
                        format!("fn_{}", params[k]),
                        cell.iter().map(|o| o.metrics.false_negatives[k] as f64).collect(),
                    );
                }
                if self.config.timing {
                    push("seconds".into(), cell.iter().map(|o| o.seconds.unwrap_or(f64::NAN)).collect());
                }
            }
        }
        rows
    }

    pub fn write_metrics_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let params = self.config.family.parameter_names();
        let mut header = vec!["scheme".to_string(), "noise".into(), "replicate".into(), "scr".into()];
        for prefix in ["selected", "fp", "fn"] {
            header.extend(params.iter().map(|p| format!("{prefix}_{p}")));
        }
        header.extend(["m_stop".to_string(), "seconds".into()]);
        let rows = self.outcomes.iter().map(|o| {
            let m = &o.metrics;
            let mut r = vec![
                o.scheme.label().to_string(),
                o.noise.to_string(),
                (o.replicate + 1).to_string(),
                m.scr.to_string(),
            ];
            for counts in [m.selected, m.false_positives, m.false_negatives] {
                r.extend(counts.iter().map(usize::to_string));
            }
            r.push(o.m_stop.to_string());
            r.push(o.seconds.map(|s| s.to_string()).unwrap_or_default());
            r
        });
        write_rows(path, &header, rows)
    }

    pub fn write_coefficients_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = [
            "scheme",
            "noise",
            "replicate",
            "parameter",
            "covariate",
            "estimate",
            "true_value",
            "m_stop",
            "seconds",
        ]
        .map(String::from);
        let rows = self.outcomes.iter().flat_map(|o| {
            o.coefficients.iter().map(move |c| {
                vec![
                    o.scheme.label().to_string(),
                    o.noise.to_string(),
                    (o.replicate + 1).to_string(),
                    c.parameter.clone(),
                    c.covariate.clone(),
                    c.estimate.to_string(),
                    c.true_value.map(|v| v.to_string()).unwrap_or_default(),
                    o.m_stop.to_string(),
                    o.seconds.map(|s| s.to_string()).unwrap_or_default(),
                ]
            })
        });
        write_rows(path, &header, rows)
    }

    pub fn write_summary_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = ["scheme", "noise", "statistic", "q1", "median", "q3"].map(String::from);
        let rows = self.summary().into_iter().map(|s| {
            vec![
                s.scheme.label().to_string(),
                s.noise.to_string(),
                s.statistic,
                s.quartiles.q1.to_string(),
                s.quartiles.median.to_string(),
                s.quartiles.q3.to_string(),
            ]
        });
        write_rows(path, &header, rows)
    }
}

pub(crate) fn write_rows(path: impl AsRef<Path>, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })
}
