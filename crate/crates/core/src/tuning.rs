//! Choosing the stopping iteration by k-fold cross-validation of the
//! held-out negative log-likelihood.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::boost_fit;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{FitConfig, FitTrace};
use crate::rng::{derive_seed, rng_from};
use crate::scalar::Scalar;
use crate::step::Preset;

pub const DEFAULT_MAX_M_FIXED: usize = 2000;
pub const DEFAULT_MAX_M_ADAPTIVE: usize = 500;

pub fn default_max_m(preset: Preset) -> usize {
    if preset.has_fixed_reference() {
        DEFAULT_MAX_M_FIXED
    } else {
        DEFAULT_MAX_M_ADAPTIVE
    }
}

/// Validation rows of each fold: a seeded shuffle dealt round-robin, so fold
/// sizes differ by at most one. Each fold is sorted.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::InvalidArgument(format!("{folds} folds exceed {n} rows")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from(seed));
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (pos, &row) in perm.iter().enumerate() {
        out[pos % folds].push(row);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Mean held-out negative log-likelihood after each iteration of `trace`.
pub fn validation_risk<T: Scalar>(trace: &FitTrace<T>, validation: &Dataset<T>) -> Result<Vec<T>> {
    let n = T::from_usize_lossy(validation.n());
    let family = trace.family;
    let y = validation.y();
    let mut curve = Vec::with_capacity(trace.records.len());
    trace.replay(validation.columns(), validation.n(), |_, etas| {
        curve.push(family.neg_log_lik(etas, y)? / n);
        Ok(())
    })?;
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CvResult<T: Scalar> {
    /// Entry `m-1` is the fold-averaged risk after `m` iterations.
    pub risk_curve: Vec<T>,
    pub m_stop: usize,
}

/// First index of the minimum, 1-based.
pub fn argmin_first<T: Scalar>(curve: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in curve.iter().enumerate() {
        if v < curve[best] {
            best = i;
        }
    }
    best + 1
}

pub fn kfold_cv<T: Scalar>(d: &Dataset<T>, cfg: &FitConfig<T>, folds: usize, max_m: usize, seed: u64) -> Result<CvResult<T>> {
    let assignment = fold_assignment(d.n(), folds, seed)?;
    let cfg = cfg.with_m_stop(max_m);
    cfg.validate()?;
    let curves: Vec<Vec<T>> = assignment
        .par_iter()
        .enumerate()
        .map(|(f, held_out)| {
            let mut in_fold = vec![false; d.n()];
            for &i in held_out {
                in_fold[i] = true;
            }
            let train_rows: Vec<usize> = (0..d.n()).filter(|&i| !in_fold[i]).collect();
            let train = d.subset(&train_rows);
            let validation = d.subset(held_out);
            boost_fit(&train, &cfg)
                .and_then(|(_, trace)| validation_risk(&trace, &validation))
                .map_err(|e| Error::Fold { fold: f + 1, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let scale = T::from_usize_lossy(folds);
    let risk_curve: Vec<T> = (0..max_m)
        .map(|m| curves.iter().fold(T::zero(), |acc, c| acc + c[m]) / scale)
        .collect();
    let m_stop = argmin_first(&risk_curve);
    Ok(CvResult { risk_curve, m_stop })
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    /// NaN values are ignored; all-NaN input gives NaN quartiles.
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return Self {
                q1: f64::NAN,
                median: f64::NAN,
                q3: f64::NAN,
            };
        }
        v.sort_by(f64::total_cmp);
        Self {
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RepeatedCv<T: Scalar> {
    pub m_stops: Vec<usize>,
    /// Median rounded half-up.
    pub m_stop_median: usize,
    pub quartiles: Quartiles,
    pub first: CvResult<T>,
}

pub fn repeat_seed(seed: u64, repeat: usize) -> u64 {
    derive_seed(seed, &[repeat as u64])
}

pub fn repeated_cv<T: Scalar>(
    d: &Dataset<T>,
    cfg: &FitConfig<T>,
    folds: usize,
    max_m: usize,
    n_repeats: usize,
    seed: u64,
) -> Result<RepeatedCv<T>> {
    if n_repeats == 0 {
        return Err(Error::InvalidArgument("need at least one repeat".into()));
    }
    let results: Vec<CvResult<T>> = (0..n_repeats)
        .into_par_iter()
        .map(|r| kfold_cv(d, cfg, folds, max_m, repeat_seed(seed, r)))
        .collect::<Result<_>>()?;
    let m_stops: Vec<usize> = results.iter().map(|r| r.m_stop).collect();
    let as_f64: Vec<f64> = m_stops.iter().map(|&m| m as f64).collect();
    let quartiles = Quartiles::of(&as_f64);
    Ok(RepeatedCv {
        m_stop_median: (quartiles.median + 0.5).floor() as usize,
        quartiles,
        m_stops,
        first: results.into_iter().next().expect("at least one repeat"),
    })
}
