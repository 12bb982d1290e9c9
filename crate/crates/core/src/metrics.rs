//! Variable-selection balance (SCR, false positives and negatives),
//! coefficient tables, and Brier scores for Weibull survival predictions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::family::{Family, K};
use crate::model::FittedModel;
use crate::scalar::Scalar;
use crate::simulation::SimTruth;

pub const INTERCEPT_LABEL: &str = "(Intercept)";
pub const DEFAULT_GRID_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub selected: [usize; K],
    /// Ratio in the family's reporting direction; `+∞` when the denominator
    /// predictor selected nothing.
    pub scr: f64,
    pub false_positives: [usize; K],
    pub false_negatives: [usize; K],
}

pub fn selected_mask<T: Scalar>(slopes: &[T]) -> Vec<bool> {
    slopes.iter().map(|&b| b != T::zero()).collect()
}

pub fn scr_from_counts(family: Family, selected: [usize; K]) -> f64 {
    let (num, den) = family.scr_direction();
    if selected[den] == 0 {
        f64::INFINITY
    } else {
        selected[num] as f64 / selected[den] as f64
    }
}

pub fn selection_metrics<T: Scalar>(model: &FittedModel<T>, truth: &SimTruth<T>) -> Result<SelectionMetrics> {
    if truth.p() != model.p() {
        return Err(Error::ColumnMismatch {
            expected: model.p(),
            found: truth.p(),
        });
    }
    let mut selected = [0; K];
    let mut false_positives = [0; K];
    let mut false_negatives = [0; K];
    for k in 0..K {
        let chosen = selected_mask(model.slopes(k));
        let informative = selected_mask(&truth.slopes[k]);
        for (&c, &inf) in chosen.iter().zip(&informative) {
            selected[k] += c as usize;
            false_positives[k] += (c && !inf) as usize;
            false_negatives[k] += (!c && inf) as usize;
        }
    }
    Ok(SelectionMetrics {
        selected,
        scr: scr_from_counts(model.family, selected),
        false_positives,
        false_negatives,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CoefficientRecord<T: Scalar> {
    pub parameter: String,
    pub covariate: String,
    pub estimate: T,
    pub true_value: Option<T>,
}

/// Long format, one intercept row then one row per covariate for each
/// parameter. Intercepts include the offset.
pub fn coefficient_table<T: Scalar>(model: &FittedModel<T>, truth: Option<&SimTruth<T>>) -> Vec<CoefficientRecord<T>> {
    let params = model.family.parameter_names();
    let mut rows = Vec::with_capacity(K * (model.p() + 1));
    for k in 0..K {
        rows.push(CoefficientRecord {
            parameter: params[k].to_string(),
            covariate: INTERCEPT_LABEL.to_string(),
            estimate: model.intercept(k),
            true_value: truth.map(|t| t.intercepts[k]),
        });
        for (j, name) in model.names.iter().enumerate() {
            rows.push(CoefficientRecord {
                parameter: params[k].to_string(),
                covariate: name.clone(),
                estimate: model.slopes(k)[j],
                true_value: truth.map(|t| t.slopes[k][j]),
            });
        }
    }
    rows
}

pub fn write_coefficient_table<T: Scalar>(rows: &[CoefficientRecord<T>], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| Error::Csv(e.to_string()))?;
    w.write_record(["parameter", "covariate", "estimate", "true_value"])
        .map_err(|e| Error::Csv(e.to_string()))?;
    for r in rows {
        let truth = r.true_value.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.parameter.clone(), r.covariate.clone(), r.estimate.to_string(), truth])
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn read_coefficient_table<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<CoefficientRecord<T>>> {
    let mut r = csv::Reader::from_path(path.as_ref()).map_err(|e| Error::Csv(e.to_string()))?;
    let parse = |s: &str| -> Result<T> {
        s.parse()
            .map_err(|_| Error::Csv(format!("bad number {s:?} in coefficient table")))
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let truth = &rec[3];
        out.push(CoefficientRecord {
            parameter: rec[0].to_string(),
            covariate: rec[1].to_string(),
            estimate: parse(&rec[2])?,
            true_value: if truth.is_empty() { None } else { Some(parse(truth)?) },
        });
    }
    Ok(out)
}

/// `mean((1{y > t} − S_i)²)` for given survival probabilities `S_i = S(t|x_i)`.
pub fn brier_from_survival<T: Scalar>(y: &[T], survival: &[T], t: T) -> T {
    let n = T::from_usize_lossy(y.len());
    y.iter()
        .zip(survival)
        .map(|(&yi, &s)| {
            let alive = if yi > t { T::one() } else { T::zero() };
            (alive - s) * (alive - s)
        })
        .sum::<T>()
        / n
}

/// Weibull survival `exp(−(t/λ)^k)`.
pub fn weibull_survival<T: Scalar>(t: T, lambda: T, k: T) -> T {
    (-(t / lambda).powf(k)).exp()
}

fn weibull_parameters<T: Scalar>(model: &FittedModel<T>, validation: &Dataset<T>) -> Result<[Vec<T>; K]> {
    if model.family != Family::WeibullSs {
        return Err(Error::InvalidArgument(format!(
            "Brier scores need a weibull model, got {}",
            model.family
        )));
    }
    model.predict_dataset(validation)
}

fn check_time<T: Scalar>(t: T) -> Result<()> {
    if t >= T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time point {t} must be finite and non-negative")))
    }
}

pub fn brier_score<T: Scalar>(model: &FittedModel<T>, validation: &Dataset<T>, t: T) -> Result<T> {
    check_time(t)?;
    let [lam, k] = weibull_parameters(model, validation)?;
    let s: Vec<T> = lam.iter().zip(&k).map(|(&l, &k)| weibull_survival(t, l, k)).collect();
    Ok(brier_from_survival(validation.y(), &s, t))
}

/// `n` equispaced points on `[0, max y]`.
pub fn default_grid<T: Scalar>(validation: &Dataset<T>, points: usize) -> Vec<T> {
    let max = validation.y().iter().copied().fold(T::zero(), T::max);
    let steps = T::from_usize_lossy(points.max(2) - 1);
    (0..points.max(2)).map(|i| max * T::from_usize_lossy(i) / steps).collect()
}

fn check_grid<T: Scalar>(grid: &[T]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("time grid needs at least two points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    grid.iter().try_for_each(|&t| check_time(t))
}

/// Trapezoidal integral of the curve over the grid, divided by its span.
pub fn integrate_curve<T: Scalar>(grid: &[T], scores: &[T]) -> Result<T> {
    check_grid(grid)?;
    let half = T::lit(0.5);
    let area = grid
        .windows(2)
        .zip(scores.windows(2))
        .map(|(t, s)| half * (t[1] - t[0]) * (s[0] + s[1]))
        .sum::<T>();
    Ok(area / (grid[grid.len() - 1] - grid[0]))
}

/// `(t, BS(t))` over a grid.
pub fn brier_curve<T: Scalar>(model: &FittedModel<T>, validation: &Dataset<T>, grid: &[T]) -> Result<Vec<(T, T)>> {
    check_grid(grid)?;
    let [lam, k] = weibull_parameters(model, validation)?;
    let mut s = vec![T::zero(); lam.len()];
    Ok(grid
        .iter()
        .map(|&t| {
            for (si, (&l, &k)) in s.iter_mut().zip(lam.iter().zip(&k)) {
                *si = weibull_survival(t, l, k);
            }
            (t, brier_from_survival(validation.y(), &s, t))
        })
        .collect())
}

pub fn integrated_brier<T: Scalar>(model: &FittedModel<T>, validation: &Dataset<T>, grid: &[T]) -> Result<T> {
    let curve = brier_curve(model, validation, grid)?;
    let scores: Vec<T> = curve.iter().map(|&(_, s)| s).collect();
    integrate_curve(grid, &scores)
}
