//! Fit configuration, coefficient state, fitted models and per-iteration traces.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::family::{Family, K};
use crate::scalar::Scalar;
use crate::step::{Boundary, Preset, SchemeSpec, StepSource};

pub const DEFAULT_LAMBDA_S: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FitConfig<T: Scalar> {
    pub family: Family,
    pub scheme: SchemeSpec<T>,
    pub m_stop: usize,
    pub lambda_s: T,
    pub rng_seed: u64,
}

impl<T: Scalar> FitConfig<T> {
    /// Preset scheme with the default shrinkage of 0.1.
    pub fn new(family: Family, preset: Preset, m_stop: usize) -> Result<Self> {
        let cfg = Self {
            family,
            scheme: preset.expand(family)?,
            m_stop,
            lambda_s: T::lit(DEFAULT_LAMBDA_S),
            rng_seed: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_m_stop(&self, m_stop: usize) -> Self {
        Self { m_stop, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_stop == 0 {
            return Err(Error::InvalidArgument("m_stop must be at least 1".into()));
        }
        if !(self.lambda_s > T::zero() && self.lambda_s <= T::one()) {
            return Err(Error::InvalidArgument(format!(
                "shrinkage {} outside (0, 1]",
                self.lambda_s
            )));
        }
        self.scheme.validate(self.family)
    }
}

/// Accumulated coefficients per distribution parameter, excluding offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CoefficientState<T: Scalar> {
    pub intercepts: [T; K],
    pub slopes: [Vec<T>; K],
}

impl<T: Scalar> CoefficientState<T> {
    pub fn zeros(p: usize) -> Self {
        Self {
            intercepts: [T::zero(); K],
            slopes: [vec![T::zero(); p], vec![T::zero(); p]],
        }
    }

    pub fn p(&self) -> usize {
        self.slopes[0].len()
    }

    /// Adds `ν·(a + b·x_j)` to predictor `k`.
    pub fn apply(&mut self, k: usize, c: &Candidate<T>) {
        self.intercepts[k] = self.intercepts[k] + c.nu * c.bl_intercept;
        if let Some(j) = c.covariate {
            self.slopes[k][j] = self.slopes[k][j] + c.nu * c.bl_slope;
        }
    }

    /// `offset + β0 + X·β` for parameter `k`.
    pub fn linear_predictor(&self, offset: T, k: usize, columns: &[Vec<T>], n: usize) -> Vec<T> {
        let mut eta = vec![offset + self.intercepts[k]; n];
        for (col, &b) in columns.iter().zip(&self.slopes[k]) {
            if b != T::zero() {
                for (e, &x) in eta.iter_mut().zip(col) {
                    *e = *e + b * x;
                }
            }
        }
        eta
    }
}

/// The best base-learner of one parameter in one iteration, with its step
/// length and the loss the update would produce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Candidate<T: Scalar> {
    pub covariate: Option<usize>,
    pub bl_intercept: T,
    pub bl_slope: T,
    pub nu: T,
    pub nu_star: Option<T>,
    pub source: StepSource,
    pub boundary: Boundary,
    pub sqnorm: T,
    /// Update size `ν·‖h‖²`.
    pub zeta: T,
    pub loss: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IterationRecord<T: Scalar> {
    /// 1-based.
    pub iteration: usize,
    pub applied: usize,
    pub candidates: [Candidate<T>; K],
    pub loss_after: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FitTrace<T: Scalar> {
    pub family: Family,
    pub offsets: [T; K],
    pub p: usize,
    pub initial_loss: T,
    pub records: Vec<IterationRecord<T>>,
}

impl<T: Scalar> FitTrace<T> {
    /// Coefficients after the first `m` applied updates.
    pub fn coefficients_at(&self, m: usize) -> CoefficientState<T> {
        let mut state = CoefficientState::zeros(self.p);
        for r in self.records.iter().take(m) {
            state.apply(r.applied, &r.candidates[r.applied]);
        }
        state
    }

    /// Calls `visit(m, etas)` with the predictors on `columns` after every
    /// update, `m = 1..=len`, updating incrementally.
    pub fn replay(&self, columns: &[Vec<T>], n: usize, mut visit: impl FnMut(usize, [&[T]; K]) -> Result<()>) -> Result<()> {
        if columns.len() != self.p {
            return Err(Error::ColumnMismatch {
                expected: self.p,
                found: columns.len(),
            });
        }
        let mut etas = [vec![self.offsets[0]; n], vec![self.offsets[1]; n]];
        for r in &self.records {
            let c = &r.candidates[r.applied];
            let eta = &mut etas[r.applied];
            match c.covariate {
                Some(j) => {
                    for (e, &x) in eta.iter_mut().zip(&columns[j]) {
                        *e = *e + c.nu * (c.bl_intercept + c.bl_slope * x);
                    }
                }
                None => {
                    for e in eta.iter_mut() {
                        *e = *e + c.nu * c.bl_intercept;
                    }
                }
            }
            visit(r.iteration, [&etas[0], &etas[1]])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FittedModel<T: Scalar> {
    pub family: Family,
    pub offsets: [T; K],
    pub coefficients: CoefficientState<T>,
    pub names: Vec<String>,
    pub m_stop: usize,
}

impl<T: Scalar> FittedModel<T> {
    pub fn p(&self) -> usize {
        self.names.len()
    }

    /// Reported intercept of parameter `k`: offset plus accumulated β0.
    pub fn intercept(&self, k: usize) -> T {
        self.offsets[k] + self.coefficients.intercepts[k]
    }

    pub fn slopes(&self, k: usize) -> &[T] {
        &self.coefficients.slopes[k]
    }

    pub fn predict_eta(&self, columns: &[Vec<T>]) -> Result<[Vec<T>; K]> {
        if columns.len() != self.p() {
            return Err(Error::ColumnMismatch {
                expected: self.p(),
                found: columns.len(),
            });
        }
        let n = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::InvalidData(format!(
                "ragged covariate columns ({} vs {n} rows)",
                c.len()
            )));
        }
        Ok(self.eta_with_rows(columns, n))
    }

    fn eta_with_rows(&self, columns: &[Vec<T>], n: usize) -> [Vec<T>; K] {
        [0, 1].map(|k| self.coefficients.linear_predictor(self.offsets[k], k, columns, n))
    }

    /// Natural-scale parameters, one vector per distribution parameter.
    pub fn predict(&self, columns: &[Vec<T>]) -> Result<[Vec<T>; K]> {
        let etas = self.predict_eta(columns)?;
        Ok(self.to_natural(etas))
    }

    pub fn predict_dataset(&self, d: &Dataset<T>) -> Result<[Vec<T>; K]> {
        if d.p() != self.p() {
            return Err(Error::ColumnMismatch {
                expected: self.p(),
                found: d.p(),
            });
        }
        Ok(self.to_natural(self.eta_with_rows(d.columns(), d.n())))
    }

    fn to_natural(&self, etas: [Vec<T>; K]) -> [Vec<T>; K] {
        let mut k = 0;
        etas.map(|eta| {
            let link = self.family.link(k);
            k += 1;
            eta.into_iter().map(|e| link.inverse(e)).collect()
        })
    }

    /// Re-expresses a model fitted on standardized covariates on the raw scale.
    pub fn unstandardize(&self, scaling: &[(T, T)]) -> Self {
        let mut out = self.clone();
        for k in 0..K {
            let mut shift = T::zero();
            for (j, &(m, s)) in scaling.iter().enumerate() {
                let b = self.coefficients.slopes[k][j];
                out.coefficients.slopes[k][j] = b / s;
                shift = shift + b * m / s;
            }
            out.coefficients.intercepts[k] = self.coefficients.intercepts[k] - shift;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model() -> FittedModel<f64> {
        FittedModel {
            family: Family::WeibullSs,
            offsets: [0.5, -0.2],
            coefficients: CoefficientState {
                intercepts: [0.1, 0.0],
                slopes: [vec![1.0, 0.0], vec![0.0, -0.5]],
            },
            names: vec!["a".into(), "b".into()],
            m_stop: 3,
        }
    }

    #[test]
    fn predict_natural_scale() {
        let m = model();
        let cols = vec![vec![1.0, 0.0], vec![2.0, 4.0]];
        let [lam, k] = m.predict(&cols).unwrap();
        assert_relative_eq!(lam[0], (0.6f64 + 1.0).exp(), max_relative = 1e-15);
        assert_relative_eq!(k[1], (-0.2f64 - 2.0).exp(), max_relative = 1e-15);
        assert!(matches!(m.predict(&cols[..1]), Err(Error::ColumnMismatch { .. })));
    }

    #[test]
    fn zero_coefficients_give_offsets() {
        let mut m = model();
        m.coefficients = CoefficientState::zeros(2);
        let [lam, k] = m.predict(&[vec![3.0; 4], vec![-1.0; 4]]).unwrap();
        assert!(lam.iter().all(|&v| v == 0.5f64.exp()));
        assert!(k.iter().all(|&v| v == (-0.2f64).exp()));
    }

    #[test]
    fn unstandardize_preserves_predictions() {
        let raw = Dataset::new(
            vec![1.0, 2.0, 3.0],
            vec![vec![1.0, 4.0, 2.0], vec![10.0, 30.0, 20.0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let (std, scaling) = raw.standardized();
        let m = model();
        let on_std = m.predict_dataset(&std).unwrap();
        let on_raw = m.unstandardize(&scaling).predict_dataset(&raw).unwrap();
        for k in 0..K {
            for i in 0..3 {
                assert_relative_eq!(on_std[k][i], on_raw[k][i], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::<f64>::new(Family::GaussianLs, Preset::FF, 0).is_err());
        let mut cfg = FitConfig::<f64>::new(Family::GaussianLs, Preset::FF, 5).unwrap();
        cfg.lambda_s = 1.5;
        assert!(cfg.validate().is_err());
        assert!(FitConfig::<f64>::new(Family::GaussianLs, Preset::FBl, 5).is_err());
    }
}
