//! Simple linear base-learners (intercept + one covariate) fitted by least
//! squares to a negative-gradient vector.

use serde::{Deserialize, Serialize};

use crate::scalar::{mean, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FittedBaseLearner<T: Scalar> {
    /// `None` for the intercept-only learner used when there are no covariates.
    pub covariate: Option<usize>,
    pub intercept: T,
    pub slope: T,
    pub fitted: Vec<T>,
    pub ssr: T,
    pub sqnorm: T,
}

impl<T: Scalar> FittedBaseLearner<T> {
    fn from_coefficients(covariate: Option<usize>, a: T, b: T, u: &[T], x: Option<&[T]>) -> Self {
        let fitted: Vec<T> = match x {
            Some(x) => x.iter().map(|&xi| a + b * xi).collect(),
            None => vec![a; u.len()],
        };
        let ssr = u.iter().zip(&fitted).map(|(&ui, &hi)| (ui - hi) * (ui - hi)).sum();
        let sqnorm = fitted.iter().map(|&h| h * h).sum();
        Self {
            covariate,
            intercept: a,
            slope: b,
            fitted,
            ssr,
            sqnorm,
        }
    }
}

fn is_constant<T: Scalar>(x: &[T]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Ordinary least squares of `u` on `x` with intercept; a constant `x` yields
/// slope 0 and intercept `mean(u)`.
pub fn fit_linear<T: Scalar>(u: &[T], x: &[T]) -> FittedBaseLearner<T> {
    debug_assert_eq!(u.len(), x.len());
    let u_bar = mean(u);
    if is_constant(x) {
        return FittedBaseLearner::from_coefficients(None, u_bar, T::zero(), u, Some(x));
    }
    let x_bar = mean(x);
    let (sxx, sxu) = x.iter().zip(u).fold((T::zero(), T::zero()), |(sxx, sxu), (&xi, &ui)| {
        let d = xi - x_bar;
        (sxx + d * d, sxu + d * ui)
    });
    let b = sxu / sxx;
    FittedBaseLearner::from_coefficients(None, u_bar - b * x_bar, b, u, Some(x))
}

/// Intercept-only learner: `h ≡ mean(u)`.
pub fn fit_intercept<T: Scalar>(u: &[T]) -> FittedBaseLearner<T> {
    FittedBaseLearner::from_coefficients(None, mean(u), T::zero(), u, None)
}

/// Per-column quantities that do not depend on the gradient, computed once
/// per fit.
#[derive(Debug, Clone)]
pub struct Design<T: Scalar> {
    centered: Vec<Vec<T>>,
    means: Vec<T>,
    sxx: Vec<T>,
    constant: Vec<bool>,
}

impl<T: Scalar> Design<T> {
    pub fn new(columns: &[Vec<T>]) -> Self {
        let mut centered = Vec::with_capacity(columns.len());
        let mut means = Vec::with_capacity(columns.len());
        let mut sxx = Vec::with_capacity(columns.len());
        let mut constant = Vec::with_capacity(columns.len());
        for c in columns {
            let m = mean(c);
            let cc: Vec<T> = c.iter().map(|&v| v - m).collect();
            sxx.push(cc.iter().map(|&d| d * d).sum());
            constant.push(is_constant(c));
            centered.push(cc);
            means.push(m);
        }
        Self {
            centered,
            means,
            sxx,
            constant,
        }
    }

    pub fn p(&self) -> usize {
        self.means.len()
    }

    /// Best-fitting base-learner by residual sum of squares, lowest index on
    /// ties. With no covariates the intercept-only learner is returned.
    pub fn select_best(&self, u: &[T], columns: &[Vec<T>]) -> FittedBaseLearner<T> {
        if self.p() == 0 {
            return fit_intercept(u);
        }
        let u_bar = mean(u);
        let suu: T = u.iter().map(|&v| (v - u_bar) * (v - u_bar)).sum();
        let mut best = (0usize, T::infinity(), T::zero());
        for j in 0..self.p() {
            let (ssr, slope) = if self.constant[j] {
                (suu, T::zero())
            } else {
                let sxu: T = self.centered[j].iter().zip(u).map(|(&d, &ui)| d * ui).sum();
                (suu - sxu * sxu / self.sxx[j], sxu / self.sxx[j])
            };
            if ssr < best.1 {
                best = (j, ssr, slope);
            }
        }
        let (j, _, b) = best;
        let a = u_bar - b * self.means[j];
        FittedBaseLearner::from_coefficients(Some(j), a, b, u, Some(&columns[j]))
    }
}

/// Convenience wrapper building a [`Design`] for a single selection.
pub fn select_best<T: Scalar>(u: &[T], columns: &[Vec<T>]) -> FittedBaseLearner<T> {
    Design::new(columns).select_best(u, columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_linear_fit() {
        let x = [0.5f64, -1.0, 2.0, 3.5];
        let u: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = fit_linear(&u, &x);
        assert_relative_eq!(fit.intercept, 0.0, epsilon = 1e-14);
        assert_relative_eq!(fit.slope, 2.0, max_relative = 1e-14);
        assert!(fit.ssr < 1e-25);
    }

    #[test]
    fn flat_gradient() {
        let x = [0.1f64, 0.4, -0.3];
        let fit = fit_linear(&[1.5, 1.5, 1.5], &x);
        assert_relative_eq!(fit.intercept, 1.5, epsilon = 1e-14);
        assert!(fit.slope.abs() < 1e-14);
        for h in &fit.fitted {
            assert_relative_eq!(*h, 1.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_covariate() {
        let fit = fit_linear(&[1.0f64, 2.0, 6.0], &[0.1, 0.1, 0.1]);
        assert_eq!(fit.slope, 0.0);
        assert_relative_eq!(fit.intercept, 3.0, epsilon = 1e-14);
        assert_relative_eq!(fit.sqnorm, 27.0, epsilon = 1e-12);
    }

    #[test]
    fn perfect_predictor_wins() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let noisy: Vec<f64> = x.iter().enumerate().map(|(i, v)| 2.0 * v + ((i * 7 % 5) as f64 - 2.0) * 0.1).collect();
        let best = select_best(&x, &[x.clone(), noisy]);
        assert_eq!(best.covariate, Some(0));
        assert!(best.ssr < 1e-20);
    }

    #[test]
    fn duplicated_columns_pick_lowest_index() {
        let x: Vec<f64> = (0..15).map(|i| (i as f64).sqrt()).collect();
        let other: Vec<f64> = (0..15).map(|i| ((i * 3) % 7) as f64).collect();
        let u: Vec<f64> = x.iter().map(|v| 0.3 - v).collect();
        let best = select_best(&u, &[other, x.clone(), x.clone()]);
        assert_eq!(best.covariate, Some(1));
    }

    #[test]
    fn no_covariates_gives_intercept_learner() {
        let best = select_best::<f64>(&[1.0, 3.0], &[]);
        assert_eq!(best.covariate, None);
        assert_eq!(best.fitted, vec![2.0, 2.0]);
    }
}
