//! The three two-parameter response families: Gaussian location-scale,
//! negative binomial (NB2) location-scale and Weibull scale-shape.
//!
//! Everything is expressed on the predictor scale: the loss is the negative
//! log-likelihood as a function of `(η₁, η₂)` and the negative gradient of the
//! loss is `∂ℓ/∂η_k` per observation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{mean, Scalar};
use crate::special::{digamma_diff, ln_gamma, ln_gamma_ratio, trigamma_diff};

/// Number of distribution parameters in every supported family.
pub const K: usize = 2;

/// Lower bound for the NB overdispersion offset; the log link cannot reach zero.
pub const NB_ALPHA_FLOOR: f64 = 1e-4;

const MAX_NEWTON_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(rename = "gaussian")]
    GaussianLs,
    #[serde(rename = "negbin")]
    NegBinLs,
    #[serde(rename = "weibull")]
    WeibullSs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Identity,
    Log,
}

impl Link {
    pub fn link<T: Scalar>(self, theta: T) -> T {
        match self {
            Link::Identity => theta,
            Link::Log => theta.ln(),
        }
    }

    pub fn inverse<T: Scalar>(self, eta: T) -> T {
        match self {
            Link::Identity => eta,
            Link::Log => eta.exp(),
        }
    }
}

impl Family {
    pub const ALL: [Family; 3] = [Family::GaussianLs, Family::NegBinLs, Family::WeibullSs];

    pub fn label(self) -> &'static str {
        match self {
            Family::GaussianLs => "gaussian",
            Family::NegBinLs => "negbin",
            Family::WeibullSs => "weibull",
        }
    }

    /// Parameter order is fixed: (μ, σ), (μ, α), (λ, k).
    pub fn parameter_names(self) -> [&'static str; K] {
        match self {
            Family::GaussianLs => ["mu", "sigma"],
            Family::NegBinLs => ["mu", "alpha"],
            Family::WeibullSs => ["lambda", "k"],
        }
    }

    pub fn link(self, k: usize) -> Link {
        match (self, k) {
            (Family::GaussianLs, 0) => Link::Identity,
            _ => Link::Log,
        }
    }

    /// (numerator, denominator) parameter of the selected-covariates ratio:
    /// μ/σ for Gaussian, α/μ for NB, λ/k for Weibull.
    pub fn scr_direction(self) -> (usize, usize) {
        match self {
            Family::GaussianLs | Family::WeibullSs => (0, 1),
            Family::NegBinLs => (1, 0),
        }
    }

    pub fn validate_response<T: Scalar>(self, y: &[T]) -> Result<()> {
        for (i, &v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "response", index: i });
            }
            match self {
                Family::GaussianLs => {}
                Family::NegBinLs => {
                    if v < T::zero() || v != v.floor() {
                        return Err(Error::InvalidData(format!(
                            "negative binomial response must be a non-negative integer, got {v} at row {i}"
                        )));
                    }
                }
                Family::WeibullSs => {
                    if v <= T::zero() {
                        return Err(Error::InvalidData(format!(
                            "survival times must be positive, got {v} at row {i}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Negative log-likelihood of one observation.
    pub fn nll_obs<T: Scalar>(self, eta0: T, eta1: T, y: T) -> T {
        let half = T::lit(0.5);
        match self {
            Family::GaussianLs => {
                let r = (y - eta0) / eta1.exp();
                T::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + eta1 + half * r * r
            }
            Family::NegBinLs => {
                let log_am = eta0 + eta1;
                let inv_alpha = (-eta1).exp();
                let l1p = log_am.exp().ln_1p();
                let ll = y * log_am - (y + inv_alpha) * l1p + ln_gamma_ratio(y, inv_alpha)
                    - ln_gamma(y + T::one());
                -ll
            }
            Family::WeibullSs => {
                let k = eta1.exp();
                let ln_y = y.ln();
                let w = (k * (ln_y - eta0)).exp();
                let ll = eta1 - k * eta0 + (k - T::one()) * ln_y - w;
                -ll
            }
        }
    }

    /// Loss: `-Σ ℓ_i`. Errors on the first non-finite observation.
    pub fn neg_log_lik<T: Scalar>(self, etas: [&[T]; K], y: &[T]) -> Result<T> {
        let mut total = T::zero();
        for i in 0..y.len() {
            let v = self.nll_obs(etas[0][i], etas[1][i], y[i]);
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "log-likelihood", index: i });
            }
            total = total + v;
        }
        Ok(total)
    }

    /// `∂ℓ_i/∂η_k` for one observation.
    pub fn gradient_obs<T: Scalar>(self, k: usize, eta0: T, eta1: T, y: T) -> T {
        let one = T::one();
        match (self, k) {
            (Family::GaussianLs, 0) => (y - eta0) / (T::lit(2.0) * eta1).exp(),
            (Family::GaussianLs, _) => {
                let r = (y - eta0) / eta1.exp();
                r * r - one
            }
            (Family::NegBinLs, 0) => {
                let mu = eta0.exp();
                (y - mu) / (one + eta1.exp() * mu)
            }
            (Family::NegBinLs, _) => {
                let mu = eta0.exp();
                let alpha = eta1.exp();
                let r = (-eta1).exp();
                let am = (eta0 + eta1).exp();
                // α ∂ℓ/∂α
                y - mu * (alpha * y + one) / (one + am) + r * (am.ln_1p() - digamma_diff(y, r))
            }
            (Family::WeibullSs, 0) => {
                let k = eta1.exp();
                k * ((k * (y.ln() - eta0)).exp() - one)
            }
            (Family::WeibullSs, _) => {
                let z = eta1.exp() * (y.ln() - eta0);
                one + z * (one - z.exp())
            }
        }
    }

    pub fn negative_gradient<T: Scalar>(self, k: usize, etas: [&[T]; K], y: &[T]) -> Result<Vec<T>> {
        let mut u = Vec::with_capacity(y.len());
        for i in 0..y.len() {
            let g = self.gradient_obs(k, etas[0][i], etas[1][i], y[i]);
            if !g.is_finite() {
                return Err(Error::NonFinite { what: "negative gradient", index: i });
            }
            u.push(g);
        }
        Ok(u)
    }

    /// Intercept-only maximum-likelihood values on the link scale.
    pub fn init_offsets<T: Scalar>(self, y: &[T]) -> Result<[T; K]> {
        self.validate_response(y)?;
        if y.len() < 2 {
            return Err(Error::InvalidData("need at least two observations for offsets".into()));
        }
        let m = mean(y);
        let var = y.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::from_usize_lossy(y.len());
        if !(var > T::zero()) {
            return Err(Error::InvalidData("response has zero variance".into()));
        }
        match self {
            Family::GaussianLs => Ok([m, T::lit(0.5) * var.ln()]),
            Family::NegBinLs => Ok([m.ln(), nb_log_alpha_offset(y, m, var)?]),
            Family::WeibullSs => weibull_offsets(y, m, var),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Family::GaussianLs),
            "negbin" => Ok(Family::NegBinLs),
            "weibull" => Ok(Family::WeibullSs),
            other => Err(Error::InvalidArgument(format!(
                "unknown family {other:?} (expected gaussian, negbin or weibull)"
            ))),
        }
    }
}

/// Profile score of ln α at fixed μ and its derivative in ln α.
fn nb_profile_score<T: Scalar>(y: &[T], mu: T, log_alpha: T) -> (T, T) {
    let one = T::one();
    let two = T::lit(2.0);
    let alpha = log_alpha.exp();
    let r = one / alpha;
    let am = alpha * mu;
    let l = am.ln_1p();
    let mut g = T::zero();
    let mut dg = T::zero();
    for &yi in y {
        let d = digamma_diff(yi, r);
        let t = trigamma_diff(yi, r);
        let s = yi / alpha - mu * (yi + r) / (one + am) + r * r * (l - d);
        let ds = -yi / (alpha * alpha)
            + mu / (alpha * alpha * (one + am))
            + mu * mu * (yi + r) / ((one + am) * (one + am))
            - two * r * r * r * (l - d)
            + r * r * mu / (one + am)
            + r * r * r * r * t;
        g = g + alpha * s;
        dg = dg + alpha * s + alpha * alpha * ds;
    }
    (g, dg)
}

fn nb_log_alpha_offset<T: Scalar>(y: &[T], mu: T, var: T) -> Result<T> {
    let lo_bound = T::lit(NB_ALPHA_FLOOR.ln());
    let (g_lo, _) = nb_profile_score(y, mu, lo_bound);
    if g_lo <= T::zero() {
        return Ok(lo_bound);
    }
    // bracket the root of the decreasing profile score
    let mut lo = lo_bound;
    let mut hi = lo_bound;
    let mut width = T::one();
    let limit = T::lit(20.0);
    loop {
        hi = hi + width;
        if nb_profile_score(y, mu, hi).0 < T::zero() {
            break;
        }
        lo = hi;
        width = width * T::lit(2.0);
        if hi > limit {
            return Err(Error::Convergence(
                "negative binomial overdispersion offset diverges".into(),
            ));
        }
    }
    let moment = (var - mu) / (mu * mu);
    let mut x = if moment > T::zero() && moment.ln() > lo && moment.ln() < hi {
        moment.ln()
    } else {
        T::lit(0.5) * (lo + hi)
    };
    for _ in 0..MAX_NEWTON_STEPS {
        let (g, dg) = nb_profile_score(y, mu, x);
        if g == T::zero() {
            return Ok(x);
        }
        if g > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - g / dg;
        let next = if dg < T::zero() && newton > lo && newton < hi {
            newton
        } else {
            T::lit(0.5) * (lo + hi)
        };
        if (next - x).abs() < T::lit(1e-13) * (T::one() + x.abs()) || hi - lo < T::lit(1e-13) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Convergence(format!(
        "negative binomial overdispersion offset after {MAX_NEWTON_STEPS} Newton steps"
    )))
}

/// Method-of-moments shape from the coefficient of variation, by bisection on
/// `Γ(1+2/k)/Γ(1+1/k)² - 1 = cv²`.
fn weibull_moment_shape<T: Scalar>(cv2: T) -> T {
    let one = T::one();
    let f = |log_k: T| {
        let k = log_k.exp();
        (ln_gamma(one + T::lit(2.0) / k) - T::lit(2.0) * ln_gamma(one + one / k)).exp() - one - cv2
    };
    let (mut lo, mut hi) = (T::lit(0.02f64.ln()), T::lit(200.0f64.ln()));
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (T::lit(0.5) * (lo + hi)).exp()
}

fn weibull_offsets<T: Scalar>(y: &[T], m: T, var: T) -> Result<[T; K]> {
    let one = T::one();
    let family = Family::WeibullSs;
    let k0 = weibull_moment_shape(var / (m * m));
    let lambda0 = m / ln_gamma(one + one / k0).exp();
    let mut a = lambda0.ln();
    let mut b = k0.ln();
    let ll = |a: T, b: T| -> T { -y.iter().map(|&v| family.nll_obs(a, b, v)).sum::<T>() };
    for _ in 0..MAX_NEWTON_STEPS {
        let k = b.exp();
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) =
            (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for &v in y {
            let z = k * (v.ln() - a);
            let w = z.exp();
            ga = ga + k * (w - one);
            gb = gb + one + z * (one - w);
            haa = haa - k * k * w;
            hab = hab + k * (w - one) + k * w * z;
            hbb = hbb + z * (one - w - z * w);
        }
        let det = haa * hbb - hab * hab;
        let (mut da, mut db) = if haa < T::zero() && det > T::zero() {
            (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det)
        } else {
            let scale = T::one() / T::from_usize_lossy(y.len());
            (ga * scale, gb * scale)
        };
        let current = ll(a, b);
        let mut accepted = false;
        for _ in 0..60 {
            let cand = ll(a + da, b + db);
            if cand.is_finite() && cand >= current {
                accepted = true;
                break;
            }
            da = da * T::lit(0.5);
            db = db * T::lit(0.5);
        }
        if !accepted {
            // no ascent direction left at working precision
            return Ok([a, b]);
        }
        a = a + da;
        b = b + db;
        if da.abs().max(db.abs()) < T::lit(1e-13) {
            return Ok([a, b]);
        }
    }
    Err(Error::Convergence(format!(
        "Weibull offsets after {MAX_NEWTON_STEPS} Newton steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weibull_unit_point() {
        let v = Family::WeibullSs.nll_obs(0.0f64, 0.0, 1.0);
        assert_relative_eq!(v, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_zero_residual() {
        let v = Family::GaussianLs.nll_obs(3.0f64, 0.0, 3.0);
        assert_relative_eq!(v, 0.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-15);
    }

    #[test]
    fn negbin_zero_count() {
        let (mu, alpha) = (1.7f64, 0.6f64);
        let v = Family::NegBinLs.nll_obs(mu.ln(), alpha.ln(), 0.0);
        assert_relative_eq!(v, (1.0 / alpha) * (1.0 + alpha * mu).ln(), max_relative = 1e-14);
    }

    #[test]
    fn negbin_pmf_sums_to_one() {
        let (mu, alpha) = (2.0f64, 0.5f64);
        let total: f64 = (0..=500)
            .map(|y| (-Family::NegBinLs.nll_obs(mu.ln(), alpha.ln(), y as f64)).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn negbin_variance_identity() {
        let (mu, alpha) = (2.0f64, 0.5f64);
        let pmf: Vec<f64> = (0..=2000)
            .map(|y| (-Family::NegBinLs.nll_obs(mu.ln(), alpha.ln(), y as f64)).exp())
            .collect();
        let m: f64 = pmf.iter().enumerate().map(|(y, p)| y as f64 * p).sum();
        let v: f64 = pmf.iter().enumerate().map(|(y, p)| (y as f64 - m).powi(2) * p).sum();
        assert_relative_eq!(m, mu, max_relative = 1e-9);
        assert_relative_eq!(v, mu + alpha * mu * mu, max_relative = 1e-9);
    }

    #[test]
    fn zero_gradients_at_fixed_points() {
        let u = Family::GaussianLs
            .negative_gradient(0, [&[1.0f64, -2.0][..], &[0.3, 0.1][..]], &[1.0, -2.0])
            .unwrap();
        assert_eq!(u, vec![0.0, 0.0]);
        for &k in &[0.2f64, 1.0, 3.5] {
            let g = Family::WeibullSs.gradient_obs(0, 0.7f64, k.ln(), 0.7f64.exp());
            assert!(g.abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_translation_consistency() {
        let y = [0.3f64, -1.2, 2.5];
        let mu = [0.1f64, 0.2, 0.3];
        let s = [0.0f64, 0.5, -0.2];
        let c = 0.75;
        let shifted_mu: Vec<f64> = mu.iter().map(|m| m + c).collect();
        let shifted_y: Vec<f64> = y.iter().map(|v| v + c).collect();
        let a = Family::GaussianLs.neg_log_lik([&shifted_mu, &s], &shifted_y).unwrap();
        let b = Family::GaussianLs.neg_log_lik([&mu, &s], &y).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);
    }

    #[test]
    fn non_finite_loss_names_observation() {
        let err = Family::WeibullSs
            .neg_log_lik([&[0.0f64, 0.0][..], &[0.0, 800.0][..]], &[1.0, 2.0])
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }), "{err}");
    }

    #[test]
    fn gaussian_offsets_closed_form() {
        let off = Family::GaussianLs.init_offsets(&[-1.0f64, 0.0, 1.0]).unwrap();
        assert_relative_eq!(off[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(off[1], (2.0f64 / 3.0).sqrt().ln(), max_relative = 1e-14);
    }

    #[test]
    fn negbin_offset_hits_floor_without_overdispersion() {
        // variance below the mean
        let y = [2.0f64, 3.0, 2.0, 3.0, 2.0, 3.0, 4.0, 1.0];
        let off = Family::NegBinLs.init_offsets(&y).unwrap();
        assert_relative_eq!(off[1], NB_ALPHA_FLOOR.ln(), max_relative = 1e-14);
        assert_relative_eq!(off[0], 2.5f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn negbin_offset_solves_profile_score() {
        let y = [0.0f64, 0.0, 1.0, 5.0, 0.0, 9.0, 2.0, 0.0, 1.0, 14.0, 3.0, 0.0];
        let off = Family::NegBinLs.init_offsets(&y).unwrap();
        let score: f64 = y.iter().map(|&v| Family::NegBinLs.gradient_obs(1, off[0], off[1], v)).sum();
        assert!(score.abs() < 1e-9, "{score}");
        let mu_score: f64 = y.iter().map(|&v| Family::NegBinLs.gradient_obs(0, off[0], off[1], v)).sum();
        assert!(mu_score.abs() < 1e-9, "{mu_score}");
    }

    #[test]
    fn nb_profile_derivative_matches_finite_difference() {
        let y = [0.0f64, 3.0, 1.0, 7.0, 2.0];
        for &la in &[-2.0f64, -0.3, 0.8] {
            let (_, dg) = nb_profile_score(&y, 2.6, la);
            let h = 1e-6;
            let fd = (nb_profile_score(&y, 2.6, la + h).0 - nb_profile_score(&y, 2.6, la - h).0) / (2.0 * h);
            assert_relative_eq!(dg, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn weibull_offsets_zero_score() {
        let y = [0.4f64, 1.3, 2.2, 0.9, 3.1, 0.05, 1.7, 0.8, 2.6, 1.1];
        let off = Family::WeibullSs.init_offsets(&y).unwrap();
        let ga: f64 = y.iter().map(|&v| Family::WeibullSs.gradient_obs(0, off[0], off[1], v)).sum();
        let gb: f64 = y.iter().map(|&v| Family::WeibullSs.gradient_obs(1, off[0], off[1], v)).sum();
        assert!((ga * ga + gb * gb).sqrt() < 1e-8, "{ga} {gb}");
    }

    #[test]
    fn domain_checks() {
        assert!(Family::WeibullSs.init_offsets(&[1.0f64, 0.0]).is_err());
        assert!(Family::NegBinLs.init_offsets(&[1.0f64, 0.5]).is_err());
        assert!(Family::GaussianLs.init_offsets(&[2.0f64, 2.0]).is_err());
    }

    #[test]
    fn links_invert() {
        for fam in Family::ALL {
            for k in 0..K {
                let link = fam.link(k);
                for &theta in &[0.01f64, 0.7, 3.0, 250.0] {
                    let back = link.inverse(link.link(theta));
                    assert_relative_eq!(back, theta, max_relative = 1e-12);
                }
            }
        }
        assert_eq!(Family::GaussianLs.link(0), Link::Identity);
        assert_eq!("weibull".parse::<Family>().unwrap(), Family::WeibullSs);
    }
}
