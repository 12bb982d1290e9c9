//! Step lengths for candidate updates: fixed, shrunk line-search optimum,
//! shrunk analytic (approximate) optimum, and the base-learner norm ratio
//! against a reference parameter.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::base_learner::FittedBaseLearner;
use crate::error::{Error, Result};
use crate::family::{Family, K};
use crate::scalar::Scalar;

/// Default golden-section bracket width.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// The fixed step length of the F-F style presets.
pub const DEFAULT_FIXED_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Interval<T: Scalar> {
    pub lo: T,
    pub hi: T,
    pub tol: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo: T::lit(lo),
            hi: T::lit(hi),
            tol: T::lit(DEFAULT_TOLERANCE),
        }
    }

    /// Search interval used for parameter `k` of `family` unless overridden:
    /// [0,10] Gaussian, [0,20] / [0,200] negative binomial, [0,20] Weibull.
    pub fn default_for(family: Family, k: usize) -> Self {
        match (family, k) {
            (Family::GaussianLs, _) => Self::new(0.0, 10.0),
            (Family::NegBinLs, 0) => Self::new(0.0, 20.0),
            (Family::NegBinLs, _) => Self::new(0.0, 200.0),
            (Family::WeibullSs, _) => Self::new(0.0, 20.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum StepRule<T: Scalar> {
    Fixed(T),
    LineSearch(Interval<T>),
    /// Closed-form optimum; the interval bounds the result and is searched
    /// when no previous optimum is cached or the approximation breaks down.
    Analytic(Interval<T>),
    BlRatio { reference: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SchemeSpec<T: Scalar> {
    pub rules: [StepRule<T>; K],
}

impl<T: Scalar> SchemeSpec<T> {
    pub fn validate(&self, family: Family) -> Result<()> {
        let mut ratio_count = 0;
        for (k, rule) in self.rules.iter().enumerate() {
            match *rule {
                StepRule::Fixed(v) => {
                    if !(v >= T::zero() && v.is_finite()) {
                        return Err(Error::InvalidScheme(format!("fixed step {v} for parameter {k}")));
                    }
                }
                StepRule::LineSearch(iv) | StepRule::Analytic(iv) => {
                    if !(iv.lo < iv.hi && iv.tol > T::zero()) {
                        return Err(Error::InvalidScheme(format!(
                            "bad search interval [{}, {}] (tol {}) for parameter {k}",
                            iv.lo, iv.hi, iv.tol
                        )));
                    }
                    if matches!(rule, StepRule::Analytic(_)) && k != 0 {
                        return Err(Error::InvalidScheme(format!(
                            "no analytic step length for {} parameter {}",
                            family,
                            family.parameter_names()[k]
                        )));
                    }
                }
                StepRule::BlRatio { reference } => {
                    ratio_count += 1;
                    if reference >= K || reference == k {
                        return Err(Error::InvalidScheme(format!(
                            "parameter {k} cannot use parameter {reference} as reference"
                        )));
                    }
                    if matches!(self.rules[reference], StepRule::BlRatio { .. }) {
                        return Err(Error::InvalidScheme("reference parameter is itself base-learner-ratio".into()));
                    }
                }
            }
        }
        if ratio_count > 1 {
            return Err(Error::InvalidScheme("at most one base-learner-ratio parameter".into()));
        }
        Ok(())
    }

    /// `(other, reference)` when one parameter uses the norm ratio.
    pub fn ratio_pair(&self) -> Option<(usize, usize)> {
        self.rules.iter().enumerate().find_map(|(k, r)| match *r {
            StepRule::BlRatio { reference } => Some((k, reference)),
            _ => None,
        })
    }

    pub fn is_fixed(&self) -> bool {
        self.rules.iter().all(|r| matches!(r, StepRule::Fixed(_)))
    }
}

/// Named schemes; the first component is the rule for parameter 1, the
/// second for parameter 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "F-F")]
    FF,
    #[serde(rename = "LS-LS")]
    LsLs,
    #[serde(rename = "A-LS")]
    ALs,
    #[serde(rename = "A-BL")]
    ABl,
    #[serde(rename = "BL-F")]
    BlF,
    #[serde(rename = "F-BL")]
    FBl,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::FF, Preset::LsLs, Preset::ALs, Preset::ABl, Preset::BlF, Preset::FBl];

    pub fn label(self) -> &'static str {
        match self {
            Preset::FF => "F-F",
            Preset::LsLs => "LS-LS",
            Preset::ALs => "A-LS",
            Preset::ABl => "A-BL",
            Preset::BlF => "BL-F",
            Preset::FBl => "F-BL",
        }
    }

    pub fn valid_for(self, family: Family) -> bool {
        match self {
            Preset::BlF => family == Family::GaussianLs,
            Preset::FBl => family != Family::GaussianLs,
            _ => true,
        }
    }

    pub fn valid_presets(family: Family) -> Vec<Preset> {
        Self::ALL.into_iter().filter(|p| p.valid_for(family)).collect()
    }

    /// Fixed-reference schemes tend to need many more iterations.
    pub fn has_fixed_reference(self) -> bool {
        matches!(self, Preset::FF | Preset::BlF | Preset::FBl)
    }

    pub fn expand<T: Scalar>(self, family: Family) -> Result<SchemeSpec<T>> {
        if !self.valid_for(family) {
            let valid: Vec<&str> = Self::valid_presets(family).iter().map(|p| p.label()).collect();
            return Err(Error::InvalidScheme(format!(
                "{} is not available for the {} family (valid: {})",
                self.label(),
                family,
                valid.join(", ")
            )));
        }
        let fixed = StepRule::Fixed(T::lit(DEFAULT_FIXED_STEP));
        let ls = |k| StepRule::LineSearch(Interval::default_for(family, k));
        let analytic = StepRule::Analytic(Interval::default_for(family, 0));
        let rules = match self {
            Preset::FF => [fixed, fixed],
            Preset::LsLs => [ls(0), ls(1)],
            Preset::ALs => [analytic, ls(1)],
            Preset::ABl => [analytic, StepRule::BlRatio { reference: 0 }],
            Preset::BlF => [StepRule::BlRatio { reference: 1 }, fixed],
            Preset::FBl => [fixed, StepRule::BlRatio { reference: 0 }],
        };
        let spec = SchemeSpec { rules };
        spec.validate(family)?;
        Ok(spec)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidScheme(format!(
                    "unknown scheme {s:?} (expected one of F-F, LS-LS, A-LS, A-BL, BL-F, F-BL)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Interior,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult<T: Scalar> {
    pub nu: T,
    pub loss: T,
    pub boundary: Boundary,
}

/// Loss along `η_k + ν·h`; non-finite values map to +∞ so the search moves
/// away from them.
fn directional_loss<T: Scalar>(family: Family, etas: [&[T]; K], k: usize, h: &[T], y: &[T], nu: T) -> T {
    let mut total = T::zero();
    for i in 0..y.len() {
        let (mut e0, mut e1) = (etas[0][i], etas[1][i]);
        if k == 0 {
            e0 = e0 + nu * h[i];
        } else {
            e1 = e1 + nu * h[i];
        }
        total = total + family.nll_obs(e0, e1, y[i]);
    }
    if total.is_finite() {
        total
    } else {
        T::infinity()
    }
}

/// Golden-section minimisation of the loss along the fitted base-learner.
/// Returns the unshrunk optimum; a minimiser within `tol` of `hi` is snapped
/// to `hi` and flagged.
pub fn line_search<T: Scalar>(
    family: Family,
    etas: [&[T]; K],
    k: usize,
    h: &[T],
    y: &[T],
    interval: Interval<T>,
) -> Result<LineSearchResult<T>> {
    let Interval { lo, hi, tol } = interval;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty search interval [{lo}, {hi}]")));
    }
    if h.iter().all(|&v| v == T::zero()) {
        return Err(Error::DegenerateBaseLearner);
    }
    let f = |nu: T| directional_loss(family, etas, k, h, y, nu);
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a >= tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut nu = T::lit(0.5) * (a + b);
    let boundary = if hi - nu < tol {
        nu = hi;
        Boundary::Upper
    } else if nu - lo < tol {
        Boundary::Lower
    } else {
        Boundary::Interior
    };
    let loss = f(nu);
    if !loss.is_finite() {
        return Err(Error::Convergence(format!(
            "line search found no finite loss on [{lo}, {hi}]"
        )));
    }
    Ok(LineSearchResult { nu, loss, boundary })
}

/// Exact minimiser for the Gaussian identity-link location step:
/// `Σ h(y-μ)/σ² / Σ h²/σ²`.
pub fn analytic_gaussian_mu<T: Scalar>(etas: [&[T]; K], h: &[T], y: &[T]) -> Result<T> {
    let (mut num, mut den) = (T::zero(), T::zero());
    for i in 0..y.len() {
        let w = (T::lit(-2.0) * etas[1][i]).exp();
        num = num + h[i] * (y[i] - etas[0][i]) * w;
        den = den + h[i] * h[i] * w;
    }
    if !(den > T::zero()) {
        return Err(Error::DegenerateBaseLearner);
    }
    Ok(num / den)
}

/// Approximate optimal NB location step from a first-order expansion of the
/// score around the previous optimum `nu_prev`.
pub fn analytic_nb_mu<T: Scalar>(etas: [&[T]; K], h: &[T], y: &[T], nu_prev: T) -> Result<T> {
    let one = T::one();
    let (mut num, mut den) = (T::zero(), T::zero());
    for i in 0..y.len() {
        let mu_prev = (etas[0][i] + nu_prev * h[i]).exp();
        let scale = one + etas[1][i].exp() * mu_prev;
        num = num + h[i] * (y[i] - mu_prev * (one - h[i] * nu_prev)) / scale;
        den = den + h[i] * h[i] * mu_prev / scale;
    }
    if !(den > T::zero()) {
        return Err(Error::DegenerateBaseLearner);
    }
    Ok(num / den)
}

/// Approximate optimal Weibull scale step, same construction as
/// [`analytic_nb_mu`].
pub fn analytic_weibull_lambda<T: Scalar>(etas: [&[T]; K], h: &[T], y: &[T], nu_prev: T) -> Result<T> {
    let one = T::one();
    let (mut lin, mut curv_term, mut den) = (T::zero(), T::zero(), T::zero());
    for i in 0..y.len() {
        let k = etas[1][i].exp();
        // y^k · exp(η + ν_prev h)^(-k)
        let w = (k * (y[i].ln() - etas[0][i] - nu_prev * h[i])).exp();
        lin = lin + h[i] * k;
        curv_term = curv_term + h[i] * k * w * (one + k * h[i] * nu_prev);
        den = den + h[i] * h[i] * k * k * w;
    }
    if !(den > T::zero()) {
        return Err(Error::DegenerateBaseLearner);
    }
    Ok(-(lin - curv_term) / den)
}

/// Base-learner norm ratio: `nu_ref · ‖h_ref‖² / ‖h_other‖²`.
pub fn bl_ratio<T: Scalar>(nu_ref: T, sqnorm_ref: T, sqnorm_other: T) -> Result<T> {
    if !(sqnorm_other > T::zero()) {
        return Err(Error::DegenerateBaseLearner);
    }
    Ok(nu_ref * sqnorm_ref / sqnorm_other)
}

/// Last unshrunk optimal step per (parameter, covariate) and per parameter.
#[derive(Debug, Clone, Default)]
pub struct StepLengthCache<T: Scalar> {
    by_covariate: BTreeMap<(usize, Option<usize>), T>,
    by_parameter: [Option<T>; K],
}

impl<T: Scalar> StepLengthCache<T> {
    pub fn new() -> Self {
        Self {
            by_covariate: BTreeMap::new(),
            by_parameter: [None; K],
        }
    }

    /// Covariate entry, else the parameter-level entry.
    pub fn previous(&self, k: usize, covariate: Option<usize>) -> Option<T> {
        self.by_covariate.get(&(k, covariate)).copied().or(self.by_parameter[k])
    }

    pub fn record(&mut self, k: usize, covariate: Option<usize>, nu_star: T) {
        if nu_star.is_finite() && nu_star > T::zero() {
            self.by_covariate.insert((k, covariate), nu_star);
            self.by_parameter[k] = Some(nu_star);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepSource {
    Fixed,
    LineSearch,
    Analytic,
    /// No previous optimum was cached; the interval was searched.
    AnalyticSeed,
    /// The closed form was non-positive or non-finite; the interval was searched.
    AnalyticFallback,
    BlRatio,
    /// The fitted base-learner is identically zero.
    Degenerate,
}

impl StepSource {
    pub fn label(self) -> &'static str {
        match self {
            StepSource::Fixed => "fixed",
            StepSource::LineSearch => "line_search",
            StepSource::Analytic => "analytic",
            StepSource::AnalyticSeed => "analytic_seed",
            StepSource::AnalyticFallback => "analytic_fallback",
            StepSource::BlRatio => "bl_ratio",
            StepSource::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StepOutcome<T: Scalar> {
    /// Step length actually used for the candidate update.
    pub nu: T,
    /// Unshrunk optimum, for line-search and analytic rules.
    pub nu_star: Option<T>,
    pub source: StepSource,
    pub boundary: Boundary,
}

/// Unshrunk optimum for an analytic rule, honouring the cache fallback chain.
pub fn analytic_optimum<T: Scalar>(
    family: Family,
    etas: [&[T]; K],
    learner: &FittedBaseLearner<T>,
    y: &[T],
    cache: &StepLengthCache<T>,
    interval: Interval<T>,
) -> Result<(T, StepSource, Boundary)> {
    let h = &learner.fitted;
    let search = |source| -> Result<(T, StepSource, Boundary)> {
        let r = line_search(family, etas, 0, h, y, interval)?;
        Ok((r.nu, source, r.boundary))
    };
    let closed_form = match family {
        Family::GaussianLs => return Ok((analytic_gaussian_mu(etas, h, y)?, StepSource::Analytic, Boundary::Interior)),
        Family::NegBinLs => analytic_nb_mu,
        Family::WeibullSs => analytic_weibull_lambda,
    };
    let Some(nu_prev) = cache.previous(0, learner.covariate) else {
        return search(StepSource::AnalyticSeed);
    };
    match closed_form(etas, h, y, nu_prev) {
        Ok(v) if v.is_finite() && v > T::zero() => {
            if v > interval.hi {
                Ok((interval.hi, StepSource::Analytic, Boundary::Upper))
            } else {
                Ok((v, StepSource::Analytic, Boundary::Interior))
            }
        }
        Ok(_) => search(StepSource::AnalyticFallback),
        Err(e) => Err(e),
    }
}

/// Step lengths for all parameters of one iteration, given every parameter's
/// best base-learner. Shrinkage applies to line-search and analytic rules;
/// a norm-ratio parameter inherits the reference's final step.
pub fn compute_iteration_steps<T: Scalar>(
    family: Family,
    scheme: &SchemeSpec<T>,
    lambda_s: T,
    learners: &[FittedBaseLearner<T>; K],
    etas: [&[T]; K],
    y: &[T],
    cache: &mut StepLengthCache<T>,
) -> Result<[StepOutcome<T>; K]> {
    let mut out: [Option<StepOutcome<T>>; K] = [None; K];
    for k in 0..K {
        let searched = matches!(scheme.rules[k], StepRule::LineSearch(_) | StepRule::Analytic(_));
        if searched && learners[k].sqnorm == T::zero() {
            // a zero base-learner cannot change the loss; propose a null update
            out[k] = Some(StepOutcome {
                nu: T::zero(),
                nu_star: None,
                source: StepSource::Degenerate,
                boundary: Boundary::Lower,
            });
            continue;
        }
        let outcome = match scheme.rules[k] {
            StepRule::Fixed(v) => StepOutcome {
                nu: v,
                nu_star: None,
                source: StepSource::Fixed,
                boundary: Boundary::Interior,
            },
            StepRule::LineSearch(iv) => {
                let r = line_search(family, etas, k, &learners[k].fitted, y, iv)?;
                StepOutcome {
                    nu: lambda_s * r.nu,
                    nu_star: Some(r.nu),
                    source: StepSource::LineSearch,
                    boundary: r.boundary,
                }
            }
            StepRule::Analytic(iv) => {
                let (nu_star, source, boundary) = analytic_optimum(family, etas, &learners[k], y, cache, iv)?;
                StepOutcome {
                    nu: lambda_s * nu_star,
                    nu_star: Some(nu_star),
                    source,
                    boundary,
                }
            }
            StepRule::BlRatio { .. } => continue,
        };
        out[k] = Some(outcome);
    }
    if let Some((other, reference)) = scheme.ratio_pair() {
        let nu_ref = out[reference].expect("reference computed first").nu;
        let nu = if learners[other].sqnorm == T::zero() {
            T::zero()
        } else {
            bl_ratio(nu_ref, learners[reference].sqnorm, learners[other].sqnorm)?
        };
        out[other] = Some(StepOutcome {
            nu,
            nu_star: None,
            source: StepSource::BlRatio,
            boundary: Boundary::Interior,
        });
    }
    let out = out.map(|o| o.expect("every parameter has a rule"));
    for (k, o) in out.iter().enumerate() {
        if let Some(nu_star) = o.nu_star {
            cache.record(k, learners[k].covariate, nu_star);
        }
    }
    Ok(out)
}
