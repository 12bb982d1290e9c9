//! Log-gamma, digamma and trigamma for the negative binomial likelihood.
//!
//! `ln_gamma` uses the Lanczos approximation (g = 7, nine coefficients) with
//! reflection below 0.5; `digamma` and `trigamma` shift the argument above 10
//! with the recurrence and then apply the asymptotic series.

use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Above this count the finite-sum identities are replaced by the
/// special-function differences.
const MAX_SUM_TERMS: usize = 1024;

pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let one = T::one();
    let half = T::lit(0.5);
    let pi = T::lit(std::f64::consts::PI);
    if x < half {
        // Γ(x)Γ(1-x) = π / sin(πx)
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(one - x);
    }
    let x = x - one;
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    T::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

pub fn digamma<T: Scalar>(x: T) -> T {
    let one = T::one();
    if x <= T::zero() && x == x.floor() {
        return T::nan();
    }
    if x < T::zero() {
        // ψ(1-x) - ψ(x) = π cot(πx)
        let pi = T::lit(std::f64::consts::PI);
        return digamma(one - x) - pi / (pi * x).tan();
    }
    let mut x = x;
    let mut shift = T::zero();
    while x < T::lit(10.0) {
        shift = shift + one / x;
        x = x + one;
    }
    let inv2 = one / (x * x);
    let series = inv2
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 120.0)
                    - inv2
                        * (T::lit(1.0 / 252.0)
                            - inv2 * (T::lit(1.0 / 240.0) - inv2 * T::lit(1.0 / 132.0)))));
    x.ln() - T::lit(0.5) / x - series - shift
}

pub fn trigamma<T: Scalar>(x: T) -> T {
    let one = T::one();
    if x <= T::zero() {
        return T::nan();
    }
    let mut x = x;
    let mut shift = T::zero();
    while x < T::lit(10.0) {
        shift = shift + one / (x * x);
        x = x + one;
    }
    let inv = one / x;
    let inv2 = inv * inv;
    let series = inv
        + inv2 / T::lit(2.0)
        + inv2
            * inv
            * (T::lit(1.0 / 6.0)
                - inv2
                    * (T::lit(1.0 / 30.0)
                        - inv2 * (T::lit(1.0 / 42.0) - inv2 * (T::lit(1.0 / 30.0) - inv2 * T::lit(5.0 / 66.0)))));
    series + shift
}

fn small_count<T: Scalar>(y: T) -> Option<usize> {
    if y >= T::zero() && y == y.floor() {
        y.to_usize().filter(|&c| c <= MAX_SUM_TERMS)
    } else {
        None
    }
}

/// `ln Γ(y + r) - ln Γ(r)`; exact finite sum when `y` is a small count.
pub fn ln_gamma_ratio<T: Scalar>(y: T, r: T) -> T {
    match small_count(y) {
        Some(c) => (0..c).fold(T::zero(), |acc, j| acc + (r + T::from_usize_lossy(j)).ln()),
        None => ln_gamma(y + r) - ln_gamma(r),
    }
}

/// `ψ(y + r) - ψ(r)`; exact finite sum when `y` is a small count.
pub fn digamma_diff<T: Scalar>(y: T, r: T) -> T {
    match small_count(y) {
        Some(c) => (0..c).fold(T::zero(), |acc, j| acc + T::one() / (r + T::from_usize_lossy(j))),
        None => digamma(y + r) - digamma(r),
    }
}

/// `ψ₁(y + r) - ψ₁(r)`; exact finite sum when `y` is a small count.
pub fn trigamma_diff<T: Scalar>(y: T, r: T) -> T {
    match small_count(y) {
        Some(c) => (0..c).fold(T::zero(), |acc, j| {
            let d = r + T::from_usize_lossy(j);
            acc - T::one() / (d * d)
        }),
        None => trigamma(y + r) - trigamma(r),
    }
}
