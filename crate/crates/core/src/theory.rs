//! Theoretical predictions for the expected Shapley value of the heaviest and
//! lightest agent, and the limiting scaled value of an arbitrary rank.
//!
//! For i.i.d. weights and a quota in the bulk of `[0, n E[X]]`,
//!
//! ```text
//! E[φ_max] ≈ (1/n) E_{x ~ X^n_max}[ x / E[X | X ≤ x] ]
//! E[φ_min] ≈ (1/n) E_{x ~ X^n_min}[ x / E[X | X ≥ x] ]
//! ```
//!
//! independently of the quota. The expectations are evaluated by adaptive
//! quadrature after the substitution `x = quantile(s)` of the order
//! statistic, which maps the integral onto `(0, 1)` with unit density.

use serde::Serialize;

use crate::distributions::{Bound, Extreme, WeightDistribution};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::scalar::{CompensatedSum, Real};
use crate::special::{harmonic, scaled_exp_integral_e1};

/// Relative tolerance of the quadrature predictors.
pub const PREDICTOR_REL_TOL: f64 = 1e-9;

/// Term cap of the uniform series.
pub const SERIES_MAX_TERMS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
#[serde(bound(serialize = "T: Real"))]
pub enum Form<T> {
    Quadrature { abs_error: T },
    Series { terms: usize },
    Asymptotic,
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound(serialize = "T: Real"))]
pub enum Target<T> {
    Max,
    Min,
    /// The agent at relative rank `p ∈ (0, 1)`, lightest first.
    Rank(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentCount {
    Finite(usize),
    Infinite,
}

/// A predicted expectation.
///
/// For finite `n`, `value` is `E[φ]` itself. For `n = ∞` it is the limit of
/// `n · E[φ]`, the only finite quantity left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct Prediction<T> {
    pub value: T,
    pub form: Form<T>,
    pub target: Target<T>,
    pub n: AgentCount,
}

impl<T: Real> Prediction<T> {
    /// `n · E[φ]`, the quantity the asymptotics describe.
    pub fn scaled(&self) -> T {
        match self.n {
            AgentCount::Finite(n) => T::from_usize_lossy(n) * self.value,
            AgentCount::Infinite => self.value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Series for the uniform law where it converges, quadrature otherwise.
    #[default]
    Auto,
    Series,
    Quadrature,
    Asymptotic,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "series" => Ok(Method::Series),
            "quadrature" => Ok(Method::Quadrature),
            "asymptotic" => Ok(Method::Asymptotic),
            other => Err(Error::config(format!(
                "method `{other}`: expected auto, series, quadrature or asymptotic"
            ))),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("predictors need n >= 2, got {n}")));
    }
    Ok(())
}

fn order_statistic_expectation<T: Real>(
    d: &WeightDistribution<T>,
    n: usize,
    which: Extreme,
) -> Result<(T, T)> {
    let order = d.extreme_order_density(n, which)?;
    // f32 cannot reach 1e-9; settle for a small multiple of its epsilon.
    let rel_tol = T::lit(PREDICTOR_REL_TOL).max(T::epsilon() * T::lit(100.0));
    let quad = Quadrature::with_rel_tol(rel_tol);
    let integral = quad.integrate(
        |s| {
            let x = order.quantile(s);
            match which {
                Extreme::Max => d.ratio_to_mean_below(x),
                Extreme::Min => d.ratio_to_mean_above(x),
            }
        },
        T::zero(),
        T::one(),
    )?;
    let nf = T::from_usize_lossy(n);
    Ok((integral.value / nf, integral.abs_error / nf))
}

/// `E[φ_max] = (1/n) E_{x ~ X^n_max}[x / E[X_{≤x}]]` by quadrature.
pub fn predict_max_expected<T: Real>(d: &WeightDistribution<T>, n: usize) -> Result<Prediction<T>> {
    check_n(n)?;
    let (value, abs_error) = order_statistic_expectation(d, n, Extreme::Max)?;
    Ok(Prediction {
        value,
        form: Form::Quadrature { abs_error },
        target: Target::Max,
        n: AgentCount::Finite(n),
    })
}

/// `E[φ_min] = (1/n) E_{x ~ X^n_min}[x / E[X_{≥x}]]` by quadrature.
pub fn predict_min_expected<T: Real>(d: &WeightDistribution<T>, n: usize) -> Result<Prediction<T>> {
    check_n(n)?;
    let (value, abs_error) = order_statistic_expectation(d, n, Extreme::Min)?;
    Ok(Prediction {
        value,
        form: Form::Quadrature { abs_error },
        target: Target::Min,
        n: AgentCount::Finite(n),
    })
}

/// Limits of `n E[φ_max]` and `n E[φ_min]`: `χ_max / E[X]` and `χ_min / E[X]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct LimitValues<T> {
    pub max: Bound<T>,
    pub min: T,
}

pub fn limit_values<T: Real>(d: &WeightDistribution<T>) -> LimitValues<T> {
    let mean = d.mean();
    LimitValues {
        max: match d.support_max() {
            Bound::Finite(b) => Bound::Finite(b / mean),
            Bound::Unbounded => Bound::Unbounded,
        },
        min: d.support_min() / mean,
    }
}

/// `lim n E[φ_{pn}] = F⁻¹(p) / E[X]`.
pub fn predict_rank_limit<T: Real>(d: &WeightDistribution<T>, p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::domain(format!("rank fraction must lie in (0, 1), got {p}")));
    }
    Ok(d.quantile(p) / d.mean())
}

fn check_uniform_params<T: Real>(a: T, b: T, tol: T) -> Result<()> {
    if !(a >= T::zero() && a < b && b.is_finite()) {
        return Err(Error::domain(format!("series needs 0 <= a < b, got a = {a}, b = {b}")));
    }
    if !(tol > T::zero()) {
        return Err(Error::domain("series tolerance must be positive"));
    }
    Ok(())
}

/// `lead/n − coef · Σ_{d≥1} r^d d!/(n(n+1)…(n+d))`.
fn beta_series<T: Real>(lead: T, coef: T, r: T, n: usize, tol: T, what: &'static str) -> Result<(T, usize)> {
    let nf = T::from_usize_lossy(n);
    let mut sum = CompensatedSum::new();
    sum.add(lead / nf);
    if coef == T::zero() {
        return Ok((sum.value(), 0));
    }
    // ratio = d!/(n(n+1)…(n+d)), starting from 1/n at d = 0
    let mut ratio = T::one() / nf;
    let mut power = T::one();
    let mut previous = T::infinity();
    let abs_floor = T::lit(1e-16);
    for d in 1..=SERIES_MAX_TERMS {
        let df = T::from_usize_lossy(d);
        ratio = ratio * df / (nf + df);
        power = power * r;
        let term = -coef * power * ratio;
        sum.add(term);
        let size = term.abs();
        let decreasing = size <= previous;
        previous = size;
        if decreasing && size < tol * sum.value().abs() && size < abs_floor {
            return Ok((sum.value(), d));
        }
    }
    Err(Error::Convergence {
        what,
        detail: format!("{SERIES_MAX_TERMS} terms without reaching tolerance {tol} at n = {n}"),
    })
}

/// `E[φ_max]` for `U(a, b)` as the Beta-integral series.
pub fn uniform_series_max<T: Real>(a: T, b: T, n: usize, tol: T) -> Result<Prediction<T>> {
    check_uniform_params(a, b, tol)?;
    check_n(n)?;
    let s = a + b;
    let two = T::lit(2.0);
    let (value, terms) = beta_series(two * b / s, two * a / s, (b - a) / s, n, tol, "uniform max series")?;
    Ok(Prediction {
        value,
        form: Form::Series { terms },
        target: Target::Max,
        n: AgentCount::Finite(n),
    })
}

/// `E[φ_min]` for `U(a, b)`: the max series with `a` and `b` exchanged.
///
/// With `a = 0` the ratio is `-1` and the terms decay only like `d^{-n}`,
/// so small `n` exhausts the term cap.
pub fn uniform_series_min<T: Real>(a: T, b: T, n: usize, tol: T) -> Result<Prediction<T>> {
    check_uniform_params(a, b, tol)?;
    check_n(n)?;
    let s = a + b;
    let two = T::lit(2.0);
    let (value, terms) = beta_series(two * a / s, two * b / s, (a - b) / s, n, tol, "uniform min series")?;
    Ok(Prediction {
        value,
        form: Form::Series { terms },
        target: Target::Min,
        n: AgentCount::Finite(n),
    })
}

/// Closed forms for `Exp(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ExpFormulas<T> {
    /// `∫₀¹ (1−t)^n ln(1/t) dt = H_{n+1}/(n+1)`, the leading part of `E[φ_max]`.
    pub i_n: T,
    /// `∫₀^∞ e^{−nx} x/(x+1) dx = 1/n − e^n E₁(n)`, which equals `E[φ_min]`.
    pub min_integral: T,
    /// `(ln n + γ)/n`.
    pub max_asymptotic: T,
    /// `1/n²`.
    pub min_asymptotic: T,
}

pub fn exp_formulas<T: Real>(n: usize) -> Result<ExpFormulas<T>> {
    if n == 0 {
        return Err(Error::domain("exponential closed forms need n >= 1"));
    }
    let nf = T::from_usize_lossy(n);
    let i_n = harmonic::<T>(n + 1) / (nf + T::one());
    let min_integral = T::one() / nf - scaled_exp_integral_e1(nf)?;
    Ok(ExpFormulas {
        i_n,
        min_integral,
        max_asymptotic: (nf.ln() + T::euler_gamma()) / nf,
        min_asymptotic: T::one() / (nf * nf),
    })
}

/// `J_n = 1/((n+1)(n+2)) Σ_{i=0}^n [2H_i/(i+2) − (i²−i−4)/((i+1)(i+2)²)]`,
/// the second part of the `Exp(1)` maximum integral.
pub fn jn_value<T: Real>(n: usize) -> T {
    let mut sum = CompensatedSum::new();
    let mut h = T::zero();
    let two = T::lit(2.0);
    for i in 0..=n {
        if i > 0 {
            h = h + T::one() / T::from_usize_lossy(i);
        }
        let fi = T::from_usize_lossy(i);
        let head = two * h / (fi + two);
        let tail = (fi * fi - fi - T::lit(4.0)) / ((fi + T::one()) * (fi + two) * (fi + two));
        sum.add(head - tail);
    }
    let nf = T::from_usize_lossy(n);
    sum.value() / ((nf + T::one()) * (nf + two))
}

/// Relative quotas `q` (fractions of `n E[X]`) where the predictions apply:
/// `[n^{1/4} / (n E[X]), 1 − ε]`.
pub fn quota_range<T: Real>(d: &WeightDistribution<T>, n: usize, eps: T) -> (T, T) {
    let nf = T::from_usize_lossy(n);
    (nf.powf(T::lit(0.25)) / (nf * d.mean()), T::one() - eps)
}

/// Dispatches a prediction by target and evaluation method.
pub fn predict<T: Real>(
    d: &WeightDistribution<T>,
    n: usize,
    target: Target<T>,
    method: Method,
) -> Result<Prediction<T>> {
    if let Target::Rank(p) = target {
        return Ok(Prediction {
            value: predict_rank_limit(d, p)?,
            form: Form::Limit,
            target,
            n: AgentCount::Infinite,
        });
    }
    check_n(n)?;
    let tol = T::lit(1e-12);
    match (method, *d) {
        (Method::Quadrature, _) => quadrature_for(d, n, target),
        (Method::Series, WeightDistribution::Uniform { a, b }) => series_for(a, b, n, target, tol),
        (Method::Series, WeightDistribution::Exponential { .. }) => Err(Error::config(
            "no series form for the exponential law; use quadrature or asymptotic",
        )),
        (Method::Auto, WeightDistribution::Uniform { a, b }) => {
            series_for(a, b, n, target, tol).or_else(|_| quadrature_for(d, n, target))
        }
        (Method::Auto, WeightDistribution::Exponential { .. }) => quadrature_for(d, n, target),
        (Method::Asymptotic, _) => Ok(Prediction {
            value: asymptotic_value(d, n, target),
            form: Form::Asymptotic,
            target,
            n: AgentCount::Finite(n),
        }),
    }
}

fn quadrature_for<T: Real>(d: &WeightDistribution<T>, n: usize, target: Target<T>) -> Result<Prediction<T>> {
    match target {
        Target::Max => predict_max_expected(d, n),
        _ => predict_min_expected(d, n),
    }
}

fn series_for<T: Real>(a: T, b: T, n: usize, target: Target<T>, tol: T) -> Result<Prediction<T>> {
    match target {
        Target::Max => uniform_series_max(a, b, n, tol),
        _ => uniform_series_min(a, b, n, tol),
    }
}

fn asymptotic_value<T: Real>(d: &WeightDistribution<T>, n: usize, target: Target<T>) -> T {
    let nf = T::from_usize_lossy(n);
    let two = T::lit(2.0);
    match (*d, target) {
        (WeightDistribution::Exponential { .. }, Target::Max) => (nf.ln() + T::euler_gamma()) / nf,
        (WeightDistribution::Exponential { .. }, _) => T::one() / (nf * nf),
        (WeightDistribution::Uniform { a, b }, Target::Max) => two * b / (a + b) / nf,
        (WeightDistribution::Uniform { a, b }, _) => {
            if a > T::zero() {
                two * a / (a + b) / nf
            } else {
                // leading term of the a = 0 series
                two / (nf * nf)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(a: f64, b: f64) -> WeightDistribution<f64> {
        WeightDistribution::uniform(a, b).unwrap()
    }

    fn exp1() -> WeightDistribution<f64> {
        WeightDistribution::exponential(1.0).unwrap()
    }

    #[test]
    fn uniform_zero_max_is_two_over_n() {
        for n in [2, 10, 37] {
            let q = predict_max_expected(&u(0.0, 1.0), n).unwrap();
            assert!((q.scaled() - 2.0).abs() < 1e-12, "{n}: {}", q.scaled());
            let s = uniform_series_max(0.0_f64, 1.0, n, 1e-12).unwrap();
            assert_eq!(s.value, 2.0 / n as f64);
            assert_eq!(s.form, Form::Series { terms: 0 });
        }
    }

    #[test]
    fn uniform_min_series_leading_terms() {
        let s = uniform_series_min(0.0_f64, 1.0, 10, 1e-12).unwrap();
        let partial = 2.0 / 110.0 - 4.0 / 1320.0 + 12.0 / 17160.0 - 48.0 / 240240.0;
        // alternating: partial sums bracket the limit
        assert!((s.value - partial).abs() < 240.0 / 3603600.0);
        let q = predict_min_expected(&u(0.0, 1.0), 10).unwrap();
        assert!((s.value - q.value).abs() < 1e-9, "{} {}", s.value, q.value);
    }

    #[test]
    fn uniform_min_series_small_n_hits_cap() {
        assert!(matches!(
            uniform_series_min(0.0, 1.0, 2, 1e-12),
            Err(Error::Convergence { .. })
        ));
        // quadrature covers the case under the auto method
        let p = predict(&u(0.0, 1.0), 2, Target::Min, Method::Auto).unwrap();
        assert!(matches!(p.form, Form::Quadrature { .. }));
    }

    #[test]
    fn near_equal_weights_share_equally() {
        let p = predict_max_expected(&u(1.0 - 1e-6, 1.0), 8).unwrap();
        assert!((p.scaled() - 1.0).abs() < 1e-5);
        let s = uniform_series_max(1.0_f64 - 1e-6, 1.0, 8, 1e-12).unwrap();
        assert!((s.scaled() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn limit_values_examples() {
        let l = limit_values(&u(0.0, 1.0));
        assert_eq!((l.max, l.min), (Bound::Finite(2.0), 0.0));
        let l = limit_values(&u(1.0, 3.0));
        assert_eq!((l.max, l.min), (Bound::Finite(1.5), 0.5));
        let l = limit_values(&exp1());
        assert_eq!((l.max, l.min), (Bound::Unbounded, 0.0));
    }

    #[test]
    fn rank_limit_examples() {
        for p in [0.1, 0.5, 0.9] {
            assert!((predict_rank_limit(&u(0.0, 1.0), p).unwrap() - 2.0 * p).abs() < 1e-14);
            assert!((predict_rank_limit(&exp1(), p).unwrap() + (-p).ln_1p()).abs() < 1e-13);
            let (a, b) = (1.0, 3.0);
            let want = (2.0 * (1.0 - p) * a + 2.0 * p * b) / (a + b);
            assert!((predict_rank_limit(&u(a, b), p).unwrap() - want).abs() < 1e-14);
        }
        assert!(predict_rank_limit(&exp1(), 1.0).is_err());
        assert!(predict_rank_limit(&exp1(), 0.0).is_err());
    }

    #[test]
    fn exp_formula_examples() {
        let f = exp_formulas::<f64>(1).unwrap();
        assert!((f.i_n - 0.75).abs() < 1e-15);
        let f = exp_formulas::<f64>(100).unwrap();
        assert!(f.min_integral >= 0.95e-4 && f.min_integral <= 1.0e-4, "{}", f.min_integral);
        assert!((f.min_asymptotic - 1e-4).abs() < 1e-20);
        assert_eq!(harmonic::<f64>(1) / 1.0, 1.0); // I_0 = H_1 / 1
    }

    #[test]
    fn exp_min_quadrature_matches_identity() {
        for n in [5, 20, 100] {
            let q = predict_min_expected(&exp1(), n).unwrap().value;
            let f = exp_formulas::<f64>(n).unwrap().min_integral;
            assert!((q - f).abs() < 1e-9 * f, "{n}: {q} {f}");
        }
        let f = exp_formulas::<f64>(100).unwrap().min_integral;
        assert!((predict_min_expected(&exp1(), 100).unwrap().value / 1e-4 - 1.0).abs() < 0.05);
        assert!(f < 1e-4);
    }

    #[test]
    fn exp_predictions_are_rate_invariant() {
        let e3 = WeightDistribution::exponential(3.0).unwrap();
        for n in [5, 50] {
            let a = predict_max_expected(&exp1(), n).unwrap().value;
            let b = predict_max_expected(&e3, n).unwrap().value;
            assert!((a - b).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn exp_max_bracketed_by_leading_parts() {
        // I_n + J_n is a lower bound (K_n ≥ 0) and the asymptotic form is close
        for n in [10, 50] {
            let v = predict_max_expected(&exp1(), n).unwrap().value;
            let lower = exp_formulas::<f64>(n).unwrap().i_n + jn_value::<f64>(n);
            assert!(v >= lower - 1e-12, "{n}: {v} {lower}");
            let nf = n as f64;
            let f = exp_formulas::<f64>(n).unwrap();
            assert!((nf * v - nf * f.max_asymptotic).abs() <= 2.0 * nf.ln().powi(2) / nf);
        }
    }

    #[test]
    fn jn_examples() {
        assert!((jn_value::<f64>(0) - 0.5).abs() < 1e-15);
        let n = 100.0_f64;
        let j = jn_value::<f64>(100);
        assert!(j > 0.0);
        assert!(n * n * j / n.ln().powi(2) <= 5.0);
        assert!((1..300).all(|k| jn_value::<f64>(k) > 0.0));
    }

    #[test]
    fn predictors_reject_tiny_n() {
        assert!(predict_max_expected(&exp1(), 1).is_err());
        assert!(uniform_series_max(0.5, 0.5, 5, 1e-12).is_err());
        assert!(uniform_series_max(0.0, 1.0, 5, 0.0).is_err());
    }

    #[test]
    fn series_rejected_for_exponential() {
        assert!(matches!(
            predict(&exp1(), 10, Target::Max, Method::Series),
            Err(Error::Config(_))
        ));
        let p = predict(&exp1(), 10, Target::Rank(0.5), Method::Auto).unwrap();
        assert_eq!(p.n, AgentCount::Infinite);
        assert!((p.scaled() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn quota_range_shrinks_with_n() {
        let (lo10, hi) = quota_range(&u(0.0, 1.0), 10, 0.05);
        let (lo1000, _) = quota_range(&u(0.0, 1.0), 1000, 0.05);
        assert!(lo1000 < lo10 && lo10 < hi);
        assert_eq!(hi, 0.95);
    }

    #[test]
    fn f32_predictor_runs() {
        let d = WeightDistribution::<f32>::uniform(0.0, 1.0).unwrap();
        let s = uniform_series_max(1.0f32, 3.0, 10, 1e-6).unwrap();
        assert!(s.value > 0.0);
        let q = predict_max_expected(&d, 10).unwrap();
        assert!((q.value - 0.2).abs() < 1e-5);
    }
}
