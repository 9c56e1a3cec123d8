//! Weight laws, their truncations and extreme order statistics.
//!
//! Two concrete laws are supported: `U(a, b)` with `0 ≤ a < b` and
//! `Exp(rate)`. Both have densities with exponential decay and are
//! piecewise differentiable and monotone on their support.
//!
//! Truncated laws (`X_{≤x}`, `X_{≥x}`) and the mixture `X_{p|x}` are
//! represented by [`ConditionedLaw`]; sampling is inverse-CDF throughout so
//! that the cost of a draw is independent of how much mass was cut away.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::lower_gamma_regularized;

/// Upper end of a support: either a finite value or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound<T> {
    Finite(T),
    Unbounded,
}

impl<T: Real> Bound<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Bound::Finite(x) => Some(x),
            Bound::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Bound::Unbounded)
    }
}

impl<T: Real> fmt::Display for Bound<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(x) => write!(f, "{x}"),
            Bound::Unbounded => f.write_str("inf"),
        }
    }
}

/// Which extreme order statistic of `n` i.i.d. copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extreme {
    Max,
    Min,
}

/// A continuous, non-negative weight law with exponential decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDistribution<T> {
    Uniform { a: T, b: T },
    Exponential { rate: T },
}

impl<T: Real> WeightDistribution<T> {
    pub fn uniform(a: T, b: T) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a < T::zero() || !(b > a) {
            return Err(Error::domain(format!(
                "uniform law needs 0 <= a < b, got a = {a}, b = {b}"
            )));
        }
        Ok(WeightDistribution::Uniform { a, b })
    }

    pub fn exponential(rate: T) -> Result<Self> {
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(Error::domain(format!(
                "exponential law needs a positive rate, got {rate}"
            )));
        }
        Ok(WeightDistribution::Exponential { rate })
    }

    /// χ_min, the essential infimum of the support.
    pub fn support_min(&self) -> T {
        match *self {
            WeightDistribution::Uniform { a, .. } => a,
            WeightDistribution::Exponential { .. } => T::zero(),
        }
    }

    /// χ_max, the essential supremum of the support.
    pub fn support_max(&self) -> Bound<T> {
        match *self {
            WeightDistribution::Uniform { b, .. } => Bound::Finite(b),
            WeightDistribution::Exponential { .. } => Bound::Unbounded,
        }
    }

    pub fn pdf(&self, t: T) -> T {
        match *self {
            WeightDistribution::Uniform { a, b } => {
                if t < a || t > b {
                    T::zero()
                } else {
                    T::one() / (b - a)
                }
            }
            WeightDistribution::Exponential { rate } => {
                if t < T::zero() {
                    T::zero()
                } else {
                    rate * (-rate * t).exp()
                }
            }
        }
    }

    pub fn cdf(&self, t: T) -> T {
        match *self {
            WeightDistribution::Uniform { a, b } => {
                if t <= a {
                    T::zero()
                } else if t >= b {
                    T::one()
                } else {
                    (t - a) / (b - a)
                }
            }
            WeightDistribution::Exponential { rate } => {
                if t <= T::zero() {
                    T::zero()
                } else {
                    -(-rate * t).exp_m1()
                }
            }
        }
    }

    /// `Pr[X ≥ t]`.
    pub fn survival(&self, t: T) -> T {
        match *self {
            WeightDistribution::Uniform { a, b } => {
                if t <= a {
                    T::one()
                } else if t >= b {
                    T::zero()
                } else {
                    (b - t) / (b - a)
                }
            }
            WeightDistribution::Exponential { rate } => {
                if t <= T::zero() {
                    T::one()
                } else {
                    (-rate * t).exp()
                }
            }
        }
    }

    /// `F⁻¹(u)` for `u ∈ [0, 1]`.
    pub fn quantile(&self, u: T) -> T {
        match *self {
            WeightDistribution::Uniform { a, b } => a + u * (b - a),
            WeightDistribution::Exponential { rate } => -(-u).ln_1p() / rate,
        }
    }

    /// The `t` with `Pr[X ≥ t] = s`; accurate for `s` near zero.
    pub fn inverse_survival(&self, s: T) -> T {
        match *self {
            WeightDistribution::Uniform { a, b } => b - s * (b - a),
            WeightDistribution::Exponential { rate } => -s.ln() / rate,
        }
    }

    pub fn mean(&self) -> T {
        match *self {
            WeightDistribution::Uniform { a, b } => (a + b) * T::lit(0.5),
            WeightDistribution::Exponential { rate } => T::one() / rate,
        }
    }

    pub fn second_moment(&self) -> T {
        match *self {
            WeightDistribution::Uniform { a, b } => (a * a + a * b + b * b) / T::lit(3.0),
            WeightDistribution::Exponential { rate } => T::lit(2.0) / (rate * rate),
        }
    }

    fn check_below(&self, x: T) -> Result<()> {
        if x.is_nan() || x <= self.support_min() {
            return Err(Error::domain(format!(
                "conditioning below x = {x} leaves no mass (support starts at {})",
                self.support_min()
            )));
        }
        Ok(())
    }

    fn check_above(&self, x: T) -> Result<()> {
        if x.is_nan() {
            return Err(Error::domain("conditioning point is NaN"));
        }
        if let Bound::Finite(b) = self.support_max() {
            if x >= b {
                return Err(Error::domain(format!(
                    "conditioning above x = {x} leaves no mass (support ends at {b})"
                )));
            }
        }
        Ok(())
    }

    /// `E[X | X ≤ x]`.
    pub fn mean_below(&self, x: T) -> Result<T> {
        self.check_below(x)?;
        Ok(match *self {
            WeightDistribution::Uniform { a, b } => (a + x.min(b)) * T::lit(0.5),
            WeightDistribution::Exponential { rate } => {
                let y = rate * x;
                lower_gamma_regularized(2, y) / lower_gamma_regularized(1, y) / rate
            }
        })
    }

    /// `E[X | X ≥ x]`.
    pub fn mean_above(&self, x: T) -> Result<T> {
        self.check_above(x)?;
        Ok(match *self {
            WeightDistribution::Uniform { a, b } => (b + x.max(a)) * T::lit(0.5),
            WeightDistribution::Exponential { rate } => x.max(T::zero()) + T::one() / rate,
        })
    }

    /// `E[X² | X ≤ x]`.
    pub fn second_moment_below(&self, x: T) -> Result<T> {
        self.check_below(x)?;
        Ok(match *self {
            WeightDistribution::Uniform { a, b } => {
                let x = x.min(b);
                (a * a + a * x + x * x) / T::lit(3.0)
            }
            WeightDistribution::Exponential { rate } => {
                let y = rate * x;
                T::lit(2.0) * lower_gamma_regularized(3, y)
                    / lower_gamma_regularized(1, y)
                    / (rate * rate)
            }
        })
    }

    /// `E[X² | X ≥ x]`.
    pub fn second_moment_above(&self, x: T) -> Result<T> {
        self.check_above(x)?;
        Ok(match *self {
            WeightDistribution::Uniform { a, b } => {
                let x = x.max(a);
                (x * x + x * b + b * b) / T::lit(3.0)
            }
            WeightDistribution::Exponential { rate } => {
                // Memorylessness: X_{≥x} = x + Exp(rate).
                let x = x.max(T::zero());
                let m = T::one() / rate;
                x * x + T::lit(2.0) * x * m + T::lit(2.0) * m * m
            }
        })
    }

    /// `x / E[X_{≤x}]`, with its limit substituted at `x = χ_min`.
    ///
    /// The limit is 2 whenever the density is positive and continuous at
    /// `χ_min = 0` (both built-in laws with zero infimum) and 1 when
    /// `χ_min > 0`.
    pub fn ratio_to_mean_below(&self, x: T) -> T {
        let lo = self.support_min();
        if x <= lo {
            return if lo > T::zero() { T::one() } else { T::lit(2.0) };
        }
        x / self.mean_below(x).expect("x above support minimum")
    }

    /// `x / E[X_{≥x}]`, with the limit 1 substituted at a finite `χ_max`.
    pub fn ratio_to_mean_above(&self, x: T) -> T {
        if let Bound::Finite(b) = self.support_max() {
            if x >= b {
                return T::one();
            }
        }
        x / self.mean_above(x).expect("x below support maximum")
    }

    /// Density of `X^n_max` or `X^n_min`.
    pub fn extreme_order_density(&self, n: usize, which: Extreme) -> Result<OrderStatistic<T>> {
        if n == 0 {
            return Err(Error::domain("order statistic needs n >= 1"));
        }
        Ok(OrderStatistic {
            base: *self,
            n,
            which,
        })
    }

    /// Inverse-CDF draw from the unconditioned law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile(unit_draw(rng))
    }
}

/// A uniform variate in `[0, 1)` in the working precision.
#[inline]
pub(crate) fn unit_draw<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let u = T::lit(rng.random::<f64>());
    // f32 rounding can land on 1.0.
    if u >= T::one() {
        T::one() - T::epsilon()
    } else {
        u
    }
}

impl<T: Real> fmt::Display for WeightDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightDistribution::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
            WeightDistribution::Exponential { rate } => write!(f, "exp:{rate}"),
        }
    }
}

fn parse_real<T: Real>(s: &str, what: &str) -> Result<T> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("{what}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::config(format!("{what}: `{s}` is not finite")));
    }
    T::from_f64(v).ok_or_else(|| Error::config(format!("{what}: `{s}` out of range")))
}

impl<T: Real> FromStr for WeightDistribution<T> {
    type Err = Error;

    /// Parses `uniform:a,b` or `exp:rate`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = s
            .split_once(':')
            .ok_or_else(|| Error::config(format!("distribution `{s}`: expected `kind:params`")))?;
        let make = |r: Result<Self>| r.map_err(|e| Error::config(format!("distribution `{s}`: {e}")));
        match kind.trim() {
            "uniform" => {
                let parts: Vec<&str> = params.split(',').collect();
                if parts.len() != 2 {
                    return Err(Error::config(format!(
                        "distribution `{s}`: uniform needs exactly two parameters"
                    )));
                }
                let a = parse_real(parts[0], "uniform lower bound")?;
                let b = parse_real(parts[1], "uniform upper bound")?;
                make(Self::uniform(a, b))
            }
            "exp" => {
                if params.contains(',') {
                    return Err(Error::config(format!(
                        "distribution `{s}`: exp takes a single rate"
                    )));
                }
                make(Self::exponential(parse_real(params, "exponential rate")?))
            }
            other => Err(Error::config(format!(
                "distribution `{s}`: unknown kind `{other}` (expected uniform or exp)"
            ))),
        }
    }
}

impl<T: Real> Serialize for WeightDistribution<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de, T: Real> Deserialize<'de> for WeightDistribution<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `X^n_max` or `X^n_min` of a base law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStatistic<T> {
    pub base: WeightDistribution<T>,
    pub n: usize,
    pub which: Extreme,
}

impl<T: Real> OrderStatistic<T> {
    /// `n F^{n-1} f` for the maximum, `n (1-F)^{n-1} f` for the minimum.
    pub fn pdf(&self, t: T) -> T {
        let f = self.base.pdf(t);
        if f == T::zero() {
            return T::zero();
        }
        let n = T::from_usize_lossy(self.n);
        let p = match self.which {
            Extreme::Max => self.base.cdf(t),
            Extreme::Min => self.base.survival(t),
        };
        n * p.powi(self.n as i32 - 1) * f
    }

    pub fn cdf(&self, t: T) -> T {
        match self.which {
            Extreme::Max => self.base.cdf(t).powi(self.n as i32),
            Extreme::Min => T::one() - self.base.survival(t).powi(self.n as i32),
        }
    }

    /// Quantile of the order statistic at level `s ∈ (0, 1)`.
    ///
    /// `X^n_max = F⁻¹(s^{1/n})` and `X^n_min = S⁻¹((1-s)^{1/n})`; both go
    /// through the inverse survival function to keep precision in the tails.
    pub fn quantile(&self, s: T) -> T {
        let n = T::from_usize_lossy(self.n);
        match self.which {
            Extreme::Max => self.base.inverse_survival(-(s.ln() / n).exp_m1()),
            Extreme::Min => self.base.inverse_survival(((-s).ln_1p() / n).exp()),
        }
    }
}

/// How a base law is conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning<T> {
    /// The base law itself.
    Unconditioned,
    /// `X_{≤x}`.
    Below(T),
    /// `X_{≥x}`.
    Above(T),
    /// `X_{p|x}`: `X_{≤x}` with probability `p`, otherwise `X_{≥x}`.
    Mixture { p: T, x: T },
}

impl<T: Real> FromStr for Conditioning<T> {
    type Err = Error;

    /// Parses `none`, `below:x`, `above:x` or `mixture:p,x`.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "none" {
            return Ok(Conditioning::Unconditioned);
        }
        let (kind, params) = s
            .split_once(':')
            .ok_or_else(|| Error::config(format!("conditioning `{s}`: expected `kind:value`")))?;
        match kind.trim() {
            "below" => Ok(Conditioning::Below(parse_real(params, "conditioning point")?)),
            "above" => Ok(Conditioning::Above(parse_real(params, "conditioning point")?)),
            "mixture" => {
                let (p, x) = params.split_once(',').ok_or_else(|| {
                    Error::config(format!("conditioning `{s}`: mixture needs `p,x`"))
                })?;
                Ok(Conditioning::Mixture {
                    p: parse_real(p, "mixture weight")?,
                    x: parse_real(x, "conditioning point")?,
                })
            }
            other => Err(Error::config(format!(
                "conditioning `{s}`: unknown kind `{other}`"
            ))),
        }
    }
}

impl<T: Real> fmt::Display for Conditioning<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conditioning::Unconditioned => f.write_str("none"),
            Conditioning::Below(x) => write!(f, "below:{x}"),
            Conditioning::Above(x) => write!(f, "above:{x}"),
            Conditioning::Mixture { p, x } => write!(f, "mixture:{p},{x}"),
        }
    }
}

/// A base law together with a validated conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ConditionedLaw<T> {
    base: WeightDistribution<T>,
    mode: Conditioning<T>,
}

impl<T: Real> From<WeightDistribution<T>> for ConditionedLaw<T> {
    fn from(base: WeightDistribution<T>) -> Self {
        ConditionedLaw {
            base,
            mode: Conditioning::Unconditioned,
        }
    }
}

impl<T: Real> ConditionedLaw<T> {
    pub fn new(base: WeightDistribution<T>, mode: Conditioning<T>) -> Result<Self> {
        match mode {
            Conditioning::Unconditioned => {}
            Conditioning::Below(x) => base.check_below(x)?,
            Conditioning::Above(x) => base.check_above(x)?,
            Conditioning::Mixture { p, x } => {
                if !(p >= T::zero() && p <= T::one()) {
                    return Err(Error::domain(format!("mixture weight {p} outside [0, 1]")));
                }
                base.check_below(x)?;
                base.check_above(x)?;
            }
        }
        Ok(ConditionedLaw { base, mode })
    }

    pub fn below(base: WeightDistribution<T>, x: T) -> Result<Self> {
        Self::new(base, Conditioning::Below(x))
    }

    pub fn above(base: WeightDistribution<T>, x: T) -> Result<Self> {
        Self::new(base, Conditioning::Above(x))
    }

    pub fn mixture(base: WeightDistribution<T>, p: T, x: T) -> Result<Self> {
        Self::new(base, Conditioning::Mixture { p, x })
    }

    pub fn base(&self) -> &WeightDistribution<T> {
        &self.base
    }

    pub fn mode(&self) -> Conditioning<T> {
        self.mode
    }

    fn below_pdf(&self, x: T, t: T) -> T {
        if t > x {
            T::zero()
        } else {
            self.base.pdf(t) / self.base.cdf(x)
        }
    }

    fn above_pdf(&self, x: T, t: T) -> T {
        if t < x {
            return T::zero();
        }
        match self.base {
            WeightDistribution::Exponential { rate } => rate * (-rate * (t - x.max(T::zero()))).exp(),
            _ => self.base.pdf(t) / self.base.survival(x),
        }
    }

    pub fn pdf(&self, t: T) -> T {
        match self.mode {
            Conditioning::Unconditioned => self.base.pdf(t),
            Conditioning::Below(x) => self.below_pdf(x, t),
            Conditioning::Above(x) => self.above_pdf(x, t),
            Conditioning::Mixture { p, x } => {
                p * self.below_pdf(x, t) + (T::one() - p) * self.above_pdf(x, t)
            }
        }
    }

    fn below_cdf(&self, x: T, t: T) -> T {
        (self.base.cdf(t.min(x)) / self.base.cdf(x)).min(T::one())
    }

    fn above_cdf(&self, x: T, t: T) -> T {
        if t <= x {
            return T::zero();
        }
        match self.base {
            WeightDistribution::Exponential { rate } => -(-rate * (t - x.max(T::zero()))).exp_m1(),
            _ => T::one() - self.base.survival(t) / self.base.survival(x),
        }
    }

    pub fn cdf(&self, t: T) -> T {
        match self.mode {
            Conditioning::Unconditioned => self.base.cdf(t),
            Conditioning::Below(x) => self.below_cdf(x, t),
            Conditioning::Above(x) => self.above_cdf(x, t),
            Conditioning::Mixture { p, x } => {
                p * self.below_cdf(x, t) + (T::one() - p) * self.above_cdf(x, t)
            }
        }
    }

    pub fn mean(&self) -> T {
        let d = &self.base;
        match self.mode {
            Conditioning::Unconditioned => d.mean(),
            Conditioning::Below(x) => d.mean_below(x).expect("validated"),
            Conditioning::Above(x) => d.mean_above(x).expect("validated"),
            Conditioning::Mixture { p, x } => {
                p * d.mean_below(x).expect("validated")
                    + (T::one() - p) * d.mean_above(x).expect("validated")
            }
        }
    }

    /// `E[Y²]`, combining the closed-form conditional moments linearly for mixtures.
    pub fn second_moment(&self) -> T {
        let d = &self.base;
        match self.mode {
            Conditioning::Unconditioned => d.second_moment(),
            Conditioning::Below(x) => d.second_moment_below(x).expect("validated"),
            Conditioning::Above(x) => d.second_moment_above(x).expect("validated"),
            Conditioning::Mixture { p, x } => {
                p * d.second_moment_below(x).expect("validated")
                    + (T::one() - p) * d.second_moment_above(x).expect("validated")
            }
        }
    }

    /// Lower end of the conditioned support.
    pub fn support_min(&self) -> T {
        match self.mode {
            Conditioning::Above(x) => x.max(self.base.support_min()),
            _ => self.base.support_min(),
        }
    }

    /// Upper end of the conditioned support.
    pub fn support_max(&self) -> Bound<T> {
        match (self.mode, self.base.support_max()) {
            (Conditioning::Below(x), Bound::Finite(b)) => Bound::Finite(x.min(b)),
            (Conditioning::Below(x), Bound::Unbounded) => Bound::Finite(x),
            (_, b) => b,
        }
    }

    fn below_quantile(&self, x: T, u: T) -> T {
        match self.base {
            WeightDistribution::Uniform { a, b } => a + u * (x.min(b) - a),
            WeightDistribution::Exponential { .. } => self.base.quantile(u * self.base.cdf(x)),
        }
    }

    fn above_quantile(&self, x: T, u: T) -> T {
        match self.base {
            WeightDistribution::Uniform { a, b } => {
                let x = x.max(a);
                x + u * (b - x)
            }
            WeightDistribution::Exponential { .. } => x.max(T::zero()) + self.base.quantile(u),
        }
    }

    /// Truncated inverse CDF at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: T) -> T {
        match self.mode {
            Conditioning::Unconditioned => self.base.quantile(u),
            Conditioning::Below(x) => self.below_quantile(x, u),
            Conditioning::Above(x) => self.above_quantile(x, u),
            Conditioning::Mixture { p, x } => {
                if u < p {
                    self.below_quantile(x, u / p)
                } else {
                    self.above_quantile(x, (u - p) / (T::one() - p))
                }
            }
        }
    }

    /// One draw via the truncated inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile(unit_draw(rng))
    }
}

impl<T: Real> fmt::Display for ConditionedLaw<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            Conditioning::Unconditioned => write!(f, "{}", self.base),
            mode => write!(f, "{}|{}", self.base, mode),
        }
    }
}
