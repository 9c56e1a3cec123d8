//! The renewal sum `m(Q) = Σ_{i≥1} Pr[S_{i-1} < Q]` of i.i.d. positive steps
//! and its linear asymptote `Q/E[Y] + E[Y²]/(2E[Y]²)`.
//!
//! `m` is estimated by simulation, or evaluated deterministically on a lattice
//! when the residual is far below simulation noise.

use serde::Serialize;

use crate::distributions::{Bound, ConditionedLaw};
use crate::error::{Error, Result};
use crate::parallel::{run_blocks, DEFAULT_BLOCK_SIZE};
use crate::scalar::{CompensatedSum, Real};

/// Draw cap per replication.
pub const RUNAWAY_DRAWS: u64 = 10_000_000;

/// Lattice step of the deterministic evaluator.
pub const DEFAULT_LATTICE_STEP: f64 = 1e-4;

/// Step-law tail mass below which the lattice kernel is cut.
pub const KERNEL_TAIL_CUT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct RenewalEstimate<T> {
    pub mean: T,
    pub stderr: T,
    /// Zero for deterministic evaluations.
    pub reps: u64,
}

/// `Q/E[Y] + E[Y²]/(2E[Y]²)`.
pub fn renewal_asymptote<T: Real>(law: &ConditionedLaw<T>, q: T) -> T {
    let m1 = law.mean();
    let m2 = law.second_moment();
    q / m1 + m2 / (T::lit(2.0) * m1 * m1)
}

fn check_reps(reps: u64) -> Result<()> {
    if reps == 0 {
        return Err(Error::config("reps must be at least 1"));
    }
    Ok(())
}

/// Simulates `reps` paths and averages `count(path)`; `count` sees each
/// strict prefix sum `S_0 = 0, S_1, …` below `q` and the path stops at the
/// first `S_k ≥ q`.
fn simulate<T, F>(law: &ConditionedLaw<T>, q: T, reps: u64, seed: u64, count: F) -> Result<RenewalEstimate<T>>
where
    T: Real,
    F: Fn(T) -> bool + Sync,
{
    check_reps(reps)?;
    if !q.is_finite() {
        return Err(Error::domain("Q must be finite"));
    }
    let blocks = run_blocks(reps, DEFAULT_BLOCK_SIZE, seed, |_, len, rng| {
        let mut sum = 0u64;
        let mut sum_sq = 0u128;
        for _ in 0..len {
            let mut hits = 0u64;
            let mut s = T::zero();
            let mut draws = 0u64;
            while s < q {
                if count(s) {
                    hits += 1;
                }
                if draws == RUNAWAY_DRAWS {
                    return Err(Error::Runaway {
                        limit: RUNAWAY_DRAWS,
                        quota: q.to_f64_lossy(),
                    });
                }
                s = s + law.sample(rng);
                draws += 1;
            }
            sum += hits;
            sum_sq += u128::from(hits) * u128::from(hits);
        }
        Ok((sum, sum_sq))
    })?;
    let (sum, sum_sq) = blocks
        .into_iter()
        .fold((0u64, 0u128), |(a, b), (c, d)| (a + c, b + d));
    let n = T::from_u64(reps).expect("reps fits");
    let mean = T::from_u64(sum).expect("count fits") / n;
    let var = if reps > 1 {
        let centered = T::from_u128(sum_sq).expect("fits") - T::from_u64(sum).expect("fits") * mean;
        (centered / (n - T::one())).max(T::zero())
    } else {
        T::zero()
    };
    Ok(RenewalEstimate {
        mean,
        stderr: (var / n).sqrt(),
        reps,
    })
}

/// Monte Carlo estimate of `m(Q)`: `1 + #{k ≥ 1 : S_k < Q}` per path, 0 for `Q ≤ 0`.
pub fn renewal_mc<T: Real>(law: &ConditionedLaw<T>, q: T, reps: u64, seed: u64) -> Result<RenewalEstimate<T>> {
    simulate(law, q, reps, seed, |_| true)
}

/// Expected number of prefix sums `S_{i-1}` landing in `[Q − x, Q)`.
pub fn interval_count<T: Real>(
    law: &ConditionedLaw<T>,
    q: T,
    x: T,
    reps: u64,
    seed: u64,
) -> Result<RenewalEstimate<T>> {
    if !(x >= T::zero() && x <= q) {
        return Err(Error::domain(format!("interval length must satisfy 0 <= x <= Q, got x = {x}, Q = {q}")));
    }
    let lo = q - x;
    simulate(law, q, reps, seed, move |s| s >= lo)
}

/// Deterministic evaluation of `m(Q)` on the lattice `hℤ`.
///
/// The step law is replaced by masses `p_j = Pr[Y ∈ [(j−½)h, (j+½)h))` and
/// the lattice renewal measure solves `u_k (1 − p_0) = δ_{k0} + Σ_{j≥1} p_j u_{k−j}`.
/// `m` at a lattice point counts that point with weight ½ and is linearly
/// interpolated in between, which keeps the discretization error `O(h²)`.
/// The kernel is cut once its remaining tail mass is below [`KERNEL_TAIL_CUT`].
pub fn renewal_lattice<T: Real>(law: &ConditionedLaw<T>, grid: &[T], step: T) -> Result<Vec<T>> {
    if !(step > T::zero() && step.is_finite()) {
        return Err(Error::config("lattice step must be positive"));
    }
    let q_max = grid.iter().copied().fold(T::zero(), T::max);
    if grid.iter().any(|q| !q.is_finite()) {
        return Err(Error::domain("Q must be finite"));
    }
    let half = T::lit(0.5);
    let points = (q_max / step).to_f64_lossy().floor() as usize + 2;

    let mut kernel = Vec::new();
    let mut below = law.cdf(half * step);
    let p0 = below;
    if !(p0 < half) {
        return Err(Error::config(format!(
            "lattice step {step} is coarse relative to the step law"
        )));
    }
    let cut = T::lit(KERNEL_TAIL_CUT);
    let top = match law.support_max() {
        Bound::Finite(b) => Some(b),
        Bound::Unbounded => None,
    };
    kernel.push(T::zero());
    for j in 1..points {
        let edge = (T::from_usize_lossy(j) + half) * step;
        let next = law.cdf(edge);
        kernel.push((next - below).max(T::zero()));
        below = next;
        let exhausted = top.is_some_and(|b| edge >= b);
        if exhausted || T::one() - below < cut {
            break;
        }
    }

    let scale = T::one() / (T::one() - p0);
    let mut u = vec![T::zero(); points];
    u[0] = scale;
    for k in 1..points {
        let width = (kernel.len() - 1).min(k);
        let mut acc = CompensatedSum::new();
        for j in 1..=width {
            acc.add(kernel[j] * u[k - j]);
        }
        u[k] = acc.value() * scale;
    }

    // cumulative[k] = Σ_{i<k} u_i + u_k/2
    let mut cumulative = Vec::with_capacity(points);
    let mut running = CompensatedSum::new();
    for &uk in &u {
        cumulative.push(running.value() + half * uk);
        running.add(uk);
    }

    Ok(grid
        .iter()
        .map(|&q| {
            if q <= T::zero() {
                return T::zero();
            }
            let pos = q / step;
            let k = pos.floor();
            let frac = pos - k;
            let k = k.to_f64_lossy() as usize;
            cumulative[k] + frac * (cumulative[k + 1] - cumulative[k])
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RenewalMethod<T> {
    MonteCarlo { reps: u64, seed: u64 },
    Lattice { step: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct RenewalRow<T> {
    pub q: T,
    pub m: RenewalEstimate<T>,
    pub asymptote: T,
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct RenewalSummary<T> {
    pub law: String,
    pub rows: Vec<RenewalRow<T>>,
}

/// `m`, its asymptote and the residual over a grid of `Q`.
pub fn renewal_summary<T: Real>(
    law: &ConditionedLaw<T>,
    grid: &[T],
    method: RenewalMethod<T>,
) -> Result<RenewalSummary<T>> {
    let estimates = match method {
        RenewalMethod::MonteCarlo { reps, seed } => grid
            .iter()
            .map(|&q| renewal_mc(law, q, reps, seed))
            .collect::<Result<Vec<_>>>()?,
        RenewalMethod::Lattice { step } => renewal_lattice(law, grid, step)?
            .into_iter()
            .map(|mean| RenewalEstimate {
                mean,
                stderr: T::zero(),
                reps: 0,
            })
            .collect(),
    };
    let rows = grid
        .iter()
        .zip(estimates)
        .map(|(&q, m)| {
            let asymptote = if q <= T::zero() {
                T::zero()
            } else {
                renewal_asymptote(law, q)
            };
            RenewalRow {
                q,
                m,
                asymptote,
                residual: m.mean - asymptote,
            }
        })
        .collect();
    Ok(RenewalSummary {
        law: law.to_string(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    /// Resolvable residuals shrink with `Q`.
    Decaying,
    /// Fewer than two residuals exceed five standard errors.
    NoiseDominated,
    /// Resolvable residuals do not shrink.
    NotDecaying,
}

impl DecayVerdict {
    pub fn is_consistent(self) -> bool {
        !matches!(self, DecayVerdict::NotDecaying)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct DecayReport<T> {
    pub summary: RenewalSummary<T>,
    /// Which rows have `|ε| > 5 · stderr`.
    pub resolvable: Vec<bool>,
    /// Least-squares slope of `ln|ε|` against `Q` over resolvable rows.
    pub slope: Option<T>,
    pub verdict: DecayVerdict,
}

/// Fits the decay rate of `|m(Q) − asymptote(Q)|` over an increasing grid.
pub fn residual_decay_report<T: Real>(
    law: &ConditionedLaw<T>,
    grid: &[T],
    method: RenewalMethod<T>,
) -> Result<DecayReport<T>> {
    if grid.len() < 4 {
        return Err(Error::config("residual decay needs at least 4 grid points"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config("Q grid must be strictly increasing"));
    }
    let summary = renewal_summary(law, grid, method)?;
    let five = T::lit(5.0);
    let resolvable: Vec<bool> = summary
        .rows
        .iter()
        .map(|r| r.residual.abs() > five * r.m.stderr && r.residual != T::zero())
        .collect();
    let points: Vec<(T, T)> = summary
        .rows
        .iter()
        .zip(&resolvable)
        .filter(|(_, &ok)| ok)
        .map(|(r, _)| (r.q, r.residual.abs().ln()))
        .collect();
    let slope = least_squares_slope(&points);
    let verdict = match slope {
        None => DecayVerdict::NoiseDominated,
        Some(s) if s < T::zero() => DecayVerdict::Decaying,
        Some(_) => DecayVerdict::NotDecaying,
    };
    Ok(DecayReport {
        summary,
        resolvable,
        slope,
        verdict,
    })
}

fn least_squares_slope<T: Real>(points: &[(T, T)]) -> Option<T> {
    if points.len() < 2 {
        return None;
    }
    let k = T::from_usize_lossy(points.len());
    let mx = points.iter().map(|p| p.0).sum::<T>() / k;
    let my = points.iter().map(|p| p.1).sum::<T>() / k;
    let sxy: T = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}
