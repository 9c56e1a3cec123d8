//! Monte Carlo estimation of expected sorted-rank Shapley values.
//!
//! Each replication draws `n` i.i.d. weights, optionally normalizes them to
//! unit sum, sorts them and then either
//!
//! * draws one uniform order of the ranks and credits the pivotal rank at
//!   every quota of the grid (`OnePermPerGame`), or
//! * computes the exact Shapley profile of the sampled game at every quota
//!   (`ExactPerGame`, small `n` only).
//!
//! Weights and orders come from separate generator streams, so the two
//! estimators see identical games for the same seed.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::distributions::WeightDistribution;
use crate::error::{Error, Result};
use crate::parallel::{block_rng, run_blocks, DEFAULT_BLOCK_SIZE};
use crate::scalar::Real;
use crate::wvg::{shapley_exact_subset, Game, MAX_PERMUTATION_AGENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightModel {
    /// Raw i.i.d. weights; quotas are absolute.
    Natural,
    /// Weights divided by their sum; quotas are fractions in `(0, 1)`.
    Normalized,
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightModel::Natural => "natural",
            WeightModel::Normalized => "normalized",
        })
    }
}

impl FromStr for WeightModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" => Ok(WeightModel::Natural),
            "normalized" => Ok(WeightModel::Normalized),
            other => Err(Error::config(format!(
                "model `{other}`: expected natural or normalized"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    OnePermPerGame,
    ExactPerGame,
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_perm" | "one_perm_per_game" => Ok(Estimator::OnePermPerGame),
            "exact" | "exact_per_game" => Ok(Estimator::ExactPerGame),
            other => Err(Error::config(format!(
                "estimator `{other}`: expected one_perm or exact"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ExperimentConfig<T> {
    pub dist: WeightDistribution<T>,
    pub n: usize,
    pub model: WeightModel,
    /// Fractions of total weight (normalized model) or absolute quotas (natural).
    pub quota_grid: Vec<T>,
    pub reps: u64,
    pub seed: u64,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default = "default_block_size")]
    pub block_size: u64,
}

fn default_block_size() -> u64 {
    DEFAULT_BLOCK_SIZE
}

impl<T: Real> ExperimentConfig<T> {
    pub fn new(
        dist: WeightDistribution<T>,
        n: usize,
        model: WeightModel,
        quota_grid: Vec<T>,
        reps: u64,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            dist,
            n,
            model,
            quota_grid,
            reps,
            seed,
            estimator: Estimator::OnePermPerGame,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n must be at least 1"));
        }
        if self.reps == 0 {
            return Err(Error::config("reps must be at least 1"));
        }
        if self.block_size == 0 {
            return Err(Error::config("block size must be at least 1"));
        }
        if self.quota_grid.is_empty() {
            return Err(Error::config("quota grid is empty"));
        }
        if self.quota_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("quota grid must be strictly increasing"));
        }
        for &q in &self.quota_grid {
            let ok = match self.model {
                WeightModel::Normalized => q > T::zero() && q < T::one(),
                WeightModel::Natural => q > T::zero() && q.is_finite(),
            };
            if !ok {
                return Err(Error::config(format!(
                    "quota {q} outside the valid range for the {} model",
                    self.model
                )));
            }
        }
        if self.estimator == Estimator::ExactPerGame && self.n > MAX_PERMUTATION_AGENTS {
            return Err(Error::config(format!(
                "exact per-game estimation supports n <= {MAX_PERMUTATION_AGENTS}, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct RankEstimate<T> {
    pub mean: T,
    pub stderr: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct QuotaEstimates<T> {
    pub quota: T,
    /// Indexed by rank, lightest first.
    pub ranks: Vec<RankEstimate<T>>,
    /// Replications in which no agent was pivotal.
    pub improper: u64,
}

impl<T: Real> QuotaEstimates<T> {
    pub fn max_rank(&self) -> RankEstimate<T> {
        *self.ranks.last().expect("n >= 1")
    }

    pub fn min_rank(&self) -> RankEstimate<T> {
        self.ranks[0]
    }

    pub fn rank_sum(&self) -> T {
        self.ranks.iter().map(|r| r.mean).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ExperimentResult<T> {
    pub config: ExperimentConfig<T>,
    pub full_profile: bool,
    pub estimates: Vec<QuotaEstimates<T>>,
}

/// One line of the `quota,rank,mean,stderr,reps,n,model,dist,seed` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub quota: f64,
    pub rank: usize,
    pub mean: f64,
    pub stderr: f64,
    pub reps: u64,
    pub n: usize,
    pub model: WeightModel,
    pub dist: String,
    pub seed: u64,
}

impl<T: Real> ExperimentResult<T> {
    /// Rows for every rank when `full_profile`, otherwise for ranks 1 and n.
    pub fn rows(&self) -> Vec<ResultRow> {
        let n = self.config.n;
        let ranks: Vec<usize> = if self.full_profile || n == 1 {
            (0..n).collect()
        } else {
            vec![0, n - 1]
        };
        let dist = self.config.dist.to_string();
        self.estimates
            .iter()
            .flat_map(|q| {
                let dist = dist.clone();
                ranks.iter().map(move |&r| ResultRow {
                    quota: q.quota.to_f64_lossy(),
                    rank: r + 1,
                    mean: q.ranks[r].mean.to_f64_lossy(),
                    stderr: q.ranks[r].stderr.to_f64_lossy(),
                    reps: self.config.reps,
                    n,
                    model: self.config.model,
                    dist: dist.clone(),
                    seed: self.config.seed,
                })
            })
            .collect()
    }
}

/// Walks `permutation` (a bijection on ranks, 0-based) accumulating weight
/// and returns the first rank `r` with `prefix < q ≤ prefix + w_r`.
pub fn pivotal_rank<T: Real>(sorted_weights: &[T], quota: T, permutation: &[usize]) -> Option<usize> {
    let mut prefix = T::zero();
    for &r in permutation {
        let w = sorted_weights[r];
        if prefix < quota && prefix + w >= quota {
            return Some(r);
        }
        prefix = prefix + w;
    }
    None
}

/// Extreme ranks over the quota grid.
pub fn run_experiment<T: Real>(cfg: &ExperimentConfig<T>) -> Result<ExperimentResult<T>> {
    run(cfg, false)
}

/// Every rank over the quota grid.
pub fn profile_sweep<T: Real>(cfg: &ExperimentConfig<T>) -> Result<ExperimentResult<T>> {
    run(cfg, true)
}

fn draw_game<T: Real, R: rand::Rng>(cfg: &ExperimentConfig<T>, rng: &mut R, w: &mut [T]) {
    for x in w.iter_mut() {
        *x = cfg.dist.sample(rng);
    }
    if cfg.model == WeightModel::Normalized {
        let total: T = w.iter().copied().sum();
        for x in w.iter_mut() {
            *x = *x / total;
        }
    }
    w.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite weights"));
}

enum BlockTally<T> {
    Counts { counts: Vec<u64>, improper: Vec<u64> },
    Moments { sum: Vec<T>, sum_sq: Vec<T>, improper: Vec<u64> },
}

fn run<T: Real>(cfg: &ExperimentConfig<T>, full_profile: bool) -> Result<ExperimentResult<T>> {
    cfg.validate()?;
    let n = cfg.n;
    let grid = &cfg.quota_grid;
    let cells = grid.len() * n;

    let blocks = run_blocks(cfg.reps, cfg.block_size, cfg.seed, |block, len, _| {
        // Even streams carry weights, odd streams carry orders.
        let mut weight_rng = block_rng(cfg.seed, 2 * block);
        let mut order_rng = block_rng(cfg.seed, 2 * block + 1);
        let mut w = vec![T::zero(); n];
        let mut improper = vec![0u64; grid.len()];
        match cfg.estimator {
            Estimator::OnePermPerGame => {
                let mut counts = vec![0u64; cells];
                let mut order: Vec<usize> = (0..n).collect();
                let mut cumulative = vec![T::zero(); n];
                for _ in 0..len {
                    draw_game(cfg, &mut weight_rng, &mut w);
                    order.shuffle(&mut order_rng);
                    let mut acc = T::zero();
                    for (c, &r) in cumulative.iter_mut().zip(&order) {
                        acc = acc + w[r];
                        *c = acc;
                    }
                    for (qi, &q) in grid.iter().enumerate() {
                        // First position whose running total reaches q.
                        let j = cumulative.partition_point(|&c| c < q);
                        if j == n {
                            improper[qi] += 1;
                        } else {
                            counts[qi * n + order[j]] += 1;
                        }
                    }
                }
                Ok(BlockTally::Counts { counts, improper })
            }
            Estimator::ExactPerGame => {
                let mut sum = vec![T::zero(); cells];
                let mut sum_sq = vec![T::zero(); cells];
                for _ in 0..len {
                    draw_game(cfg, &mut weight_rng, &mut w);
                    for (qi, &q) in grid.iter().enumerate() {
                        let game = Game::new(w.clone(), q)?;
                        if !game.is_proper() {
                            improper[qi] += 1;
                        }
                        let profile = shapley_exact_subset(&game)?;
                        for (r, &v) in profile.values.iter().enumerate() {
                            sum[qi * n + r] = sum[qi * n + r] + v;
                            sum_sq[qi * n + r] = sum_sq[qi * n + r] + v * v;
                        }
                    }
                }
                Ok(BlockTally::Moments {
                    sum,
                    sum_sq,
                    improper,
                })
            }
        }
    })?;

    let reps = T::from_u64(cfg.reps).expect("reps fits");
    let mut improper = vec![0u64; grid.len()];
    let mut cell_stats: Vec<RankEstimate<T>> = Vec::with_capacity(cells);
    match cfg.estimator {
        Estimator::OnePermPerGame => {
            let mut counts = vec![0u64; cells];
            for b in &blocks {
                if let BlockTally::Counts { counts: c, improper: i } = b {
                    counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
                    improper.iter_mut().zip(i).for_each(|(a, b)| *a += b);
                }
            }
            for &c in &counts {
                let p = T::from_u64(c).expect("count fits") / reps;
                cell_stats.push(RankEstimate {
                    mean: p,
                    stderr: (p * (T::one() - p) / reps).max(T::zero()).sqrt(),
                });
            }
        }
        Estimator::ExactPerGame => {
            let mut sum = vec![T::zero(); cells];
            let mut sum_sq = vec![T::zero(); cells];
            for b in &blocks {
                if let BlockTally::Moments {
                    sum: s,
                    sum_sq: s2,
                    improper: i,
                } = b
                {
                    sum.iter_mut().zip(s).for_each(|(a, b)| *a = *a + *b);
                    sum_sq.iter_mut().zip(s2).for_each(|(a, b)| *a = *a + *b);
                    improper.iter_mut().zip(i).for_each(|(a, b)| *a += b);
                }
            }
            for (s, s2) in sum.iter().zip(&sum_sq) {
                let mean = *s / reps;
                let var = if cfg.reps > 1 {
                    ((*s2 - *s * mean) / (reps - T::one())).max(T::zero())
                } else {
                    T::zero()
                };
                cell_stats.push(RankEstimate {
                    mean,
                    stderr: (var / reps).sqrt(),
                });
            }
        }
    }

    let estimates = grid
        .iter()
        .enumerate()
        .map(|(qi, &quota)| QuotaEstimates {
            quota,
            ranks: cell_stats[qi * n..(qi + 1) * n].to_vec(),
            improper: improper[qi],
        })
        .collect();

    Ok(ExperimentResult {
        config: cfg.clone(),
        full_profile,
        estimates,
    })
}
