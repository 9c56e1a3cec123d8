//! Weighted voting games and their Shapley–Shubik values.
//!
//! Agent `i` is pivotal for a predecessor set of weight `w(S)` iff
//! `w(S) < q ≤ w(S) + w_i`. The exact enumerators here are the ground truth
//! that every sampled and theoretical estimate is checked against.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{run_blocks, DEFAULT_BLOCK_SIZE};
use crate::scalar::{compensated_sum, CompensatedSum, Real};

/// Largest game the permutation enumerator accepts (11! orders).
pub const MAX_PERMUTATION_AGENTS: usize = 11;
/// Largest game the coalition enumerator accepts (2^24 subsets per agent).
pub const MAX_SUBSET_AGENTS: usize = 24;

/// A weighted voting game with weights sorted non-decreasingly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Game<T> {
    weights: Vec<T>,
    quota: T,
}

impl<T: Real> Game<T> {
    /// Builds a game, sorting the weights. Weights must be positive and finite.
    pub fn new(mut weights: Vec<T>, quota: T) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("a game needs at least one agent"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > T::zero())) {
            return Err(Error::domain(format!("weights must be positive and finite, got {w}")));
        }
        if !quota.is_finite() {
            return Err(Error::domain("quota must be finite"));
        }
        weights.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
        Ok(Game { weights, quota })
    }

    /// Same weights, different quota.
    pub fn with_quota(&self, quota: T) -> Result<Self> {
        if !quota.is_finite() {
            return Err(Error::domain("quota must be finite"));
        }
        Ok(Game {
            weights: self.weights.clone(),
            quota,
        })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn quota(&self) -> T {
        self.quota
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> T {
        compensated_sum(self.weights.iter().copied())
    }

    /// `0 < q ≤ Σ w_i`: exactly one agent is pivotal in every order.
    pub fn is_proper(&self) -> bool {
        self.quota > T::zero() && self.quota <= self.total_weight()
    }

    /// `prefix < q ≤ prefix + w`, comparisons applied literally.
    #[inline]
    pub fn is_pivotal(&self, prefix_weight: T, agent_weight: T) -> bool {
        prefix_weight < self.quota && prefix_weight + agent_weight >= self.quota
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapleyMethod {
    ExactPerm,
    ExactSubset,
    SampledPerm { permutations: u64 },
}

impl fmt::Display for ShapleyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapleyMethod::ExactPerm => f.write_str("exact_perm"),
            ShapleyMethod::ExactSubset => f.write_str("exact_subset"),
            ShapleyMethod::SampledPerm { permutations } => write!(f, "sampled_perm({permutations})"),
        }
    }
}

impl Serialize for ShapleyMethod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Shapley values indexed by rank (index 0 holds the lightest agent).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ShapleyProfile<T> {
    pub method: ShapleyMethod,
    pub quota: T,
    pub values: Vec<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<T>>,
    pub proper: bool,
}

impl<T: Real> ShapleyProfile<T> {
    pub fn sum(&self) -> T {
        compensated_sum(self.values.iter().copied())
    }

    /// Values non-decreasing in rank up to `slack`.
    pub fn is_rank_monotone(&self, slack: T) -> bool {
        self.values.windows(2).all(|w| w[1] + slack >= w[0])
    }
}

/// Exact values by walking all `n!` orders (Heap's algorithm).
pub fn shapley_exact_perm<T: Real>(game: &Game<T>) -> Result<ShapleyProfile<T>> {
    let n = game.n();
    if n > MAX_PERMUTATION_AGENTS {
        return Err(Error::Size {
            method: "permutation enumeration",
            n,
            limit: MAX_PERMUTATION_AGENTS,
        });
    }
    let w = game.weights();
    let mut order: Vec<usize> = (0..n).collect();
    let mut counts = vec![0u64; n];
    let mut total = 0u64;

    let mut visit = |order: &[usize]| {
        total += 1;
        let mut prefix = CompensatedSum::new();
        for &agent in order {
            let before = prefix.value();
            prefix.add(w[agent]);
            if before < game.quota() && prefix.value() >= game.quota() {
                counts[agent] += 1;
                break;
            }
        }
    };

    // Iterative Heap's algorithm.
    let mut c = vec![0usize; n];
    visit(&order);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            visit(&order);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    let total = T::from_u64(total).expect("n! fits");
    Ok(ShapleyProfile {
        method: ShapleyMethod::ExactPerm,
        quota: game.quota(),
        values: counts
            .iter()
            .map(|&k| T::from_u64(k).expect("count fits") / total)
            .collect(),
        stderr: None,
        proper: game.is_proper(),
    })
}

/// Subset sums of `items`, each accumulated with compensation.
fn subset_sums<T: Real>(items: &[T]) -> Vec<T> {
    (0..1usize << items.len())
        .map(|mask| {
            compensated_sum(
                items
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| mask >> j & 1 == 1)
                    .map(|(_, &x)| x),
            )
        })
        .collect()
}

/// Exact values from the coalition form
/// `φ_i = Σ_{S ∌ i, i pivotal for S} |S|! (n-|S|-1)! / n!`.
pub fn shapley_exact_subset<T: Real>(game: &Game<T>) -> Result<ShapleyProfile<T>> {
    let n = game.n();
    if n > MAX_SUBSET_AGENTS {
        return Err(Error::Size {
            method: "coalition enumeration",
            n,
            limit: MAX_SUBSET_AGENTS,
        });
    }
    let w = game.weights();
    // coef[s] = s! (n-1-s)! / n! = 1 / (n · C(n-1, s))
    let mut coef = Vec::with_capacity(n);
    let mut binom = T::one();
    for s in 0..n {
        coef.push(T::one() / (T::from_usize_lossy(n) * binom));
        binom = binom * T::from_usize_lossy(n - 1 - s) / T::from_usize_lossy(s + 1);
    }

    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<T> = w
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &x)| x)
            .collect();
        let low_bits = others.len() / 2;
        let low = subset_sums(&others[..low_bits]);
        let high = subset_sums(&others[low_bits..]);
        let mut by_size = vec![0u64; n];
        for (hm, &hs) in high.iter().enumerate() {
            let hc = hm.count_ones() as usize;
            for (lm, &ls) in low.iter().enumerate() {
                if game.is_pivotal(ls + hs, w[i]) {
                    by_size[hc + lm.count_ones() as usize] += 1;
                }
            }
        }
        values.push(compensated_sum(
            by_size
                .iter()
                .zip(&coef)
                .map(|(&k, &c)| T::from_u64(k).expect("count fits") * c),
        ));
    }

    Ok(ShapleyProfile {
        method: ShapleyMethod::ExactSubset,
        quota: game.quota(),
        values,
        stderr: None,
        proper: game.is_proper(),
    })
}

/// Unbiased estimate from `k` uniform random orders.
///
/// `stderr` is the sample standard deviation of each agent's pivot
/// indicator divided by `√k` (zero when `k = 1`).
pub fn shapley_sample_perms<T: Real>(
    game: &Game<T>,
    k: u64,
    seed: u64,
) -> Result<ShapleyProfile<T>> {
    if k == 0 {
        return Err(Error::config("permutation sample count must be at least 1"));
    }
    let n = game.n();
    let w = game.weights();
    let blocks = run_blocks(k, DEFAULT_BLOCK_SIZE, seed, |_, len, rng| {
        let mut counts = vec![0u64; n];
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..len {
            order.shuffle(rng);
            let mut prefix = T::zero();
            for &agent in &order {
                if game.is_pivotal(prefix, w[agent]) {
                    counts[agent] += 1;
                    break;
                }
                prefix = prefix + w[agent];
            }
        }
        Ok(counts)
    })?;
    let mut counts = vec![0u64; n];
    for block in blocks {
        for (c, b) in counts.iter_mut().zip(block) {
            *c += b;
        }
    }
    let kf = T::from_u64(k).expect("sample count fits");
    let values: Vec<T> = counts
        .iter()
        .map(|&c| T::from_u64(c).expect("count fits") / kf)
        .collect();
    let stderr = values
        .iter()
        .map(|&p| {
            if k == 1 {
                T::zero()
            } else {
                (p * (T::one() - p) / (kf - T::one())).max(T::zero()).sqrt()
            }
        })
        .collect();
    Ok(ShapleyProfile {
        method: ShapleyMethod::SampledPerm { permutations: k },
        quota: game.quota(),
        values,
        stderr: Some(stderr),
        proper: game.is_proper(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game(w: &[f64], q: f64) -> Game<f64> {
        Game::new(w.to_vec(), q).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn pivotality_half_open_convention() {
        let g = game(&[1.0], 4.0);
        assert!(g.is_pivotal(3.0, 1.0));
        assert!(!g.is_pivotal(4.0, 1.0));
        assert!(!g.is_pivotal(2.0, 1.0));
    }

    #[test]
    fn constructor_sorts_and_validates() {
        let g = game(&[3.0, 1.0, 2.0], 4.0);
        assert_eq!(g.weights(), &[1.0, 2.0, 3.0]);
        assert!(Game::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(Game::new(vec![1.0, -2.0], 1.0).is_err());
        assert!(Game::<f64>::new(vec![], 1.0).is_err());
        assert!(Game::new(vec![1.0], f64::NAN).is_err());
    }

    #[test]
    fn exact_perm_examples() {
        let p = shapley_exact_perm(&game(&[1.0, 2.0, 3.0], 4.0)).unwrap();
        assert!(close(&p.values, &[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1e-15));
        let p = shapley_exact_perm(&game(&[1.0, 1.0, 1.0], 2.0)).unwrap();
        assert!(close(&p.values, &[1.0 / 3.0; 3], 1e-15));
        let p = shapley_exact_perm(&game(&[5.0], 3.0)).unwrap();
        assert_eq!(p.values, vec![1.0]);
    }

    #[test]
    fn exact_subset_examples() {
        let p = shapley_exact_subset(&game(&[1.0, 2.0, 3.0], 4.0)).unwrap();
        assert!(close(&p.values, &[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1e-15));
        let p = shapley_exact_subset(&game(&[1.0; 4], 3.0)).unwrap();
        assert!(close(&p.values, &[0.25; 4], 1e-15));
        let p = shapley_exact_subset(&game(&[1.0, 2.0, 3.0], 7.0)).unwrap();
        assert_eq!(p.values, vec![0.0; 3]);
        assert!(!p.proper);
    }

    #[test]
    fn zero_quota_is_improper_and_powerless() {
        let g = game(&[1.0, 2.0], 0.0);
        assert!(!g.is_proper());
        let p = shapley_exact_perm(&g).unwrap();
        assert_eq!(p.values, vec![0.0, 0.0]);
    }

    #[test]
    fn size_guards() {
        let big = game(&[1.0; 12], 3.0);
        assert!(matches!(
            shapley_exact_perm(&big),
            Err(Error::Size { limit: 11, .. })
        ));
        let huge = game(&[1.0; 25], 3.0);
        assert!(matches!(
            shapley_exact_subset(&huge),
            Err(Error::Size { limit: 24, .. })
        ));
    }

    #[test]
    fn subset_at_its_guard() {
        // 24 equal agents: every agent gets exactly 1/24.
        let p = shapley_exact_subset(&game(&[1.0; 24], 10.5)).unwrap();
        assert!(p.values.iter().all(|&v| (v - 1.0 / 24.0).abs() < 1e-12));
        assert!((p.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_sample_is_an_indicator() {
        let p = shapley_sample_perms(&game(&[1.0, 2.0, 3.0], 4.0), 1, 77).unwrap();
        assert_eq!(p.values.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(p.sum(), 1.0);
        assert!(p.stderr.unwrap().iter().all(|&s| s == 0.0));
        assert!(shapley_sample_perms(&game(&[1.0], 1.0), 0, 1).is_err());
    }

    #[test]
    fn sampled_symmetric_pair() {
        let p = shapley_sample_perms(&game(&[1.0, 1.0], 1.0), 20_000, 5).unwrap();
        let se = p.stderr.as_ref().unwrap();
        for (v, s) in p.values.iter().zip(se) {
            assert!((v - 0.5).abs() <= 5.0 * s, "{v} ± {s}");
        }
    }

    #[test]
    fn sampled_matches_exact_within_five_sigma() {
        let g = game(&[1.0, 2.0, 3.0], 4.0);
        let p = shapley_sample_perms(&g, 1_000_000, 2024).unwrap();
        let exact = [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0];
        for ((v, s), e) in p.values.iter().zip(p.stderr.as_ref().unwrap()).zip(exact) {
            assert!((v - e).abs() <= 5.0 * s, "{v} vs {e} ± {s}");
        }
    }

    #[test]
    fn profile_json_shape() {
        let p = shapley_exact_perm(&game(&[1.0, 2.0, 3.0], 4.0)).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["method"], "exact_perm");
        assert_eq!(v["quota"], 4.0);
        assert_eq!(v["values"].as_array().unwrap().len(), 3);
        assert!(v.get("stderr").is_none());
    }
}
