//! Library results against independent evaluations: composite Simpson
//! quadrature written here, brute-force coalition enumeration, and
//! closed-form moments.

use wvg_shapley::distributions::ConditionedLaw;
use wvg_shapley::renewal::renewal_asymptote;
use wvg_shapley::theory::{
    exp_formulas, jn_value, predict_max_expected, predict_min_expected, uniform_series_max,
    uniform_series_min,
};
use wvg_shapley::wvg::{shapley_exact_perm, shapley_exact_subset};
use wvg_shapley::{Game, WeightDistribution};

/// Composite Simpson rule with `panels` (even) subintervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// φ_i = Σ_{S ∌ i, w(S) < q ≤ w(S) + w_i} |S|!(n−|S|−1)!/n!.
fn brute_force_shapley(w: &[f64], q: f64) -> Vec<f64> {
    let n = w.len();
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        for mask in 0u32..(1 << n) {
            if mask & (1 << i) != 0 {
                continue;
            }
            let s: f64 = (0..n).filter(|j| mask & (1 << j) != 0).map(|j| w[j]).sum();
            if s < q && q <= s + w[i] {
                let k = mask.count_ones() as usize;
                *p += factorial(k) * factorial(n - k - 1) / factorial(n);
            }
        }
    }
    phi
}

#[test]
fn uniform_series_agree_with_quadrature() {
    for (a, b) in [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)] {
        let d = WeightDistribution::uniform(a, b).unwrap();
        for n in [5, 10, 20, 50] {
            let smax = uniform_series_max(a, b, n, 1e-14).unwrap().value;
            let qmax = predict_max_expected(&d, n).unwrap().value;
            assert!((smax - qmax).abs() < 1e-8, "max a={a} b={b} n={n}: {smax} {qmax}");
            let smin = uniform_series_min(a, b, n, 1e-14).unwrap().value;
            let qmin = predict_min_expected(&d, n).unwrap().value;
            assert!((smin - qmin).abs() < 1e-8, "min a={a} b={b} n={n}: {smin} {qmin}");
        }
    }
}

#[test]
fn uniform_predictors_match_direct_integrals() {
    for (a, b) in [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)] {
        for n in [5usize, 20] {
            let width = b - a;
            let max = simpson(
                |t| ((t - a) / width).powi(n as i32 - 1) * 2.0 * t / (a + t).max(1e-300),
                a,
                b,
                20_000,
            ) / width;
            let min = simpson(
                |t| ((b - t) / width).powi(n as i32 - 1) * 2.0 * t / (b + t),
                a,
                b,
                20_000,
            ) / width;
            let d = WeightDistribution::uniform(a, b).unwrap();
            // the direct form equals E[φ] itself: (1/n) · n · ∫ …
            assert!((predict_max_expected(&d, n).unwrap().value - max).abs() < 1e-10);
            assert!((predict_min_expected(&d, n).unwrap().value - min).abs() < 1e-10);
        }
    }
}

#[test]
fn harmonic_form_matches_log_integral() {
    // ∫₀¹ (1−t)^n ln(1/t) dt with t = e^{−u}
    for n in [0usize, 1, 2, 7, 30, 100, 200] {
        let direct = simpson(|u| (1.0 - (-u).exp()).powi(n as i32) * u * (-u).exp(), 0.0, 60.0, 60_000);
        let closed = exp_formulas::<f64>(n.max(1)).unwrap();
        let i_n = if n == 0 { 1.0 } else { closed.i_n };
        assert!((i_n - direct).abs() < 1e-10, "n={n}: {i_n} {direct}");
    }
}

#[test]
fn jn_matches_its_integral() {
    // J_n = ∫₀¹ (1−t)^n ln(1/t) (t + t ln(1/t)) dt with t = e^{−u}
    for n in [0usize, 1, 3, 10, 40] {
        let direct = simpson(
            |u| {
                let t = (-u).exp();
                (1.0 - t).powi(n as i32) * u * (t + t * u) * t
            },
            0.0,
            60.0,
            60_000,
        );
        assert!((jn_value::<f64>(n) - direct).abs() < 1e-10, "n={n}: {} {direct}", jn_value::<f64>(n));
    }
}

#[test]
fn exponential_integral_identity_matches_direct_quadrature() {
    for n in [2usize, 5, 10, 50] {
        let nf = n as f64;
        // x = u/n
        let direct = simpson(|u| (-u).exp() * (u / nf) / (u / nf + 1.0), 0.0, 60.0, 60_000) / nf;
        let closed = exp_formulas::<f64>(n).unwrap().min_integral;
        assert!((closed - direct).abs() < 1e-10, "n={n}: {closed} {direct}");
    }
}

#[test]
fn exponential_max_predictor_matches_direct_integral() {
    let d = WeightDistribution::exponential(1.0).unwrap();
    for n in [2usize, 10, 50] {
        let direct = simpson(
            |x| {
                if x == 0.0 {
                    return 0.0;
                }
                // e^x − 1 − x without cancellation
                let denom = if x < 1e-3 {
                    x * x * (0.5 + x / 6.0 + x * x / 24.0)
                } else {
                    x.exp_m1() - x
                };
                (n as f64 * (-(-x).exp()).ln_1p()).exp() * x / denom
            },
            0.0,
            60.0,
            120_000,
        );
        let q = predict_max_expected(&d, n).unwrap().value;
        assert!((q - direct).abs() < 1e-9 * direct.max(1e-3), "n={n}: {q} {direct}");
    }
}

#[test]
fn conditioned_moments_by_quadrature() {
    let u = WeightDistribution::uniform(0.0, 1.0).unwrap();
    let below = ConditionedLaw::below(u, 0.5).unwrap();
    let m1 = simpson(|t| t * below.pdf(t), 0.0, 0.5, 2000);
    let m2 = simpson(|t| t * t * below.pdf(t), 0.0, 0.5, 2000);
    assert!((m1 - 0.25).abs() < 1e-12 && (below.mean() - m1).abs() < 1e-12);
    assert!((m2 - 1.0 / 12.0).abs() < 1e-12 && (below.second_moment() - m2).abs() < 1e-12);
    for q in [1.0, 7.5] {
        assert!((renewal_asymptote(&below, q) - (4.0 * q + 2.0 / 3.0)).abs() < 1e-12);
    }

    let e = WeightDistribution::exponential(2.0).unwrap();
    for x in [0.1, 1.0, 4.0] {
        let mass = simpson(|t| e.pdf(t), 0.0, x, 20_000);
        let first = simpson(|t| t * e.pdf(t), 0.0, x, 20_000) / mass;
        let second = simpson(|t| t * t * e.pdf(t), 0.0, x, 20_000) / mass;
        assert!((e.mean_below(x).unwrap() - first).abs() < 1e-10 * first.max(1.0));
        assert!((e.second_moment_below(x).unwrap() - second).abs() < 1e-10 * second.max(1.0));
        let tail = simpson(|t| e.pdf(t), x, x + 40.0, 40_000);
        let above = simpson(|t| t * e.pdf(t), x, x + 40.0, 40_000) / tail;
        assert!((e.mean_above(x).unwrap() - above).abs() < 1e-9);
    }

    let mix = ConditionedLaw::mixture(e, 0.3, 1.0).unwrap();
    // keep the jump at x out of both panels so each sees one branch
    let (edge, start) = (1.0 - 1e-13, 1.0 + 1e-13);
    let total = simpson(|t| mix.pdf(t), 0.0, edge, 20_000) + simpson(|t| mix.pdf(t), start, 41.0, 40_000);
    assert!((total - 1.0).abs() < 1e-9, "{total}");
    let mean = simpson(|t| t * mix.pdf(t), 0.0, edge, 20_000) + simpson(|t| t * mix.pdf(t), start, 41.0, 40_000);
    assert!((mix.mean() - mean).abs() < 1e-9);
}

#[test]
fn exact_enumerators_match_brute_force() {
    let games: &[(&[f64], f64)] = &[
        (&[1.0, 2.0, 3.0], 4.0),
        (&[1.0, 1.0, 1.0, 1.0], 3.0),
        (&[0.5, 1.5, 2.0, 5.0, 7.0], 8.0),
        (&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7], 1.4),
        (&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0], 15.5),
    ];
    for (w, q) in games {
        let game = Game::new(w.to_vec(), *q).unwrap();
        let oracle = brute_force_shapley(game.weights(), *q);
        let perm = shapley_exact_perm(&game).unwrap();
        let subset = shapley_exact_subset(&game).unwrap();
        for ((p, s), o) in perm.values.iter().zip(&subset.values).zip(&oracle) {
            assert!((p - o).abs() < 1e-12);
            assert!((s - o).abs() < 1e-12);
        }
    }
}
