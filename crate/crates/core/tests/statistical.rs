//! Seeded Monte Carlo checks against exact or predicted values, with
//! tolerances stated in standard errors.

use wvg_shapley::montecarlo::{profile_sweep, run_experiment};
use wvg_shapley::renewal::{
    interval_count, renewal_asymptote, renewal_lattice, renewal_mc, residual_decay_report, DecayVerdict,
    RenewalMethod,
};
use wvg_shapley::theory::{limit_values, predict_max_expected, predict_rank_limit};
use wvg_shapley::{ConditionedLaw, Estimator, ExperimentConfig, WeightDistribution, WeightModel};

fn uniform01() -> WeightDistribution {
    WeightDistribution::uniform(0.0, 1.0).unwrap()
}

fn exp1() -> WeightDistribution {
    WeightDistribution::exponential(1.0).unwrap()
}

#[test]
fn uniform_max_rank_sits_at_two_over_n() {
    let cfg = ExperimentConfig::new(uniform01(), 10, WeightModel::Normalized, vec![0.5], 200_000, 11);
    let est = run_experiment(&cfg).unwrap().estimates[0].max_rank();
    let scaled = 10.0 * est.mean;
    assert!((scaled - 2.0).abs() < 0.05, "{scaled}");
    assert!((scaled - 2.0).abs() < 5.0 * 10.0 * est.stderr + 0.02, "{scaled} ± {}", est.stderr);
}

#[test]
fn exponential_max_rank_matches_its_integral() {
    let n = 20;
    let cfg = ExperimentConfig::new(exp1(), n, WeightModel::Normalized, vec![0.5], 200_000, 12);
    let est = run_experiment(&cfg).unwrap().estimates[0].max_rank();
    let predicted = n as f64 * predict_max_expected(&exp1(), n).unwrap().value;
    let scaled = n as f64 * est.mean;
    assert!((scaled - predicted).abs() < 0.1, "{scaled} vs {predicted}");
}

#[test]
fn lone_agent_holds_all_power() {
    for d in [uniform01(), exp1()] {
        let cfg = ExperimentConfig::new(d, 1, WeightModel::Normalized, vec![0.5], 1000, 3);
        let est = run_experiment(&cfg).unwrap().estimates[0].max_rank();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
    }
}

#[test]
fn estimators_agree() {
    let base = ExperimentConfig::new(uniform01(), 8, WeightModel::Natural, vec![2.0], 200_000, 5);
    let one = profile_sweep(&base).unwrap();
    let exact = profile_sweep(&base.clone().with_estimator(Estimator::ExactPerGame)).unwrap();
    for (a, b) in one.estimates[0].ranks.iter().zip(&exact.estimates[0].ranks) {
        let sigma = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() <= 5.0 * sigma, "{a:?} vs {b:?}");
    }
    assert_eq!(one.estimates[0].improper, exact.estimates[0].improper);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = ExperimentConfig::new(exp1(), 15, WeightModel::Normalized, vec![0.25, 0.5, 0.75], 50_000, 99);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| profile_sweep(&cfg).unwrap())
    };
    assert_eq!(run(1), run(3));
    let law = ConditionedLaw::from(uniform01());
    let mc = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| renewal_mc(&law, 7.0, 50_000, 4).unwrap())
    };
    assert_eq!(mc(1), mc(3));
}

#[test]
fn sampled_profile_is_rank_monotone_within_noise() {
    let cfg = ExperimentConfig::new(uniform01(), 12, WeightModel::Normalized, vec![0.3, 0.5], 100_000, 21);
    for est in profile_sweep(&cfg).unwrap().estimates {
        for w in est.ranks.windows(2) {
            let sigma = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            assert!(w[0].mean <= w[1].mean + 3.0 * sigma, "{:?}", w);
        }
    }
}

#[test]
fn poisson_renewal_is_exact() {
    for rate in [0.5, 1.0, 2.0] {
        let law = ConditionedLaw::from(WeightDistribution::exponential(rate).unwrap());
        for q in [1.0, 5.0, 20.0] {
            let est = renewal_mc(&law, q, 100_000, 17).unwrap();
            let want = 1.0 + rate * q;
            assert!((renewal_asymptote(&law, q) - want).abs() < 1e-12);
            assert!((est.mean - want).abs() <= 5.0 * est.stderr, "rate={rate} Q={q}: {est:?}");
        }
    }
}

#[test]
fn uniform_renewal_reaches_its_asymptote() {
    let law = ConditionedLaw::from(uniform01());
    let est = renewal_mc(&law, 10.0, 200_000, 8).unwrap();
    assert!((est.mean - (20.0 + 2.0 / 3.0)).abs() <= 5.0 * est.stderr, "{est:?}");
    assert_eq!(renewal_mc(&law, 0.0, 10, 1).unwrap().mean, 0.0);
}

#[test]
fn interval_counts() {
    let e = ConditionedLaw::from(exp1());
    let est = interval_count(&e, 10.0, 2.0, 200_000, 2).unwrap();
    assert!((est.mean - 2.0).abs() <= 5.0 * est.stderr, "{est:?}");
    assert_eq!(interval_count(&e, 10.0, 0.0, 1000, 2).unwrap().mean, 0.0);

    let u = ConditionedLaw::from(uniform01());
    let est = interval_count(&u, 8.0, 1.0, 200_000, 2).unwrap();
    assert!((est.mean - 2.0).abs() <= 5.0 * est.stderr + 1e-3, "{est:?}");
    // same paths, so the count is the difference of the two m values up to noise
    let m = renewal_lattice(&u, &[7.0, 8.0], 1e-3).unwrap();
    assert!((est.mean - (m[1] - m[0])).abs() <= 5.0 * est.stderr + 1e-4);
    assert!(interval_count(&u, 1.0, 2.0, 10, 1).is_err());
}

#[test]
fn lattice_matches_monte_carlo() {
    let law = ConditionedLaw::from(uniform01());
    let grid = [2.0, 5.0, 10.0];
    let lattice = renewal_lattice(&law, &grid, 1e-3).unwrap();
    for (&q, &m) in grid.iter().zip(&lattice) {
        let mc = renewal_mc(&law, q, 100_000, 6).unwrap();
        assert!((mc.mean - m).abs() <= 5.0 * mc.stderr + 1e-5, "Q={q}: {m} vs {mc:?}");
    }
    let fine: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
    let m = renewal_lattice(&law, &fine, 1e-3).unwrap();
    assert!(m.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn residual_decay() {
    let e = ConditionedLaw::from(exp1());
    let report = residual_decay_report(
        &e,
        &[1.0, 2.0, 5.0, 10.0],
        RenewalMethod::MonteCarlo {
            reps: 100_000,
            seed: 3,
        },
    )
    .unwrap();
    assert!(report.verdict.is_consistent(), "{:?}", report.verdict);

    let u = ConditionedLaw::from(uniform01());
    let report = residual_decay_report(&u, &[2.0, 4.0, 6.0, 8.0], RenewalMethod::Lattice { step: 1e-3 }).unwrap();
    let eps: Vec<f64> = report.summary.rows.iter().map(|r| r.residual.abs()).collect();
    assert!(eps[3] < eps[0] && eps[3] < 1e-3, "{eps:?}");
    assert_eq!(report.verdict, DecayVerdict::Decaying);
    assert!(report.slope.unwrap() < 0.0);
}

#[test]
fn max_prediction_approaches_its_limit() {
    for (a, b) in [(1.0, 3.0), (2.0, 5.0)] {
        let d = WeightDistribution::uniform(a, b).unwrap();
        let limit = limit_values(&d).max.finite().unwrap();
        assert!((limit - 2.0 * b / (a + b)).abs() < 1e-14);
        let scaled: Vec<f64> = [10usize, 100, 1000, 10_000]
            .iter()
            .map(|&n| n as f64 * predict_max_expected(&d, n).unwrap().value)
            .collect();
        assert!(scaled.windows(2).all(|w| w[0] <= w[1] + 1e-9), "{scaled:?}");
        let gaps: Vec<f64> = scaled.iter().map(|s| (limit - s).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
        assert!(gaps[3] < 1e-3, "{gaps:?}");
    }
}

#[test]
fn rank_limit_is_continuous_at_the_top() {
    for (a, b) in [(0.0, 1.0), (1.0, 3.0)] {
        let d = WeightDistribution::uniform(a, b).unwrap();
        let top = limit_values(&d).max.finite().unwrap();
        let near = predict_rank_limit(&d, 1.0 - 1e-9).unwrap();
        assert!((near - top).abs() < 1e-8, "{near} vs {top}");
    }
}
