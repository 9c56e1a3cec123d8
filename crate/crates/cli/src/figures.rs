//! Batch recipes emitting the plot-ready datasets behind the three figures.

use serde::Serialize;
use serde_json::json;

use wvg_shapley::montecarlo::{profile_sweep, run_experiment};
use wvg_shapley::theory::{self, Method, Target};
use wvg_shapley::{ExperimentConfig, WeightDistribution, WeightModel};

use crate::commands::Defaults;
use crate::error::{CliError, CliResult};
use crate::output::{table, Format, Output};
use crate::settings::{parse_grid, Settings};

pub const FIGURE: Defaults = &[
    ("name", None),
    ("reps", Some("1000000")),
    ("seed", Some("1")),
    ("format", Some("csv")),
    ("out", None),
];

pub const NAMES: [&str; 3] = ["fig1", "fig2", "fig3"];

const FIG1_SIZES: [usize; 2] = [10, 20];
const FIG2_SIZES: [usize; 6] = [10, 20, 30, 50, 70, 100];
const FIG3_SIZE: usize = 100;

pub fn default_out(name: &str) -> String {
    format!("{name}_data.csv")
}

pub fn figure(s: &Settings) -> CliResult<Output> {
    let format = Format::from_settings(s)?;
    let reps: u64 = s.parse("reps")?;
    let seed: u64 = s.parse("seed")?;
    match s.str("name")? {
        "fig1" => fig1(format, reps, seed),
        "fig2" => fig2(format, reps, seed),
        "fig3" => fig3(format, reps, seed),
        other => Err(CliError::config(format!(
            "unknown figure `{other}`: expected one of {}",
            NAMES.join(", ")
        ))),
    }
}

#[derive(Serialize)]
struct Fig1Row {
    n: usize,
    quota: f64,
    max_scaled: f64,
    max_stderr: f64,
    min_scaled: f64,
    min_stderr: f64,
    predicted_max_scaled: f64,
    predicted_min_scaled: f64,
}

/// U(0,1), normalized model, quota sweep; both extremes scaled by n.
fn fig1(format: Format, reps: u64, seed: u64) -> CliResult<Output> {
    let dist = WeightDistribution::uniform(0.0, 1.0)?;
    let grid = parse_grid("0.05:0.95:0.05").expect("static grid");
    let mut rows = Vec::new();
    for n in FIG1_SIZES {
        let nf = n as f64;
        let max_pred = nf * theory::predict(&dist, n, Target::Max, Method::Auto)?.value;
        let min_pred = nf * theory::predict(&dist, n, Target::Min, Method::Auto)?.value;
        let cfg = ExperimentConfig::new(dist, n, WeightModel::Normalized, grid.clone(), reps, seed);
        for est in run_experiment(&cfg)?.estimates {
            let (max, min) = (est.max_rank(), est.min_rank());
            rows.push(Fig1Row {
                n,
                quota: est.quota,
                max_scaled: nf * max.mean,
                max_stderr: nf * max.stderr,
                min_scaled: nf * min.mean,
                min_stderr: nf * min.stderr,
                predicted_max_scaled: max_pred,
                predicted_min_scaled: min_pred,
            });
        }
    }
    let plateau = rows
        .iter()
        .filter(|r| r.n == 10 && r.quota >= 0.2 - 1e-9 && r.quota <= 0.8 + 1e-9)
        .map(|r| (r.max_scaled - 2.0).abs())
        .fold(0.0, f64::max);
    Ok(Output {
        body: table(format, &rows)?,
        summary: json!({ "rows": rows.len(), "n10_plateau_max_deviation": plateau }),
        line: format!("fig1: {} rows, n = 10 plateau deviation from 2 = {plateau:.4}", rows.len()),
    })
}

#[derive(Serialize)]
struct Fig2Row {
    n: usize,
    max_scaled: f64,
    max_stderr: f64,
    max_asymptotic: f64,
    max_integral: f64,
    min_scaled: f64,
    min_stderr: f64,
    min_asymptotic: f64,
    min_integral: f64,
}

/// Exp(1), normalized model, q = 1/2: max scaled by n, min by n².
fn fig2(format: Format, reps: u64, seed: u64) -> CliResult<Output> {
    let dist = WeightDistribution::exponential(1.0)?;
    let mut rows = Vec::new();
    for n in FIG2_SIZES {
        let nf = n as f64;
        let closed = theory::exp_formulas::<f64>(n)?;
        let max_integral = theory::predict_max_expected(&dist, n)?.value;
        let cfg = ExperimentConfig::new(dist, n, WeightModel::Normalized, vec![0.5], reps, seed);
        let est = &run_experiment(&cfg)?.estimates[0];
        let (max, min) = (est.max_rank(), est.min_rank());
        rows.push(Fig2Row {
            n,
            max_scaled: nf * max.mean,
            max_stderr: nf * max.stderr,
            max_asymptotic: nf * closed.max_asymptotic,
            max_integral: nf * max_integral,
            min_scaled: nf * nf * min.mean,
            min_stderr: nf * nf * min.stderr,
            min_asymptotic: nf * nf * closed.min_asymptotic,
            min_integral: nf * nf * closed.min_integral,
        });
    }
    Ok(Output {
        body: table(format, &rows)?,
        summary: json!({ "rows": rows.len(), "sizes": FIG2_SIZES }),
        line: format!("fig2: {} rows over n = {:?}", rows.len(), FIG2_SIZES),
    })
}

#[derive(Serialize)]
struct Fig3Row {
    dist: String,
    rank: usize,
    p: f64,
    scaled: f64,
    stderr: f64,
    predicted: Option<f64>,
}

/// Full profile at n = 100, q = 1/2 for U(0,1) and Exp(1), scaled by n.
/// The prediction at `p = rank/n` is empty where the limit is infinite.
fn fig3(format: Format, reps: u64, seed: u64) -> CliResult<Output> {
    let n = FIG3_SIZE;
    let nf = n as f64;
    let mut rows = Vec::new();
    let mut worst = Vec::new();
    for dist in [WeightDistribution::uniform(0.0, 1.0)?, WeightDistribution::exponential(1.0)?] {
        let cfg = ExperimentConfig::new(dist, n, WeightModel::Normalized, vec![0.5], reps, seed);
        let est = &profile_sweep(&cfg)?.estimates[0];
        let mut deviation: f64 = 0.0;
        for (i, r) in est.ranks.iter().enumerate() {
            let rank = i + 1;
            let p = rank as f64 / nf;
            let predicted = if rank == n {
                theory::limit_values(&dist).max.finite()
            } else {
                Some(theory::predict_rank_limit(&dist, p)?)
            };
            if let Some(pred) = predicted {
                if rank > 5 && rank <= n - 5 {
                    deviation = deviation.max((nf * r.mean - pred).abs());
                }
            }
            rows.push(Fig3Row {
                dist: dist.to_string(),
                rank,
                p,
                scaled: nf * r.mean,
                stderr: nf * r.stderr,
                predicted,
            });
        }
        worst.push(json!({ "dist": dist.to_string(), "interior_max_deviation": deviation }));
    }
    Ok(Output {
        body: table(format, &rows)?,
        summary: json!({ "rows": rows.len(), "profiles": worst }),
        line: format!("fig3: {} rows", rows.len()),
    })
}
