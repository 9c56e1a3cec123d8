use serde::Serialize;
use serde_json::json;

use wvg_shapley::montecarlo::{profile_sweep, run_experiment};
use wvg_shapley::renewal::{renewal_summary, residual_decay_report, RenewalMethod, RenewalSummary};
use wvg_shapley::theory::{self, Form, Method, Target};
use wvg_shapley::wvg::{shapley_exact_perm, shapley_exact_subset, shapley_sample_perms};
use wvg_shapley::{
    Conditioning, ConditionedLaw, Estimator, ExperimentConfig, Game, WeightDistribution, WeightModel,
};

use crate::error::{CliError, CliResult};
use crate::output::{json_bytes, table, Format, Output};
use crate::settings::{parse_list, Settings};

pub type Defaults = &'static [(&'static str, Option<&'static str>)];

pub const SIMULATE: Defaults = &[
    ("dist", Some("uniform:0,1")),
    ("n", Some("10")),
    ("model", Some("normalized")),
    ("quota-grid", Some("0.05:0.95:0.05")),
    ("reps", Some("1000000")),
    ("seed", Some("42")),
    ("estimator", Some("one_perm")),
    ("full-profile", Some("false")),
    ("format", Some("csv")),
    ("out", None),
];

pub const PREDICT: Defaults = &[
    ("dist", Some("exp:1")),
    ("n", Some("10")),
    ("target", Some("max")),
    ("p", None),
    ("method", Some("auto")),
    ("format", Some("csv")),
    ("out", None),
];

pub const RENEWAL: Defaults = &[
    ("dist", Some("exp:1")),
    ("cond", Some("none")),
    ("q-grid", Some("1:10:1")),
    ("reps", Some("1000000")),
    ("seed", Some("7")),
    ("method", Some("mc")),
    ("step", Some("1e-4")),
    ("format", Some("csv")),
    ("out", None),
];

pub const COMPARE: Defaults = &[
    ("dist", Some("uniform:0,1")),
    ("n", Some("10")),
    ("model", Some("normalized")),
    ("quota-grid", Some("0.1:0.9:0.1")),
    ("reps", Some("1000000")),
    ("seed", Some("42")),
    ("ranks", None),
    ("model-gap", Some("false")),
    ("format", Some("csv")),
    ("out", None),
];

pub const SHAPLEY: Defaults = &[
    ("weights", None),
    ("quota", None),
    ("method", Some("exact_subset")),
    ("samples", Some("100000")),
    ("seed", Some("1")),
    ("format", Some("csv")),
    ("out", None),
];

pub fn simulate(s: &Settings) -> CliResult<Output> {
    let format = Format::from_settings(s)?;
    let cfg = ExperimentConfig::new(
        s.parse("dist")?,
        s.parse("n")?,
        s.parse("model")?,
        s.grid("quota-grid")?,
        s.parse("reps")?,
        s.parse("seed")?,
    )
    .with_estimator(s.parse::<Estimator>("estimator")?);
    let result = if s.flag("full-profile")? {
        profile_sweep(&cfg)?
    } else {
        run_experiment(&cfg)?
    };
    let rows = result.rows();
    let improper: Vec<_> = result
        .estimates
        .iter()
        .map(|q| json!({ "quota": q.quota, "improper": q.improper }))
        .collect();
    let total: u64 = result.estimates.iter().map(|q| q.improper).sum();
    Ok(Output {
        body: table(format, &rows)?,
        summary: json!({ "rows": rows.len(), "improper": improper }),
        line: format!(
            "simulate: {} rows, n = {}, reps = {}, improper replications = {total}",
            rows.len(),
            cfg.n,
            cfg.reps
        ),
    })
}

#[derive(Serialize)]
struct PredictRow {
    dist: String,
    n: Option<usize>,
    target: &'static str,
    p: Option<f64>,
    form: &'static str,
    value: f64,
    scaled: f64,
    abs_error: Option<f64>,
    terms: Option<usize>,
}

pub fn predict(s: &Settings) -> CliResult<Output> {
    let format = Format::from_settings(s)?;
    let dist: WeightDistribution = s.parse("dist")?;
    let n: usize = s.parse("n")?;
    let method: Method = s.parse("method")?;
    let p: Option<f64> = s.parse_opt("p")?;
    let (target, target_name) = match s.str("target")? {
        "max" => (Target::Max, "max"),
        "min" => (Target::Min, "min"),
        "rank" => (
            Target::Rank(p.ok_or_else(|| CliError::config("target rank needs --p"))?),
            "rank",
        ),
        other => return Err(CliError::config(format!("target `{other}`: expected max, min or rank"))),
    };
    let pred = theory::predict(&dist, n, target, method)?;
    let (form, abs_error, terms) = match pred.form {
        Form::Quadrature { abs_error } => ("quadrature", Some(abs_error), None),
        Form::Series { terms } => ("series", None, Some(terms)),
        Form::Asymptotic => ("asymptotic", None, None),
        Form::Limit => ("limit", None, None),
    };
    let row = PredictRow {
        dist: dist.to_string(),
        n: match pred.n {
            theory::AgentCount::Finite(n) => Some(n),
            theory::AgentCount::Infinite => None,
        },
        target: target_name,
        p: if let Target::Rank(p) = target { Some(p) } else { None },
        form,
        value: pred.value,
        scaled: pred.scaled(),
        abs_error,
        terms,
    };
    let body = match format {
        Format::Csv => table(format, std::slice::from_ref(&row))?,
        Format::Json => json_bytes(&json!({ "dist": row.dist, "prediction": pred }))?,
    };
    Ok(Output {
        body,
        summary: json!({ "value": pred.value, "scaled": pred.scaled() }),
        line: format!("predict: {target_name} {form} value = {:.6e}, scaled = {:.6}", pred.value, pred.scaled()),
    })
}

#[derive(Serialize)]
struct RenewalCsvRow {
    #[serde(rename = "Q")]
    q: f64,
    m_hat: f64,
    stderr: f64,
    asymptote: f64,
    residual: f64,
}

pub fn renewal(s: &Settings) -> CliResult<Output> {
    let format = Format::from_settings(s)?;
    let base: WeightDistribution = s.parse("dist")?;
    let cond: Conditioning<f64> = s.parse("cond")?;
    let law = ConditionedLaw::new(base, cond)?;
    let grid = s.grid("q-grid")?;
    let method = match s.str("method")? {
        "mc" => RenewalMethod::MonteCarlo {
            reps: s.parse("reps")?,
            seed: s.parse("seed")?,
        },
        "convolve" => RenewalMethod::Lattice { step: s.parse("step")? },
        other => return Err(CliError::config(format!("method `{other}`: expected mc or convolve"))),
    };
    let increasing = grid.windows(2).all(|w| w[0] < w[1]);
    let (summary, decay): (RenewalSummary<f64>, _) = if grid.len() >= 4 && increasing {
        let report = residual_decay_report(&law, &grid, method)?;
        let decay = json!({ "verdict": report.verdict, "slope": report.slope, "resolvable": report.resolvable });
        (report.summary, decay)
    } else {
        (renewal_summary(&law, &grid, method)?, serde_json::Value::Null)
    };
    let rows: Vec<RenewalCsvRow> = summary
        .rows
        .iter()
        .map(|r| RenewalCsvRow {
            q: r.q,
            m_hat: r.m.mean,
            stderr: r.m.stderr,
            asymptote: r.asymptote,
            residual: r.residual,
        })
        .collect();
    let max_residual = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let verdict = decay
        .get("verdict")
        .and_then(|v| v.as_str())
        .map(|v| format!(", decay: {v}"))
        .unwrap_or_default();
    Ok(Output {
        body: table(format, &rows)?,
        summary: json!({ "law": summary.law, "max_abs_residual": max_residual, "decay": decay }),
        line: format!("renewal: {} rows, law {}, max |residual| = {max_residual:.3e}{verdict}", rows.len(), summary.law),
    })
}

#[derive(Serialize)]
struct CompareRow {
    quota: f64,
    rank_class: String,
    simulated: f64,
    stderr: f64,
    predicted: f64,
    deviation_sigma: Option<f64>,
}

fn deviation(sim: f64, se: f64, pred: f64) -> Option<f64> {
    (se > 0.0).then(|| (sim - pred) / se)
}

fn absolute_grid(grid: &[f64], n: usize, dist: &WeightDistribution) -> Vec<f64> {
    grid.iter().map(|q| q * n as f64 * dist.mean()).collect()
}

pub fn compare(s: &Settings) -> CliResult<Output> {
    let format = Format::from_settings(s)?;
    let dist: WeightDistribution = s.parse("dist")?;
    let n: usize = s.parse("n")?;
    let model: WeightModel = s.parse("model")?;
    let grid = s.grid("quota-grid")?;
    let reps: u64 = s.parse("reps")?;
    let seed: u64 = s.parse("seed")?;
    let ranks = match s.opt_str("ranks") {
        Some(r) => parse_list(r).map_err(|e| CliError::config(format!("`ranks`: {e}")))?,
        None => Vec::new(),
    };
    if grid.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return Err(CliError::config("compare takes relative quotas in (0, 1)"));
    }

    let experiment = |model: WeightModel| -> CliResult<wvg_shapley::ExperimentResult> {
        let g = match model {
            WeightModel::Normalized => grid.clone(),
            WeightModel::Natural => absolute_grid(&grid, n, &dist),
        };
        let cfg = ExperimentConfig::new(dist, n, model, g, reps, seed);
        Ok(if ranks.is_empty() {
            run_experiment(&cfg)?
        } else {
            profile_sweep(&cfg)?
        })
    };

    let max_pred = theory::predict(&dist, n, Target::Max, Method::Auto)?.value;
    let min_pred = theory::predict(&dist, n, Target::Min, Method::Auto)?.value;
    let result = experiment(model)?;
    let nf = n as f64;

    let mut rows = Vec::new();
    for (q, est) in grid.iter().zip(&result.estimates) {
        let max = est.max_rank();
        let min = est.min_rank();
        rows.push(CompareRow {
            quota: *q,
            rank_class: "max".into(),
            simulated: max.mean,
            stderr: max.stderr,
            predicted: max_pred,
            deviation_sigma: deviation(max.mean, max.stderr, max_pred),
        });
        rows.push(CompareRow {
            quota: *q,
            rank_class: "min".into(),
            simulated: min.mean,
            stderr: min.stderr,
            predicted: min_pred,
            deviation_sigma: deviation(min.mean, min.stderr, min_pred),
        });
        for &p in &ranks {
            let rank = ((p * nf).round() as usize).clamp(1, n);
            let predicted = theory::predict_rank_limit(&dist, p)? / nf;
            let r = est.ranks[rank - 1];
            rows.push(CompareRow {
                quota: *q,
                rank_class: p.to_string(),
                simulated: r.mean,
                stderr: r.stderr,
                predicted,
                deviation_sigma: deviation(r.mean, r.stderr, predicted),
            });
        }
    }

    let (lo, hi) = theory::quota_range(&dist, n, 0.05);
    let out_of_range: Vec<f64> = grid.iter().copied().filter(|&q| q < lo || q > hi).collect();
    let worst = rows
        .iter()
        .filter_map(|r| r.deviation_sigma)
        .map(f64::abs)
        .fold(0.0, f64::max);

    let mut summary = json!({
        "rows": rows.len(),
        "max_abs_deviation_sigma": worst,
        "quota_range": [lo, hi],
        "out_of_range_quotas": out_of_range,
    });
    let mut line = format!("compare: {} rows, max |deviation| = {worst:.2} sigma", rows.len());
    if s.flag("model-gap")? {
        let other = match model {
            WeightModel::Normalized => WeightModel::Natural,
            WeightModel::Natural => WeightModel::Normalized,
        };
        let other_result = experiment(other)?;
        let (natural, normalized) = match model {
            WeightModel::Natural => (&result, &other_result),
            WeightModel::Normalized => (&other_result, &result),
        };
        let gaps: Vec<_> = grid
            .iter()
            .zip(natural.estimates.iter().zip(&normalized.estimates))
            .map(|(q, (a, b))| {
                let (a, b) = (nf * a.max_rank().mean, nf * b.max_rank().mean);
                json!({ "quota": q, "natural_scaled_max": a, "normalized_scaled_max": b, "gap": a - b })
            })
            .collect();
        let max_gap = gaps
            .iter()
            .filter_map(|g| g["gap"].as_f64())
            .map(f64::abs)
            .fold(0.0, f64::max);
        summary["model_gap"] = json!({ "per_quota": gaps, "max_abs_gap": max_gap });
        line.push_str(&format!(", natural-normalized max-rank gap = {max_gap:.4}"));
    }

    Ok(Output {
        body: table(format, &rows)?,
        summary,
        line,
    })
}

#[derive(Serialize)]
struct ShapleyRow {
    rank: usize,
    value: f64,
    stderr: Option<f64>,
}

pub fn shapley(s: &Settings) -> CliResult<Output> {
    let format = Format::from_settings(s)?;
    let weights = parse_list(s.str("weights")?).map_err(|e| CliError::config(format!("`weights`: {e}")))?;
    let game = Game::new(weights, s.parse("quota")?)?;
    let profile = match s.str("method")? {
        "exact_perm" => shapley_exact_perm(&game)?,
        "exact_subset" => shapley_exact_subset(&game)?,
        "sampled" => shapley_sample_perms(&game, s.parse("samples")?, s.parse("seed")?)?,
        other => {
            return Err(CliError::config(format!(
                "method `{other}`: expected exact_perm, exact_subset or sampled"
            )))
        }
    };
    let body = match format {
        Format::Json => json_bytes(&profile)?,
        Format::Csv => {
            let rows: Vec<ShapleyRow> = profile
                .values
                .iter()
                .enumerate()
                .map(|(i, &value)| ShapleyRow {
                    rank: i + 1,
                    value,
                    stderr: profile.stderr.as_ref().map(|e| e[i]),
                })
                .collect();
            table(format, &rows)?
        }
    };
    Ok(Output {
        body,
        summary: json!({ "proper": profile.proper, "sum": profile.sum() }),
        line: format!(
            "shapley: {} agents, method {}, sum = {:.12}{}",
            game.n(),
            profile.method,
            profile.sum(),
            if profile.proper { "" } else { " (improper quota)" }
        ),
    })
}
