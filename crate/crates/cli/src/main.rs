//! `wvg`: simulate, predict and compare expected Shapley values of weighted
//! voting games with i.i.d. random weights.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric non-convergence,
//! 4 I/O error.

mod commands;
mod error;
mod figures;
mod manifest;
mod output;
mod settings;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Defaults;
use crate::error::{CliError, CliResult};
use crate::manifest::{sidecar_path, RunManifest};
use crate::output::Output;
use crate::settings::{read_config_file, Settings};

#[derive(Parser)]
#[command(name = "wvg", version, about = "Expected Shapley values in random weighted voting games")]
struct Cli {
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Plain `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output file; a `<out>.manifest.json` sidecar is written next to it.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimates of sorted-rank Shapley values over a quota grid.
    Simulate(SimulateArgs),
    /// Theoretical prediction for the max, min or a relative rank.
    Predict(PredictArgs),
    /// Renewal sum m(Q) against its linear asymptote.
    Renewal(RenewalArgs),
    /// Simulation joined with predictions, with deviations in standard errors.
    Compare(CompareArgs),
    /// Regenerate a figure dataset: fig1, fig2 or fig3.
    Figure(FigureArgs),
    /// Shapley values of one game given by weights and quota.
    Shapley(ShapleyArgs),
    /// Re-run the configuration recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Weight law, `uniform:a,b` or `exp:rate`.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// natural or normalized.
    #[arg(long)]
    model: Option<String>,
    /// `start:stop:step` or comma list; fractions for normalized, absolute for natural.
    #[arg(long)]
    quota_grid: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// one_perm or exact.
    #[arg(long)]
    estimator: Option<String>,
    /// Report every rank instead of the two extremes.
    #[arg(long)]
    full_profile: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// max, min or rank.
    #[arg(long)]
    target: Option<String>,
    /// Relative rank in (0, 1) for `--target rank`.
    #[arg(long)]
    p: Option<String>,
    /// auto, series, quadrature or asymptotic.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args)]
struct RenewalArgs {
    #[arg(long)]
    dist: Option<String>,
    /// none, below:x, above:x or mixture:p,x.
    #[arg(long)]
    cond: Option<String>,
    #[arg(long)]
    q_grid: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// mc or convolve.
    #[arg(long)]
    method: Option<String>,
    /// Lattice step for `--method convolve`.
    #[arg(long)]
    step: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Relative quotas in (0, 1).
    #[arg(long)]
    quota_grid: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Extra relative ranks compared against their limits, e.g. `0.25,0.5`.
    #[arg(long)]
    ranks: Option<String>,
    /// Also run the other model and record the max-rank gap.
    #[arg(long)]
    model_gap: bool,
}

#[derive(Args)]
struct FigureArgs {
    /// fig1, fig2 or fig3.
    name: String,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
struct ShapleyArgs {
    /// Comma-separated weights.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    quota: Option<String>,
    /// exact_perm, exact_subset or sampled.
    #[arg(long)]
    method: Option<String>,
    /// Permutations for `--method sampled`.
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
}

fn flag(set: bool) -> Option<String> {
    set.then(|| "true".to_string())
}

type Pairs = Vec<(&'static str, Option<String>)>;

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Predict(_) => "predict",
            Command::Renewal(_) => "renewal",
            Command::Compare(_) => "compare",
            Command::Figure(_) => "figure",
            Command::Shapley(_) => "shapley",
            Command::Replay(_) => "replay",
        }
    }

    fn pairs(self) -> Pairs {
        match self {
            Command::Simulate(a) => vec![
                ("dist", a.dist),
                ("n", a.n),
                ("model", a.model),
                ("quota-grid", a.quota_grid),
                ("reps", a.reps),
                ("seed", a.seed),
                ("estimator", a.estimator),
                ("full-profile", flag(a.full_profile)),
            ],
            Command::Predict(a) => vec![
                ("dist", a.dist),
                ("n", a.n),
                ("target", a.target),
                ("p", a.p),
                ("method", a.method),
            ],
            Command::Renewal(a) => vec![
                ("dist", a.dist),
                ("cond", a.cond),
                ("q-grid", a.q_grid),
                ("reps", a.reps),
                ("seed", a.seed),
                ("method", a.method),
                ("step", a.step),
            ],
            Command::Compare(a) => vec![
                ("dist", a.dist),
                ("n", a.n),
                ("model", a.model),
                ("quota-grid", a.quota_grid),
                ("reps", a.reps),
                ("seed", a.seed),
                ("ranks", a.ranks),
                ("model-gap", flag(a.model_gap)),
            ],
            Command::Figure(a) => vec![("name", Some(a.name)), ("reps", a.reps), ("seed", a.seed)],
            Command::Shapley(a) => vec![
                ("weights", a.weights),
                ("quota", a.quota),
                ("method", a.method),
                ("samples", a.samples),
                ("seed", a.seed),
            ],
            Command::Replay(_) => Vec::new(),
        }
    }
}

fn defaults_for(subcommand: &str) -> CliResult<Defaults> {
    Ok(match subcommand {
        "simulate" => commands::SIMULATE,
        "predict" => commands::PREDICT,
        "renewal" => commands::RENEWAL,
        "compare" => commands::COMPARE,
        "figure" => figures::FIGURE,
        "shapley" => commands::SHAPLEY,
        other => return Err(CliError::config(format!("unknown subcommand `{other}`"))),
    })
}

fn execute(subcommand: &str, settings: &Settings) -> CliResult<Output> {
    match subcommand {
        "simulate" => commands::simulate(settings),
        "predict" => commands::predict(settings),
        "renewal" => commands::renewal(settings),
        "compare" => commands::compare(settings),
        "figure" => figures::figure(settings),
        "shapley" => commands::shapley(settings),
        other => Err(CliError::config(format!("unknown subcommand `{other}`"))),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn run_settings(subcommand: &str, settings: Settings, threads: Option<usize>) -> CliResult<()> {
    let pool = match threads {
        Some(0) => return Err(CliError::config("--threads must be at least 1")),
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::config(format!("thread pool: {e}")))?;

    let started = chrono::Utc::now().to_rfc3339();
    let output = pool.install(|| execute(subcommand, &settings))?;
    let finished = chrono::Utc::now().to_rfc3339();

    match settings.opt_str("out") {
        Some(out) => {
            let out = PathBuf::from(out);
            write_file(&out, &output.body)?;
            let manifest = RunManifest {
                tool: "wvg".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                subcommand: subcommand.into(),
                config: settings.map().clone(),
                seed: settings.parse_opt("seed").ok().flatten(),
                threads: pool.current_num_threads(),
                started,
                finished,
                outputs: vec![out.display().to_string()],
                summary: output.summary,
            };
            manifest.write(&sidecar_path(&out))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&output.body)?;
            stdout.flush()?;
        }
    }
    eprintln!("{}", output.line);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = cli.threads;
    let subcommand = cli.command.name();
    if let Command::Replay(args) = cli.command {
        let manifest = RunManifest::read(&args.manifest)?;
        let mut settings = Settings::from_map(manifest.config);
        if let Some(out) = cli.out {
            settings.set("out", out);
        }
        if let Some(format) = cli.format {
            settings.set("format", format);
        }
        return run_settings(&manifest.subcommand, settings, threads);
    }

    let defaults = defaults_for(subcommand)?;
    let file = match &cli.config {
        Some(path) => read_config_file(path, subcommand)?,
        None => BTreeMap::new(),
    };
    let mut pairs = cli.command.pairs();
    pairs.push(("format", cli.format));
    pairs.push(("out", cli.out));
    let mut settings = Settings::resolve(defaults, &file, pairs)?;
    if subcommand == "figure" && settings.opt_str("out").is_none() {
        let name = settings.str("name")?.to_string();
        settings.set("out", figures::default_out(&name));
    }
    run_settings(subcommand, settings, threads)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
