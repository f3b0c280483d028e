//! `countmass`: simulate processes, estimate count-mass vectors and run
//! seeded Monte Carlo experiments.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 3 for model errors.

mod output;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use countmass::estimators::{default_transition_point, estimate, EstimatorKind, HybridConfig, HybridEstimate};
use countmass::evaluation::{
    format_f64, plugin_zeta_threshold, theorem1_rate, tv_risk_monte_carlo, EstimatorSpec, RiskConfig,
    RiskReport, CONSTANT_FREE, CSV_HEADER,
};
use countmass::processes::{default_window, sample_trajectory, ProcessModel};
use countmass::seqcore::TokenSequence;

#[derive(Parser, Debug)]
#[command(name = "countmass", version, about = "Count-mass estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a trajectory and write it as a token file.
    Simulate(Common),
    /// Estimate the count-mass vector of a token file or a simulated trajectory.
    Estimate(Common),
    /// Monte Carlo TV risk against the model's stationary law.
    Evaluate(Common),
    /// Risk over an ascending grid of sample sizes.
    Sweep(Common),
    /// Constant-free reference rates and thresholds.
    Bounds(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Token file, one token per line.
    #[arg(long)]
    tokens: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated ascending sample sizes.
    #[arg(long = "n-grid", value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long, default_value = "auto")]
    tau: Setting,
    #[arg(long = "zeta-bar", default_value = "auto")]
    zeta_bar: Setting,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Estimator; `sweep` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "hybrid")]
    estimator: Vec<EstimatorKind>,
    /// Failure probability for `bounds`.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Mixing level for `bounds`; defaults to 1/n.
    #[arg(long)]
    eps: Option<f64>,
    /// Report the per-count error breakdown over every count.
    #[arg(long)]
    full_breakdown: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Setting {
    Auto,
    Value(usize),
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Setting::Auto);
        }
        s.parse()
            .map(Setting::Value)
            .map_err(|_| format!("expected a nonnegative integer or \"auto\", got {s:?}"))
    }
}

impl Setting {
    fn value(self) -> Option<usize> {
        match self {
            Setting::Auto => None,
            Setting::Value(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Model(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "input error: {m}"),
            CliError::Model(m) => write!(f, "model error: {m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(_) => 3,
        }
    }
}

impl From<countmass::Error> for CliError {
    fn from(e: countmass::Error) -> Self {
        use countmass::Error as E;
        match e {
            E::InvalidModel(_) | E::NotErgodic { .. } | E::SlowMixing { .. } => CliError::Model(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn need<T: Copy>(value: Option<T>, flag: &str, command: &str) -> CliResult<T> {
    value.ok_or_else(|| usage(format!("{flag} is required for {command}")))
}

fn load_model(c: &Common, command: &str) -> CliResult<ProcessModel> {
    let path = c
        .model
        .as_ref()
        .ok_or_else(|| usage(format!("--model is required for {command}")))?;
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("--model: cannot read {}: {e}", path.display())))?;
    Ok(ProcessModel::from_json(&text)?)
}

fn optional_model(c: &Common) -> CliResult<Option<ProcessModel>> {
    match c.model {
        Some(_) => load_model(c, "estimate").map(Some),
        None => Ok(None),
    }
}

fn single_estimator(c: &Common) -> CliResult<EstimatorKind> {
    match c.estimator.as_slice() {
        [k] => Ok(*k),
        _ => Err(usage("--estimator takes a single value for this command")),
    }
}

fn reject_grid(c: &Common, command: &str) -> CliResult<()> {
    if c.n_grid.is_some() {
        return Err(usage(format!("--n-grid is only accepted by sweep and bounds, not {command}")));
    }
    Ok(())
}

fn n_values(c: &Common, command: &str) -> CliResult<Vec<usize>> {
    let grid = match (&c.n, &c.n_grid) {
        (Some(_), Some(_)) => return Err(usage("give either --n or --n-grid, not both")),
        (Some(n), None) => vec![*n],
        (None, Some(g)) => g.clone(),
        (None, None) => return Err(usage(format!("--n-grid is required for {command}"))),
    };
    if grid.is_empty() {
        return Err(usage("--n-grid must not be empty"));
    }
    if let Some(&bad) = grid.iter().find(|&&n| n == 0) {
        return Err(usage(format!("--n-grid: sample sizes must be >= 1, got {bad}")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--n-grid must be strictly ascending"));
    }
    Ok(grid)
}

fn risk_config(c: &Common, kind: EstimatorKind, n: usize, command: &str) -> CliResult<RiskConfig> {
    let reps = need(c.reps, "--reps", command)?;
    if reps == 0 {
        return Err(usage("--reps must be >= 1"));
    }
    Ok(RiskConfig {
        estimator: EstimatorSpec {
            kind,
            tau: c.tau.value(),
            zeta_bar: c.zeta_bar.value(),
        },
        n,
        reps,
        seed: need(c.seed, "--seed", command)?,
        full_breakdown: c.full_breakdown,
    })
}

fn simulate(c: &Common) -> CliResult<String> {
    reject_grid(c, "simulate")?;
    let model = load_model(c, "simulate")?;
    let n = need(c.n, "--n", "simulate")?;
    let seed = need(c.seed, "--seed", "simulate")?;
    let seq = sample_trajectory(&model, n, seed)?;
    Ok(match c.format.unwrap_or(Format::Csv) {
        Format::Csv => seq.tokens().flat_map(|t| [t, "\n"]).collect(),
        Format::Json => output::to_json(&seq.tokens().collect::<Vec<_>>()),
    })
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    estimator: &'static str,
    source: &'static str,
    #[serde(flatten)]
    estimate: &'a HybridEstimate,
}

fn estimate_cmd(c: &Common) -> CliResult<String> {
    reject_grid(c, "estimate")?;
    let kind = single_estimator(c)?;
    let model = optional_model(c)?;
    let (seq, source) = match (&c.tokens, &model) {
        (Some(path), _) => {
            if c.n.is_some() || c.seed.is_some() {
                return Err(usage("--n and --seed do not apply when --tokens is given"));
            }
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("--tokens: cannot read {}: {e}", path.display())))?;
            (TokenSequence::parse_token_file(&text), "tokens")
        }
        (None, Some(m)) => {
            let n = need(c.n, "--n", "estimate from a model")?;
            let seed = need(c.seed, "--seed", "estimate from a model")?;
            (sample_trajectory(m, n, seed)?, "model")
        }
        (None, None) => return Err(usage("estimate needs --tokens or --model")),
    };
    let n = seq.len();
    if n == 0 {
        return Err(usage("--tokens: the token file is empty"));
    }
    let tau = match (c.tau, &model) {
        (Setting::Value(t), _) => t,
        (Setting::Auto, Some(m)) => default_window(m, n)?,
        (Setting::Auto, None) => {
            return Err(usage("--tau auto needs --model to resolve the mixing time; pass an integer --tau"))
        }
    };
    let zeta_bar = match c.zeta_bar {
        Setting::Value(z) => z,
        Setting::Auto => default_transition_point(n)?,
    };
    let cfg = HybridConfig::new(tau, zeta_bar, n)?;
    let est = estimate(&seq, kind, &cfg)?;
    Ok(match c.format.unwrap_or(Format::Json) {
        Format::Json => output::to_json(&EstimateOutput {
            estimator: kind.name(),
            source,
            estimate: &est,
        }),
        Format::Csv => {
            let mut s = String::from("zeta,mass\n");
            for (z, m) in est.mass.as_slice().iter().enumerate() {
                s.push_str(&format!("{z},{}\n", format_f64(*m)));
            }
            s
        }
    })
}

fn csv_table(reports: &[RiskReport]) -> String {
    let mut s = format!("estimator,{CSV_HEADER}\n");
    for r in reports {
        s.push_str(&format!("{},{}\n", r.estimator, r.csv_row()));
    }
    s
}

fn evaluate(c: &Common) -> CliResult<String> {
    reject_grid(c, "evaluate")?;
    if c.tokens.is_some() {
        return Err(usage(
            "evaluate compares against a known stationary law; it takes --model, not --tokens",
        ));
    }
    let model = load_model(c, "evaluate")?;
    let kind = single_estimator(c)?;
    let n = need(c.n, "--n", "evaluate")?;
    let report = tv_risk_monte_carlo(&model, &risk_config(c, kind, n, "evaluate")?)?;
    Ok(match c.format.unwrap_or(Format::Json) {
        Format::Json => output::to_json(&report),
        Format::Csv => csv_table(std::slice::from_ref(&report)),
    })
}

fn sweep(c: &Common) -> CliResult<String> {
    if c.tokens.is_some() {
        return Err(usage("sweep takes --model, not --tokens"));
    }
    let model = load_model(c, "sweep")?;
    let grid = n_values(c, "sweep")?;
    let mut cells = Vec::new();
    for &n in &grid {
        for &kind in &c.estimator {
            cells.push(risk_config(c, kind, n, "sweep")?);
        }
    }
    let reports = cells
        .par_iter()
        .map(|cfg| tv_risk_monte_carlo(&model, cfg))
        .collect::<countmass::Result<Vec<_>>>()?;
    Ok(match c.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_table(&reports),
        Format::Json => output::to_json(&reports),
    })
}

#[derive(Serialize)]
struct BoundsRow {
    n: usize,
    tau: usize,
    zeta_bar: usize,
    delta: f64,
    eps: f64,
    tau0: usize,
    theory_rate: f64,
    plugin_zeta_threshold: f64,
    constants: &'static str,
}

const BOUNDS_HEADER: &str = "n,tau,zeta_bar,delta,eps,tau0,theory_rate,plugin_zeta_threshold";

fn bounds(c: &Common) -> CliResult<String> {
    let model = load_model(c, "bounds")?;
    let grid = n_values(c, "bounds")?;
    if !(c.delta > 0.0 && c.delta < 1.0) {
        return Err(usage(format!("--delta must lie in (0, 1), got {}", c.delta)));
    }
    let rows = grid
        .iter()
        .map(|&n| {
            let eps = c.eps.unwrap_or(1.0 / n as f64);
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(usage(format!("--eps must lie in (0, 1], got {eps}")));
            }
            let tau = match c.tau.value() {
                Some(t) => t,
                None => default_window(&model, n)?,
            };
            let zeta_bar = match c.zeta_bar.value() {
                Some(z) => z,
                None => default_transition_point(n)?,
            };
            HybridConfig::new(tau, zeta_bar, n)?;
            let tau0 = model.mixing_time(eps / (n as f64 * n as f64))?;
            Ok(BoundsRow {
                n,
                tau,
                zeta_bar,
                delta: c.delta,
                eps,
                tau0,
                theory_rate: theorem1_rate(n, tau),
                plugin_zeta_threshold: plugin_zeta_threshold(tau0, n, c.delta)?,
                constants: CONSTANT_FREE,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(match c.format.unwrap_or(Format::Csv) {
        Format::Json => output::to_json(&rows),
        Format::Csv => {
            let mut s = format!("{BOUNDS_HEADER}\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.tau,
                    r.zeta_bar,
                    format_f64(r.delta),
                    format_f64(r.eps),
                    r.tau0,
                    format_f64(r.theory_rate),
                    format_f64(r.plugin_zeta_threshold)
                ));
            }
            s
        }
    })
}

fn run(cli: &Cli) -> CliResult<()> {
    let (text, common) = match &cli.command {
        Command::Simulate(c) => (simulate(c)?, c),
        Command::Estimate(c) => (estimate_cmd(c)?, c),
        Command::Evaluate(c) => (evaluate(c)?, c),
        Command::Sweep(c) => (sweep(c)?, c),
        Command::Bounds(c) => (bounds(c)?, c),
    };
    match &common.out {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("--out: cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("countmass: {e}");
            ExitCode::from(e.code())
        }
    }
}
