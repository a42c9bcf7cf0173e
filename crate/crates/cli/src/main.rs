//! Batch command line for the worst-case expectation toolkit: exact
//! evaluation, seeded estimation, hard-instance construction,
//! sample-complexity bounds, and CSV experiment runs.
//!
//! Exit codes are a stable contract: 0 success, 2 flag or input
//! validation, 3 solver failure, 4 IO. Stdout carries a single JSON
//! document (experiments also write their CSV to the configured path);
//! diagnostics go to stderr.

use clap::{Parser, Subcommand};
use phi_dro::bounds::{
    sample_lower_bound, sample_upper_bound, sublinear_constants, sublinear_hard_instance,
    superlinear_hard_instance, BoundsError, HardInstance, SublinearConstants, UpperBoundMode,
};
use phi_dro::divergence::{DivergenceError, DivergenceKind, DivergenceSpec, GrowthClass};
use phi_dro::experiments::{run_config, ExperimentConfig, ExperimentError};
use phi_dro::risk::{truncated_risk, worst_case_expectation, FiniteInstance, RiskError};
use phi_dro::saa::draw_empirical;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn from_divergence(e: DivergenceError) -> CliError {
    match e {
        DivergenceError::NonConvergence { .. } => CliError::Solver(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

fn from_risk(e: RiskError) -> CliError {
    match e {
        RiskError::InvalidInstance(_) | RiskError::InvalidInput(_) => {
            CliError::Validation(e.to_string())
        }
        RiskError::Divergence(d) => from_divergence(d),
        RiskError::GapTooLarge { .. } => CliError::Solver(e.to_string()),
    }
}

fn from_bounds(e: BoundsError) -> CliError {
    match e {
        BoundsError::Divergence(d) => from_divergence(d),
        _ => CliError::Validation(e.to_string()),
    }
}

fn from_experiment(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::InvalidConfig(_) => CliError::Validation(e.to_string()),
        ExperimentError::Trial { .. } => CliError::Solver(e.to_string()),
        ExperimentError::Risk(r) => from_risk(r),
        ExperimentError::Bounds(b) => from_bounds(b),
        ExperimentError::Io(i) => CliError::Io(i.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "phi-dro",
    version,
    about = "Worst-case expectations over phi-divergence balls on finite sample spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the exact worst-case expectation for an instance file.
    Eval {
        /// JSON file with {"payoffs": [...], "probabilities": [...]}.
        #[arg(long, value_name = "FILE")]
        instance: PathBuf,
        /// Divergence name, with a parameter after a colon where one is
        /// needed: kl, cvar:0.1, cressie_read:2.0, variation, burg,
        /// neyman_chi_sq, hellinger, ess_sup.
        #[arg(long, value_name = "NAME[:PARAM]")]
        divergence: String,
        /// Divergence budget.
        #[arg(long)]
        tau: f64,
        /// Certified primal-dual gap tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Draw a seeded empirical measure and solve the worst case on it.
    Estimate {
        /// JSON file with {"payoffs": [...], "probabilities": [...]}.
        #[arg(long, value_name = "FILE")]
        instance: PathBuf,
        /// Divergence name, with a parameter after a colon where one is
        /// needed.
        #[arg(long, value_name = "NAME[:PARAM]")]
        divergence: String,
        /// Divergence budget.
        #[arg(long)]
        tau: f64,
        /// Number of samples to draw.
        #[arg(long)]
        n: u64,
        /// Base seed of the counter-based sample stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trial index selecting the counter stream.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Certified primal-dual gap tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Also report the estimate truncated at this density level.
        #[arg(long, value_name = "L")]
        truncate: Option<f64>,
    },
    /// Build a two-point instance witnessing a sample-size lower bound.
    HardInstance {
        /// Divergence name, with a parameter after a colon where one is
        /// needed.
        #[arg(long, value_name = "NAME[:PARAM]")]
        divergence: String,
        /// Divergence budget.
        #[arg(long)]
        tau: f64,
        /// High-atom mass; only for sublinear-growth divergences.
        #[arg(long)]
        p: Option<f64>,
        /// Target accuracy; only for unbounded-growth divergences.
        #[arg(long)]
        eps: Option<f64>,
        /// Payoff bound for the unbounded-growth construction.
        #[arg(long = "B", default_value_t = 1.0)]
        b: f64,
    },
    /// Evaluate sample-complexity bounds for a divergence and budget.
    Bounds {
        /// Divergence name, with a parameter after a colon where one is
        /// needed.
        #[arg(long, value_name = "NAME[:PARAM]")]
        divergence: String,
        /// Divergence budget.
        #[arg(long)]
        tau: f64,
        /// Payoff bound the guarantees are stated at.
        #[arg(long = "B")]
        b: f64,
        /// Target estimation accuracy.
        #[arg(long)]
        eps: f64,
        /// Failure probability the sample sizes guarantee.
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
    },
    /// Run a JSON-configured experiment and write its CSV curve.
    Experiment {
        /// JSON experiment configuration file.
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Cap the number of worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Override the config output path.
        #[arg(long, value_name = "PATH")]
        output: Option<String>,
    },
}

fn parse_divergence(text: &str) -> Result<DivergenceSpec, CliError> {
    let (name, param) = match text.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (text, None),
    };
    let value = |example: &str| -> Result<f64, CliError> {
        let raw = param.ok_or_else(|| {
            CliError::Validation(format!("{name} needs a parameter, e.g. {name}:{example}"))
        })?;
        raw.parse().map_err(|_| {
            CliError::Validation(format!("{name} parameter {raw:?} is not a number"))
        })
    };
    let plain = |spec: DivergenceSpec| -> Result<DivergenceSpec, CliError> {
        match param {
            Some(p) => {
                Err(CliError::Validation(format!("{name} takes no parameter, got {p:?}")))
            }
            None => Ok(spec),
        }
    };
    match name {
        "kl" => plain(DivergenceSpec::kl()),
        "variation" => plain(DivergenceSpec::variation()),
        "burg" => plain(DivergenceSpec::burg()),
        "neyman_chi_sq" => plain(DivergenceSpec::neyman_chi_sq()),
        "hellinger" => plain(DivergenceSpec::hellinger()),
        "ess_sup" => plain(DivergenceSpec::ess_sup()),
        "cvar" => DivergenceSpec::cvar(value("0.1")?).map_err(from_divergence),
        "cressie_read" => DivergenceSpec::cressie_read(value("2.0")?).map_err(from_divergence),
        _ => Err(CliError::Validation(format!(
            "unknown divergence {name:?}; expected kl, cvar:A, cressie_read:K, variation, \
             burg, neyman_chi_sq, hellinger, or ess_sup"
        ))),
    }
}

fn load_instance(path: &Path) -> Result<FiniteInstance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("parsing {}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct EstimateOutput {
    r_n: f64,
    #[serde(rename = "r_n_L", skip_serializing_if = "Option::is_none")]
    r_n_truncated: Option<f64>,
}

#[derive(Serialize)]
struct BoundsOutput {
    lower: Option<f64>,
    upper_hoeffding: Option<f64>,
    upper_bernstein: Option<f64>,
    upper_increment: Option<f64>,
    le_cam_n: Option<u64>,
    hard_instance: Option<HardInstance>,
}

#[derive(Serialize)]
struct SublinearBoundsOutput {
    constants: SublinearConstants,
    le_cam_n: u64,
    hard_instance: HardInstance,
    note: &'static str,
}

const UNBOUNDED_NOTE: &str = "sample complexity can be made arbitrarily large";

/// Ok(None) when the quantity is genuinely unavailable at these inputs
/// (no finite truncation level, or the construction needs a smaller eps);
/// other failures keep their exit semantics.
fn optional<T>(result: Result<T, BoundsError>) -> Result<Option<T>, CliError> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(BoundsError::Divergence(DivergenceError::GrowthUnbounded { .. }))
        | Err(BoundsError::EpsTooLarge { .. }) => Ok(None),
        Err(e) => Err(from_bounds(e)),
    }
}

fn cmd_bounds(spec: &DivergenceSpec, tau: f64, b: f64, eps: f64, delta: f64) -> Result<(), CliError> {
    if matches!(spec.kind(), DivergenceKind::EssSupIndicator) {
        return Err(CliError::Validation(UNBOUNDED_NOTE.into()));
    }
    if spec.growth_class() == GrowthClass::Sublinear {
        let constants = sublinear_constants(spec, tau).map_err(from_bounds)?;
        let hard = sublinear_hard_instance(spec, tau, 0.5 * constants.probability_ceiling)
            .map_err(from_bounds)?;
        eprintln!("note: {UNBOUNDED_NOTE}; bound formulas do not apply");
        return print_json(&SublinearBoundsOutput {
            constants,
            le_cam_n: hard.le_cam_n,
            hard_instance: hard,
            note: UNBOUNDED_NOTE,
        });
    }
    let lower = optional(sample_lower_bound(spec, tau, b, eps))?;
    let upper_hoeffding =
        optional(sample_upper_bound(spec, tau, b, eps, delta, UpperBoundMode::Hoeffding))?;
    let upper_bernstein =
        optional(sample_upper_bound(spec, tau, b, eps, delta, UpperBoundMode::Bernstein))?;
    let upper_increment =
        optional(sample_upper_bound(spec, tau, b, eps, delta, UpperBoundMode::Increment))?;
    let hard_instance = optional(superlinear_hard_instance(spec, tau, b, eps))?;
    let le_cam_n = hard_instance.as_ref().map(|h| h.le_cam_n);
    let out = BoundsOutput {
        lower,
        upper_hoeffding,
        upper_bernstein,
        upper_increment,
        le_cam_n,
        hard_instance,
    };
    if out.lower.is_none() || out.upper_increment.is_none() || out.hard_instance.is_none() {
        eprintln!("note: some quantities are not evaluable at these inputs; fields left null");
    }
    print_json(&out)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Eval { instance, divergence, tau, tol } => {
            let spec = parse_divergence(&divergence)?;
            let inst = load_instance(&instance)?;
            let report = worst_case_expectation(&inst, &spec, tau, tol).map_err(from_risk)?;
            print_json(&report)
        }
        Command::Estimate { instance, divergence, tau, n, seed, trial, tol, truncate } => {
            let spec = parse_divergence(&divergence)?;
            let inst = load_instance(&instance)?;
            if n < 1 {
                return Err(CliError::Validation("--n must be >= 1".into()));
            }
            let empirical = draw_empirical(&inst, n, seed, trial)
                .instance(&inst)
                .map_err(from_risk)?;
            let r_n = worst_case_expectation(&empirical, &spec, tau, tol)
                .map_err(from_risk)?
                .value;
            let r_n_truncated = truncate
                .map(|level| truncated_risk(&empirical, &spec, tau, level, tol))
                .transpose()
                .map_err(from_risk)?
                .map(|report| report.value);
            print_json(&EstimateOutput { r_n, r_n_truncated })
        }
        Command::HardInstance { divergence, tau, p, eps, b } => {
            let spec = parse_divergence(&divergence)?;
            if spec.growth_class() == GrowthClass::Sublinear {
                if eps.is_some() {
                    return Err(CliError::Validation(format!(
                        "{spec} has sublinear growth: pass --p, not --eps"
                    )));
                }
                let p = p.ok_or_else(|| {
                    CliError::Validation(format!("{spec} has sublinear growth: pass --p"))
                })?;
                let hard = sublinear_hard_instance(&spec, tau, p).map_err(from_bounds)?;
                print_json(&hard)
            } else {
                if p.is_some() {
                    return Err(CliError::Validation(format!(
                        "{spec} has unbounded growth: pass --eps (and optionally --B), not --p"
                    )));
                }
                let eps = eps.ok_or_else(|| {
                    CliError::Validation(format!("{spec} has unbounded growth: pass --eps"))
                })?;
                let hard = superlinear_hard_instance(&spec, tau, b, eps).map_err(from_bounds)?;
                print_json(&hard)
            }
        }
        Command::Bounds { divergence, tau, b, eps, delta } => {
            let spec = parse_divergence(&divergence)?;
            cmd_bounds(&spec, tau, b, eps, delta)
        }
        Command::Experiment { config, threads, seed, trials, output } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", config.display())))?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("parsing {}: {e}", config.display())))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(path) = output {
                cfg.output_path = path;
            }
            let summary = match threads {
                Some(0) => return Err(CliError::Validation("--threads must be >= 1".into())),
                Some(t) => rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| CliError::Validation(format!("building thread pool: {e}")))?
                    .install(|| run_config(&cfg).map_err(from_experiment))?,
                None => run_config(&cfg).map_err(from_experiment)?,
            };
            eprintln!("wrote {} rows to {}", summary.rows_written, cfg.output_path);
            print_json(&summary)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
