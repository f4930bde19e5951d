//! Command-line experiment runner: `run`, `sweep` and `bounds`, all writing CSV.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{self, BoundReport};
use crate::engine::{self, summarize, EngineError, RunMetrics};
use crate::model::{ConfigError, SimConfig};
use crate::policies::{PolicyError, PolicyKind};

/// Significant digits of every number written to CSV.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("cannot read config file {path}: {source}")]
    ReadConfig { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    ConfigSyntax { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    InvalidConfig { path: PathBuf, source: ConfigError },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot write output: {0}")]
    Write(#[from] io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for bad invocations, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Policy(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rit", version, about = "Perimeter-defense simulator: runs, λ-sweeps and analytic bound curves as CSV")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one policy; one row per run plus an aggregate row when --runs > 1.
    Run(RunArgs),
    /// Mean capture fraction with 95% interval for each (λ, policy).
    Sweep(SweepArgs),
    /// Analytic bounds only.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub policy: String,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Overrides the warm-up in the config file.
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Base parameters; `lambda` may be omitted.
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub policies: Vec<String>,
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda_grid: Vec<f64>,
    #[arg(long)]
    pub v: f64,
    #[arg(long, default_value_t = SimConfig::DEFAULT_RHO)]
    pub rho: f64,
    #[arg(long, default_value_t = SimConfig::DEFAULT_CAPITAL_D)]
    pub capital_d: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Bounds(args) => cmd_bounds(&args),
    }
}

/// `%g`-style formatting with [`SIGNIFICANT_DIGITS`] digits: trailing zeros
/// dropped, exponent form outside `[1e-4, 1e12)`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let p = SIGNIFICANT_DIGITS;
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_number(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

/// `key = value` settings as read from a file, before defaults are applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub lambda: Option<f64>,
    pub v: Option<f64>,
    pub rho: Option<f64>,
    pub capital_d: Option<f64>,
    pub horizon: Option<f64>,
    pub warmup: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    /// Blank lines and `#` comments are ignored; unknown or repeated keys are errors.
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let err = |message: String| CliError::ConfigSyntax {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let float = || {
                value
                    .parse::<f64>()
                    .map_err(|_| err(format!("`{key}` needs a number, got `{value}`")))
            };
            let slot_taken = |taken: bool| {
                if taken {
                    Err(err(format!("`{key}` given twice")))
                } else {
                    Ok(())
                }
            };
            match key {
                "lambda" => {
                    slot_taken(cfg.lambda.is_some())?;
                    cfg.lambda = Some(float()?);
                }
                "v" => {
                    slot_taken(cfg.v.is_some())?;
                    cfg.v = Some(float()?);
                }
                "rho" => {
                    slot_taken(cfg.rho.is_some())?;
                    cfg.rho = Some(float()?);
                }
                "capital_d" => {
                    slot_taken(cfg.capital_d.is_some())?;
                    cfg.capital_d = Some(float()?);
                }
                "horizon" => {
                    slot_taken(cfg.horizon.is_some())?;
                    cfg.horizon = Some(float()?);
                }
                "warmup" => {
                    slot_taken(cfg.warmup.is_some())?;
                    cfg.warmup = Some(float()?);
                }
                "seed" => {
                    slot_taken(cfg.seed.is_some())?;
                    cfg.seed = Some(
                        value
                            .parse()
                            .map_err(|_| err(format!("`seed` needs an unsigned integer, got `{value}`")))?,
                    );
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Applies defaults (`rho`, `capital_d`, warm-up at 20% of the horizon,
    /// seed 0). `lambda` falls back to `lambda`, which sweeps supply.
    pub fn resolve(&self, path: &Path, lambda: Option<f64>) -> Result<SimConfig, CliError> {
        let missing = |key: &str| CliError::ConfigSyntax {
            path: path.to_path_buf(),
            line: 0,
            message: format!("missing required key `{key}`"),
        };
        let horizon = self.horizon.ok_or_else(|| missing("horizon"))?;
        let cfg = SimConfig {
            lambda: self.lambda.or(lambda).ok_or_else(|| missing("lambda"))?,
            v: self.v.ok_or_else(|| missing("v"))?,
            rho: self.rho.unwrap_or(SimConfig::DEFAULT_RHO),
            capital_d: self.capital_d.unwrap_or(SimConfig::DEFAULT_CAPITAL_D),
            horizon,
            warmup: self.warmup.unwrap_or(SimConfig::DEFAULT_WARMUP_FRACTION * horizon),
            seed: self.seed.unwrap_or(0),
        };
        cfg.validate().map_err(|source| CliError::InvalidConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(cfg)
    }
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_policy(name: &str) -> Result<PolicyKind, CliError> {
    Ok(name.trim().parse::<PolicyKind>()?)
}

pub const RUN_HEADER: [&str; 15] = [
    "run",
    "policy",
    "seed",
    "lambda",
    "v",
    "rho",
    "capital_d",
    "horizon",
    "warmup",
    "n_capt",
    "n_esc",
    "unresolved",
    "capture_fraction",
    "ci_low",
    "ci_high",
];

fn config_fields(cfg: &SimConfig) -> [String; 6] {
    [
        format_number(cfg.lambda),
        format_number(cfg.v),
        format_number(cfg.rho),
        format_number(cfg.capital_d),
        format_number(cfg.horizon),
        format_number(cfg.warmup),
    ]
}

/// Per-run rows; run `i` is seeded from the base seed and `i`, as in sweeps.
pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let policy = parse_policy(&args.policy)?;
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let file = ConfigFile::load(&args.config)?;
    let mut file_cfg = file.clone();
    if let Some(seed) = args.seed {
        file_cfg.seed = Some(seed);
    }
    if let Some(w) = args.warmup {
        file_cfg.warmup = Some(w);
    }
    let base = file_cfg.resolve(&args.config, None)?;

    let results: Vec<RunMetrics> = (0..args.runs as u64)
        .into_par_iter()
        .map(|i| engine::run_simulation(&base.for_run(i), policy))
        .collect::<Result<_, _>>()?;

    let mut w = csv::Writer::from_writer(open_output(args.out.as_deref())?);
    w.write_record(RUN_HEADER)?;
    for (i, m) in results.iter().enumerate() {
        let mut row = vec![i.to_string(), policy.to_string(), m.seed.to_string()];
        row.extend(config_fields(&m.config));
        row.extend([
            m.n_capt.to_string(),
            m.n_esc.to_string(),
            m.unresolved.to_string(),
            opt_number(m.capture_fraction()),
            String::new(),
            String::new(),
        ]);
        w.write_record(&row)?;
    }
    if args.runs > 1 {
        let fractions: Vec<f64> = results.iter().filter_map(RunMetrics::capture_fraction).collect();
        let summary = summarize(&fractions);
        let mut row = vec!["aggregate".to_string(), policy.to_string(), base.seed.to_string()];
        row.extend(config_fields(&base));
        row.extend([
            results.iter().map(|m| m.n_capt).sum::<usize>().to_string(),
            results.iter().map(|m| m.n_esc).sum::<usize>().to_string(),
            results.iter().map(|m| m.unresolved).sum::<usize>().to_string(),
            opt_number(summary.map(|s| s.0)),
            opt_number(summary.map(|s| s.0 - s.2)),
            opt_number(summary.map(|s| s.0 + s.2)),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Grid, policies and run count of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub lambda_grid: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub runs: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.lambda_grid.is_empty() {
            return Err(CliError::Usage("--lambda-grid is empty".into()));
        }
        if self.lambda_grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(CliError::Usage("--lambda-grid values must be finite and > 0".into()));
        }
        if self.lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage("--lambda-grid must be strictly increasing".into()));
        }
        if self.policies.is_empty() {
            return Err(CliError::Usage("--policies is empty".into()));
        }
        if self.runs < 2 {
            return Err(CliError::Usage("--runs must be at least 2 for a confidence interval".into()));
        }
        Ok(())
    }
}

pub const SWEEP_HEADER: [&str; 10] = [
    "lambda",
    "policy",
    "mean_fraction",
    "ci_low",
    "ci_high",
    "runs",
    "upper_bound",
    "policy_lower_bound",
    "seed",
    "la_ncla_factor",
];

/// Analytic guarantee for `policy`, where one exists and applies.
pub fn policy_lower_bound(policy: PolicyKind, cfg: &SimConfig) -> Option<f64> {
    match policy {
        PolicyKind::Fcfs | PolicyKind::Sac => Some(bounds::fcfs_lower_bound(cfg.lambda, cfg.rho)),
        PolicyKind::La => bounds::look_ahead_applicable(cfg.v, cfg.rho, cfg.capital_d)
            .then(|| bounds::la_lower_bound(cfg.lambda, cfg.rho)),
        PolicyKind::Ncla => None,
        PolicyKind::Rmhp => Some(bounds::rmhp_lower_bound(cfg.lambda, cfg.v, cfg.rho)),
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let policies = args
        .policies
        .iter()
        .map(|p| parse_policy(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut file = ConfigFile::load(&args.config)?;
    if let Some(seed) = args.seed {
        file.seed = Some(seed);
    }
    let first = args.lambda_grid.first().copied().unwrap_or(1.0);
    let spec = SweepSpec {
        base: file.resolve(&args.config, Some(first))?,
        lambda_grid: args.lambda_grid.clone(),
        policies,
        runs: args.runs,
    };
    spec.validate()?;

    let mut w = csv::Writer::from_writer(open_output(args.out.as_deref())?);
    w.write_record(SWEEP_HEADER)?;
    for &lambda in &spec.lambda_grid {
        let cfg = SimConfig { lambda, ..spec.base };
        for &policy in &spec.policies {
            let est = engine::estimate(&cfg, policy, spec.runs)?;
            if !est.excluded.is_empty() {
                eprintln!(
                    "note: λ={} {policy}: {} of {} runs resolved nothing after warm-up and were excluded",
                    format_number(lambda),
                    est.excluded.len(),
                    est.runs
                );
            }
            let factor = match policy {
                PolicyKind::La | PolicyKind::Ncla => bounds::la_ncla_factor(cfg.v, cfg.rho, cfg.capital_d).ok(),
                _ => None,
            };
            w.write_record([
                format_number(lambda),
                policy.to_string(),
                format_number(est.mean),
                format_number(est.ci_low()),
                format_number(est.ci_high()),
                est.used().to_string(),
                format_number(bounds::upper_bound(lambda, cfg.v, cfg.rho)),
                opt_number(policy_lower_bound(policy, &cfg)),
                cfg.seed.to_string(),
                opt_number(factor),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const BOUNDS_HEADER: [&str; 15] = [
    "lambda",
    "v",
    "rho",
    "capital_d",
    "upper_bound",
    "fcfs_lower_bound",
    "la_lower_bound",
    "la_ncla_factor",
    "rmhp_lower_bound",
    "travel_time_lower_bound",
    "optimality_ratio",
    "improved_ratio",
    "ratio_informative",
    "status",
    "degenerate",
];

pub fn cmd_bounds(args: &BoundsArgs) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&args.v) {
        return Err(CliError::Usage(format!("--v must lie in [0, 1), got {}", args.v)));
    }
    if !(args.rho > 0.0 && args.capital_d > args.rho && args.capital_d.is_finite()) {
        return Err(CliError::Usage(format!(
            "need 0 < rho < capital_d, got rho={} capital_d={}",
            args.rho, args.capital_d
        )));
    }
    if args.lambda_grid.is_empty() || args.lambda_grid.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
        return Err(CliError::Usage("--lambda-grid values must be finite and >= 0".into()));
    }

    let mut w = csv::Writer::from_writer(open_output(args.out.as_deref())?);
    w.write_record(BOUNDS_HEADER)?;
    for &lambda in &args.lambda_grid {
        let rep = BoundReport::evaluate(lambda, args.v, args.rho, args.capital_d);
        let status = if rep.look_ahead_applicable() {
            "ok"
        } else {
            "theorem inapplicable"
        };
        w.write_record([
            format_number(lambda),
            format_number(args.v),
            format_number(args.rho),
            format_number(args.capital_d),
            format_number(rep.upper),
            format_number(rep.fcfs_lower),
            opt_number(rep.la_lower),
            opt_number(rep.la_ncla_factor),
            format_number(rep.rmhp_lower),
            format_number(rep.travel_time_lb),
            format_number(rep.ratio.ratio),
            format_number(rep.ratio.improved_ratio),
            rep.ratio.informative.to_string(),
            status.to_string(),
            rep.degenerate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
