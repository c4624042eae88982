//! Command-line front end: configuration, dispatch, and CSV/JSON output.
//!
//! Exit codes: `0` success, `1` usage error, `2` numerical failure
//! (including a failed `verify` check). The default worker count is read
//! from `SUMRULE_WORKERS`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis_fit::{
    kappa_grid, kappa_sweep, polyfit, z32_constants, FitResult, Z32Constants,
};
use crate::error::Error;
use crate::fractional_green::{verify_composition, SquareRepresentation};
use crate::neumann_basis::DensityModel;
use crate::rr_spectrum::{
    asymptotic_level, solve, solve_with_estimates, z_from_spectrum, z_numerical,
    DEFAULT_BASIS_SIZE, DEFAULT_N_MAX,
};
use crate::special::zeta;
use crate::sum_rules::{
    renormalization_check, trace_assembly_limit, z1_exact, z_tilde, z_tilde_with,
    z_trace_limit_result, ExponentDomain, Route, SumRuleResult,
};
use crate::zero_mode_pt::{e0_series, ZeroModeRecursion};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const WORKERS_ENV: &str = "SUMRULE_WORKERS";
pub const CSV_HEADER: [&str; 10] = [
    "kappa",
    "s",
    "route",
    "value",
    "order0",
    "order1",
    "order2",
    "tail_estimate",
    "n_max",
    "basis_size",
];

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

pub const DEFAULT_TRUNCATION: usize = 2000;
pub const DEFAULT_TRACE_SIZE: usize = 40;
pub const DEFAULT_K_DOUBLE_SUM: usize = 4000;
pub const RENORMALIZATION_GAMMAS: [f64; 7] = [1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6];
pub const TRACE_GAMMAS: [f64; 7] = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Sumrule,
    Spectrum,
    SweepFit,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RouteArg {
    Perturbative,
    Trace,
    Exact,
    Numerical,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Perturbative => Route::Perturbative,
            RouteArg::Trace => Route::TraceAssembly,
            RouteArg::Exact => Route::ExactOrder1,
            RouteArg::Numerical => Route::NumericalSpectrum,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sumrule",
    version,
    about = "Spectral sum rules of the heterogeneous Neumann string"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Write records here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, env = WORKERS_ENV, global = true)]
    pub workers: Option<usize>,

    /// Include wall time in JSON records (breaks byte-identical reruns).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Evaluate Z(s) by one route.
    Sumrule(SumruleArgs),
    /// Rayleigh-Ritz levels against the asymptotic model.
    Spectrum(SpectrumArgs),
    /// Sweep Z(s) over a kappa grid and fit a polynomial.
    SweepFit(SweepFitArgs),
    /// Run the cross-route consistency checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SumruleArgs {
    #[arg(long, default_value_t = 1.5)]
    pub s: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = RouteArg::Perturbative)]
    pub route: RouteArg,
    /// Interior modes for the perturbative route, modes for the trace route.
    #[arg(long)]
    pub truncation: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub n_max: usize,
    #[arg(long, default_value_t = DEFAULT_BASIS_SIZE)]
    pub basis_size: usize,
    /// Comma-separated, strictly decreasing shifts for the trace route.
    #[arg(long, value_delimiter = ',')]
    pub gamma_sequence: Option<Vec<f64>>,
    /// Accept s outside (1, 3/2] for the perturbative route.
    #[arg(long)]
    pub allow_any_s: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub kappa: f64,
    #[arg(long, default_value_t = DEFAULT_BASIS_SIZE)]
    pub basis_size: usize,
    /// Number of levels to report.
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub levels: usize,
    /// Smaller basis used for per-level convergence estimates.
    #[arg(long)]
    pub coarse_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepFitArgs {
    #[arg(long, default_value_t = 1.5)]
    pub s: f64,
    /// `start:step:count` or a comma-separated list.
    #[arg(long, default_value = "0.01:0.01:20")]
    pub kappa_grid: String,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub n_max: usize,
    #[arg(long, default_value_t = DEFAULT_BASIS_SIZE)]
    pub basis_size: usize,
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    /// Truncation of the double sum in the analytic constants.
    #[arg(long, default_value_t = DEFAULT_K_DOUBLE_SUM)]
    pub k_double_sum: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub kappa: f64,
    /// Skip the Rayleigh-Ritz checks.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub n_max: usize,
    #[arg(long, default_value_t = DEFAULT_BASIS_SIZE)]
    pub basis_size: usize,
}

/// Fully resolved parameters of one run; echoed in every JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub s: f64,
    pub kappa: f64,
    pub kappa_grid: Vec<f64>,
    pub route: RouteArg,
    pub truncation: usize,
    pub n_max: usize,
    pub basis_size: usize,
    pub gamma_sequence: Vec<f64>,
    pub k_double_sum: usize,
    pub degree: usize,
    pub levels: usize,
    pub coarse_size: Option<usize>,
    pub quick: bool,
    pub allow_any_s: bool,
    pub output_path: Option<String>,
    pub format: Format,
    pub workers: Option<usize>,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: CommandKind::Sumrule,
            s: 1.5,
            kappa: 0.0,
            kappa_grid: kappa_grid(0.01, 20),
            route: RouteArg::Perturbative,
            truncation: DEFAULT_TRUNCATION,
            n_max: DEFAULT_N_MAX,
            basis_size: DEFAULT_BASIS_SIZE,
            gamma_sequence: RENORMALIZATION_GAMMAS.to_vec(),
            k_double_sum: DEFAULT_K_DOUBLE_SUM,
            degree: 4,
            levels: DEFAULT_N_MAX,
            coarse_size: None,
            quick: false,
            allow_any_s: false,
            output_path: None,
            format: Format::Json,
            workers: None,
            timing: false,
        }
    }
}

/// Parses `start:step:count` or `a,b,c`.
pub fn parse_kappa_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |what: &str| CliError::Usage(format!("invalid kappa grid `{spec}`: {what}"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:step:count"));
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad("start"))?;
        let step: f64 = parts[1].trim().parse().map_err(|_| bad("step"))?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad("count"))?;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    } else {
        spec.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad(v)))
            .collect()
    }
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let mut c = RunConfig {
            output_path: cli.output.as_ref().map(|p| p.display().to_string()),
            format: cli.format,
            workers: cli.workers,
            timing: cli.timing,
            ..RunConfig::default()
        };
        match &cli.command {
            Commands::Sumrule(a) => {
                c.command = CommandKind::Sumrule;
                c.s = a.s;
                c.kappa = a.kappa;
                c.route = a.route;
                c.n_max = a.n_max;
                c.basis_size = a.basis_size;
                c.allow_any_s = a.allow_any_s;
                c.truncation = a.truncation.unwrap_or(match a.route {
                    RouteArg::Trace => DEFAULT_TRACE_SIZE,
                    _ => DEFAULT_TRUNCATION,
                });
                c.gamma_sequence = a
                    .gamma_sequence
                    .clone()
                    .unwrap_or_else(|| TRACE_GAMMAS.to_vec());
            }
            Commands::Spectrum(a) => {
                c.command = CommandKind::Spectrum;
                c.kappa = a.kappa;
                c.basis_size = a.basis_size;
                c.levels = a.levels;
                c.coarse_size = a.coarse_size;
            }
            Commands::SweepFit(a) => {
                c.command = CommandKind::SweepFit;
                c.s = a.s;
                c.kappa_grid = parse_kappa_grid(&a.kappa_grid)?;
                c.n_max = a.n_max;
                c.basis_size = a.basis_size;
                c.degree = a.degree;
                c.k_double_sum = a.k_double_sum;
                c.route = RouteArg::Numerical;
            }
            Commands::Verify(a) => {
                c.command = CommandKind::Verify;
                c.kappa = a.kappa;
                c.quick = a.quick;
                c.n_max = a.n_max;
                c.basis_size = a.basis_size;
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks every parameter against the preconditions of the operations
    /// the command will call.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !self.s.is_finite() {
            return usage(format!("--s must be finite, got {}", self.s));
        }
        if !(self.kappa.abs() < 2.0) {
            return usage(format!(
                "--kappa: density 1 + kappa*x needs |kappa| < 2, got {}",
                self.kappa
            ));
        }
        if self.workers == Some(0) {
            return usage("--workers must be at least 1".into());
        }
        let window = |n_max: usize, basis: usize| -> Result<(), CliError> {
            if basis < 2 {
                return usage(format!("--basis-size must be at least 2, got {basis}"));
            }
            if n_max == 0 || n_max + 1 >= basis {
                return usage(format!(
                    "--n-max must satisfy 1 <= n_max < basis_size - 1 (got {n_max}, {basis})"
                ));
            }
            Ok(())
        };
        match self.command {
            CommandKind::Sumrule => match self.route {
                RouteArg::Perturbative => {
                    let ok = if self.allow_any_s {
                        self.s >= 1.0
                    } else {
                        self.s > 1.0 && self.s <= 1.5
                    };
                    if !ok {
                        return usage(format!(
                            "--s: perturbative route needs 1 < s <= 3/2 (or s >= 1 with --allow-any-s), got {}",
                            self.s
                        ));
                    }
                    if self.truncation == 0 {
                        return usage("--truncation must be at least 1".into());
                    }
                }
                RouteArg::Trace => {
                    if trace_root(self.s).is_none() {
                        return usage(format!(
                            "--s: trace route needs s = 1 + 1/N with N in {{2, 3}}, got {}",
                            self.s
                        ));
                    }
                    if self.truncation < 2 {
                        return usage("--truncation must be at least 2 for the trace route".into());
                    }
                    if self.gamma_sequence.len() < 4 {
                        return usage("--gamma-sequence needs at least 4 values".into());
                    }
                    if self.gamma_sequence.iter().any(|g| !(*g > 0.0))
                        || self.gamma_sequence.windows(2).any(|w| w[1] >= w[0])
                    {
                        return usage(
                            "--gamma-sequence must be positive and strictly decreasing".into(),
                        );
                    }
                }
                RouteArg::Exact => {
                    if self.s != 1.0 {
                        return usage(format!(
                            "--s: the exact route is the s = 1 rule, got {}",
                            self.s
                        ));
                    }
                }
                RouteArg::Numerical => {
                    if !(self.s > 0.5) {
                        return usage(format!(
                            "--s: numerical route needs s > 1/2, got {}",
                            self.s
                        ));
                    }
                    window(self.n_max, self.basis_size)?;
                }
            },
            CommandKind::Spectrum => {
                if self.basis_size < 2 {
                    return usage(format!(
                        "--basis-size must be at least 2, got {}",
                        self.basis_size
                    ));
                }
                if self.levels == 0 || self.levels >= self.basis_size {
                    return usage(format!(
                        "--levels must be in 1..basis_size, got {}",
                        self.levels
                    ));
                }
                if let Some(c) = self.coarse_size {
                    if c <= self.levels || c >= self.basis_size {
                        return usage(format!(
                            "--coarse-size must lie in (levels, basis_size), got {c}"
                        ));
                    }
                }
            }
            CommandKind::SweepFit => {
                if !(self.s > 0.5) {
                    return usage(format!("--s must exceed 1/2, got {}", self.s));
                }
                window(self.n_max, self.basis_size)?;
                if let Some(k) = self.kappa_grid.iter().find(|k| !(k.abs() < 2.0)) {
                    return usage(format!(
                        "--kappa-grid: every kappa needs |kappa| < 2, got {k}"
                    ));
                }
                if self.kappa_grid.len() <= self.degree {
                    return usage(format!(
                        "--degree {} needs more than {} grid points, got {}",
                        self.degree,
                        self.degree,
                        self.kappa_grid.len()
                    ));
                }
                if self.k_double_sum < 100 {
                    return usage(format!(
                        "--k-double-sum must be at least 100, got {}",
                        self.k_double_sum
                    ));
                }
            }
            CommandKind::Verify => {
                if !self.quick {
                    window(self.n_max, self.basis_size)?;
                }
            }
        }
        Ok(())
    }
}

fn trace_root(s: f64) -> Option<u32> {
    [2u32, 3]
        .into_iter()
        .find(|n| (s - (1.0 + 1.0 / *n as f64)).abs() < 1e-12)
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) | CliError::Io(_) => EXIT_NUMERIC,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. } | Error::InvalidDensity { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

/// One sum-rule evaluation with its configuration echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub kappa: f64,
    pub s: f64,
    pub route: Route,
    pub value: f64,
    pub order0: f64,
    pub order1: f64,
    pub order2: f64,
    pub tail_estimate: f64,
    pub n_max: Option<usize>,
    pub basis_size: Option<usize>,
    pub config: RunConfig,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl ResultRecord {
    pub fn new(kappa: f64, result: &SumRuleResult, config: &RunConfig) -> Self {
        let basis_size = match result.route {
            Route::NumericalSpectrum => Some(result.truncation),
            Route::Perturbative | Route::TraceAssembly => Some(result.truncation + 1),
            Route::ExactOrder1 => None,
        };
        Self {
            kappa,
            s: result.s,
            route: result.route,
            value: result.total,
            order0: result.value_by_order[0],
            order1: result.value_by_order[1],
            order2: result.value_by_order[2],
            tail_estimate: result.tail_estimate,
            n_max: result.n_max,
            basis_size,
            config: config.clone(),
            version: VERSION.to_string(),
            wall_time_s: None,
        }
    }
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

/// Rows of a CSV table.
pub trait CsvRecord {
    fn header() -> Vec<&'static str>;
    fn fields(&self) -> Vec<String>;
}

impl CsvRecord for ResultRecord {
    fn header() -> Vec<&'static str> {
        CSV_HEADER.to_vec()
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.kappa),
            fmt_f64(self.s),
            self.route.to_string(),
            fmt_f64(self.value),
            fmt_f64(self.order0),
            fmt_f64(self.order1),
            fmt_f64(self.order2),
            fmt_f64(self.tail_estimate),
            fmt_opt(self.n_max),
            fmt_opt(self.basis_size),
        ]
    }
}

/// One Rayleigh–Ritz level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: usize,
    pub kappa: f64,
    pub basis_size: usize,
    pub eigenvalue: f64,
    pub asymptotic_level: f64,
    /// `Eₙ(coarse) − Eₙ(basis_size)`.
    pub level_estimate: f64,
}

impl CsvRecord for LevelRecord {
    fn header() -> Vec<&'static str> {
        vec![
            "n",
            "kappa",
            "basis_size",
            "eigenvalue",
            "asymptotic_level",
            "level_estimate",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            fmt_f64(self.kappa),
            self.basis_size.to_string(),
            fmt_f64(self.eigenvalue),
            fmt_f64(self.asymptotic_level),
            fmt_f64(self.level_estimate),
        ]
    }
}

/// Polynomial fit of a sweep, with the analytic constants for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub kind: String,
    pub s: f64,
    pub fit: FitResult,
    pub analytic: Option<Z32Constants>,
    pub version: String,
}

/// Outcome of one `verify` check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

impl CheckRecord {
    fn new(check: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
        }
    }
}

impl CsvRecord for CheckRecord {
    fn header() -> Vec<&'static str> {
        vec!["check", "passed", "measured", "tolerance"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.check.clone(),
            self.passed.to_string(),
            fmt_f64(self.measured),
            fmt_f64(self.tolerance),
        ]
    }
}

pub fn write_csv<R: CsvRecord>(out: &mut dyn Write, records: &[R]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::header())?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json_lines<R: Serialize>(out: &mut dyn Write, records: &[R]) -> Result<(), CliError> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| CliError::Io(e.into()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn emit<R: CsvRecord + Serialize>(
    out: &mut dyn Write,
    format: Format,
    records: &[R],
) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(out, records),
        Format::Json => write_json_lines(out, records),
    }
}

/// The cross-route consistency suite behind `verify`.
pub fn verify_checks(config: &RunConfig) -> Result<Vec<CheckRecord>, CliError> {
    let kappa = config.kappa;
    let density = DensityModel::linear(kappa)?;
    let mut checks = Vec::new();

    let zeta3 = zeta(3.0)? / std::f64::consts::PI.powi(3);
    let homogeneous = z_tilde(1.5, &DensityModel::homogeneous(), DEFAULT_TRUNCATION)?;
    checks.push(CheckRecord::new(
        "homogeneous z_tilde(3/2) = zeta(3)/pi^3",
        (homogeneous.total - zeta3).abs(),
        1e-9,
    ));

    let interior = if config.quick {
        400
    } else {
        DEFAULT_TRUNCATION
    };
    for s in [1.5, 4.0 / 3.0] {
        let report = renormalization_check(s, &density, interior, &RENORMALIZATION_GAMMAS)?;
        let worst = report
            .cancellations
            .iter()
            .map(|c| c.residual())
            .fold(0.0, f64::max);
        checks.push(CheckRecord::new(
            format!("divergent terms cancel at s={s:.6}"),
            worst,
            1e-12,
        ));
        checks.push(CheckRecord::new(
            format!("renormalized limit matches z_tilde at s={s:.6}"),
            report.distance(),
            1e-7,
        ));
    }

    for order in 0..=2 {
        let r = verify_composition(1, order, 1e-2, &density, 30, SquareRepresentation::Exact)?;
        checks.push(CheckRecord::new(
            format!("composition N=1 k={order}"),
            r,
            1e-12,
        ));
    }
    let r = verify_composition(2, 0, 1e-2, &density, 30, SquareRepresentation::Exact)?;
    checks.push(CheckRecord::new("composition N=2 k=0", r, 1e-12));
    for root in [2u32, 3] {
        for order in 1..=2 {
            let coarse =
                verify_composition(root, order, 1e-2, &density, 30, SquareRepresentation::Exact)?;
            let fine =
                verify_composition(root, order, 1e-2, &density, 60, SquareRepresentation::Exact)?;
            // halving under refinement, or already at roundoff
            let measured = if fine < 1e-12 { 0.0 } else { fine / coarse };
            checks.push(CheckRecord::new(
                format!("composition N={root} k={order} refines"),
                measured,
                0.5,
            ));
        }
    }

    for root in [2u32, 3] {
        let t = trace_assembly_limit(root, &density, DEFAULT_TRACE_SIZE, &TRACE_GAMMAS)?;
        checks.push(CheckRecord::new(
            format!("trace assembly N={root} matches z_tilde"),
            (t.limit() - t.z_tilde).abs(),
            1e-7,
        ));
    }

    let z1 = z1_exact(&density);
    let target = 1.0 / 6.0 - kappa * kappa / 120.0;
    checks.push(CheckRecord::new(
        "z1_exact = 1/6 - kappa^2/120",
        (z1.total - target).abs(),
        1e-12,
    ));
    let near_one = z_tilde_with(
        1.0 + 1e-8,
        &density,
        DEFAULT_TRUNCATION,
        ExponentDomain::Strict,
    )?;
    checks.push(CheckRecord::new(
        "z_tilde(1+) matches z1_exact",
        (near_one.total - z1.total).abs(),
        1e-6,
    ));

    let series = e0_series(&density, 3)?;
    checks.push(CheckRecord::new(
        "E0(2) spectral vs quadrature",
        (series.energies[1] - series.energies_quadrature[1]).abs(),
        1e-9,
    ));
    checks.push(CheckRecord::new(
        "E0(2) = -kappa^2/120",
        (series.energies[1] + kappa * kappa / 120.0).abs(),
        1e-9,
    ));
    let recursion = ZeroModeRecursion::new(&density, 2);
    checks.push(CheckRecord::new(
        "E0(3) recursion vs closed form",
        (recursion.energies[2] - series.energies[2]).abs(),
        1e-8,
    ));

    if !config.quick {
        let spectrum = solve(&density, config.basis_size)?;
        checks.push(CheckRecord::new(
            "Ritz zero mode",
            spectrum.level(0).abs(),
            1e-10,
        ));
        let numerical = z_from_spectrum(1.5, &spectrum, config.n_max)?;
        let pert = z_tilde(1.5, &density, DEFAULT_TRUNCATION)?;
        // the perturbative value omits O(kappa^4)
        let tol = 1e-6 + 2e-4 * kappa.powi(4);
        checks.push(CheckRecord::new(
            "numerical vs perturbative Z(3/2)",
            (numerical.total - pert.total).abs(),
            tol,
        ));
        let numerical1 = z_from_spectrum(1.0, &spectrum, config.n_max)?;
        checks.push(CheckRecord::new(
            "numerical Z(1) vs exact",
            (numerical1.total - z1.total).abs(),
            1e-6,
        ));
    }
    Ok(checks)
}

/// Executes one configured run, writing records to `out`. Returns the exit
/// status.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    config.validate()?;
    let started = Instant::now();
    let density = DensityModel::linear(config.kappa)?;
    let stamp = |mut r: ResultRecord| {
        if config.timing {
            r.wall_time_s = Some(started.elapsed().as_secs_f64());
        }
        r
    };
    match config.command {
        CommandKind::Sumrule => {
            let result = match config.route {
                RouteArg::Perturbative => {
                    let domain = if config.allow_any_s {
                        ExponentDomain::Extended
                    } else {
                        ExponentDomain::Strict
                    };
                    z_tilde_with(config.s, &density, config.truncation, domain)?
                }
                RouteArg::Trace => {
                    let root = trace_root(config.s).expect("validated");
                    z_trace_limit_result(root, &density, config.truncation, &config.gamma_sequence)?
                }
                RouteArg::Exact => z1_exact(&density),
                RouteArg::Numerical => {
                    z_numerical(config.s, config.kappa, config.n_max, config.basis_size)?
                }
            };
            let record = stamp(ResultRecord::new(config.kappa, &result, config));
            emit(out, config.format, &[record])?;
            Ok(EXIT_OK)
        }
        CommandKind::Spectrum => {
            let coarse = config
                .coarse_size
                .unwrap_or((config.basis_size / 2).max(config.levels + 1));
            let spectrum = if coarse < config.basis_size && coarse > config.levels {
                solve_with_estimates(&density, config.basis_size, coarse)?
            } else {
                solve(&density, config.basis_size)?
            };
            let estimates = spectrum.level_estimates.clone();
            let records: Vec<LevelRecord> = (1..=config.levels)
                .map(|n| {
                    Ok(LevelRecord {
                        n,
                        kappa: config.kappa,
                        basis_size: config.basis_size,
                        eigenvalue: spectrum.level(n),
                        asymptotic_level: asymptotic_level(n, config.kappa)?,
                        level_estimate: estimates.as_ref().map_or(f64::NAN, |e| e[n]),
                    })
                })
                .collect::<Result<_, Error>>()?;
            emit(out, config.format, &records)?;
            Ok(EXIT_OK)
        }
        CommandKind::SweepFit => {
            let samples = kappa_sweep(
                config.s,
                &config.kappa_grid,
                config.n_max,
                config.basis_size,
            )?;
            let records: Vec<ResultRecord> = samples
                .iter()
                .map(|p| stamp(ResultRecord::new(p.kappa, &p.result, config)))
                .collect();
            let points: Vec<(f64, f64)> =
                samples.iter().map(|p| (p.kappa, p.result.total)).collect();
            let fit = polyfit(&points, config.degree)?;
            let analytic = if config.s == 1.5 {
                Some(z32_constants(config.k_double_sum)?)
            } else {
                None
            };
            emit(out, config.format, &records)?;
            let fit_record = FitRecord {
                kind: "fit".into(),
                s: config.s,
                fit,
                analytic,
                version: VERSION.to_string(),
            };
            match config.format {
                Format::Json => write_json_lines(out, &[fit_record])?,
                Format::Csv => eprintln!(
                    "{}",
                    serde_json::to_string(&fit_record).map_err(|e| CliError::Io(e.into()))?
                ),
            }
            Ok(EXIT_OK)
        }
        CommandKind::Verify => {
            let checks = verify_checks(config)?;
            emit(out, config.format, &checks)?;
            let failed: Vec<&CheckRecord> = checks.iter().filter(|c| !c.passed).collect();
            for c in &failed {
                eprintln!(
                    "FAILED {}: {:.3e} > {:.3e}",
                    c.check, c.measured, c.tolerance
                );
            }
            Ok(if failed.is_empty() {
                EXIT_OK
            } else {
                EXIT_NUMERIC
            })
        }
    }
}

fn run_with_workers(config: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    if let Some(n) = config.workers {
        // the global pool can be configured once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    run(config, out)
}

/// Parses arguments, runs, and maps every outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = RunConfig::from_cli(&cli).and_then(|config| match &config.output_path {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            let code = run_with_workers(&config, &mut file)?;
            file.flush()?;
            Ok(code)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            run_with_workers(&config, &mut lock)
        }
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
