// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. Every command writes one data file (CSV or
//! JSON) to `--out`, or to stdout when no path is given; human-readable
//! summaries go to stderr.
//!
//! Settings are resolved as: command-line flag, then JSON config file, then
//! built-in default.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dynamics::{error, evolve, gap_scan, locate_crossing, Case, StateVector};
use crate::error::{Error, ErrorKind, Result};
use crate::optimizer::{min_time_search, optimize_bang_bang, optimize_pwc};
use crate::pontryagin::{solve_switching_time, switching_trace};
use crate::protocol::linear_protocol;
use crate::robustness::{analytic_mean, sweep, NominalProtocol};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Standard deviation of the error per `ε²` reported for the reference
/// Monte Carlo run; written next to the measured ratio for comparison.
const REFERENCE_STD_OVER_EPS2: f64 = 0.647;

#[derive(Debug, Parser)]
#[command(
    name = "gmon-control",
    version,
    about = "Time-optimal singlet preparation on two coupled gmon qubits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral gap along J = 1 − B for both field configurations (CSV).
    GapScan(Flags),
    /// Optimal (piecewise-constant and bang-bang) and linear-ramp errors over a τ grid (JSON).
    Optimize(Flags),
    /// Bang-bang optimum for each τ (JSON).
    BangBang(Flags),
    /// Switching-function traces for given t_B and for the self-consistent t_B (CSV).
    Switching(Flags),
    /// Minimum exact-preparation time τ* and critical time τ₀ (JSON).
    MinTime(Flags),
    /// Timing-jitter Monte Carlo sweep over ε (CSV).
    Robustness(Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GapScan(_) => "gap-scan",
            Command::Optimize(_) => "optimize",
            Command::BangBang(_) => "bang-bang",
            Command::Switching(_) => "switching",
            Command::MinTime(_) => "min-time",
            Command::Robustness(_) => "robustness",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::GapScan(f)
            | Command::Optimize(f)
            | Command::BangBang(f)
            | Command::Switching(f)
            | Command::MinTime(f)
            | Command::Robustness(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseArg {
    Plus,
    Minus,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Plus => Case::Plus,
            CaseArg::Minus => Case::Minus,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with any of the settings below (keys as flag names).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub settings: PartialSettings,
}

/// Settings as given on the command line or in a config file; unset fields
/// fall through to the next source.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PartialSettings {
    /// Total time(s), comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub tau: Option<Vec<f64>>,
    /// Piecewise-constant segments.
    #[arg(long)]
    pub n_segments: Option<usize>,
    /// Random starts of the piecewise-constant search.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Random seed (piecewise-constant starts, Monte Carlo draws).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Jitter scale(s), comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub epsilon: Option<Vec<f64>>,
    /// Monte Carlo realizations per ε.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Field configuration: equal (plus) or opposite (minus) local fields.
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
    /// Gap-scan grid points.
    #[arg(long)]
    pub n_points: Option<usize>,
    /// Switching times for `switching`, comma separated.
    #[arg(long = "t-b", value_delimiter = ',', num_args = 1..)]
    #[serde(rename = "t-b")]
    pub t_b: Option<Vec<f64>>,
    /// Samples per switching-function trace.
    #[arg(long)]
    pub n_grid: Option<usize>,
    /// Error threshold defining τ*.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// t_B resolution defining τ₀.
    #[arg(long)]
    pub resolution: Option<f64>,
}

impl PartialSettings {
    fn or(self, other: PartialSettings) -> PartialSettings {
        PartialSettings {
            tau: self.tau.or(other.tau),
            n_segments: self.n_segments.or(other.n_segments),
            restarts: self.restarts.or(other.restarts),
            seed: self.seed.or(other.seed),
            epsilon: self.epsilon.or(other.epsilon),
            samples: self.samples.or(other.samples),
            case: self.case.or(other.case),
            n_points: self.n_points.or(other.n_points),
            t_b: self.t_b.or(other.t_b),
            n_grid: self.n_grid.or(other.n_grid),
            threshold: self.threshold.or(other.threshold),
            resolution: self.resolution.or(other.resolution),
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub tau: Vec<f64>,
    pub n_segments: usize,
    pub restarts: usize,
    pub seed: u64,
    pub epsilon: Vec<f64>,
    pub samples: usize,
    pub case: CaseArg,
    pub n_points: usize,
    #[serde(rename = "t-b")]
    pub t_b: Vec<f64>,
    pub n_grid: usize,
    pub threshold: f64,
    pub resolution: f64,
}

fn default_tau(command: &str) -> Vec<f64> {
    match command {
        "optimize" => (1..=20).map(|k| k as f64 * 0.05).collect(),
        _ => vec![0.75],
    }
}

impl RunConfig {
    pub fn resolve(command: &str, p: PartialSettings) -> Result<Self> {
        let c = RunConfig {
            tau: p.tau.unwrap_or_else(|| default_tau(command)),
            n_segments: p.n_segments.unwrap_or(10),
            restarts: p.restarts.unwrap_or(50),
            seed: p.seed.unwrap_or(0),
            epsilon: p.epsilon.unwrap_or_else(|| vec![0.005, 0.01, 0.02, 0.04]),
            samples: p.samples.unwrap_or(100_000),
            case: p.case.unwrap_or(CaseArg::Minus),
            n_points: p.n_points.unwrap_or(500),
            t_b: p.t_b.unwrap_or_else(|| vec![0.1, 0.6]),
            n_grid: p.n_grid.unwrap_or(crate::pontryagin::DEFAULT_GRID),
            threshold: p.threshold.unwrap_or(1e-6),
            resolution: p.resolution.unwrap_or(1e-4),
        };
        c.validate(command)?;
        Ok(c)
    }

    fn validate(&self, command: &str) -> Result<()> {
        let finite = |name: &'static str, xs: &[f64]| -> Result<()> {
            match xs.iter().find(|x| !x.is_finite()) {
                Some(x) => Err(Error::invalid(name, format!("must be finite, got {x}"))),
                None => Ok(()),
            }
        };
        finite("tau", &self.tau)?;
        finite("epsilon", &self.epsilon)?;
        finite("t-b", &self.t_b)?;
        finite("threshold", &[self.threshold])?;
        finite("resolution", &[self.resolution])?;
        let uses_tau = matches!(command, "optimize" | "bang-bang" | "switching");
        if uses_tau {
            if self.tau.is_empty() {
                return Err(Error::invalid("tau", "grid is empty"));
            }
            if self.tau.iter().any(|&t| t <= 0.0) {
                return Err(Error::invalid("tau", "every value must be positive"));
            }
        }
        match command {
            "gap-scan" if self.n_points < 2 => Err(Error::invalid("n-points", "need at least 2")),
            "optimize" if self.n_segments == 0 => Err(Error::invalid("n-segments", "must be at least 1")),
            "optimize" if self.restarts == 0 => Err(Error::invalid("restarts", "must be at least 1")),
            "switching" if self.tau.len() != 1 => Err(Error::invalid("tau", "switching takes a single τ")),
            "switching" if self.n_grid < 2 => Err(Error::invalid("n-grid", "need at least 2")),
            "switching" if self.t_b.iter().any(|&t| t < 0.0 || t > self.tau[0]) => {
                Err(Error::invalid("t-b", "every value must lie in [0, τ]"))
            }
            "switching" if self.case != CaseArg::Minus => Err(Error::invalid(
                "case",
                "switching analysis is defined for the minus case",
            )),
            "min-time" | "robustness" if !(self.threshold > 0.0 && self.threshold < 0.5) => {
                Err(Error::invalid("threshold", "must lie in (0, 0.5)"))
            }
            "min-time" | "robustness" if self.resolution <= 0.0 => {
                Err(Error::invalid("resolution", "must be positive"))
            }
            "robustness" if self.epsilon.is_empty() => Err(Error::invalid("epsilon", "list is empty")),
            "robustness" if self.epsilon.iter().any(|&e| e < 0.0) => {
                Err(Error::invalid("epsilon", "every value must be nonnegative"))
            }
            "robustness" if self.samples == 0 => Err(Error::invalid("samples", "must be at least 1")),
            _ => Ok(()),
        }
    }

    fn case(&self) -> Case {
        self.case.into()
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Validation => EXIT_VALIDATION,
        ErrorKind::Numerical => EXIT_NUMERICAL,
        ErrorKind::Io => EXIT_IO,
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(command: &Command) -> Result<()> {
    let name = command.name();
    let flags = command.flags();
    let from_file = match &flags.config {
        Some(path) => read_config(path)?,
        None => PartialSettings::default(),
    };
    let config = RunConfig::resolve(name, flags.settings.clone().or(from_file))?;
    let mut out = open_output(flags.out.as_deref())?;
    match command {
        Command::GapScan(_) => cmd_gap_scan(&config, &mut out)?,
        Command::Optimize(_) => cmd_optimize(&config, &mut out)?,
        Command::BangBang(_) => cmd_bang_bang(&config, &mut out)?,
        Command::Switching(_) => cmd_switching(&config, &mut out)?,
        Command::MinTime(_) => cmd_min_time(&config, &mut out)?,
        Command::Robustness(_) => cmd_robustness(&config, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn read_config(path: &Path) -> Result<PartialSettings> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// The `#` line opening every CSV file.
fn csv_header(command: &str, config: &RunConfig) -> Result<String> {
    Ok(format!(
        "# gmon-control {VERSION} {command} config={}",
        serde_json::to_string(config)?
    ))
}

#[derive(Serialize)]
struct JsonDocument<'a, T: Serialize> {
    generator: String,
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(out: &mut dyn Write, command: &str, config: &RunConfig, body: T) -> Result<()> {
    let doc = JsonDocument {
        generator: format!("gmon-control {VERSION}"),
        command,
        config,
        body,
    };
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}

pub fn cmd_gap_scan(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let plus = gap_scan(Case::Plus, config.n_points)?;
    let minus = gap_scan(Case::Minus, config.n_points)?;
    writeln!(out, "{}", csv_header("gap-scan", config)?)?;
    writeln!(out, "B,gap_plus,gap_minus")?;
    for (p, m) in plus.iter().zip(&minus) {
        writeln!(out, "{},{:.12e},{:.12e}", p.b, p.gap, m.gap)?;
    }
    match locate_crossing(Case::Plus, &plus)? {
        Some(b) => eprintln!("plus case: level crossing at B = {b:.9}"),
        None => eprintln!("plus case: no level crossing detected"),
    }
    let min_minus = minus.iter().map(|g| g.gap).fold(f64::INFINITY, f64::min);
    eprintln!("minus case: minimum gap {min_minus:.6}");
    Ok(())
}

pub fn cmd_optimize(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        tau: f64,
        linear_error: f64,
        pwc: serde_json::Value,
        bang_bang: serde_json::Value,
    }
    let case = config.case();
    let mut rows = Vec::with_capacity(config.tau.len());
    for &tau in &config.tau {
        let linear = linear_protocol(tau, config.n_segments, case)?;
        let linear_error = error(&evolve(&StateVector::initial(case), &linear)?)?;
        let pwc = optimize_pwc(tau, config.n_segments, case, config.restarts, config.seed)?;
        let bb = optimize_bang_bang(tau, case)?;
        eprintln!(
            "τ = {tau:.4}: linear {linear_error:.3e}, pwc {:.3e}, bang-bang {:.3e}",
            pwc.best_error, bb.best_error
        );
        rows.push(Row {
            tau,
            linear_error,
            pwc: serde_json::to_value(pwc.to_record())?,
            bang_bang: serde_json::to_value(bb.to_record())?,
        });
    }
    #[derive(Serialize)]
    struct Body {
        results: Vec<Row>,
    }
    write_json(out, "optimize", config, Body { results: rows })
}

pub fn cmd_bang_bang(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let mut results = Vec::with_capacity(config.tau.len());
    for &tau in &config.tau {
        let r = optimize_bang_bang(tau, config.case())?;
        eprintln!(
            "τ = {tau:.4}: error {:.3e}, t_B = {:.6}, t_J = {:.6}",
            r.best_error,
            r.t_b().unwrap_or(f64::NAN),
            r.t_j().unwrap_or(f64::NAN)
        );
        results.push(serde_json::to_value(r.to_record())?);
    }
    #[derive(Serialize)]
    struct Body {
        results: Vec<serde_json::Value>,
    }
    write_json(out, "bang-bang", config, Body { results })
}

pub fn cmd_switching(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let tau = config.tau[0];
    let solved = solve_switching_time(tau)?;
    eprintln!("τ = {tau}: self-consistent t_B = {solved:.10}");

    writeln!(out, "{}", csv_header("switching", config)?)?;
    writeln!(out, "trace,t_B,t,s,regime")?;
    let traces = config
        .t_b
        .iter()
        .map(|&t| ("requested", t))
        .chain(std::iter::once(("solved", solved)));
    for (label, t_b) in traces {
        let tr = switching_trace(tau, t_b, config.n_grid)?;
        for ((t, s), r) in tr.times.iter().zip(&tr.s).zip(&tr.regimes) {
            writeln!(out, "{label},{t_b},{t},{s:.9e},{r}")?;
        }
        for (a, b) in &tr.singular_intervals {
            eprintln!("{label} t_B = {t_b:.6}: singular on [{a:.6}, {b:.6}]");
        }
    }
    Ok(())
}

pub fn cmd_min_time(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let r = min_time_search(config.case(), config.threshold, config.resolution)?;
    eprintln!("τ* = {:.6}, τ₀ = {:.6}", r.tau_star, r.tau_0);
    write_json(out, "min-time", config, r)
}

pub fn cmd_robustness(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let m = min_time_search(config.case(), config.threshold, config.resolution)?;
    let nominal = NominalProtocol::from_min_time(&m)?;
    eprintln!(
        "nominal protocol: τ* = {:.9}, τ₀ = {:.9}, error {:.2e}",
        nominal.tau_star(),
        nominal.tau_0(),
        nominal.error()
    );
    let result = sweep(&nominal, &config.epsilon, config.samples, config.seed)?;
    let fmt_opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.6}"));

    writeln!(out, "{}", csv_header("robustness", config)?)?;
    writeln!(
        out,
        "epsilon,mean_error,std_error,n_samples,mean_over_eps2,std_over_eps2,\
         analytic_mean_over_eps2,reference_std_over_eps2,mean_exponent,std_exponent"
    )?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{:.10e},{:.10e},{},{:.6},{:.6},{:.6},{:.3},{},{}",
            r.epsilon,
            r.mean_error,
            r.std_error,
            r.n_samples,
            r.mean_over_eps2(),
            r.std_over_eps2(),
            analytic_mean(1.0),
            REFERENCE_STD_OVER_EPS2,
            fmt_opt(result.mean_exponent),
            fmt_opt(result.std_exponent)
        )?;
    }
    eprintln!(
        "fitted exponents: mean {}, std {}",
        fmt_opt(result.mean_exponent),
        fmt_opt(result.std_exponent)
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_which_overrides_defaults() {
        let file: PartialSettings = serde_json::from_str(r#"{"tau": [0.5], "seed": 9, "n-segments": 4}"#).unwrap();
        let flags = PartialSettings {
            seed: Some(3),
            ..Default::default()
        };
        let c = RunConfig::resolve("optimize", flags.or(file)).unwrap();
        assert_eq!(c.tau, vec![0.5]);
        assert_eq!(c.seed, 3);
        assert_eq!(c.n_segments, 4);
        assert_eq!(c.restarts, 50);
    }

    #[test]
    fn default_optimize_grid() {
        let c = RunConfig::resolve("optimize", PartialSettings::default()).unwrap();
        assert_eq!(c.tau.len(), 20);
        assert!((c.tau[19] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<PartialSettings>(r#"{"taus": [1]}"#).is_err());
    }

    #[test]
    fn validation_errors() {
        let empty = PartialSettings {
            tau: Some(vec![]),
            ..Default::default()
        };
        let e = RunConfig::resolve("optimize", empty).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_VALIDATION);
        let bad = PartialSettings {
            threshold: Some(0.7),
            ..Default::default()
        };
        assert!(RunConfig::resolve("min-time", bad).is_err());
    }

    #[test]
    fn header_has_no_output_path() {
        let c = RunConfig::resolve("gap-scan", PartialSettings::default()).unwrap();
        let h = csv_header("gap-scan", &c).unwrap();
        assert!(h.starts_with("# gmon-control "));
        assert!(!h.contains("out"));
    }
}
