//! Command-line front end: flags (from argv or a TOML file), dispatch and
//! JSON-lines output.
//!
//! A TOML config is a flat rendering of the same flags, so both sources go
//! through one parser:
//!
//! ```toml
//! command = "ldp"
//! op = "tf"
//! n = [16, 32, 64]
//! delta = 1.0
//! seed = 7
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use clap::error::ContextKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ldp::{self, SamplingPlan, Statistic, TiltPlan};
use crate::lpp::{geodesic, last_passage, sampled_geodesic, sampled_last_passage, WeightField};
use crate::mp::{mp_cdf, mp_density, mp_quantile, MpLaw};
use crate::rates;
use crate::rmt::{self, Backend, WishartSpec};
use crate::rng::trial_seed;
use crate::stats::{fit_polynomial, mean, quantile_sorted, sorted, variance};

pub const SCHEMA_VERSION: &str = "1.0";
pub const SCHEMA_MAJOR: u64 = 1;
/// Default worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "UPTAIL_WORKERS";
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Parser, Serialize)]
#[command(name = "uptail", version, about = "Upper-tail last passage percolation experiments")]
pub struct ExperimentConfig {
    #[command(subcommand)]
    pub command: Command,
    /// JSON-lines output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: the environment variable, then all cores).
    #[arg(long, global = true, env = WORKERS_ENV, value_parser = at_least_one)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exponential weight fields and passage times.
    #[command(subcommand)]
    Lpp(LppCommand),
    /// Wishart spectra and their LPP correspondences.
    #[command(subcommand)]
    Rmt(RmtCommand),
    /// Rate functions and Marchenko-Pastur integrals.
    #[command(subcommand)]
    Rates(RatesCommand),
    /// Upper-tail estimation and conditioned geometry.
    #[command(subcommand)]
    Ldp(LdpCommand),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LppCommand {
    /// Draw one field and save it.
    Sample(LppSampleArgs),
    /// Passage times of fresh fields, or of a saved one.
    Passage(LppRunArgs),
    /// Geodesics and transversal fluctuations.
    Geodesic(LppRunArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmtCommand {
    /// Per-trial spectra summaries.
    Sample(RmtSampleArgs),
    /// Two-sample KS test of T against the top eigenvalue.
    Identity(RmtTrialArgs),
    /// CDF ordering of (M, N) against (M+1, N-1).
    Dominance(RmtTrialArgs),
    /// Rigidity window maxima.
    Rigidity(RmtRigidityArgs),
    /// Projection kernel values.
    Kernel(RmtKernelArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatesCommand {
    Eval(RatesEvalArgs),
    Mp(RatesMpArgs),
    /// Exact curvature sums and their quadratic fit in c.
    Curvature(RatesCurvatureArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LdpCommand {
    /// Importance-sampling estimate with per-trial records.
    Estimate(LdpEstimateArgs),
    /// Rejection sampling of conditioned geodesics.
    Reject(LdpRejectArgs),
    /// Midpoint ratio, or its trend over several n.
    Midpoint(LdpMidpointArgs),
    /// Conditioned transversal fluctuation exponents.
    Tf(LdpTfArgs),
    /// Two-scale split product bound.
    Split(LdpSplitArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct LppSampleArgs {
    /// Columns.
    #[arg(long, value_parser = at_least_one)]
    pub n: usize,
    /// Rows (default: n).
    #[arg(long, value_parser = at_least_one)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FieldFormat::Json)]
    pub format: FieldFormat,
    /// Field file for csv and binary formats.
    #[arg(long, required_if_eq_any = [("format", "csv"), ("format", "binary")])]
    pub field_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFormat {
    Json,
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct LppRunArgs {
    #[arg(long, value_parser = at_least_one, required_unless_present = "field")]
    pub n: Option<usize>,
    #[arg(long, value_parser = at_least_one)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1, value_parser = at_least_one)]
    pub trials: usize,
    #[arg(long, required_unless_present = "field")]
    pub seed: Option<u64>,
    /// Saved field (`.csv` or binary); replaces sampling.
    #[arg(long, conflicts_with_all = ["n", "m", "seed", "trials"])]
    pub field: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RmtSampleArgs {
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    #[arg(long, value_parser = at_least_one)]
    pub n: usize,
    #[arg(long, value_parser = at_least_one)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    /// Default: dense for N <= 64, bidiagonal above.
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Divide by M.
    #[arg(long)]
    pub scaled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    Dense,
    Bidiagonal,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Dense => Backend::Dense,
            BackendArg::Bidiagonal => Backend::Bidiagonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RmtTrialArgs {
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    #[arg(long, value_parser = at_least_one)]
    pub n: usize,
    #[arg(long, value_parser = at_least_one)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RmtRigidityArgs {
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    #[arg(long, value_parser = at_least_one)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0, value_parser = positive("c"))]
    pub c: f64,
    #[arg(long, value_parser = at_least_one)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RmtKernelArgs {
    #[arg(long, value_parser = at_least_one)]
    pub m: usize,
    #[arg(long, value_parser = at_least_one)]
    pub n: usize,
    /// Points, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<f64>,
    /// Second arguments (default: the diagonal).
    #[arg(long, value_delimiter = ',')]
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateWhich {
    I,
    Jy,
    Iy,
    Beta,
    BetaPrime,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RatesEvalArgs {
    #[arg(long, value_enum, ignore_case = true)]
    pub which: RateWhich,
    #[arg(long, value_parser = positive("delta"))]
    pub delta: f64,
    #[arg(long, value_parser = aspect, required_if_eq_any = [("which", "jy"), ("which", "iy")])]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MpOp {
    Density,
    Cdf,
    Quantile,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RatesMpArgs {
    #[arg(long, value_parser = aspect)]
    pub y: f64,
    #[arg(long, value_enum)]
    pub op: MpOp,
    /// Points (probabilities for quantile), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RatesCurvatureArgs {
    #[arg(long, value_parser = positive("delta"))]
    pub delta: f64,
    #[arg(long, value_parser = at_least_one)]
    pub n: usize,
    /// Offsets, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub c: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanKind {
    Path,
    Tilt,
    Rejection,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct LdpEstimateArgs {
    #[arg(long, value_parser = at_least_one)]
    pub n: usize,
    #[arg(long, value_parser = positive("delta"))]
    pub delta: f64,
    #[arg(long, value_parser = at_least_one)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PlanKind::Path)]
    pub plan: PlanKind,
    /// Tilt parameter (path: chosen by pilot ESS when absent).
    #[arg(long, value_parser = tilt)]
    pub theta: Option<f64>,
    /// Strip half-width in units of √n for the tilt plan; 0 tilts everything.
    #[arg(long, default_value_t = 1.0, value_parser = non_negative("strip"))]
    pub strip: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct LdpRejectArgs {
    #[arg(long, value_parser = at_least_one)]
    pub n: usize,
    #[arg(long, value_parser = positive("delta"))]
    pub delta: f64,
    #[arg(long)]
    pub budget: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct LdpMidpointArgs {
    /// One even size, or several for the trend fit.
    #[arg(long, value_delimiter = ',', required = true, value_parser = at_least_one)]
    pub n: Vec<usize>,
    #[arg(long, value_parser = positive("delta"))]
    pub delta: f64,
    #[arg(long, value_parser = at_least_one)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    /// Off-diagonal offset of the midpoint (single n only).
    #[arg(long, default_value_t = 0)]
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct LdpTfArgs {
    #[arg(long, value_delimiter = ',', required = true, value_parser = at_least_one)]
    pub n: Vec<usize>,
    #[arg(long, value_parser = positive("delta"))]
    pub delta: f64,
    /// Rejection budget per grid point.
    #[arg(long, default_value_t = 100_000_000)]
    pub budget: u64,
    /// Importance-sampling trials per grid point.
    #[arg(long, value_parser = at_least_one)]
    pub trials: Option<usize>,
    #[arg(long, value_parser = at_least_one)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    /// CSV fit table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct LdpSplitArgs {
    #[arg(long, value_parser = at_least_one)]
    pub n: usize,
    #[arg(long, value_parser = at_least_one)]
    pub t1: usize,
    #[arg(long, value_parser = positive("delta"))]
    pub delta: f64,
    #[arg(long, value_parser = positive("delta1"))]
    pub delta1: f64,
    #[arg(long, value_parser = positive("delta2"))]
    pub delta2: f64,
    #[arg(long, value_parser = at_least_one)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
}

fn at_least_one(s: &str) -> std::result::Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn real(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

fn positive(name: &'static str) -> impl Fn(&str) -> std::result::Result<f64, String> + Clone {
    move |s| match real(s)? {
        v if v > 0.0 => Ok(v),
        v => Err(format!("requires {name} > 0, got {v}")),
    }
}

fn non_negative(name: &'static str) -> impl Fn(&str) -> std::result::Result<f64, String> + Clone {
    move |s| match real(s)? {
        v if v >= 0.0 => Ok(v),
        v => Err(format!("requires {name} >= 0, got {v}")),
    }
}

fn tilt(s: &str) -> std::result::Result<f64, String> {
    match real(s)? {
        v if (0.0..1.0).contains(&v) => Ok(v),
        v => Err(format!("requires 0 <= theta < 1, got {v}")),
    }
}

fn aspect(s: &str) -> std::result::Result<f64, String> {
    match real(s)? {
        v if v > 0.0 && v <= 1.0 => Ok(v),
        v => Err(format!("requires 0 < y <= 1, got {v}")),
    }
}

/// Where a configuration comes from.
pub enum ConfigSource<'a> {
    /// Full argument vector, program name first.
    Args(&'a [String]),
    /// TOML document.
    Toml(&'a str),
}

/// Parses and validates a configuration. Help and version requests surface
/// as parse errors; the binary handles them through [`parse_args`].
pub fn parse_config(source: ConfigSource) -> Result<ExperimentConfig> {
    let argv = match source {
        ConfigSource::Args(a) => a.to_vec(),
        ConfigSource::Toml(doc) => toml_to_args(doc)?,
    };
    parse_args(&argv).map_err(clap_to_error)
}

pub fn parse_args(argv: &[String]) -> std::result::Result<ExperimentConfig, clap::Error> {
    ExperimentConfig::try_parse_from(argv)
}

fn clap_to_error(e: clap::Error) -> Error {
    let key = e
        .get(ContextKind::InvalidArg)
        .map(|v| v.to_string())
        .or_else(|| e.get(ContextKind::InvalidSubcommand).map(|v| v.to_string()))
        .unwrap_or_else(|| "arguments".into());
    let msg = e.render().to_string();
    let msg = msg.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
    Error::Parse { key, msg }
}

/// Renders a TOML config as the equivalent argument vector.
pub fn toml_to_args(doc: &str) -> Result<Vec<String>> {
    let table: toml::Table = doc.parse().map_err(|e: toml::de::Error| Error::Parse {
        key: e.span().map_or("document".into(), |s| format!("byte {}", s.start)),
        msg: e.message().to_string(),
    })?;
    let text = |key: &str| -> Result<String> {
        match table.get(key) {
            Some(toml::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(Error::Parse { key: key.into(), msg: "expected a string".into() }),
            None => Err(Error::Parse { key: key.into(), msg: "missing".into() }),
        }
    };
    let mut argv = vec!["uptail".to_string(), text("command")?, text("op")?];
    for (key, value) in &table {
        if key == "command" || key == "op" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| -> Result<String> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(i) => Ok(i.to_string()),
                toml::Value::Float(f) => Ok(f.to_string()),
                _ => Err(Error::Parse { key: key.clone(), msg: format!("unsupported value {v}") }),
            }
        };
        match value {
            toml::Value::Boolean(true) => argv.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
                argv.push(flag);
                argv.push(parts.join(","));
            }
            v => {
                argv.push(flag);
                argv.push(scalar(v)?);
            }
        }
    }
    Ok(argv)
}

pub fn load_config_file(path: &Path) -> Result<ExperimentConfig> {
    let doc = std::fs::read_to_string(path)?;
    parse_config(ConfigSource::Toml(&doc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Summary,
    Trial,
    Truncated,
}

/// One JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: String,
    pub record: RecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub payload: Value,
}

/// Reads a JSON-lines stream, rejecting unknown major schema versions.
pub fn read_records<R: BufRead>(r: R) -> Result<Vec<ResultRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ResultRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { key: format!("line {}", i + 1), msg: e.to_string() })?;
        let major = rec.schema_version.split('.').next().and_then(|m| m.parse::<u64>().ok());
        if major != Some(SCHEMA_MAJOR) {
            return Err(Error::Parse {
                key: format!("line {}", i + 1),
                msg: format!("unsupported schema version {}", rec.schema_version),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Single owner of the output stream. Lines are written whole under the
/// lock, so a truncation record from another thread never splits one.
pub struct Sink {
    out: Mutex<Box<dyn Write + Send>>,
    config: Value,
    closed: AtomicBool,
}

impl Sink {
    pub fn new(out: Box<dyn Write + Send>, config: &ExperimentConfig) -> Self {
        Self {
            out: Mutex::new(out),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            closed: AtomicBool::new(false),
        }
    }

    pub fn for_config(config: &ExperimentConfig) -> Result<Self> {
        let out: Box<dyn Write + Send> = match &config.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(std::io::stdout()),
        };
        Ok(Self::new(out, config))
    }

    fn write(&self, rec: &ResultRecord) -> Result<()> {
        let line = serde_json::to_string(rec).map_err(|e| Error::Io(e.to_string()))?;
        let mut out = self.out.lock().unwrap_or_else(|p| p.into_inner());
        writeln!(out, "{line}")?;
        out.flush()?;
        Ok(())
    }

    fn stamped(&self, record: RecordKind, payload: Value) -> ResultRecord {
        ResultRecord {
            schema_version: SCHEMA_VERSION.into(),
            record,
            config: Some(self.config.clone()),
            timestamp: Some(now()),
            payload,
        }
    }

    pub fn summary<T: Serialize>(&self, payload: &T) -> Result<()> {
        self.write(&self.stamped(RecordKind::Summary, to_value(payload)?))
    }

    pub fn trial<T: Serialize>(&self, payload: &T) -> Result<()> {
        self.write(&ResultRecord {
            schema_version: SCHEMA_VERSION.into(),
            record: RecordKind::Trial,
            config: None,
            timestamp: None,
            payload: to_value(payload)?,
        })
    }

    /// Closes an interrupted stream; later calls are no-ops.
    pub fn truncated(&self, completed: Option<u64>) -> Result<()> {
        if self.closed.swap(true, Ordering::SeqCst) {
            return Ok(());
        }
        self.write(&self.stamped(RecordKind::Truncated, json!({ "completed_trials": completed })))
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::SeqCst)
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

fn now() -> String {
    time::OffsetDateTime::now_utc().format(&time::format_description::well_known::Rfc3339).unwrap_or_default()
}

/// How a completed run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ToleranceNotMet,
    Degenerate,
    Interrupted,
}

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const BUDGET: i32 = 3;
    pub const TOLERANCE: i32 = 4;
    pub const DEGENERATE: i32 = 5;
    pub const INTERRUPTED: i32 = 130;
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(Outcome::Success) => exit::SUCCESS,
        Ok(Outcome::ToleranceNotMet) | Err(Error::ToleranceNotMet { .. }) => exit::TOLERANCE,
        Ok(Outcome::Degenerate) => exit::DEGENERATE,
        Ok(Outcome::Interrupted) => exit::INTERRUPTED,
        Err(Error::Parse { .. }) => exit::PARSE,
        Err(Error::Budget { .. }) => exit::BUDGET,
        Err(_) => exit::OTHER,
    }
}

fn verdict(passed: bool) -> Outcome {
    if passed {
        Outcome::Success
    } else {
        Outcome::ToleranceNotMet
    }
}

pub fn worker_count(config: &ExperimentConfig) -> usize {
    config.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `config` on its own worker pool, writing to `sink`. Trial streams
/// check `stop` between chunks.
pub fn run(config: &ExperimentConfig, sink: &Sink, stop: &AtomicBool) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(config))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| dispatch(&config.command, sink, stop))
}

fn dispatch(cmd: &Command, sink: &Sink, stop: &AtomicBool) -> Result<Outcome> {
    match cmd {
        Command::Lpp(c) => run_lpp(c, sink, stop),
        Command::Rmt(c) => run_rmt(c, sink, stop),
        Command::Rates(c) => run_rates(c, sink),
        Command::Ldp(c) => run_ldp(c, sink, stop),
    }
}

/// Streams `trials` per-trial rows in chunks, stopping early on `stop`.
/// Returns the rows produced.
fn stream_trials<T, F>(trials: u64, sink: &Sink, stop: &AtomicBool, row: F) -> Result<Option<Vec<T>>>
where
    T: Serialize + Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let mut all = Vec::with_capacity(trials as usize);
    let mut start = 0;
    while start < trials {
        if stop.load(Ordering::SeqCst) {
            sink.truncated(Some(start))?;
            return Ok(None);
        }
        let end = (start + CHUNK).min(trials);
        let rows = (start..end).into_par_iter().map(&row).collect::<Result<Vec<T>>>()?;
        for r in &rows {
            sink.trial(r)?;
        }
        all.extend(rows);
        start = end;
    }
    Ok(Some(all))
}

fn read_field(path: &Path) -> Result<WeightField> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        WeightField::read_csv(BufReader::new(file))
    } else {
        WeightField::read_binary(BufReader::new(file))
    }
}

#[derive(Serialize)]
struct PassageRow {
    trial: u64,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "T_truncated")]
    truncated: f64,
}

#[derive(Serialize)]
struct GeodesicRow {
    trial: u64,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "D_max")]
    d_max: usize,
}

fn run_lpp(cmd: &LppCommand, sink: &Sink, stop: &AtomicBool) -> Result<Outcome> {
    match cmd {
        LppCommand::Sample(a) => {
            let rows = a.m.unwrap_or(a.n);
            let field = WeightField::sample(rows, a.n, a.seed)?;
            let t = last_passage(&field, (1, 1), (rows, a.n))?.value;
            let mut payload = json!({ "rows": rows, "cols": a.n, "seed": a.seed, "T": t });
            match (a.format, &a.field_out) {
                (FieldFormat::Csv, Some(p)) => field.write_csv(BufWriter::new(File::create(p)?))?,
                (FieldFormat::Binary, Some(p)) => field.write_binary(BufWriter::new(File::create(p)?))?,
                _ => payload["weights"] = to_value(&field.weights())?,
            }
            if let Some(p) = &a.field_out {
                payload["path"] = json!(p);
            }
            sink.summary(&payload)?;
            Ok(Outcome::Success)
        }
        LppCommand::Passage(a) => {
            if let Some(p) = &a.field {
                let f = read_field(p)?;
                let s = last_passage(&f, (1, 1), (f.rows(), f.cols()))?;
                sink.summary(&s)?;
                return Ok(Outcome::Success);
            }
            let (n, seed) = (a.n.unwrap_or(1), a.seed.unwrap_or(0));
            let rows = a.m.unwrap_or(n);
            let Some(out) = stream_trials(a.trials as u64, sink, stop, |i| {
                let s = sampled_last_passage(rows, n, trial_seed(seed, i));
                Ok(PassageRow { trial: i, t: s.value, truncated: s.truncated_value })
            })?
            else {
                return Ok(Outcome::Interrupted);
            };
            let ts: Vec<f64> = out.iter().map(|r| r.t).collect();
            sink.summary(&json!({
                "rows": rows, "cols": n, "trials": a.trials,
                "mean": mean(&ts), "variance": if ts.len() > 1 { variance(&ts) } else { 0.0 },
            }))?;
            Ok(Outcome::Success)
        }
        LppCommand::Geodesic(a) => {
            if let Some(p) = &a.field {
                let f = read_field(p)?;
                let g = geodesic(&f, (1, 1), (f.rows(), f.cols()))?;
                sink.summary(&g)?;
                return Ok(Outcome::Success);
            }
            let (n, seed) = (a.n.unwrap_or(1), a.seed.unwrap_or(0));
            let rows = a.m.unwrap_or(n);
            let Some(out) = stream_trials(a.trials as u64, sink, stop, |i| {
                let g = sampled_geodesic(rows, n, trial_seed(seed, i))?;
                Ok(GeodesicRow { trial: i, t: g.weight, d_max: g.max_fluct })
            })?
            else {
                return Ok(Outcome::Interrupted);
            };
            let d: Vec<f64> = out.iter().map(|r| r.d_max as f64).collect();
            sink.summary(&json!({
                "rows": rows, "cols": n, "trials": a.trials,
                "median_D": quantile_sorted(&sorted(&d), 0.5),
                "mean_T": mean(&out.iter().map(|r| r.t).collect::<Vec<_>>()),
            }))?;
            Ok(Outcome::Success)
        }
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    trial: u64,
    largest: f64,
    smallest: f64,
    trace: f64,
    resampled: bool,
}

fn run_rmt(cmd: &RmtCommand, sink: &Sink, stop: &AtomicBool) -> Result<Outcome> {
    match cmd {
        RmtCommand::Sample(a) => {
            let spec = WishartSpec::new(a.m, a.n, a.scaled)?;
            let backend = a.backend.map_or_else(|| spec.default_backend(), Backend::from);
            let Some(out) = stream_trials(a.trials as u64, sink, stop, |i| {
                let s = rmt::sample_spectrum_with(&spec, trial_seed(a.seed, i), backend)?;
                Ok(SpectrumRow {
                    trial: i,
                    largest: s.largest(),
                    smallest: s.smallest(),
                    trace: s.trace(),
                    resampled: s.resampled,
                })
            })?
            else {
                return Ok(Outcome::Interrupted);
            };
            let top: Vec<f64> = out.iter().map(|r| r.largest).collect();
            sink.summary(&json!({
                "m": a.m, "n": a.n, "scaled": a.scaled, "backend": backend, "trials": a.trials,
                "mean_largest": mean(&top),
            }))?;
            Ok(Outcome::Success)
        }
        RmtCommand::Identity(a) => {
            let r = rmt::lpp_wishart_identity_test(a.m, a.n, a.trials, a.seed)?;
            sink.summary(&r)?;
            Ok(verdict(r.ks.passed))
        }
        RmtCommand::Dominance(a) => {
            let r = rmt::dominance_check(a.m, a.n, a.trials, a.seed)?;
            sink.summary(&r)?;
            Ok(verdict(r.passed))
        }
        RmtCommand::Rigidity(a) => {
            let spec = WishartSpec::new(a.m, a.n, true)?;
            let r = rmt::rigidity_experiment(&spec, a.c, a.trials, a.seed, spec.default_backend())?;
            sink.summary(&r)?;
            Ok(Outcome::Success)
        }
        RmtCommand::Kernel(a) => {
            let k = rmt::build_projection_kernel(a.m, a.n)?;
            if !a.y.is_empty() && a.y.len() != a.x.len() {
                return Err(Error::Parse {
                    key: "--y".into(),
                    msg: format!("expected {} values, got {}", a.x.len(), a.y.len()),
                });
            }
            let values: Vec<Value> =
                a.x.iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        let y = a.y.get(i).copied().unwrap_or(x);
                        json!({ "x": x, "y": y, "K": k.eval(x, y) })
                    })
                    .collect();
            sink.summary(&json!({ "m": a.m, "n": a.n, "values": values }))?;
            Ok(Outcome::Success)
        }
    }
}

fn run_rates(cmd: &RatesCommand, sink: &Sink) -> Result<Outcome> {
    match cmd {
        RatesCommand::Eval(a) => {
            let y = a.y.unwrap_or(1.0);
            let (value, err) = match a.which {
                RateWhich::I => {
                    let r = rates::rate_i(a.delta)?;
                    (r.value, r.abs_err_estimate)
                }
                RateWhich::Jy => {
                    let r = rates::rate_jy(y, a.delta)?;
                    (r.value, r.abs_err_estimate)
                }
                RateWhich::Iy => {
                    let r = rates::rate_iy(y, a.delta)?;
                    (r.value, r.abs_err_estimate)
                }
                RateWhich::Beta => (rates::beta_coefficient(a.delta)?, f64::NAN),
                RateWhich::BetaPrime => (rates::beta_prime(a.delta)?, f64::NAN),
            };
            sink.summary(&json!({
                "which": a.which,
                "inputs": { "delta": a.delta, "y": a.y },
                "value": value,
                "abs_err_estimate": if err.is_finite() { json!(err) } else { Value::Null },
            }))?;
            Ok(Outcome::Success)
        }
        RatesCommand::Mp(a) => {
            let law = MpLaw::new(a.y)?;
            let values =
                a.x.iter()
                    .map(|&x| {
                        Ok(json!({ "x": x, "value": match a.op {
                            MpOp::Density => mp_density(&law, x),
                            MpOp::Cdf => mp_cdf(&law, x),
                            MpOp::Quantile => mp_quantile(&law, x)?,
                        }}))
                    })
                    .collect::<Result<Vec<_>>>()?;
            sink.summary(&json!({ "y": a.y, "op": a.op, "values": values }))?;
            Ok(Outcome::Success)
        }
        RatesCommand::Curvature(a) => {
            let sums = a.c.iter().map(|&c| rates::curvature_sum_check(a.delta, a.n, c)).collect::<Result<Vec<_>>>()?;
            let mut payload = json!({ "delta": a.delta, "n": a.n, "sums": sums });
            if sums.len() >= 3 {
                let cs: Vec<f64> = sums.iter().map(|s| s.c as f64).collect();
                let totals: Vec<f64> = sums.iter().map(|s| s.total).collect();
                let coef = fit_polynomial(&cs, &totals, 2);
                payload["quadratic"] = json!(coef[2]);
                payload["minus_beta_over_n"] = json!(-rates::beta_coefficient(a.delta)? / a.n as f64);
            }
            sink.summary(&payload)?;
            Ok(Outcome::Success)
        }
    }
}

fn run_ldp(cmd: &LdpCommand, sink: &Sink, stop: &AtomicBool) -> Result<Outcome> {
    match cmd {
        LdpCommand::Estimate(a) => {
            let plan = match a.plan {
                PlanKind::Rejection => SamplingPlan::Rejection,
                PlanKind::Tilt => SamplingPlan::Tilt(TiltPlan::new(a.theta.unwrap_or(0.2), a.strip)?),
                PlanKind::Path => match a.theta {
                    Some(t) => SamplingPlan::path_mixture(t)?,
                    None => {
                        let ev = ldp::LdEvent::upper(a.n, a.delta)?;
                        let pilot = (a.trials / 10).clamp(1000, 5000);
                        let c = ldp::choose_theta(
                            Statistic::Full,
                            a.n,
                            a.n,
                            ev.threshold(),
                            &ldp::default_theta_grid(),
                            pilot,
                            crate::rng::derive_seed(a.seed, 0x9),
                        )?;
                        SamplingPlan::path_mixture(c.theta)?
                    }
                },
            };
            if a.trials < ldp::MIN_TRIALS {
                return Err(Error::Range(format!("need at least {} trials", ldp::MIN_TRIALS)));
            }
            let Some(rows) = stream_trials(a.trials as u64, sink, stop, |i| {
                Ok(ldp::trial_records_range(a.n, a.delta, &plan, i..i + 1, a.seed)?[0])
            })?
            else {
                return Ok(Outcome::Interrupted);
            };
            let pairs: Vec<(bool, f64)> = rows.iter().map(|r| (r.accepted, r.l.ln())).collect();
            let est = ldp::LdEstimate::from_trials(plan, &pairs);
            sink.summary(&est)?;
            Ok(if est.degenerate { Outcome::Degenerate } else { Outcome::Success })
        }
        LdpCommand::Reject(a) => {
            let r = ldp::rejection_conditional_samples(a.n, a.delta, a.budget, a.seed)?;
            sink.summary(&json!({
                "n": r.n, "delta": r.delta, "budget": r.budget, "pilot_acceptance": r.pilot_acceptance,
                "trials": r.trials, "accepted": r.accepted, "acceptance": r.acceptance, "ci": r.ci,
                "D_max": r.records.iter().map(|g| g.max_fluct).collect::<Vec<_>>(),
                "T": r.records.iter().map(|g| g.weight).collect::<Vec<_>>(),
            }))?;
            Ok(Outcome::Success)
        }
        LdpCommand::Midpoint(a) => {
            if a.n.len() == 1 {
                let r = ldp::midpoint_ratio_offset(a.n[0], a.delta, a.k, a.trials, a.seed)?;
                sink.summary(&r)?;
                let degenerate = r.numerator.degenerate || r.denominator.degenerate;
                return Ok(if degenerate { Outcome::Degenerate } else { Outcome::Success });
            }
            let r = ldp::midpoint_trend(&a.n, a.delta, a.trials, a.seed)?;
            sink.summary(&r)?;
            Ok(verdict(!r.upward))
        }
        LdpCommand::Tf(a) => {
            let mut opts = ldp::TfOptions::from_budget(a.budget);
            if let Some(t) = a.trials {
                opts.importance_trials = t;
            }
            if let Some(b) = a.bootstrap {
                opts.bootstrap = b;
            }
            let r = ldp::conditional_tf_experiment_with(&a.n, a.delta, &opts, a.seed)?;
            if let Some(p) = &a.csv {
                write_tf_csv(&r, File::create(p)?)?;
            }
            sink.summary(&r)?;
            Ok(if r.incomplete { Outcome::Degenerate } else { Outcome::Success })
        }
        LdpCommand::Split(a) => {
            let r = ldp::two_scale_split_probe(a.n, a.t1, a.delta, a.delta1, a.delta2, a.trials, a.seed)?;
            sink.summary(&r)?;
            Ok(verdict(r.passed))
        }
    }
}

/// One row per grid point, then one per fitted slope.
pub fn write_tf_csv<W: Write>(r: &ldp::TfReport, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "kind,n,method,median,q75,ci_lo,ci_hi,ess")?;
    for p in &r.points {
        let u = &p.unconditioned;
        writeln!(
            w,
            "unconditioned,{},plain,{},{},{},{},{}",
            p.n, u.median, u.q75, u.median_ci95.0, u.median_ci95.1, u.sample.ess
        )?;
        if let (Some(c), Some(m)) = (&p.conditioned, p.method) {
            let m = match m {
                ldp::ConditioningMethod::Rejection => "rejection",
                ldp::ConditioningMethod::Importance => "importance",
            };
            writeln!(
                w,
                "conditioned,{},{m},{},{},{},{},{}",
                p.n, c.median, c.q75, c.median_ci95.0, c.median_ci95.1, c.sample.ess
            )?;
        }
    }
    writeln!(w, "kind,slope,intercept,ci_lo,ci_hi")?;
    let fits = [("unconditioned", Some(r.unconditioned_fit)), ("conditioned", r.conditioned_fit)];
    for (name, fit) in fits {
        if let Some(f) = fit {
            writeln!(w, "{name},{},{},{},{}", f.slope, f.intercept, f.ci95.0, f.ci95.1)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("uptail").chain(s.split_whitespace()).map(String::from).collect()
    }

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    fn run_capture(cfg: &ExperimentConfig, stop: bool) -> (Result<Outcome>, Vec<ResultRecord>) {
        let buf = Shared::default();
        let sink = Sink::new(Box::new(buf.clone()), cfg);
        let r = run(cfg, &sink, &AtomicBool::new(stop));
        let bytes = buf.0.lock().unwrap().clone();
        (r, read_records(bytes.as_slice()).unwrap())
    }

    #[test]
    fn minimal_tf_config_parses() {
        let c = parse_config(ConfigSource::Args(&args("ldp tf --n 16,32,64 --delta 1.0 --seed 7"))).unwrap();
        let Command::Ldp(LdpCommand::Tf(a)) = &c.command else { panic!() };
        assert_eq!(a.n, vec![16, 32, 64]);
        assert_eq!(a.seed, 7);
    }

    #[test]
    fn negative_delta_names_the_constraint() {
        let e = parse_config(ConfigSource::Args(&args("ldp tf --n 16,32,64 --delta -1 --seed 7"))).unwrap_err();
        let Error::Parse { key, msg } = &e else { panic!("{e:?}") };
        assert!(key.contains("--delta"), "{key}");
        assert!(msg.contains("delta > 0"), "{msg}");
        assert_eq!(exit_code(&Err(e)), exit::PARSE);
    }

    #[test]
    fn missing_seed_is_an_error() {
        let e = parse_config(ConfigSource::Args(&args("ldp tf --n 16,32,64 --delta 1.0"))).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        assert!(parse_config(ConfigSource::Args(&args("lpp passage --n 4"))).is_err());
    }

    #[test]
    fn toml_and_flags_agree() {
        let doc = "command = \"ldp\"\nop = \"tf\"\nn = [16, 32, 64]\ndelta = 1.0\nseed = 7\nbootstrap = 500\n";
        let a = parse_config(ConfigSource::Toml(doc)).unwrap();
        let b =
            parse_config(ConfigSource::Args(&args("ldp tf --n 16,32,64 --delta 1 --seed 7 --bootstrap 500"))).unwrap();
        assert_eq!(a, b);
        let doc = "command = \"rmt\"\nop = \"sample\"\nm = 4\nn = 3\ntrials = 10\nseed = 1\nscaled = true\n";
        let a = parse_config(ConfigSource::Toml(doc)).unwrap();
        let b =
            parse_config(ConfigSource::Args(&args("rmt sample --m 4 --n 3 --trials 10 --seed 1 --scaled"))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn toml_unknown_key_is_named() {
        let doc = "command = \"lpp\"\nop = \"passage\"\nn = 4\nseed = 1\nbogus = 3\n";
        let Error::Parse { key, .. } = parse_config(ConfigSource::Toml(doc)).unwrap_err() else { panic!() };
        assert!(key.contains("bogus"), "{key}");
        let Error::Parse { key, .. } = parse_config(ConfigSource::Toml("op = \"tf\"")).unwrap_err() else { panic!() };
        assert_eq!(key, "command");
    }

    #[test]
    fn runs_are_deterministic_and_worker_independent() {
        let base = "lpp geodesic --n 12 --trials 40 --seed 5";
        let mut c1 = parse_config(ConfigSource::Args(&args(base))).unwrap();
        c1.workers = Some(1);
        let mut c8 = c1.clone();
        c8.workers = Some(8);
        let (_, r1) = run_capture(&c1, false);
        let (_, r1b) = run_capture(&c1, false);
        let (_, r8) = run_capture(&c8, false);
        let payloads = |rs: &[ResultRecord]| rs.iter().map(|r| r.payload.to_string()).collect::<Vec<_>>();
        assert_eq!(payloads(&r1), payloads(&r1b));
        assert_eq!(payloads(&r1), payloads(&r8));
        assert_eq!(r1.len(), 41);
        assert_eq!(r1.last().unwrap().record, RecordKind::Summary);
    }

    #[test]
    fn interrupted_stream_ends_with_truncation() {
        let c = parse_config(ConfigSource::Args(&args("rmt sample --m 3 --n 2 --trials 50 --seed 1"))).unwrap();
        let (r, recs) = run_capture(&c, true);
        assert_eq!(r, Ok(Outcome::Interrupted));
        assert_eq!(exit_code(&r), exit::INTERRUPTED);
        let last = recs.last().unwrap();
        assert_eq!(last.record, RecordKind::Truncated);
        assert_eq!(last.payload["completed_trials"], 0);
    }

    #[test]
    fn unknown_major_version_is_rejected() {
        let line = r#"{"schema_version":"2.0","record":"summary","payload":{}}"#;
        assert!(read_records(line.as_bytes()).is_err());
        let line = r#"{"schema_version":"1.7","record":"summary","payload":{}}"#;
        assert_eq!(read_records(line.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn exit_codes_are_distinct() {
        let budget = Err(Error::Budget { pilot: 0.0, msg: String::new() });
        let codes = [
            exit_code(&Ok(Outcome::Success)),
            exit_code(&Err(Error::Domain(String::new()))),
            exit_code(&Err(Error::Parse { key: String::new(), msg: String::new() })),
            exit_code(&budget),
            exit_code(&Ok(Outcome::ToleranceNotMet)),
            exit_code(&Ok(Outcome::Degenerate)),
        ];
        assert_eq!(codes, [0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn rates_eval_record() {
        let c = parse_config(ConfigSource::Args(&args("rates eval --which I --delta 1"))).unwrap();
        let (r, recs) = run_capture(&c, false);
        assert_eq!(r, Ok(Outcome::Success));
        let v = recs[0].payload["value"].as_f64().unwrap();
        assert!((v - rates::rate_i(1.0).unwrap().value).abs() < 1e-15);
        assert_eq!(recs[0].payload["which"], "i");
    }

    #[test]
    fn saved_field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let p = path.to_str().unwrap();
        let c = parse_config(ConfigSource::Args(&args(&format!(
            "lpp sample --n 6 --m 4 --seed 3 --format binary --field-out {p}"
        ))))
        .unwrap();
        let (_, recs) = run_capture(&c, false);
        let t = recs[0].payload["T"].as_f64().unwrap();
        let c = parse_config(ConfigSource::Args(&args(&format!("lpp passage --field {p}")))).unwrap();
        let (_, recs) = run_capture(&c, false);
        assert_eq!(recs[0].payload["value"].as_f64().unwrap(), t);
    }
}
