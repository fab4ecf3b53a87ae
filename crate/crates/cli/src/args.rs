use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::CliError;

/// Densities, hitting laws and path samplers of Bessel house-moving processes.
#[derive(Debug, Parser, Serialize)]
#[command(name = "bessel-house", version, args_override_self = true)]
pub struct Cli {
    /// key=value file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads; defaults to $BESSEL_HOUSE_THREADS, then all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Marginal densities of H(t) on a grid of states.
    Density(DensityArgs),
    /// E[H(t)] over a time grid.
    Mean(MeanArgs),
    /// Distribution of the maximum of a Bessel bridge.
    Maxdist(MaxdistArgs),
    /// Density and distribution function of the first hitting time of b.
    Hitting(HittingArgs),
    /// Path ensembles.
    Sample(SampleArgs),
    /// Validation suites.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Jsonl,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PolicyArgs {
    /// Relative truncation tolerance of the series.
    #[arg(long, default_value_t = 1e-12)]
    pub rel_tol: f64,
    /// Fewest series terms.
    #[arg(long, default_value_t = 8)]
    pub n_min: usize,
    /// Most series terms before giving up.
    #[arg(long, default_value_t = 20_000)]
    pub n_max: usize,
    /// Smallest admissible tau/(2c^2).
    #[arg(long, default_value_t = 1e-6)]
    pub tau_floor: f64,
}

impl PolicyArgs {
    pub fn policy(&self) -> bessel_house::kernels::SeriesPolicy {
        bessel_house::kernels::SeriesPolicy {
            rel_tol: self.rel_tol,
            n_min: self.n_min,
            n_max: self.n_max,
            tau_floor: self.tau_floor,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DensityArgs {
    /// Dimensions, comma separated.
    #[arg(long, default_value = "2,3,6,10")]
    pub delta: String,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.5)]
    pub b: f64,
    /// Times as start:end:step or a comma list.
    #[arg(long, default_value = "0.1:0.9:0.1")]
    pub t: String,
    /// Interior points of the state grid.
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MeanArgs {
    #[arg(long, default_value = "2,3,6,10")]
    pub delta: String,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.5)]
    pub b: f64,
    #[arg(long, default_value = "0:1:0.005")]
    pub t: String,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MaxdistArgs {
    #[arg(long, default_value = "3")]
    pub delta: String,
    /// Bridge start.
    #[arg(long, default_value_t = 0.0)]
    pub x: f64,
    /// Bridge end.
    #[arg(long, default_value_t = 1.0)]
    pub y: f64,
    /// Level the maximum is compared with.
    #[arg(long, default_value_t = 1.5)]
    pub c: f64,
    /// Bridge durations.
    #[arg(long, default_value = "1")]
    pub t: String,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HittingArgs {
    #[arg(long, default_value = "3")]
    pub delta: String,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value = "0.1:2:0.1")]
    pub t: String,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerChoice {
    /// House-moving paths from a to b.
    House,
    /// Free Bessel paths from a.
    Bessel,
    /// Bessel bridges from a to b.
    Bridge,
    /// Bridges from a to b kept only below b + eta.
    Conditioned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Auto,
    InverseCdf,
    BrownianNorm,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value_t = SamplerChoice::House)]
    pub sampler: SamplerChoice,
    #[arg(long, default_value_t = 3.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 100)]
    pub paths: usize,
    #[arg(long, default_value_t = 256)]
    pub steps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Slack above b for the conditioned sampler.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(long, value_enum, default_value_t = MethodChoice::Auto)]
    pub method: MethodChoice,
    /// Reject on the exact crossing probability between grid points (delta = 3).
    #[arg(long)]
    pub crossing_correction: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_attempts: usize,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    /// "all", "list" or comma separated suite names.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Monte Carlo sample size override.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Dimension override for single-dimension suites.
    #[arg(long)]
    pub delta: Option<f64>,
    /// JSON reports instead of tables.
    #[arg(long)]
    pub json: bool,
    /// Record wall time against each suite's budget.
    #[arg(long)]
    pub timings: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

/// Parses `start:end:step` or a comma list into sorted distinct values.
pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let bad = |e: String| CliError::Usage(format!("invalid {what} list {s:?}: {e}"));
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| bad(e.to_string()));
    let mut out = Vec::new();
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:end:step".into()));
        }
        let (start, end, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !start.is_finite() || !end.is_finite() {
            return Err(bad("step must be positive and bounds finite".into()));
        }
        let n = ((end - start) / step + 1e-9).floor();
        if n >= 0.0 {
            for i in 0..=n as usize {
                out.push(snap(start + i as f64 * step));
            }
        }
    } else {
        for v in s.split(',').filter(|v| !v.trim().is_empty()) {
            out.push(num(v)?);
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite".into()));
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    if out.is_empty() {
        return Err(CliError::Usage(format!("{what} list is empty")));
    }
    Ok(out)
}

// Drops the rounding of start + i·step so 0.1:0.9:0.1 gives 0.3, not 0.30000000000000004.
fn snap(v: f64) -> f64 {
    let r = (v * 1e12).round() / 1e12;
    if (r - v).abs() <= 1e-12 * v.abs().max(1.0) {
        r
    } else {
        v
    }
}

/// Turns a key=value file into flags. Blank lines and lines starting with
/// '#' are skipped; true/false toggle switches.
pub fn config_flags(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        let key = format!("--{}", k.trim().trim_start_matches("--").replace('_', "-"));
        match v.trim() {
            "true" => flags.push(key),
            "false" => {}
            v => {
                flags.push(key);
                flags.push(v.to_string());
            }
        }
    }
    Ok(flags)
}

/// Splices config-file flags in right after the subcommand so that flags
/// given on the command line win.
pub fn merge_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(args) };
    let flags = config_flags(Path::new(&path))?;
    let commands = ["density", "mean", "maxdist", "hitting", "sample", "validate"];
    let Some(pos) = args.iter().position(|a| commands.contains(&a.as_str())) else { return Ok(args) };
    let mut merged = args[..=pos].to_vec();
    merged.extend(flags);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}
