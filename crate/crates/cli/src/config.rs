//! Command-line and config-file parsing.
//!
//! Flags override values from a TOML file given with `--config`, which in turn
//! override the `PLATOON_SEED` environment variable (seed only) and built-in
//! defaults.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_FIELD_EXPONENT: u8 = 8;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUTPUT: &str = "platoon-output";
pub const SEED_ENV: &str = "PLATOON_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Invalid or missing value; `key` names the offending option.
    #[error("{message}")]
    Usage { key: String, message: String },
    /// `--help` or `--version` was requested; the text is ready to print.
    #[error("{0}")]
    Info(String),
}

impl ConfigError {
    fn usage(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Usage {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Usage { key, .. } => Some(key),
            ConfigError::Info(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    Simulate,
    Compare,
    RankProb,
}

impl Mode {
    fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "simulate" => Ok(Mode::Simulate),
            "compare" => Ok(Mode::Compare),
            "rankprob" => Ok(Mode::RankProb),
            other => Err(ConfigError::usage(
                "mode",
                format!("mode must be one of analytic, simulate, compare, rankprob (got {other:?})"),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
            Mode::RankProb => "rankprob",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSelection {
    Feedback,
    Nc,
    Both,
}

impl SchemeSelection {
    fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "feedback" => Ok(SchemeSelection::Feedback),
            "nc" => Ok(SchemeSelection::Nc),
            "both" => Ok(SchemeSelection::Both),
            other => Err(ConfigError::usage(
                "scheme",
                format!("scheme must be one of feedback, nc, both (got {other:?})"),
            )),
        }
    }

    pub fn schemes(self) -> Vec<platoon::Scheme> {
        use platoon::Scheme;
        match self {
            SchemeSelection::Feedback => vec![Scheme::Feedback],
            SchemeSelection::Nc => vec![Scheme::NetworkCoding],
            SchemeSelection::Both => vec![Scheme::Feedback, Scheme::NetworkCoding],
        }
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub mode: Mode,
    /// Sweep over `M`; empty in rankprob mode.
    pub total_packets: Vec<usize>,
    /// Sweep over `m`; empty in rankprob mode.
    pub per_round: Vec<usize>,
    pub field_exponent: u8,
    pub trials: u64,
    pub seed: u64,
    pub output: PathBuf,
    pub scheme: SchemeSelection,
    /// Matrix rows and columns for rankprob mode.
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    /// Worker threads for simulation; 0 lets the runtime decide.
    pub workers: usize,
    /// Cross-check the feedback closed form against the enumeration oracle.
    pub oracle: bool,
}

impl ExperimentSpec {
    /// Every `(M, m)` cell of the sweep grid, `M` outermost.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.total_packets
            .iter()
            .flat_map(move |&total| self.per_round.iter().map(move |&m| (total, m)))
    }
}

const AFTER_HELP: &str = "\
SWEEPS:
    --M and --m accept a single value (10), a comma list (1,2,5) or an
    inclusive range start:stop:step (10:100:10). Lists must be strictly
    increasing.

EXIT STATUS:
    0 success, 1 runtime failure, 2 usage error.";

#[derive(Debug, Parser)]
#[command(
    name = "platoon",
    version,
    about = "Stopping times of collaborative two-vehicle download, with and without network coding",
    after_help = AFTER_HELP
)]
struct Cli {
    /// analytic | simulate | compare | rankprob
    #[arg(long)]
    mode: Option<String>,
    /// Total packets M (sweep)
    #[arg(long = "M", value_name = "SWEEP")]
    total: Option<String>,
    /// Packets per vehicle per round m (sweep)
    #[arg(long = "m", value_name = "SWEEP")]
    per_round: Option<String>,
    /// Field exponent q; coefficients live in GF(2^q) [default: 8]
    #[arg(long)]
    q: Option<String>,
    /// Monte Carlo trials per cell and scheme [default: 100000]
    #[arg(long)]
    trials: Option<String>,
    /// Master seed [default: $PLATOON_SEED or 42]
    #[arg(long)]
    seed: Option<String>,
    /// Output directory for CSV files [default: platoon-output]
    #[arg(long)]
    output: Option<PathBuf>,
    /// feedback | nc | both [default: both]
    #[arg(long)]
    scheme: Option<String>,
    /// Matrix rows (rankprob)
    #[arg(long = "t")]
    rows: Option<String>,
    /// Matrix columns (rankprob)
    #[arg(long = "n")]
    cols: Option<String>,
    /// Simulation worker threads [default: all cores]
    #[arg(long)]
    workers: Option<String>,
    /// Compare the feedback closed form with the enumeration oracle (analytic)
    #[arg(long)]
    oracle: bool,
    /// TOML file with the same keys as the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SweepValue {
    One(usize),
    List(Vec<usize>),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<String>,
    #[serde(rename = "M")]
    total: Option<SweepValue>,
    #[serde(rename = "m")]
    per_round: Option<SweepValue>,
    q: Option<u8>,
    trials: Option<u64>,
    seed: Option<u64>,
    #[serde(alias = "output_path")]
    output: Option<PathBuf>,
    scheme: Option<String>,
    t: Option<usize>,
    n: Option<usize>,
    workers: Option<usize>,
    oracle: Option<bool>,
}

/// Parses `start:stop:step`, a comma list, or a single integer.
pub fn parse_sweep(key: &str, text: &str) -> Result<Vec<usize>, ConfigError> {
    let int = |s: &str| -> Result<usize, ConfigError> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| ConfigError::usage(key, format!("{key}: {s:?} is not a non-negative integer")))
    };
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(ConfigError::usage(key, format!("{key}: range must be start:stop:step")));
        }
        let (start, stop, step) = (int(parts[0])?, int(parts[1])?, int(parts[2])?);
        if step == 0 {
            return Err(ConfigError::usage(key, format!("{key}: range step must be ≥ 1")));
        }
        if start > stop {
            return Err(ConfigError::usage(key, format!("{key}: range start exceeds stop")));
        }
        (start..=stop).step_by(step).collect()
    } else {
        text.split(',').map(int).collect::<Result<Vec<_>, _>>()?
    };
    check_sweep(key, values)
}

fn check_sweep(key: &str, values: Vec<usize>) -> Result<Vec<usize>, ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::usage(key, format!("{key}: sweep is empty")));
    }
    if values.contains(&0) {
        return Err(ConfigError::usage(key, format!("{key} must be ≥ 1")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::usage(key, format!("{key}: sweep must be strictly increasing")));
    }
    Ok(values)
}

fn sweep_from_file(key: &str, value: SweepValue) -> Result<Vec<usize>, ConfigError> {
    match value {
        SweepValue::One(v) => check_sweep(key, vec![v]),
        SweepValue::List(v) => check_sweep(key, v),
        SweepValue::Text(s) => parse_sweep(key, &s),
    }
}

fn parse_number<T: std::str::FromStr>(key: &str, text: &str) -> Result<T, ConfigError> {
    text.trim()
        .parse()
        .map_err(|_| ConfigError::usage(key, format!("{key}: {text:?} is not a valid number")))
}

/// Parses the process arguments (including the program name in `args[0]`).
///
/// `file` supplies TOML text directly; otherwise `--config` is read if given.
pub fn parse_config<I, T>(args: I, file: Option<&str>) -> Result<ExperimentSpec, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    parse_config_with_env(args, file, std::env::var(SEED_ENV).ok())
}

/// As [`parse_config`], with the `PLATOON_SEED` value passed explicitly.
pub fn parse_config_with_env<I, T>(
    args: I,
    file: Option<&str>,
    env_seed: Option<String>,
) -> Result<ExperimentSpec, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            ConfigError::Info(e.to_string())
        }
        _ => ConfigError::usage("args", e.to_string()),
    })?;

    let file_text = match (file, &cli.config) {
        (Some(text), _) => Some(text.to_string()),
        (None, Some(path)) => Some(read_config(path)?),
        (None, None) => None,
    };
    let file: FileConfig = match file_text {
        Some(text) => toml::from_str(&text).map_err(|e| {
            ConfigError::usage("config", format!("config file: {}", e.message()))
        })?,
        None => FileConfig::default(),
    };

    let mode = match (cli.mode.as_deref(), file.mode.as_deref()) {
        (Some(s), _) | (None, Some(s)) => Mode::parse(s)?,
        (None, None) => return Err(ConfigError::usage("mode", "mode is required")),
    };

    let total_packets = match (cli.total, file.total) {
        (Some(s), _) => Some(parse_sweep("M", &s)?),
        (None, Some(v)) => Some(sweep_from_file("M", v)?),
        (None, None) => None,
    };
    let per_round = match (cli.per_round, file.per_round) {
        (Some(s), _) => Some(parse_sweep("m", &s)?),
        (None, Some(v)) => Some(sweep_from_file("m", v)?),
        (None, None) => None,
    };

    let field_exponent = match cli.q {
        Some(s) => parse_number::<u8>("q", &s)?,
        None => file.q.unwrap_or(DEFAULT_FIELD_EXPONENT),
    };
    if !(1..=platoon::gf2q::MAX_EXPONENT).contains(&field_exponent) {
        return Err(ConfigError::usage("q", "q must be in 1..=16"));
    }

    let trials = match cli.trials {
        Some(s) => parse_number::<u64>("trials", &s)?,
        None => file.trials.unwrap_or(DEFAULT_TRIALS),
    };
    let seed = match (cli.seed, file.seed, env_seed) {
        (Some(s), _, _) => parse_number::<u64>("seed", &s)?,
        (None, Some(v), _) => v,
        (None, None, Some(s)) => parse_number::<u64>(SEED_ENV, &s)?,
        (None, None, None) => DEFAULT_SEED,
    };
    let scheme = match (cli.scheme.as_deref(), file.scheme.as_deref()) {
        (Some(s), _) | (None, Some(s)) => SchemeSelection::parse(s)?,
        (None, None) => SchemeSelection::Both,
    };
    let rows = match cli.rows {
        Some(s) => Some(parse_number::<usize>("t", &s)?),
        None => file.t,
    };
    let cols = match cli.cols {
        Some(s) => Some(parse_number::<usize>("n", &s)?),
        None => file.n,
    };
    let workers = match cli.workers {
        Some(s) => parse_number::<usize>("workers", &s)?,
        None => file.workers.unwrap_or(0),
    };
    let output = cli
        .output
        .or(file.output)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    let oracle = cli.oracle || file.oracle.unwrap_or(false);

    let needs_trials = matches!(mode, Mode::Simulate | Mode::Compare | Mode::RankProb);
    if needs_trials && trials == 0 {
        return Err(ConfigError::usage("trials", "trials must be ≥ 1"));
    }

    let (total_packets, per_round) = if mode == Mode::RankProb {
        let t = rows.ok_or_else(|| ConfigError::usage("t", "t is required in rankprob mode"))?;
        let n = cols.ok_or_else(|| ConfigError::usage("n", "n is required in rankprob mode"))?;
        if n == 0 {
            return Err(ConfigError::usage("n", "n must be ≥ 1"));
        }
        if t == 0 {
            return Err(ConfigError::usage("t", "t must be ≥ 1"));
        }
        (Vec::new(), Vec::new())
    } else {
        let total = total_packets.ok_or_else(|| ConfigError::usage("M", "M is required"))?;
        let per = per_round.ok_or_else(|| ConfigError::usage("m", "m is required"))?;
        let (min_total, max_per) = (total[0], *per.last().unwrap());
        if max_per > min_total {
            return Err(ConfigError::usage(
                "m",
                format!("m = {max_per} exceeds M = {min_total}"),
            ));
        }
        (total, per)
    };

    Ok(ExperimentSpec {
        mode,
        total_packets,
        per_round,
        field_exponent,
        trials,
        seed,
        output,
        scheme,
        rows,
        cols,
        workers,
        oracle,
    })
}

fn read_config(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path)
        .map_err(|e| ConfigError::usage("config", format!("cannot read {}: {e}", path.display())))
}
