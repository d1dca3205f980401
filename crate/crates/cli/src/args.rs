//! Command-line definitions, list/range parsing, and config-file merging.
//!
//! Every study parameter can come from a flag or from a JSON config file
//! (`--config`); flags win.  List-valued flags accept comma-separated
//! tokens where each token is a number or an inclusive range `a..b`; the
//! delay list additionally accepts `inf` for the analytic limit.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "dqmimo",
    version,
    about = "Rate studies for one-bit quantized MIMO receivers with delay-based blockwise combining"
)]
pub struct Cli {
    /// JSON file supplying defaults for any omitted flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output file (stdout when omitted).
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Global seed for every randomized construction.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count quantizer output regions of a hyperplane arrangement three
    /// ways: exact enumeration, the counting formula, and a sampling oracle.
    CountRegions(CountRegionsArgs),
    /// High-SNR rate caps and two-sided bounds over an (n_t, n_q, ell) grid.
    Bounds(BoundsArgs),
    /// Asymptotic-delay rate curves over n_q for several antenna counts,
    /// plus the saturation reference line.
    Fig4(Fig4Args),
    /// Rate-versus-delay table at fixed dimensions: exact caps (general and
    /// zero-threshold) alongside the analytic bounds.
    Tradeoff(TradeoffArgs),
    /// Induced-channel capacity at finite SNR via Blahut–Arimoto.
    Capacity(CapacityArgs),
    /// Time-domain link simulation through the delay network and one-bit
    /// quantizers.
    Simulate(SimulateArgs),
    /// Accuracy check of the entropy-based binomial expansions against
    /// exact evaluation.
    ExpansionCheck(ExpansionCheckArgs),
}

#[derive(clap::Args, Debug)]
pub struct CountRegionsArgs {
    /// Ambient dimension of the arrangement.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of hyperplanes (one-bit quantizers).
    #[arg(long)]
    pub n_q: Option<usize>,
    /// Force all thresholds to zero.
    #[arg(long)]
    pub zero_threshold: bool,
    /// Points for the sampling oracle.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Sampling-ball radius (default: five times the threshold span).
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(clap::Args, Debug)]
pub struct BoundsArgs {
    /// Transmit antenna counts (list).
    #[arg(long, value_name = "LIST")]
    pub n_t: Option<String>,
    /// Receive antennas.
    #[arg(long)]
    pub n_r: Option<u64>,
    /// Quantizer counts (list, ranges allowed).
    #[arg(long, value_name = "LIST")]
    pub n_q: Option<String>,
    /// Delay budgets (list), or `inf` for the analytic limit.
    #[arg(long, value_name = "LIST|inf")]
    pub ell: Option<String>,
}

#[derive(clap::Args, Debug)]
pub struct Fig4Args {
    /// Receive antennas.
    #[arg(long)]
    pub n_r: Option<u64>,
    /// Transmit antenna counts (list).
    #[arg(long, value_name = "LIST")]
    pub n_t: Option<String>,
    /// Quantizer counts (list, ranges allowed).
    #[arg(long, value_name = "LIST")]
    pub n_q: Option<String>,
}

#[derive(clap::Args, Debug)]
pub struct TradeoffArgs {
    /// Quantizers per channel use.
    #[arg(long)]
    pub n_q: Option<u64>,
    /// Channel rank.
    #[arg(long)]
    pub rank: Option<u64>,
    /// Receive antennas (defaults to the rank).
    #[arg(long)]
    pub n_r: Option<u64>,
    /// Delay budgets (list, ranges allowed; finite only).
    #[arg(long, value_name = "LIST")]
    pub ell: Option<String>,
}

#[derive(clap::Args, Debug)]
pub struct ChannelArgs {
    /// JSON file holding the channel: {"h": [[...]]} or
    /// {"n_t": .., "n_r": .., "seed": ..}.
    #[arg(long, value_name = "FILE")]
    pub channel: Option<PathBuf>,
    /// Transmit antennas for a seeded random channel.
    #[arg(long)]
    pub n_t: Option<usize>,
    /// Receive antennas for a seeded random channel.
    #[arg(long)]
    pub n_r: Option<usize>,
    /// Seed for the random channel (defaults to the global seed).
    #[arg(long)]
    pub channel_seed: Option<u64>,
}

#[derive(clap::Args, Debug)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Quantizers per channel use.
    #[arg(long)]
    pub n_q: Option<usize>,
    /// Delay budget (single value).
    #[arg(long)]
    pub ell: Option<usize>,
    /// SNR sweep in dB (comma list).
    #[arg(long, value_name = "LIST")]
    pub snr_db: Option<String>,
    /// Monte Carlo samples per transition row.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// All-zero thresholds in the combiner arrangement.
    #[arg(long)]
    pub zero_threshold: bool,
    /// Blahut–Arimoto convergence tolerance (bits).
    #[arg(long)]
    pub ba_tol: Option<f64>,
    /// Blahut–Arimoto iteration cap.
    #[arg(long)]
    pub ba_max_iter: Option<usize>,
    /// Skip the average-power constraint (plain capacity).
    #[arg(long)]
    pub no_cost_constraint: bool,
}

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Quantizers per channel use.
    #[arg(long)]
    pub n_q: Option<usize>,
    /// Delay budget (single value).
    #[arg(long)]
    pub ell: Option<usize>,
    /// SNR sweep in dB (comma list).
    #[arg(long, value_name = "LIST")]
    pub snr_db: Option<String>,
    /// Message blocks per SNR point.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Decoder: ml or sign.
    #[arg(long)]
    pub decoder: Option<String>,
    /// Monte Carlo samples per transition row.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Noise standard deviation (0 disables noise).
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// All-zero thresholds in the combiner arrangement.
    #[arg(long)]
    pub zero_threshold: bool,
}

#[derive(clap::Args, Debug)]
pub struct ExpansionCheckArgs {
    /// Fraction for the single-coefficient expansion.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Fraction for the truncated-sum expansion.
    #[arg(long)]
    pub sum_lambda: Option<f64>,
    /// Values of n to evaluate (list, ranges allowed).
    #[arg(long, value_name = "LIST")]
    pub n: Option<String>,
}

/// Delay-budget list: finite values plus an optional analytic-limit marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllList {
    pub finite: Vec<u64>,
    pub inf: bool,
}

/// Parses `"1,2,4..6"`-style unsigned lists (ranges inclusive).
pub fn parse_u64_list(s: &str) -> Result<Vec<u64>, CliError> {
    let mut out = Vec::new();
    for token in s.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if let Some((a, b)) = token.split_once("..") {
            let a: u64 = a
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("bad range start in {token:?}")))?;
            let b: u64 = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| CliError::config(format!("bad range end in {token:?}")))?;
            if b < a {
                return Err(CliError::config(format!("empty range {token:?}")));
            }
            out.extend(a..=b);
        } else {
            out.push(
                token
                    .parse()
                    .map_err(|_| CliError::config(format!("bad integer {token:?}")))?,
            );
        }
    }
    if out.is_empty() {
        return Err(CliError::config(format!("empty list {s:?}")));
    }
    Ok(out)
}

/// Parses a comma-separated float list.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    let out: Result<Vec<f64>, _> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect();
    let out = out.map_err(|_| CliError::config(format!("bad float list {s:?}")))?;
    if out.is_empty() {
        return Err(CliError::config(format!("empty list {s:?}")));
    }
    Ok(out)
}

/// Parses a delay list where any token may be `inf`.
pub fn parse_ell_list(s: &str) -> Result<EllList, CliError> {
    let mut finite = Vec::new();
    let mut inf = false;
    for token in s.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if token.eq_ignore_ascii_case("inf") {
            inf = true;
        } else {
            finite.extend(parse_u64_list(token)?);
        }
    }
    if finite.is_empty() && !inf {
        return Err(CliError::config(format!("empty delay list {s:?}")));
    }
    Ok(EllList { finite, inf })
}

/// Config-file values: a flat JSON object consulted for any flag the user
/// omitted.  Values may use native JSON types or the flag's string syntax.
#[derive(Debug, Default)]
pub struct ConfigFile {
    map: serde_json::Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("bad JSON in {}: {e}", path.display())))?;
        match value {
            Value::Object(map) => Ok(Self { map }),
            _ => Err(CliError::config(format!(
                "{} must hold a JSON object",
                path.display()
            ))),
        }
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.map.get(key)
    }

    pub fn u64(&self, flag: Option<u64>, key: &str) -> Result<Option<u64>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(Some)
                .ok_or_else(|| CliError::config(format!("config {key}: not a u64"))),
            Some(Value::String(s)) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(format!("config {key}: bad integer {s:?}"))),
            Some(_) => Err(CliError::config(format!("config {key}: expected integer"))),
        }
    }

    pub fn usize(&self, flag: Option<usize>, key: &str) -> Result<Option<usize>, CliError> {
        Ok(self.u64(flag.map(|v| v as u64), key)?.map(|v| v as usize))
    }

    pub fn f64(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(format!("config {key}: bad float {s:?}"))),
            Some(_) => Err(CliError::config(format!("config {key}: expected number"))),
        }
    }

    pub fn bool(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        match self.get(key) {
            None => Ok(false),
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(CliError::config(format!("config {key}: expected bool"))),
        }
    }

    pub fn string(&self, flag: Option<String>, key: &str) -> Result<Option<String>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(CliError::config(format!("config {key}: expected string"))),
        }
    }

    /// List-valued field: flag string, config string, config array, or a
    /// single config number.
    pub fn u64_list(&self, flag: Option<&str>, key: &str) -> Result<Option<Vec<u64>>, CliError> {
        if let Some(s) = flag {
            return parse_u64_list(s).map(Some);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => parse_u64_list(s).map(Some),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(|v| Some(vec![v]))
                .ok_or_else(|| CliError::config(format!("config {key}: not a u64"))),
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for item in items {
                    match item {
                        Value::Number(n) => {
                            out.push(n.as_u64().ok_or_else(|| {
                                CliError::config(format!("config {key}: not a u64"))
                            })?)
                        }
                        Value::String(s) => out.extend(parse_u64_list(s)?),
                        _ => {
                            return Err(CliError::config(format!(
                                "config {key}: expected integers"
                            )))
                        }
                    }
                }
                Ok(Some(out))
            }
            Some(_) => Err(CliError::config(format!("config {key}: expected list"))),
        }
    }

    pub fn f64_list(&self, flag: Option<&str>, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        if let Some(s) = flag {
            return parse_f64_list(s).map(Some);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => parse_f64_list(s).map(Some),
            Some(Value::Number(n)) => Ok(n.as_f64().map(|v| vec![v])),
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for item in items {
                    match item {
                        Value::Number(n) => out.push(
                            n.as_f64()
                                .ok_or_else(|| CliError::config(format!("config {key}: NaN")))?,
                        ),
                        Value::String(s) => out.extend(parse_f64_list(s)?),
                        _ => {
                            return Err(CliError::config(format!("config {key}: expected numbers")))
                        }
                    }
                }
                Ok(Some(out))
            }
            Some(_) => Err(CliError::config(format!("config {key}: expected list"))),
        }
    }

    pub fn ell_list(&self, flag: Option<&str>, key: &str) -> Result<Option<EllList>, CliError> {
        if let Some(s) = flag {
            return parse_ell_list(s).map(Some);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => parse_ell_list(s).map(Some),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(|v| {
                    Some(EllList {
                        finite: vec![v],
                        inf: false,
                    })
                })
                .ok_or_else(|| CliError::config(format!("config {key}: not a u64"))),
            Some(Value::Array(_)) => {
                let finite = self.u64_list(None, key)?.unwrap_or_default();
                Ok(Some(EllList { finite, inf: false }))
            }
            Some(_) => Err(CliError::config(format!("config {key}: expected list"))),
        }
    }

    /// Inline channel object under `key`, if present.
    pub fn channel(&self, key: &str) -> Result<Option<dqmimo::ChannelSpec>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::config(format!("config {key}: {e}"))),
        }
    }
}
