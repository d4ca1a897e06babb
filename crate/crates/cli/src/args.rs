//! Command-line flags. Every subcommand's flags double as its JSON config
//! schema: `--config path.json` takes an object whose keys are the long flag
//! names, and explicit flags override the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "bff", version, about = "Bayes factor functions: evidence curves, MEEs and support sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normal mean with known standard error.
    #[command(allow_negative_numbers = true)]
    Normal(NormalArgs),
    /// Binomial proportion with a truncated beta prior.
    #[command(allow_negative_numbers = true)]
    Binomial(BinomialArgs),
    /// Random-effects meta-analysis (effect and heterogeneity).
    #[command(allow_negative_numbers = true)]
    Meta(MetaArgs),
    /// Replication study with the original study as the prior.
    #[command(allow_negative_numbers = true)]
    Replication(ReplicationArgs),
    /// One coefficient of a logistic regression, on the odds-ratio scale.
    #[command(allow_negative_numbers = true)]
    Glm(GlmArgs),
    /// Distribution of the unit-variance normal BFF over a threshold grid.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Normal(_) => "normal",
            Command::Binomial(_) => "binomial",
            Command::Meta(_) => "meta",
            Command::Replication(_) => "replication",
            Command::Glm(_) => "glm",
            Command::Simulate(_) => "simulate",
        }
    }
}

/// Flags shared by the analysis subcommands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Common {
    /// Support-set levels (repeat or comma-separate) [default: 1].
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub k: Vec<f64>,
    /// Lower grid corner (one value per dimension, comma-separated).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub grid_lower: Vec<f64>,
    /// Upper grid corner.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub grid_upper: Vec<f64>,
    /// Grid points per dimension.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Output directory [default: .].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for every random draw [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Decimals in the rounded display values of summary.json [default: 2].
    #[arg(long)]
    pub digits: Option<usize>,
    /// JSON config file; a summary.json is accepted and its echoed config is used.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct NormalArgs {
    /// Effect estimate.
    #[arg(long)]
    pub estimate: Option<f64>,
    /// Standard error of the estimate.
    #[arg(long)]
    pub se: Option<f64>,
    /// Prior under the alternative: global:m=,v= | local:v= | point:d=.
    #[arg(long)]
    pub prior: Option<String>,
    /// Extra priors for sensitivity.csv (repeatable).
    #[arg(long)]
    #[serde(default)]
    pub sensitivity: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BinomialArgs {
    /// Number of successes.
    #[arg(long)]
    pub y: Option<u64>,
    /// Number of trials.
    #[arg(long)]
    pub n: Option<u64>,
    /// Prior under the alternative: truncbeta:a=,b=,l=,u=.
    #[arg(long)]
    pub prior: Option<String>,
    /// Extra priors for sensitivity.csv (repeatable).
    #[arg(long)]
    #[serde(default)]
    pub sensitivity: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MetaTarget {
    /// BFF of `(theta0, tau0)` on a 2D grid.
    #[default]
    Joint,
    /// BFF of `theta0` with `tau` integrated out.
    Theta,
    /// BFF of `tau0` with `theta` integrated out.
    Tau,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MetaArgs {
    /// CSV with columns id,estimate,se.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Prior on the effect: truncbeta:a=,b=,l=,u= | global:m=,v= [default: truncbeta:a=5100,b=4900,l=0.5,u=1].
    #[arg(long)]
    pub theta_prior: Option<String>,
    /// Half-normal scale of the heterogeneity prior [default: 0.02].
    #[arg(long)]
    pub tau_scale: Option<f64>,
    /// Which BFF to compute [default: joint].
    #[arg(long, value_enum)]
    pub target: Option<MetaTarget>,
    /// Alternative half-normal scales for sensitivity.csv (comma-separated).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub sensitivity: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReplicationArgs {
    /// Original estimate.
    #[arg(long)]
    pub yo: Option<f64>,
    /// Original standard error.
    #[arg(long)]
    pub so: Option<f64>,
    /// Replication estimate.
    #[arg(long)]
    pub yr: Option<f64>,
    /// Replication standard error.
    #[arg(long)]
    pub sr: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GlmMethodArg {
    #[default]
    Laplace,
    Mcmc,
    Univariate,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GlmArgs {
    /// CSV with a 0/1 `outcome` column; all other columns are covariates.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Covariate whose coefficient is tested.
    #[arg(long)]
    pub coefficient: Option<String>,
    /// Posterior approximation [default: laplace].
    #[arg(long, value_enum)]
    pub method: Option<GlmMethodArg>,
    /// Variance of the N(0, v) prior on each slope; the intercept is flat [default: 0.5].
    #[arg(long)]
    pub prior_variance: Option<f64>,
    /// Metropolis draws for --method mcmc [default: 200000].
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Sample sizes (comma-separated) [default: 10,50,200].
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub n: Vec<u64>,
    /// Tested values (comma-separated) [default: 0,0.5,1].
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub theta0: Vec<f64>,
    /// Data-generating mean [default: 0].
    #[arg(long)]
    pub theta_star: Option<f64>,
    /// Unit variance [default: 4].
    #[arg(long)]
    pub kappa2: Option<f64>,
    /// Prior variance [default: 4].
    #[arg(long)]
    pub v: Option<f64>,
    /// Prior mean; omit for a local prior centred on theta0.
    #[arg(long)]
    pub m: Option<f64>,
    /// Smallest threshold [default: 0.001].
    #[arg(long)]
    pub gamma_lower: Option<f64>,
    /// Largest threshold [default: 1000].
    #[arg(long)]
    pub gamma_upper: Option<f64>,
    /// Log-spaced thresholds [default: 121].
    #[arg(long)]
    pub gamma_points: Option<usize>,
    /// Add a Monte Carlo column from this many draws.
    #[arg(long)]
    pub mc: Option<usize>,
    /// Output directory [default: .].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for the Monte Carlo draws [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON config file.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Drops the unset (`null`) and empty-list entries of a flags object.
fn prune(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m
            .into_iter()
            .filter(|(_, v)| !(v.is_null() || v.as_array().is_some_and(|a| a.is_empty())))
            .collect(),
        _ => Map::new(),
    }
}

fn load_config(path: &Path, subcommand: &str) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
    let mut obj = match value {
        Value::Object(mut m) => match m.remove("config") {
            Some(Value::Object(echo)) => echo,
            _ => m,
        },
        _ => return Err(CliError::input(format!("config {} is not a JSON object", path.display()))),
    };
    if let Some(sub) = obj.remove("subcommand") {
        if sub.as_str() != Some(subcommand) {
            return Err(CliError::input(format!("config {} is for subcommand {sub}, not '{subcommand}'", path.display())));
        }
    }
    Ok(obj)
}

/// Overlays explicit flags on the config file (if any) and rejects unknown keys.
pub fn merge<T>(flags: &T, config: Option<&Path>, subcommand: &str) -> CliResult<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let mut merged = match config {
        Some(p) => load_config(p, subcommand)?,
        None => Map::new(),
    };
    let known = prune_keys(&T::default());
    if let Some(bad) = merged.keys().find(|k| !known.contains(k)) {
        return Err(CliError::input(format!("unknown config key '{bad}' for subcommand '{subcommand}'")));
    }
    let flags = serde_json::to_value(flags).map_err(CliError::input)?;
    merged.extend(prune(flags));
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::input(format!("config: {e}")))
}

fn prune_keys<T: Serialize>(t: &T) -> Vec<String> {
    match serde_json::to_value(t) {
        Ok(Value::Object(m)) => m.into_iter().map(|(k, _)| k).collect(),
        _ => Vec::new(),
    }
}

/// The fully resolved flags as echoed into summary.json.
pub fn echo<T: Serialize>(subcommand: &str, resolved: &T) -> Value {
    let mut m = Map::new();
    m.insert("subcommand".into(), Value::String(subcommand.into()));
    m.extend(prune(serde_json::to_value(resolved).unwrap_or(Value::Null)));
    Value::Object(m)
}

pub fn required<T: Clone>(v: &Option<T>, flag: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::input(format!("missing required --{flag}")))
}
