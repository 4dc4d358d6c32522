use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::UsageError;

#[derive(Parser, Debug)]
#[command(name = "zerocell", version, about = "Moments and variance of the zero cell volume of Poisson hyperplane tessellations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct GlobalArgs {
    /// JSON file whose keys mirror the long flag names; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: ZEROCELL_THREADS, else all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print a JSON summary on stdout
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the CSV table to this file instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact mean and bounds on the k-th moment
    Moments(MomentsArgs),
    /// Variance by quadrature, with the E·D sandwich
    Variance(VarianceArgs),
    /// Variance over a parameter grid
    Sweep(SweepArgs),
    /// Monte Carlo estimates cross-validated against the exact values
    Simulate(SimulateArgs),
    /// High-dimensional regime table with r = a·n and calibrated intensity
    Asympt(AsymptArgs),
    /// Intensity giving mean volume 1/lambda
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ModelArgs {
    /// Dimension (at least 2)
    #[arg(long)]
    pub n: Option<u32>,
    /// Distance exponent
    #[arg(long)]
    pub r: Option<f64>,
    /// Intensity
    #[arg(long, conflicts_with = "lambda")]
    pub gamma: Option<f64>,
    /// Calibrate the intensity so that the mean volume is 1/lambda
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleArg {
    Gk15,
    Gk31,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct QuadArgs {
    /// Relative tolerance of the quadrature
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Panel budget of each one-dimensional integration
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct MomentsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Moment order
    #[arg(long)]
    pub k: Option<u32>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct VarianceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Fixed dimensions, varying r
    Fig1,
    /// r tied to n by a rule, varying n
    Fig2,
    /// Explicit list of (n, r) pairs
    Custom,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub mode: Option<SweepMode>,
    /// Dimensions for fig1 [default: 2,3,4]
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<u32>>,
    /// Exponents for fig1 [default: 0.5,1,2,...,100]
    #[arg(long, value_delimiter = ',')]
    pub r_values: Option<Vec<f64>>,
    /// Exponent rule for fig2: a number for fixed r, or `<a>n` for r = a·n [default: n]
    #[arg(long)]
    pub r_rule: Option<String>,
    /// Smallest dimension for fig2 [default: 2]
    #[arg(long)]
    pub n_min: Option<u32>,
    /// Largest dimension for fig2 [default: 20]
    #[arg(long)]
    pub n_max: Option<u32>,
    /// `n:r` pairs for custom mode
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<String>>,
    /// Intensity [default: 1]
    #[arg(long, conflicts_with = "lambda")]
    pub gamma: Option<f64>,
    /// Calibrated intensity with mean volume 1/lambda
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Replications [default: 10000]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Hit-or-miss points per replication for n >= 3 [default: 100000]
    #[arg(long)]
    pub points: Option<usize>,
    /// Relative truncation bias budget [default: 1e-4]
    #[arg(long)]
    pub eps_bias: Option<f64>,
    /// Random seed (required)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write per-replication volumes to this CSV file
    #[arg(long, value_name = "FILE")]
    pub volumes: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct AsymptArgs {
    /// Ratio r/n [default: 1]
    #[arg(long)]
    pub a: Option<f64>,
    /// Target mean volume 1/lambda [default: 1]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// [default: 2]
    #[arg(long)]
    pub n_min: Option<u32>,
    /// [default: 24]
    #[arg(long)]
    pub n_max: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct CalibrateArgs {
    /// Dimension (at least 2)
    #[arg(long)]
    pub n: Option<u32>,
    /// Distance exponent
    #[arg(long)]
    pub r: Option<f64>,
    /// Target mean volume 1/lambda
    #[arg(long)]
    pub lambda: Option<f64>,
}

/// Fills unset fields from a config value of the same type.
pub trait Merge {
    fn merge(&mut self, cfg: Self);
}

macro_rules! impl_merge {
    ($t:ty; $($field:ident),*; $($nested:ident),*) => {
        impl Merge for $t {
            fn merge(&mut self, cfg: Self) {
                $(if self.$field.is_none() {
                    self.$field = cfg.$field;
                })*
                $(self.$nested.merge(cfg.$nested);)*
            }
        }
    };
}

impl_merge!(QuadArgs; rel_tol, max_subdivisions, rule;);
impl_merge!(MomentsArgs; k; model);
impl_merge!(VarianceArgs; ; model, quad);
impl_merge!(SimulateArgs; reps, points, eps_bias, seed, volumes; model);
impl_merge!(AsymptArgs; a, lambda, n_min, n_max; quad);
impl_merge!(CalibrateArgs; n, r, lambda;);

/// An intensity given on the command line overrides both intensity keys of the config.
fn merge_intensity(gamma: &mut Option<f64>, lambda: &mut Option<f64>, cfg_gamma: Option<f64>, cfg_lambda: Option<f64>) {
    if gamma.is_none() && lambda.is_none() {
        *gamma = cfg_gamma;
        *lambda = cfg_lambda;
    }
}

impl Merge for ModelArgs {
    fn merge(&mut self, cfg: Self) {
        self.n = self.n.or(cfg.n);
        self.r = self.r.or(cfg.r);
        merge_intensity(&mut self.gamma, &mut self.lambda, cfg.gamma, cfg.lambda);
    }
}

impl Merge for SweepArgs {
    fn merge(&mut self, cfg: Self) {
        self.mode = self.mode.or(cfg.mode);
        self.n_values = self.n_values.take().or(cfg.n_values);
        self.r_values = self.r_values.take().or(cfg.r_values);
        self.r_rule = self.r_rule.take().or(cfg.r_rule);
        self.n_min = self.n_min.or(cfg.n_min);
        self.n_max = self.n_max.or(cfg.n_max);
        self.grid = self.grid.take().or(cfg.grid);
        merge_intensity(&mut self.gamma, &mut self.lambda, cfg.gamma, cfg.lambda);
        self.quad.merge(cfg.quad);
    }
}

impl Merge for GlobalArgs {
    fn merge(&mut self, cfg: Self) {
        self.threads = self.threads.or(cfg.threads);
        self.json |= cfg.json;
        self.out = self.out.take().or(cfg.out);
    }
}

/// Parsed config file, split into global keys and command keys.
pub struct Config {
    global: Map<String, Value>,
    command: Map<String, Value>,
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("config {} is not valid JSON: {e}", path.display())))?;
        let Value::Object(all) = value else {
            return Err(UsageError(format!("config {} must be a JSON object", path.display())).into());
        };
        let global_keys = keys_of::<GlobalArgs>();
        let (global, command) = all.into_iter().partition(|(k, _)| global_keys.contains(k));
        Ok(Config { global, command })
    }

    pub fn global(&self) -> anyhow::Result<GlobalArgs> {
        decode(&self.global)
    }

    pub fn command<T: DeserializeOwned + Serialize + Default>(&self) -> anyhow::Result<T> {
        let allowed = keys_of::<T>();
        if let Some(k) = self.command.keys().find(|k| !allowed.contains(k)) {
            return Err(UsageError(format!("unknown config key `{k}` for this command")).into());
        }
        decode(&self.command)
    }
}

fn keys_of<T: Serialize + Default>() -> Vec<String> {
    match serde_json::to_value(T::default()) {
        Ok(Value::Object(m)) => m.into_iter().map(|(k, _)| k).collect(),
        _ => Vec::new(),
    }
}

fn decode<T: DeserializeOwned>(map: &Map<String, Value>) -> anyhow::Result<T> {
    serde_json::from_value(Value::Object(map.clone())).map_err(|e| UsageError(format!("bad config value: {e}")).into())
}
