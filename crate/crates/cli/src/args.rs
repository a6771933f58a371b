use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

const CSV_HELP: &str = "\
CSV outputs (header row, fixed column order):
  simulate         placements.csv   anchor,row,col     (row is 0 in 1d)
                   latents.csv      1d: k,g1,g2
                                    2d: k1,k2,a_row,a_col,b_row,b_col,c_row,c_col,d_row,d_col
                   measurement.csv  index,value        (only when at most 100000 values)
  stationary       stationary.csv   x,y,pi_closed,pi_empirical
  mixing           mixing.csv       1d: start,k,tv,envelope
                                    2d: separation,deviation,std_error,pairs,conditioning_states
  hardcore-sample  configurations.csv  sample,row,col  (one line per occupied anchor)
  moments          moments.csv      order,index,empirical,population,std_error
  experiment       mse.csv          M,m,effective,series,mse,se,trials
                   sigma.csv        sigma,mse,se
Every run also writes manifest.json; `replay` re-runs a manifest.";

#[derive(Debug, Parser)]
#[command(name = "mtdmra", version, about = "Simulate multi-target detection data, its latent Markov structure, and moment estimators", after_help = CSV_HELP)]
pub struct Cli {
    /// Directory for all outputs (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Worker threads for trial-level parallelism. Results do not depend on it.
    #[arg(long, global = true, env = "MTDMRA_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Synthesize a measurement, its patches and latent groups.
    Simulate(SimulateArgs),
    /// Closed-form vs empirical stationary pair law (1d).
    Stationary(StationaryArgs),
    /// Exact TV mixing curves (1d) or the spatial decay table (2d).
    Mixing(MixingArgs),
    /// Sample hard-core placements on the anchor grid.
    HardcoreSample(HardcoreArgs),
    /// Empirical moments of MTD patches against population moments.
    Moments(MomentsArgs),
    /// Recover the signal from the moments of a stored patch set.
    Recover(RecoverArgs),
    /// Run an MSE or noise-scaling experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Model {
    #[value(name = "1d")]
    #[serde(rename = "1d")]
    OneD,
    #[value(name = "2d")]
    #[serde(rename = "2d")]
    TwoD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerArg {
    Exact,
    Glauber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainSource {
    /// The pair chain itself.
    Chain,
    /// Latent groups of sampled placements.
    Mtd,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: usize,
    /// Patches per side.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: usize,
    /// Gap parameter of the 1d placement process.
    #[arg(long)]
    pub gap_lambda: Option<f64>,
    /// Hard-core activity of the 2d placement process.
    #[arg(long)]
    pub activity: Option<f64>,
    #[arg(long, value_enum, default_value = "glauber")]
    pub sampler: SamplerArg,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated signal entries (row-major in 2d); a ramp when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub signal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StationaryArgs {
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: usize,
    #[arg(long)]
    pub gap_lambda: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub chain_steps: usize,
    #[arg(long, value_enum, default_value = "chain")]
    pub source: ChainSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MixingArgs {
    #[arg(long, value_enum, default_value = "1d")]
    pub model: Model,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: usize,
    #[arg(long)]
    pub gap_lambda: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub kmax: usize,
    /// 2d: patches per side.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub activity: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub separations: Vec<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub samples_per_chain: Option<usize>,
    #[arg(long)]
    pub margin: Option<usize>,
    #[arg(long)]
    pub min_hits: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HardcoreArgs {
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: usize,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "glauber")]
    pub sampler: SamplerArg,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MomentsArgs {
    #[arg(long, value_enum, default_value = "1d")]
    pub model: Model,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: usize,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long)]
    pub gap_lambda: Option<f64>,
    #[arg(long)]
    pub activity: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Highest moment order (1 to 3).
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Batch count for batch-means standard errors.
    #[arg(long, default_value_t = 100)]
    pub batches: usize,
    /// 2d: Glauber samples used to estimate the group law.
    #[arg(long, default_value_t = 2000)]
    pub pilot_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub signal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RecoverArgs {
    /// Patch container written by `simulate`.
    #[arg(long)]
    pub patches: PathBuf,
    /// Noise level; defaults to the one stored in the container.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub gap_lambda: Option<f64>,
    #[arg(long)]
    pub activity: Option<f64>,
    /// Highest moment order used (1 to 3).
    #[arg(long, default_value_t = 3)]
    pub orders: usize,
    /// Comma-separated starting point; a seeded Gaussian draw when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2000)]
    pub pilot_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExperimentArgs {
    /// JSON config: MSE fields (model, L, M_list, ...) or noise-scaling
    /// fields (L, n, sigma_list, M, ...).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's trials.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
