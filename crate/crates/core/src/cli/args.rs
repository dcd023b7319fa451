//! Command-line arguments. Every subcommand's options can also come from a
//! section of a TOML config file named after the subcommand; flags win.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "bmedian", version, about = "Scaled median of independent Brownian motions")]
pub struct Cli {
    /// TOML file with one section per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "BMEDIAN_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an analytic kernel function.
    KernelEval(KernelArgs),
    /// Trinomial walk laws and bound shapes.
    Walk(WalkArgs),
    /// Monte Carlo simulation of the median process.
    Simulate(SimulateArgs),
    /// Exact samples of the Gaussian limit process.
    LimitSample(LimitArgs),
    /// Run verification checks or the acceptance suite.
    Verify(VerifyArgs),
    /// Summarize a verification report file.
    Report(ReportArgs),
}

impl Command {
    pub fn section(&self) -> &'static str {
        match self {
            Command::KernelEval(_) => "kernel-eval",
            Command::Walk(_) => "walk",
            Command::Simulate(_) => "simulate",
            Command::LimitSample(_) => "limit-sample",
            Command::Verify(_) => "verify",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelOp {
    StdNormalCdf,
    MillsUpperBound,
    LimitCovariance,
    IncrementVariance,
    MedianDensity,
    MedianCdf,
    TailBoundCheck,
    Psi,
    P1,
    P2,
    WalkParams,
    P1Expansion,
    PsiExpansion,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub op: Option<KernelOp>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Write a JSON summary here as well as printing the value.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkOp {
    Exact,
    Phi,
    McPhi,
    Cheby,
    Chebyplus,
    BinomGauss,
    RecipMoment,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkArgs {
    #[arg(long, value_enum)]
    pub op: Option<WalkOp>,
    #[arg(long)]
    pub pt1: Option<f64>,
    #[arg(long)]
    pub pt2: Option<f64>,
    /// Step count of the walk.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Success probability for the binomial ratio or reciprocal moment.
    #[arg(long)]
    pub prob: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output for the exact law (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary path (stdout if absent).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimKind {
    Paths,
    Jump,
    Componentwise,
    Scaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    Rise,
    Drop,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: Option<SimKind>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated sample times.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    /// Row-major covariance entries for the component-wise median.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cov: Option<Vec<f64>>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// CSV output path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Limit,
    Brownian,
    Fbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    ClosedForm,
    Sampled,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitArgs {
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Estimate the local scaling exponent instead of sampling paths.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub holder: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    pub gaps: Option<Vec<f64>>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub hurst: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Acceptance,
    Cond,
    Split,
    Key,
    KeySweep,
    Expansion,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Largest time gap for the key estimate and the certificates.
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long)]
    pub key_ratio_ceiling: Option<f64>,
    /// Worker counts compared by the determinism criterion.
    #[arg(long, value_delimiter = ',')]
    pub determinism_workers: Option<Vec<usize>>,
    /// Skip the determinism criterion of the acceptance suite.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_determinism: Option<bool>,
    /// JSON report path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV report path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// JSON file written by `verify`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Also write the reports as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
