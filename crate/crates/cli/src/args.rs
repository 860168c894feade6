use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "tracebounds",
    version,
    about = "Certified polynomial approximants, Hutchinson trace estimation and Wishart experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or re-certify polynomial approximants.
    #[command(subcommand)]
    Poly(PolyCommand),
    /// Estimate tr(f(A)) with Hutchinson probes.
    Trace(TraceArgs),
    /// Monte-Carlo experiments on W = (1/d)·G·Gᵀ.
    #[command(subcommand)]
    Wishart(WishartCommand),
    /// Run the invariant suite on small seeded instances.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Func {
    Inv,
    Invsqrt,
    Monomial,
}

#[derive(Debug, Subcommand)]
pub enum PolyCommand {
    /// Construct an approximant and write it with its certificate.
    Build(PolyBuildArgs),
    /// Recompute the certificate of an existing polynomial file.
    Error(PolyErrorArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PolyBuildArgs {
    #[arg(long, value_enum)]
    pub func: Func,
    /// Upper end of the spectrum interval [1, kappa] (inv, invsqrt).
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub delta: f64,
    /// Power for --func monomial.
    #[arg(long)]
    pub s: Option<u32>,
    /// Certificate grid size.
    #[arg(long, default_value_t = 8192)]
    pub grid: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PolyErrorArgs {
    #[arg(long)]
    pub poly: PathBuf,
    #[arg(long, default_value_t = 8192)]
    pub grid: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Cheb,
    Lanczos,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKindArg {
    Rademacher,
    Gaussian,
}

#[derive(Debug, Args, Serialize)]
pub struct TraceArgs {
    /// Matrix file (MatrixMarket coordinate or raw dense).
    #[arg(long, conflicts_with = "random_spd", required_unless_present = "random_spd")]
    pub matrix: Option<PathBuf>,
    /// Generate a random SPD matrix of this dimension with spectrum in [1, kappa].
    #[arg(long)]
    pub random_spd: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, value_enum, default_value_t = Func::Inv)]
    pub func: Func,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = BackendKind::Cheb)]
    pub backend: BackendKind,
    /// Lanczos steps per probe (default: min(d, 30)).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub probes: usize,
    #[arg(long, value_enum, default_value_t = ProbeKindArg::Rademacher)]
    pub probe_kind: ProbeKindArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Include every quadratic form in the report.
    #[arg(long)]
    pub keep_forms: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentOpts {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum WishartCommand {
    /// Empirical Pr{λ_min ≤ x/d²}.
    Eigcdf(EigCdfArgs),
    /// Empirical Pr{λ_max ≥ 4(1 + t)} against 2·exp(-d·t).
    Lmax(LmaxArgs),
    /// Quantiles of tr(W^-p)/d^(2p).
    Invtrace(InvTraceArgs),
    /// Distribution of the unrevealed block after n canonical queries.
    Posterior(PosteriorArgs),
    /// Query game for a C-factor approximation of tr(W^-p).
    Game(GameArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EigCdfArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.04, 0.16, 0.64])]
    pub x: Vec<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub opts: ExperimentOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct LmaxArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 1.0])]
    pub t: Vec<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub opts: ExperimentOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct InvTraceArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub opts: ExperimentOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct PosteriorArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub opts: ExperimentOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Exact,
    Constant,
    Hk,
}

#[derive(Debug, Args, Serialize)]
pub struct GameArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Approximation factor.
    #[arg(long = "C", default_value_t = 2.0)]
    pub c: f64,
    #[arg(long)]
    pub budget: usize,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Output of --algo constant.
    #[arg(long)]
    pub guess: Option<f64>,
    /// Probes for --algo hk (default: max(1, budget/steps)).
    #[arg(long)]
    pub probes: Option<usize>,
    /// Lanczos steps for --algo hk (default: min(d, budget)).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub opts: ExperimentOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
