use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "madsmooth", version, about = "Smooth distribution and density estimates via beta regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select and fit a model, then write the selection audit, the grid
    /// evaluation with its band, and the mode report.
    Fit(FitArgs),
    /// Print the mode report of the selected model.
    Modes(ModesArgs),
    /// Compare every link with the kernel baseline on a study or an input file.
    Compare(CompareArgs),
    /// Draw a study sample and write it together with its comparison report.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Kernel,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV file holding the sample.
    #[arg(long)]
    pub input: PathBuf,
    /// Column name, or zero-based index.
    #[arg(long, default_value = "0")]
    pub column: String,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// logit, probit, cloglog, cauchit, or all.
    #[arg(long, default_value = "all")]
    pub link: String,
    /// poly, spline, or both.
    #[arg(long, default_value = "poly")]
    pub basis: String,
    /// Smallest degree (poly) or spline dimension to try.
    #[arg(long)]
    pub dim_min: Option<usize>,
    /// Largest degree (poly) or spline dimension to try.
    #[arg(long)]
    pub dim_max: Option<usize>,
    /// Family-wise level of the pointwise band.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Number of evaluation grid points (at least 512).
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    /// Response estimator: fbc, ties or empirical. Default picks fbc, or ties
    /// when the sample has ties.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Isotonize the response before fitting.
    #[arg(long)]
    pub pre_isotonize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Format of the grid artifact.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// File name prefix for the artifacts.
    #[arg(long, default_value = "madsmooth")]
    pub prefix: String,
    /// Add kernel estimates to the grid artifact.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
}

#[derive(Debug, Clone, Args)]
pub struct ModesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// fig1, study1 or study2.
    #[arg(long, conflicts_with = "input")]
    pub study: Option<String>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    pub column: String,
    /// Sample size for a study; defaults to the study's own size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value = "madsmooth")]
    pub prefix: String,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub study: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "madsmooth")]
    pub prefix: String,
}
