//! Argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "semreg", version, about = "Semantic-consistency correspondence filtering and registration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match keypoints between two clouds; prints IN and IR when ground truth is given.
    Match(MatchArgs),
    /// Match and estimate the transform mapping the target into the source frame.
    Register(RegisterArgs),
    /// Register every pair under a directory and write CSV and JSON reports.
    Bench(BenchArgs),
    /// Generate a synthetic scan pair with ground truth.
    Synth(SynthArgs),
    /// Inlier metrics over a grid of one pipeline parameter.
    Sweep(SweepArgs),
    /// Per-category, per-ring saliency of a cloud.
    Saliency(SaliencyArgs),
    /// Relabel label-boundary points at random.
    Blur(BlurArgs),
}

/// Options shared by every command that runs the matching pipeline.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Plain descriptor matching, without group or mask matching.
    #[arg(long)]
    pub baseline: bool,
    /// Label map for SemanticKITTI `.bin` inputs.
    #[arg(long)]
    pub label_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Source cloud (`.ply` with a `.labels` sidecar, or SemanticKITTI `.bin`).
    #[arg(long)]
    pub src: PathBuf,
    /// Target cloud.
    #[arg(long)]
    pub dst: PathBuf,
    /// Ground-truth pose file: one `[R|t]` row-major line mapping target into source.
    #[arg(long)]
    pub gt: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Write correspondences as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Write the estimated transform as a pose file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory with one subdirectory per pair holding `a.ply`, `b.ply` and `gt.txt`.
    #[arg(long)]
    pub dir: PathBuf,
    /// Output directory for `report.csv` and `report.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenePreset {
    Easy,
    Repeated,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlyEncoding {
    Ascii,
    Binary,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; receives `a.ply`, `b.ply`, their sidecars and `gt.txt`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ScenePreset::Easy)]
    pub scene: ScenePreset,
    #[arg(long, value_enum, default_value_t = PlyEncoding::Binary)]
    pub format: PlyEncoding,
    /// Gaussian noise per coordinate, meters.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Distance between the two scan positions, meters.
    #[arg(long)]
    pub offset: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory of pairs, laid out as for `bench`.
    #[arg(long)]
    pub dir: PathBuf,
    /// One of `r_local`, `k`, `bmr.N`, `bmr.L`.
    #[arg(long)]
    pub param: String,
    /// Comma-separated grid; a default grid is used when omitted.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    /// CSV output; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct SaliencyArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// CSV output; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub label_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BlurArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// Boundary radius, meters.
    #[arg(long)]
    pub radius: f64,
    /// Relabel probability for each boundary point.
    #[arg(long, default_value_t = 0.5)]
    pub prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output cloud, same format as the input.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub label_map: Option<PathBuf>,
}
