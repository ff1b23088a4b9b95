use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vokit_core::curation::DEFAULT_TAU;
use vokit_core::synth::{Shape, ZigzagSchedule};

#[derive(Debug, Parser)]
#[command(name = "vokit", version, about = "Visual odometry evaluation, uncertainty filtering and dataset curation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score predicted trajectories against ground truth (t_rel, r_rel, se).
    Evaluate(EvaluateArgs),
    /// Score prediction entropies and split them at a threshold.
    Filter(FilterArgs),
    /// Join a labeled set with a pseudo-labeled manifest.
    Mix(MixArgs),
    /// Write a synthetic ground-truth pose file and a matching prediction file.
    Synth(SynthArgs),
    /// Draw trajectories top-down (X-Z plane) as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Align {
    None,
    ScalePerFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth pose file; repeat for several sequences.
    #[arg(long, required = true)]
    pub gt: Vec<PathBuf>,
    /// Pose or prediction file, one per `--gt`, in the same order.
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    /// Subsequence lengths in meters.
    #[arg(long, value_delimiter = ',', default_value = "100,200,300,400,500,600,700,800")]
    pub lengths: Vec<f64>,
    /// Start a subsequence at every n-th frame.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Norm below which a translation counts as zero, meters.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = Align::None)]
    pub align: Align,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Add wall-clock time to the report (output is then not reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Prediction file (`id`, 12 pose values, 9 Psi values per line).
    #[arg(long)]
    pub pred: PathBuf,
    /// Keep samples whose entropy is strictly below this value.
    #[arg(long, default_value_t = DEFAULT_TAU, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = Method::Quadrature)]
    pub method: Method,
    /// Samples per record for `--method monte-carlo`.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Seed for `--method monte-carlo`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub kept: PathBuf,
    #[arg(long)]
    pub rejected: PathBuf,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Labeled manifest, or a ground-truth pose file.
    #[arg(long)]
    pub labeled: PathBuf,
    /// Pseudo-label manifest (typically the kept output of `filter`).
    #[arg(long)]
    pub pseudo: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Straight,
    Circle,
    Zigzag,
    RandomWalk,
}

impl From<ShapeArg> for Shape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Straight => Shape::Straight,
            ShapeArg::Circle => Shape::Circle,
            ShapeArg::Zigzag => Shape::Zigzag,
            ShapeArg::RandomWalk => Shape::RandomWalk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    ScaleOnly,
    TurnAndScale,
}

impl From<ScheduleArg> for ZigzagSchedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::ScaleOnly => ZigzagSchedule::ScaleOnly,
            ScheduleArg::TurnAndScale => ZigzagSchedule::TurnAndScale,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = ShapeArg::Straight)]
    pub shape: ShapeArg,
    /// Number of poses in the ground-truth file.
    #[arg(long, default_value_t = 101)]
    pub frames: usize,
    /// Meters per frame.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Predicted translations are scaled by `1 + scale-noise`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub scale_noise: f64,
    /// Standard deviation of a per-frame rotation error, radians.
    #[arg(long, default_value_t = 0.0)]
    pub rotation_jitter: f64,
    /// `s` in `Psi = s * R_gt`.
    #[arg(long, default_value_t = 50.0)]
    pub concentration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed zigzag prediction (requires `--shape zigzag`).
    #[arg(long, value_enum)]
    pub zigzag_schedule: Option<ScheduleArg>,
    /// Output ground-truth pose file.
    #[arg(long)]
    pub gt: PathBuf,
    /// Output prediction file.
    #[arg(long)]
    pub pred: PathBuf,
    /// Where to write the generator settings (JSON); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub gt: PathBuf,
    /// Pose or prediction files to overlay.
    #[arg(long)]
    pub pred: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}
