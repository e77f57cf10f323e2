use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "calimetr", version, about = "Calibration and uncertainty metrics for classifier outputs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scalar metrics, reliability curves and sparsification curves at T = 1.
    Report(ReportArgs),
    /// Metric curves over a temperature grid and the gaps between their optima.
    Sweep(SweepArgs),
    /// Sparsification curves and AUSE, per class or for one class.
    Ause(AuseArgs),
    /// Total, aleatoric and epistemic entropy of an ensemble.
    Decompose(DecomposeArgs),
    /// Seeded synthetic prediction tensors.
    Synth(SynthArgs),
    /// SVG figures from one or more JSON reports.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    #[value(name = "json+svg")]
    JsonSvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sorter {
    Vr,
    Entropy,
    Ce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Merit {
    Iou,
    Accuracy,
    Brier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassSel {
    All,
    Id(usize),
}

fn parse_class(s: &str) -> Result<ClassSel, String> {
    if s == "all" {
        return Ok(ClassSel::All);
    }
    s.parse()
        .map(ClassSel::Id)
        .map_err(|_| format!("expected a class id or \"all\", got {s:?}"))
}

#[derive(Debug, Args)]
pub struct Io {
    /// Prediction files: tensor files (labels plus logits or probs) or CSV.
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct Binning {
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args)]
pub struct Sparsify {
    #[arg(long, value_enum, default_value = "iou")]
    pub merit: Merit,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.99)]
    pub max_fraction: f64,
    /// Class id, or "all" for one result per class present.
    #[arg(long, value_parser = parse_class)]
    pub class: Option<ClassSel>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub binning: Binning,
    #[command(flatten)]
    pub sparsify: Sparsify,
    /// ECE and UCE over all instances instead of the mean over classes.
    #[arg(long)]
    pub holistic: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub binning: Binning,
    #[command(flatten)]
    pub sparsify: Sparsify,
    #[arg(long, default_value_t = 0.1)]
    pub temp_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub temp_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub temp_step: f64,
    #[arg(long)]
    pub holistic: bool,
    /// Comma-separated metric names; all metrics when omitted.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Classes per group in the class-wise summary (with --class).
    #[arg(long, default_value_t = 3)]
    pub group_size: usize,
}

#[derive(Debug, Args)]
pub struct AuseArgs {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub sparsify: Sparsify,
    #[arg(long, value_enum, default_value = "vr")]
    pub sorter: Sorter,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Member score tensors plus one labels tensor, or one CSV per member.
    #[command(flatten)]
    pub io: Io,
    /// Report values in nats instead of normalizing by ln K.
    #[arg(long)]
    pub nats: bool,
    /// Include per-instance values, not only means.
    #[arg(long)]
    pub per_instance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Skew {
    HighConfidence,
    HighUncertainty,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub concentration: f64,
    #[arg(long, default_value_t = 1.0)]
    pub distortion: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub skew: Option<Skew>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Reliability,
    Sparsification,
    LossSurface,
    AuseOverRuns,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// JSON reports; several reports make the runs of an AUSE-over-runs plot.
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub out: PathBuf,
}
