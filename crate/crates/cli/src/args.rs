use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thinsection::colorstats::VarianceMode;

/// Classify thin-section photomicrographs into intrusive igneous rock types.
#[derive(Debug, Parser)]
#[command(name = "thinsection", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one image and print its cell tally and verdict.
    Classify(ClassifyArgs),
    /// Run a parameter sweep over a labelled corpus.
    Sweep(SweepArgs),
    /// Write a seeded synthetic corpus with a manifest.
    Synth(SynthArgs),
    /// Recompute precision tables from an existing report.csv.
    Report(ReportArgs),
}

#[derive(Debug, Args, Default)]
pub struct Thresholds {
    /// Cells per side.
    #[arg(long)]
    pub grid: Option<u32>,
    /// Maximum edge-pixel fraction of a quartz cell.
    #[arg(long)]
    pub t_nonzero: Option<f64>,
    /// Colour variance above which a cell is an accessory mineral.
    #[arg(long)]
    pub t_variance: Option<f64>,
    /// Canny strong threshold as a fraction of the peak gradient.
    #[arg(long)]
    pub canny_high: Option<f64>,
    /// chroma, per-channel-max or per-channel-mean.
    #[arg(long)]
    pub variance_mode: Option<VarianceMode>,
    /// JSON file with defaults for any of these settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub image: PathBuf,
    #[command(flatten)]
    pub thresholds: Thresholds,
    /// Use the Canny threshold as the quartz edge-fraction cutoff as well.
    #[arg(long)]
    pub bind_thresholds: bool,
    /// Write the edge map as a 1-bit PNG.
    #[arg(long)]
    pub dump_edges: Option<PathBuf>,
    /// Write the image with the cell grid and label tints as PNG.
    #[arg(long)]
    pub dump_overlay: Option<PathBuf>,
    /// Write the per-cell labels and scores as JSON.
    #[arg(long)]
    pub dump_cells: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// CSV with header `path,rock,section`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// experiment1, experiment2, or a JSON plan file.
    #[arg(long, default_value = "experiment2")]
    pub plan: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub bind_thresholds: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Quartz edge-fraction cutoff when thresholds are not bound.
    #[arg(long)]
    pub t_nonzero: Option<f64>,
    /// chroma, per-channel-max or per-channel-mean.
    #[arg(long)]
    pub variance_mode: Option<VarianceMode>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Images per rock class.
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,
    /// Also write the 8x8 diorite sample (17 accessory cells, no quartz).
    #[arg(long)]
    pub diorite_example: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub report: PathBuf,
    /// Directory for precision.csv and summary.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
