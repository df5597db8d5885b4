use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scarfkit::scene::SceneId;

#[derive(Debug, Parser)]
#[command(name = "scarfkit", version, about = "Uncertainty-aware scarf plots for 3D gaze recordings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a gaze CSV and detections JSONL pair and report issues.
    Validate(ValidateArgs),
    /// Map gaze to AOIs and write scarf plots (SVG) and/or the analysis export (JSON).
    Plot(PlotArgs),
    /// Write a synthetic scene as gaze CSV, detections JSONL and ground truth JSON.
    Generate(GenerateArgs),
    /// Render the confidence bar panel for a time selection of an export.
    Confidence(ConfidenceArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Gaze CSV (`timestamp_ms,valid,ox,oy,oz,dx,dy,dz`).
    #[arg(long)]
    pub gaze: PathBuf,
    /// AOI detections, one JSON object per line.
    #[arg(long)]
    pub detections: PathBuf,
    /// Detection bridging window in milliseconds [default: 50].
    #[arg(long)]
    pub window_ms: Option<i64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Key-value config file (TOML); flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Svg,
    Json,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NnModeArg {
    Limit,
    PaperLiteral,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Tracks to draw, comma separated: standard, depth, nn [default: standard,depth,nn].
    #[arg(long, value_delimiter = ',')]
    pub variant: Option<Vec<String>>,
    /// NN distance threshold in meters [default: 0.25].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Weighting of AOIs centered exactly on the ray [default: limit].
    #[arg(long, value_enum)]
    pub nn_mode: Option<NnModeArg>,
    /// Merge adjacent segments of identical composition.
    #[arg(long)]
    pub merge_runs: bool,
    /// Drop AOIs with this label and recompute all mappings (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    pub filter_label: Vec<String>,
    /// Also render the confidence panel for this window, `t0:t1` in milliseconds.
    #[arg(long)]
    pub select: Option<String>,
    /// Output path; for `--format both` the extension is replaced by .svg and .json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format [default: svg].
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Key-value config file (TOML); flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SceneArg {
    #[value(name = "BB")]
    Bb,
    #[value(name = "VP_B_VB")]
    VpBVb,
    #[value(name = "VP_VB")]
    VpVb,
    #[value(name = "VP_C_VB")]
    VpCVb,
}

impl From<SceneArg> for SceneId {
    fn from(s: SceneArg) -> Self {
        match s {
            SceneArg::Bb => SceneId::Bb,
            SceneArg::VpBVb => SceneId::VpBVb,
            SceneArg::VpVb => SceneId::VpVb,
            SceneArg::VpCVb => SceneId::VpCVb,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Scene to generate.
    #[arg(value_enum)]
    pub scene: SceneArg,
    /// RNG seed [default: 7].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Angular gaze jitter in degrees [default: 0.5].
    #[arg(long)]
    pub sigma_deg: Option<f64>,
    /// Output directory [default: current directory].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Key-value config file (TOML); flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConfidenceArgs {
    /// Analysis export written by `plot --format json`.
    #[arg(long)]
    pub export: PathBuf,
    /// Time window `t0:t1` in milliseconds.
    #[arg(long)]
    pub select: String,
    /// Only show this label.
    #[arg(long)]
    pub label: Option<String>,
    /// Output SVG path [default: confidence.svg].
    #[arg(long)]
    pub out: Option<PathBuf>,
}
