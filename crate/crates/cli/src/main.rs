//! `relangle`: synthetic data, normalisation, subdivision, features,
//! entropy/storage reports and threshold segmentation from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relangle::Error;

#[derive(Debug, Parser)]
#[command(
    name = "relangle",
    version,
    about = "Relative-angle point feature toolchain"
)]
pub struct Cli {
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true, env = "RELANGLE_THREADS")]
    pub threads: Option<usize>,

    /// TOML settings file; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate labelled synthetic damaged surfaces.
    Synth(SynthArgs),
    /// Normalise a cloud into the unit cube (optionally after a random rotation).
    Normalize(NormalizeArgs),
    /// Split a cloud into overlapping fixed-size subsets.
    Subdivide(SubdivideArgs),
    /// Estimate normals and relative angles.
    Features(FeaturesArgs),
    /// Entropy of position, normal and relative-angle features per section.
    Entropy(EntropyArgs),
    /// File size and channel count of the six feature combinations.
    Storage(StorageArgs),
    /// Threshold-baseline damage segmentation on relative angles.
    Segment(SegmentArgs),
    /// Accuracy and IoU of predicted labels against ground truth.
    Score(ScoreArgs),
    /// Write a PLY coloured by a per-point scalar.
    ExportColored(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormChoice {
    Global,
    #[value(alias = "axis")]
    AxisSpecific,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeChoice {
    Subset,
    Dataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldChoice {
    Angle,
    Label,
    Z,
    NormalZ,
}

#[derive(Debug, Args)]
pub struct FeatureOpts {
    /// Normalisation applied before normal estimation.
    #[arg(long, value_enum)]
    pub norm: Option<NormChoice>,
    /// Neighbourhood size for normal estimation.
    #[arg(short = 'k', long)]
    pub neighborhood: Option<usize>,
    /// Points the average normal is taken over.
    #[arg(long, value_enum)]
    pub scope: Option<ScopeChoice>,
}

#[derive(Debug, Args)]
pub struct SplitOpts {
    /// Points per subset.
    #[arg(long)]
    pub subset_size: Option<usize>,
    /// Grow subsets over the mutual nearest-neighbour graph instead of plain kNN.
    #[arg(long)]
    pub connected: bool,
    #[arg(long, default_value_t = relangle::subdivision::DEFAULT_GRAPH_NEIGHBORS)]
    pub graph_neighbors: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of surfaces; surface i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = relangle::synth_surface::DEFAULT_DAMAGE_FRACTION)]
    pub damage_fraction: f64,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    /// Points per unit area.
    #[arg(long)]
    pub density: Option<f64>,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub norm: Option<NormChoice>,
    /// Apply a random rotation drawn from this seed before normalising.
    #[arg(long)]
    pub rotate_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SubdivideArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub split: SplitOpts,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Cloud file, or a directory of cloud files.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file, or directory when the input is a directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub features: FeatureOpts,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    /// Labelled cloud file, or a directory of them.
    #[arg(long)]
    pub input: PathBuf,
    /// Report directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub features: FeatureOpts,
    #[command(flatten)]
    pub split: SplitOpts,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Sections with fewer points are skipped.
    #[arg(long)]
    pub min_section_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StorageArgs {
    /// Labelled cloud; features are computed unless already present.
    #[arg(long)]
    pub input: PathBuf,
    /// Report directory; combination files go to its `combinations/` folder.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub features: FeatureOpts,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Damage threshold on the relative angle, in radians.
    #[arg(long, conflicts_with = "sweep")]
    pub threshold: Option<f64>,
    /// Pick the threshold maximising mIoU over this many steps (needs labels).
    #[arg(long)]
    pub sweep: Option<usize>,
    /// Majority-vote smoothing over this many neighbours.
    #[arg(long)]
    pub smooth: Option<usize>,
    #[command(flatten)]
    pub features: FeatureOpts,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Predicted labels (file or directory).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth labels (file or directory with matching file names).
    #[arg(long)]
    pub truth: PathBuf,
    /// Report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FieldChoice::Angle)]
    pub field: FieldChoice,
    #[command(flatten)]
    pub features: FeatureOpts,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
