use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "trako", version, about = "Compress tractography into glTF containers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a TCK, TRK or VTK file into a .tko container.
    Trakofy(TrakofyArgs),
    /// Restore a .tko container to a plain tractography format.
    Untrakofy(UntrakofyArgs),
    /// Compare an original file to its compressed or restored version.
    Tkompare(TkompareArgs),
    /// Write a seeded synthetic tractogram.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct TrakofyArgs {
    pub input: PathBuf,
    /// Defaults to the input path with a .tko extension.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Quantization bits.
    #[arg(long, default_value_t = 14, value_parser = clap::value_parser!(u8).range(1..=31))]
    pub bits: u8,
    /// Compression level; 0 disables DEFLATE.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u8).range(0..=10))]
    pub level: u8,
    /// Write GLB instead of glTF JSON.
    #[arg(long)]
    pub binary: bool,
    /// Drop per-vertex scalars.
    #[arg(long)]
    pub no_scalars: bool,
    /// Drop per-fiber properties.
    #[arg(long)]
    pub no_properties: bool,
    /// Store raw values without the codec.
    #[arg(long, conflicts_with_all = ["bits", "level"])]
    pub uncompressed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlainFormat {
    Tck,
    Trk,
    /// Binary legacy VTK.
    Vtk,
    VtkAscii,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnyFormat {
    Tck,
    Trk,
    Vtk,
    VtkAscii,
    /// glTF JSON container.
    Tko,
    /// GLB container.
    Glb,
}

#[derive(Debug, Args)]
pub struct UntrakofyArgs {
    pub input: PathBuf,
    /// Defaults to the input path with the format's extension.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Defaults to the output extension, else tck.
    #[arg(long, value_enum)]
    pub format: Option<PlainFormat>,
    /// Refuse conversions that would drop attributes.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct TkompareArgs {
    pub original: PathBuf,
    pub restored: PathBuf,
    /// Histogram bins for the overlap score.
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u32).range(2..))]
    pub bins: u32,
    /// Also write the comparison as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub streamlines: u64,
    /// Vertices per streamline.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub points: u64,
    /// Edge of the bounding cube in mm.
    #[arg(long = "box", default_value_t = 200.0)]
    pub box_mm: f64,
    #[arg(long, default_value_t = 0)]
    pub scalars: usize,
    #[arg(long, default_value_t = 0)]
    pub properties: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Vertex spacing in mm, at most 1.
    #[arg(long, default_value_t = 0.2)]
    pub step: f64,
    /// Direction jitter per step.
    #[arg(long, default_value_t = 0.05)]
    pub curvature: f64,
    /// Defaults to the output extension.
    #[arg(long, value_enum)]
    pub format: Option<AnyFormat>,
    #[arg(short, long)]
    pub output: PathBuf,
}
