mod bench;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use cagewarp::coords::CoordinateKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Free-form deformation of voxel radiance fields with cages.
#[derive(Parser, Debug)]
#[command(name = "cagewarp", version, about)]
struct Cli {
    /// JSON file with option values; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print the resolved options as JSON and exit without running.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Voxelize an analytic scene description into a field file.
    Bake(BakeArgs),
    /// Build a coarse cage around the dense part of a field.
    GenCage(GenCageArgs),
    /// Precompute cage coordinates on a grid and store them.
    Precompute(PrecomputeArgs),
    /// Render a field, optionally deformed by a cage pair.
    Render(RenderArgs),
    /// Render frames while the cage moves from its canonical to its deformed pose.
    Animate(AnimateArgs),
    /// Time grid and precise rendering for each coordinate kind.
    Bench(BenchArgs),
}

pub(crate) fn parse_kind(s: &str) -> Result<CoordinateKind, String> {
    s.parse::<CoordinateKind>().map_err(|e| e.to_string())
}

#[derive(Args, Debug, Serialize)]
struct BakeArgs {
    /// Scene description (JSON).
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Voxel nodes per axis.
    #[arg(long)]
    res: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct GenCageArgs {
    #[arg(long)]
    field: Option<PathBuf>,
    /// Density above which a voxel counts as occupied.
    #[arg(long)]
    threshold: Option<f64>,
    /// Dilation of the occupied voxels, in voxels.
    #[arg(long)]
    dilate: Option<usize>,
    /// Cells per axis of the coarse lattice the cage is extracted from.
    #[arg(long)]
    coarse_res: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CageArgs {
    #[arg(long, value_name = "OBJ")]
    cage_canonical: Option<PathBuf>,
    #[arg(long, value_name = "OBJ")]
    cage_deformed: Option<PathBuf>,
    /// Coordinate kind: mvc, hc or gc.
    #[arg(long, value_parser = parse_kind)]
    coords: Option<CoordinateKind>,
    /// Coordinate grid nodes per axis.
    #[arg(long)]
    grid_res: Option<usize>,
    /// Evaluate coordinates in closed form for every sample (mvc and gc only).
    #[arg(long)]
    precise: bool,
}

#[derive(Args, Debug, Serialize)]
struct PrecomputeArgs {
    /// Field the cages belong to; checked for readability only.
    #[arg(long)]
    field: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    cage: CageArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ViewArgs {
    #[arg(long)]
    field: Option<PathBuf>,
    /// Camera file (JSON with camera_angle_x and frames).
    #[arg(long)]
    cameras: Option<PathBuf>,
    /// Image width; overrides the camera file.
    #[arg(long)]
    width: Option<usize>,
    /// Image height; overrides the camera file.
    #[arg(long)]
    height: Option<usize>,
    /// Samples per ray.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    near: Option<f64>,
    #[arg(long)]
    far: Option<f64>,
    /// Background color as r,g,b in [0, 1].
    #[arg(long, value_delimiter = ',', num_args = 3)]
    background: Option<Vec<f64>>,
    #[arg(long)]
    white_background: bool,
    /// Image format: png or ppm.
    #[arg(long)]
    format: Option<String>,
    /// Also write the opacity of every pixel as a grayscale image.
    #[arg(long)]
    opacity: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct RenderArgs {
    #[command(flatten)]
    #[serde(flatten)]
    view: ViewArgs,
    #[command(flatten)]
    #[serde(flatten)]
    cage: CageArgs,
    /// Precomputed coordinate grid (from `precompute`).
    #[arg(long, value_name = "CWG")]
    grid: Option<PathBuf>,
    /// Directory where coordinate grids are cached between runs.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Also render the undeformed field and report the PSNR against it.
    #[arg(long)]
    compare_canonical: bool,
}

#[derive(Args, Debug, Serialize)]
struct AnimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    view: ViewArgs,
    #[command(flatten)]
    #[serde(flatten)]
    cage: CageArgs,
    /// Which camera of the camera file to use.
    #[arg(long)]
    camera_index: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    #[arg(long)]
    field: Option<PathBuf>,
    /// Camera file; the first camera is used. Defaults to a view of the whole scene.
    #[arg(long)]
    cameras: Option<PathBuf>,
    #[arg(long, value_name = "OBJ")]
    cage_canonical: Option<PathBuf>,
    #[arg(long, value_name = "OBJ")]
    cage_deformed: Option<PathBuf>,
    /// Comma-separated coordinate kinds.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    coords: Option<Vec<CoordinateKind>>,
    /// Comma-separated grid resolutions.
    #[arg(long, value_delimiter = ',')]
    grid_res: Option<Vec<usize>>,
    /// Square image size in pixels.
    #[arg(long)]
    image_size: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Timed runs per configuration.
    #[arg(long)]
    runs: Option<usize>,
    /// Untimed runs before timing.
    #[arg(long)]
    warmup: Option<usize>,
    /// Skip the precise rows.
    #[arg(long)]
    no_precise: bool,
    /// Also write the report as CSV to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or option combinations (exit code 2).
    Usage(String),
    /// Failure while doing the work (exit code 1).
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<cagewarp::Error> for CliError {
    fn from(e: cagewarp::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CAGEWARP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CAGEWARP_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.into()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(config::read_config_file).transpose()?;
    let file = file.as_ref();
    let dump = cli.dump_config;
    init_threads()?;
    match cli.command {
        Command::Bake(a) => commands::bake(config::resolve(&a, file)?, dump),
        Command::GenCage(a) => commands::gen_cage(config::resolve(&a, file)?, dump),
        Command::Precompute(a) => commands::precompute(config::resolve(&a, file)?, dump),
        Command::Render(a) => commands::render(config::resolve(&a, file)?, dump),
        Command::Animate(a) => commands::animate(config::resolve(&a, file)?, dump),
        Command::Bench(a) => bench::bench(config::resolve(&a, file)?, dump),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
