//! `qvol`: slice-stack volume estimation from the command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O or data error.

mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use qvol_core::analysis::{self, StudyConfig};
use qvol_core::estimator::{estimate_volume_with, reference_volume, SliceLayout};
use qvol_core::maskio::{load_volume, save_volume, Encoding, MaskVolume, SliceGeometry};
use qvol_core::phantoms::{self, PhantomSpec, Shape};
use qvol_core::sequences::SequenceSpec;

use render::{DisplayUnit, OutputFormat};

#[derive(Parser, Debug)]
#[command(name = "qvol", version, about = "Quasi-Monte Carlo volumetry for stacked binary masks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rasterize a regular solid and write it as manifest + raw volume.
    Phantom(PhantomArgs),
    /// Estimate the volume of a mask with one sampling method.
    Volume(VolumeArgs),
    /// Halton and pseudorandom estimates side by side.
    Compare(CompareArgs),
    /// Relative error versus points per slice for both methods.
    Converge(ConvergeArgs),
    /// Points per slice each method needs to reach a target error.
    PointsToTarget(PointsToTargetArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShapeArg {
    Cube,
    Cuboid,
    Cylinder,
    Cone,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Halton,
    Mc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EncodingArg {
    U8,
    F32le,
}

#[derive(Args, Debug)]
struct PhantomArgs {
    #[arg(long, value_enum)]
    shape: ShapeArg,
    #[arg(long)]
    edge_mm: Option<f64>,
    /// Cuboid extent along x (in-plane).
    #[arg(long)]
    x_mm: Option<f64>,
    /// Cuboid extent along y (in-plane).
    #[arg(long)]
    y_mm: Option<f64>,
    /// Cuboid extent along the slice axis.
    #[arg(long)]
    z_mm: Option<f64>,
    #[arg(long)]
    radius_mm: Option<f64>,
    #[arg(long)]
    height_mm: Option<f64>,
    /// Grid size as WIDTHxHEIGHTxSLICES.
    #[arg(long, default_value = "128x128x100", value_parser = parse_grid)]
    grid: (usize, usize, usize),
    /// Spacing as DX,DY,THICKNESS in mm, or a single isotropic value.
    #[arg(long, default_value = "1,1,1", value_parser = parse_spacing)]
    spacing_mm: (f64, f64, f64),
    /// In-plane center as X,Y in mm (default: slice center).
    #[arg(long, value_parser = parse_pair_f64)]
    center_mm: Option<(f64, f64)>,
    /// z of the solid's bottom face in mm (default: centered in the stack).
    #[arg(long, allow_hyphen_values = true)]
    base_z_mm: Option<f64>,
    #[arg(long, value_enum, default_value = "u8")]
    encoding: EncodingArg,
    /// Output directory; receives volume.txt and volume.raw.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SamplingArgs {
    /// Volume manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Halton bases as B1,B2.
    #[arg(long, default_value = "2,11", value_parser = parse_pair_u64)]
    bases: (u64, u64),
    /// True volume in mm^3, for relative errors.
    #[arg(long)]
    truth: Option<f64>,
    #[arg(long, value_enum, default_value = "human")]
    format: OutputFormat,
    #[arg(long, value_enum, default_value = "mm3")]
    display_unit: DisplayUnit,
}

#[derive(Args, Debug)]
struct VolumeArgs {
    #[command(flatten)]
    common: SamplingArgs,
    #[arg(long, value_enum, default_value = "halton")]
    method: MethodArg,
    /// Points per slice.
    #[arg(long, default_value_t = 10_000)]
    points: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First Halton index.
    #[arg(long, default_value_t = 1)]
    start_index: u64,
    /// Reuse the same points on every slice instead of continuing the stream.
    #[arg(long)]
    restart_per_slice: bool,
    /// Also print per-slice hit counts and areas.
    #[arg(long)]
    per_slice: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: SamplingArgs,
    #[arg(long, default_value_t = 10_000)]
    points: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Number of MC seeds averaged per grid point.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Seed k of the schedule is BASE_SEED + k.
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[command(flatten)]
    common: SamplingArgs,
    #[command(flatten)]
    study: StudyArgs,
    /// Comma-separated points-per-slice grid (default: 100 * 2^k up to --max-points).
    #[arg(long, value_delimiter = ',')]
    grid_points: Option<Vec<u64>>,
    #[arg(long, default_value_t = 100_000)]
    max_points: u64,
}

#[derive(Args, Debug)]
struct PointsToTargetArgs {
    #[command(flatten)]
    common: SamplingArgs,
    #[command(flatten)]
    study: StudyArgs,
    /// Target relative error.
    #[arg(long, default_value_t = 0.01)]
    target: f64,
    #[arg(long, default_value_t = 10)]
    grid_start: u64,
    #[arg(long, default_value_t = 10)]
    grid_step: u64,
    #[arg(long, default_value_t = 10_000)]
    grid_max: u64,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<qvol_core::Error> for Failure {
    fn from(e: qvol_core::Error) -> Self {
        Failure::Data(e.into())
    }
}

type CmdResult = Result<String, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_grid(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split('x').collect();
    let [w, h, z] = parts.as_slice() else {
        return Err(format!("expected WIDTHxHEIGHTxSLICES, got `{s}`"));
    };
    let num = |p: &str| match p.trim().parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("`{p}` is not a positive integer")),
    };
    Ok((num(w)?, num(h)?, num(z)?))
}

fn parse_spacing(s: &str) -> Result<(f64, f64, f64), String> {
    let vals = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    match vals.as_slice() {
        [d] => Ok((*d, *d, *d)),
        [dx, dy, h] => Ok((*dx, *dy, *h)),
        _ => Err(format!("expected DX,DY,THICKNESS or a single value, got `{s}`")),
    }
}

fn parse_pair_f64(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected A,B, got `{s}`"))?;
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number"));
    Ok((num(a)?, num(b)?))
}

fn parse_pair_u64(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected A,B, got `{s}`"))?;
    let num = |p: &str| p.trim().parse::<u64>().map_err(|_| format!("`{p}` is not an integer"));
    Ok((num(a)?, num(b)?))
}

fn require(value: Option<f64>, flag: &str, shape: &str) -> Result<f64, Failure> {
    value.ok_or_else(|| usage(format!("--shape {shape} requires {flag}")))
}

fn phantom_spec(args: &PhantomArgs) -> Result<PhantomSpec, Failure> {
    let shape = match args.shape {
        ShapeArg::Cube => Shape::Cube {
            edge_mm: require(args.edge_mm, "--edge-mm", "cube")?,
        },
        ShapeArg::Cuboid => Shape::Cuboid {
            x_mm: require(args.x_mm, "--x-mm", "cuboid")?,
            y_mm: require(args.y_mm, "--y-mm", "cuboid")?,
            z_mm: require(args.z_mm, "--z-mm", "cuboid")?,
        },
        ShapeArg::Cylinder => Shape::Cylinder {
            radius_mm: require(args.radius_mm, "--radius-mm", "cylinder")?,
            height_mm: require(args.height_mm, "--height-mm", "cylinder")?,
        },
        ShapeArg::Cone => Shape::Cone {
            base_radius_mm: require(args.radius_mm, "--radius-mm", "cone")?,
            height_mm: require(args.height_mm, "--height-mm", "cone")?,
        },
    };
    let (w, h, z) = args.grid;
    let (dx, dy, t) = args.spacing_mm;
    let geometry = SliceGeometry::new(w, h, dx, dy, t).map_err(|e| usage(e.to_string()))?;
    let mut spec = PhantomSpec::new(shape, geometry, z);
    spec.center_mm = args.center_mm;
    spec.base_z_mm = args.base_z_mm;
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

fn cmd_phantom(args: &PhantomArgs) -> CmdResult {
    let spec = phantom_spec(args)?;
    let volume = phantoms::rasterize(&spec).map_err(|e| usage(e.to_string()))?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let manifest = args.out.join("volume.txt");
    let encoding = match args.encoding {
        EncodingArg::U8 => Encoding::U8,
        EncodingArg::F32le => Encoding::F32le,
    };
    save_volume(&volume, &manifest, encoding)?;
    Ok(render::phantom(
        phantoms::analytic_volume(&spec),
        volume.voxel_count_volume_mm3(),
        reference_volume(&volume),
        &manifest,
    ))
}

fn load(path: &Path) -> Result<MaskVolume, Failure> {
    Ok(load_volume(path).with_context(|| format!("loading {}", path.display()))?)
}

fn check_truth(truth: Option<f64>) -> Result<(), Failure> {
    match truth {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(usage(format!("--truth must be positive, got {t}"))),
        _ => Ok(()),
    }
}

fn check_points(points: u64) -> Result<(), Failure> {
    if points == 0 {
        return Err(usage("--points must be >= 1"));
    }
    Ok(())
}

fn halton(bases: (u64, u64)) -> Result<SequenceSpec, Failure> {
    SequenceSpec::halton(bases).map_err(|e| usage(format!("--bases: {e}")))
}

fn cmd_volume(args: &VolumeArgs) -> CmdResult {
    check_points(args.points)?;
    check_truth(args.common.truth)?;
    let spec = match args.method {
        MethodArg::Halton => halton(args.common.bases)?
            .with_start_index(args.start_index)
            .map_err(|e| usage(format!("--start-index: {e}")))?,
        MethodArg::Mc => SequenceSpec::pseudorandom(args.seed),
    };
    let layout = if args.restart_per_slice {
        SliceLayout::RestartPerSlice
    } else {
        SliceLayout::Continued
    };
    let volume = load(&args.common.manifest)?;
    let report = estimate_volume_with(&volume, &spec, args.points, layout, args.common.truth)?;
    Ok(render::volume(&report, args.common.format, args.per_slice))
}

fn cmd_compare(args: &CompareArgs) -> CmdResult {
    check_points(args.points)?;
    check_truth(args.common.truth)?;
    halton(args.common.bases)?;
    let volume = load(&args.common.manifest)?;
    let rows = analysis::compare_methods(&volume, args.common.truth, args.points, args.seed, args.common.bases)?;
    Ok(render::compare(&rows, args.common.format, args.common.display_unit))
}

fn study_config(common: &SamplingArgs, study: &StudyArgs) -> Result<StudyConfig, Failure> {
    halton(common.bases)?;
    if study.seeds == 0 {
        return Err(usage("--seeds must be >= 1"));
    }
    check_truth(common.truth)?;
    Ok(StudyConfig {
        bases: common.bases,
        seeds: study.seeds,
        base_seed: study.base_seed,
    })
}

fn check_grid(grid: &[u64], flag: &str) -> Result<(), Failure> {
    if grid.is_empty() {
        return Err(usage(format!("{flag}: empty point grid")));
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage(format!("{flag}: grid must be positive and strictly increasing")));
    }
    Ok(())
}

fn cmd_converge(args: &ConvergeArgs) -> CmdResult {
    let config = study_config(&args.common, &args.study)?;
    let grid = match &args.grid_points {
        Some(g) => g.clone(),
        None => analysis::geometric_grid(args.max_points),
    };
    check_grid(&grid, "--grid-points")?;
    let volume = load(&args.common.manifest)?;
    let truth = args.common.truth.unwrap_or_else(|| reference_volume(&volume));
    let report = analysis::convergence_sweep(&volume, truth, &grid, &config)?;
    Ok(render::converge(&report, truth, args.common.format))
}

fn cmd_points_to_target(args: &PointsToTargetArgs) -> CmdResult {
    let config = study_config(&args.common, &args.study)?;
    if !(args.target > 0.0 && args.target < 1.0) {
        return Err(usage(format!("--target must lie in (0, 1), got {}", args.target)));
    }
    let grid = analysis::arithmetic_grid(args.grid_start, args.grid_step, args.grid_max);
    check_grid(&grid, "--grid-start/--grid-step/--grid-max")?;
    let volume = load(&args.common.manifest)?;
    let truth = args.common.truth.unwrap_or_else(|| reference_volume(&volume));
    let result = analysis::points_to_target(&volume, truth, args.target, &grid, &config)?;
    Ok(render::points_to_target(&result, truth, args.common.format))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("QVOL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| usage(format!("QVOL_THREADS must be a nonnegative integer, got `{raw}`")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CmdResult {
    configure_threads()?;
    match &cli.command {
        Command::Phantom(a) => cmd_phantom(a),
        Command::Volume(a) => cmd_volume(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Converge(a) => cmd_converge(a),
        Command::PointsToTarget(a) => cmd_points_to_target(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
