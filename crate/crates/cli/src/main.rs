mod commands;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use horodepth::HoroError;

#[derive(Parser, Debug)]
#[command(name = "horodepth", version, about = "Horospherical depth on Hadamard manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sampled depth of one point.
    Depth(DepthArgs),
    /// Depth region thresholds, optionally with contour polylines.
    Region(RegionArgs),
    /// Busemann median.
    Median(MedianArgs),
    /// Fréchet mean.
    Frechet(FrechetArgs),
    /// Mix a dataset with a point mass or a second dataset.
    Contaminate(ContaminateArgs),
    /// Robustness and convergence experiments.
    Experiment(ExperimentArgs),
    /// Synthetic dataset.
    Gen(GenArgs),
    /// Reduced-scale invariant checks of every module.
    Selftest,
}

#[derive(Args, Debug, Clone)]
struct DirectionArgs {
    /// Number of boundary directions.
    #[arg(long, default_value_t = 180)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = DirectionKind::Random)]
    directions: DirectionKind,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DirectionKind {
    Random,
    Grid,
}

#[derive(Args, Debug)]
struct DepthArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated point row.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[command(flatten)]
    dirs: DirectionArgs,
    /// Local search from the minimizing direction.
    #[arg(long)]
    refine: bool,
    #[arg(long, default_value_t = 200)]
    budget: usize,
}

#[derive(Args, Debug)]
struct RegionArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    dirs: DirectionArgs,
    /// `x_min,x_max,y_min,y_max,nx,ny` or `r,n` for a square grid.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// `coordinates` or `spd:B` (2×2 matrices with off-diagonal B).
    #[arg(long)]
    chart: Option<String>,
    /// Contour polyline output file.
    #[arg(long)]
    contour: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MedianArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    dirs: DirectionArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FrechetArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ContaminateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    eps: f64,
    /// Escape direction row of the point mass.
    #[arg(long, allow_hyphen_values = true, requires = "t", conflicts_with = "with")]
    xi: Option<String>,
    /// Distance of the point mass along `--xi` from the base point.
    #[arg(long, requires = "xi")]
    t: Option<f64>,
    /// Contaminating dataset.
    #[arg(long, required_unless_present = "xi")]
    with: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ExperimentKind {
    Huber,
    Boundary,
    Centerpoint,
    Consistency,
    Breakdown,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    #[arg(long)]
    config: PathBuf,
    /// Dataset; overrides the config's `data` entry.
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON-lines output; overrides the config's `output.records`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// wrapped_gaussian, symmetrized or spd_log_gaussian.
    #[arg(long)]
    kind: String,
    /// `n=..;sigma=..;center=a,b;manifold=..;dim=..`
    #[arg(long, allow_hyphen_values = true)]
    params: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(HoroError),
    SelftestFailed,
}

impl From<HoroError> for CliError {
    fn from(e: HoroError) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(HoroError::Config(_)) => 1,
            CliError::Lib(HoroError::Domain(_)) | CliError::Lib(HoroError::Factorization(_)) => 3,
            CliError::Lib(_) => 2,
            CliError::SelftestFailed => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::SelftestFailed => write!(f, "selftest failed"),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("HORODEPTH_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("HORODEPTH_THREADS must be a positive integer, got '{value}'")))?;
    if n == 0 {
        return Err(CliError::Usage("HORODEPTH_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Depth(a) => commands::depth(a),
        Command::Region(a) => commands::region(a),
        Command::Median(a) => commands::median(a),
        Command::Frechet(a) => commands::frechet(a),
        Command::Contaminate(a) => commands::contaminate(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Gen(a) => commands::gen(a),
        Command::Selftest => {
            if selftest::run() {
                Ok(())
            } else {
                Err(CliError::SelftestFailed)
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("horodepth: {e}");
            ExitCode::from(e.code())
        }
    }
}
