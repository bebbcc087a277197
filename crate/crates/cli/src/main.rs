//! `drapefit` command-line front end.
//!
//! Exit status: 0 on success, 1 on a domain or numeric failure, 2 on a usage
//! error. Failures print one JSON line to stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{pick, FileConfig};

#[derive(Debug, Parser)]
#[command(
    name = "drapefit",
    version,
    about = "Thin-shell cloth simulation and fabric parameter estimation"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat TOML file of default values; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Falls back to DRAPEFIT_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub frames: Option<usize>,
    /// Time step / frame spacing, s.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Material {
    /// Density, kg/m³.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub kappa_s: Option<f64>,
    #[arg(long)]
    pub kappa_b: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a garment mesh forward in time.
    Simulate(SimulateArgs),
    /// Estimate (rho, kappa_s, kappa_b) from a reference sequence.
    Estimate(EstimateArgs),
    /// Track a noisy target sequence with the isometry and normal regularizers.
    Track(TrackArgs),
    /// Transfer skin weights from a skinned source mesh onto a target mesh.
    TransferWeights(TransferArgs),
    /// Generate a synthetic hanging-cloth reference scenario.
    GenSynthetic(GenArgs),
    /// Check analytic energy gradients against central differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Garment rest mesh (OBJ); also the initial state.
    #[arg(long)]
    pub mesh: PathBuf,
    /// Boundary vertex indices, one per line.
    #[arg(long)]
    pub boundary_idx: Option<PathBuf>,
    /// Boundary track: a frame,vertex,x,y,z CSV, or a directory of per-frame OBJ
    /// (needs --boundary-idx). Without it boundary vertices stay at rest.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    /// Collider definition file.
    #[arg(long)]
    pub colliders: Option<PathBuf>,
    /// Skinned body mesh; with --body-weights and --poses it drives the boundary.
    #[arg(long, requires_all = ["body_weights", "poses", "boundary_idx"], conflicts_with = "boundary")]
    pub body: Option<PathBuf>,
    #[arg(long, requires = "body")]
    pub body_weights: Option<PathBuf>,
    /// Pose track CSV (frame,bone,qw,qx,qy,qz,tx,ty,tz).
    #[arg(long, requires = "body")]
    pub poses: Option<PathBuf>,
    #[command(flatten)]
    pub material: Material,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Directory of reference frames frame_%04d.obj; frame 0 is the rest state.
    #[arg(long)]
    pub reference: PathBuf,
    /// Boundary vertex indices; their positions are read from the reference.
    #[arg(long, conflicts_with = "boundary")]
    pub boundary_idx: Option<PathBuf>,
    /// Boundary track CSV (frame,vertex,x,y,z).
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    /// Garment vertex indices; the loss covers only these.
    #[arg(long)]
    pub garment_idx: Option<PathBuf>,
    #[arg(long)]
    pub colliders: Option<PathBuf>,
    /// Initial parameters (default 300, 4, 4).
    #[command(flatten)]
    pub material: Material,
    /// Adam iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Record wall-clock seconds in trace.csv (otherwise 0, for reproducible output).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Mesh of the first frame; its edge lengths are the isometry reference.
    #[arg(long)]
    pub initial: PathBuf,
    /// Directory of target frames frame_%04d.obj; frame 0 is skipped.
    #[arg(long)]
    pub targets: PathBuf,
    /// frame,vertex,confidence CSV.
    #[arg(long)]
    pub confidence: Option<PathBuf>,
    #[arg(long)]
    pub iso_weight: Option<f64>,
    #[arg(long)]
    pub normal_weight: Option<f64>,
    #[arg(long)]
    pub data_weight: Option<f64>,
    /// Optimizer iterations per frame.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Optimizer step, m.
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LaplacianArg {
    Uniform,
    Cotangent,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub source: PathBuf,
    /// vertex,bone,weight CSV for the source mesh.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    /// Max match distance, m (default 5% of the source bbox diagonal).
    #[arg(long)]
    pub d_max: Option<f64>,
    /// Max normal angle, degrees (default 60).
    #[arg(long)]
    pub theta_max: Option<f64>,
    #[arg(long, value_enum)]
    pub laplacian: Option<LaplacianArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PinnedArg {
    TopRow,
    None,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Cloth width (x), m.
    #[arg(long)]
    pub width: Option<f64>,
    /// Cloth height (y), m.
    #[arg(long)]
    pub height: Option<f64>,
    /// Vertices along x.
    #[arg(long)]
    pub nx: Option<usize>,
    /// Vertices along y.
    #[arg(long)]
    pub ny: Option<usize>,
    /// Gaussian noise on tracker targets, m.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_enum)]
    pub pinned: Option<PinnedArg>,
    #[arg(long)]
    pub swing_amplitude: Option<f64>,
    #[arg(long)]
    pub swing_frequency: Option<f64>,
    #[arg(long)]
    pub colliders: Option<PathBuf>,
    /// True parameters (default 400, 1, 0.5).
    #[command(flatten)]
    pub material: Material,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Random configurations per energy term.
    #[arg(long)]
    pub configs: Option<usize>,
}

pub enum Failure {
    Usage(String),
    Domain(drapefit::Error),
}

impl From<drapefit::Error> for Failure {
    fn from(e: drapefit::Error) -> Self {
        Failure::Domain(e)
    }
}

/// Flags, config file and environment folded together.
pub struct Context {
    pub common: Common,
    pub file: FileConfig,
}

impl Context {
    pub fn seed(&self) -> u64 {
        pick(self.common.seed, self.file.seed, 0)
    }

    pub fn out(&self) -> Result<PathBuf, Failure> {
        self.common
            .out
            .clone()
            .or_else(|| self.file.out.clone())
            .ok_or_else(|| Failure::Usage("--out is required".into()))
    }

    pub fn frames(&self) -> Option<usize> {
        self.common.frames.or(self.file.frames)
    }

    pub fn dt(&self, default: f64) -> f64 {
        pick(self.common.dt, self.file.dt, default)
    }

    /// Flag, then config file, then DRAPEFIT_THREADS, then all cores.
    fn threads(&self) -> Result<usize, Failure> {
        if let Some(n) = self.common.threads.or(self.file.threads) {
            return Ok(n);
        }
        match std::env::var("DRAPEFIT_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("DRAPEFIT_THREADS must be a thread count, got {v:?}"))),
            Err(_) => Ok(0),
        }
    }
}

fn report(f: &Failure) -> ExitCode {
    let (code, kind, message) = match f {
        Failure::Usage(msg) => (2, "usage", msg.clone()),
        Failure::Domain(e) => (1, e.kind(), e.to_string()),
    };
    let line = serde_json::json!({ "status": "error", "kind": kind, "message": message });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.common.config {
        Some(p) => FileConfig::load(p).map_err(Failure::Usage)?,
        None => FileConfig::default(),
    };
    let ctx = Context {
        common: cli.common,
        file,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads()?)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    match cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, &a),
        Command::Estimate(a) => commands::estimate(&ctx, &a),
        Command::Track(a) => commands::track(&ctx, &a),
        Command::TransferWeights(a) => commands::transfer_weights(&ctx, &a),
        Command::GenSynthetic(a) => commands::gen_synthetic(&ctx, &a),
        Command::Gradcheck(a) => commands::gradcheck(&ctx, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
