//! `fplm`: generate manifolds, embed them, audit embeddings, draw them.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fplm_core::generators::{GeneratorKind, Resolution, Triangulation};
use fplm_core::{PolygonOrientation, SolveMethod};

/// Exit statuses. Usage errors are reported by clap with status 2 as well.
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_VIOLATION: u8 = 3;
pub const EXIT_SOLVER: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "fplm", version, about = "Injective embeddings of simplicial meshes")]
struct Cli {
    /// Worker threads for the solver (defaults to all cores).
    #[arg(long, global = true, env = "FPLM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a synthetic manifold sample and its latent coordinates.
    Generate(GenerateArgs),
    /// Compute the fixed-point Laplacian embedding of a mesh.
    Embed(EmbedArgs),
    /// Audit an embedding for injectivity.
    Validate(ValidateArgs),
    /// Draw a planar embedding as an SVG wireframe.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: GeneratorKind,
    /// `NxM` samples per axis, or a level (sphere subdivisions, ball cells
    /// per axis). Defaults depend on the kind.
    #[arg(long, value_parser = parse_resolution)]
    pub resolution: Option<Resolution>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "structured-grid")]
    pub triangulation: Triangulation,
    /// Output directory; receives mesh.json, latent.csv and a manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Mesh file: .json (mesh-json), .off, or .node (with a sibling .ele).
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = fplm_core::DEFAULT_GAMMA)]
    pub gamma: f64,
    /// most-interior, random, random:<seed> or index:<k>. Plain `random`
    /// draws from --seed.
    #[arg(long, default_value = "most-interior")]
    pub seed_strategy: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "auto")]
    pub solver: SolveMethod,
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, default_value = "ccw", value_parser = parse_orientation)]
    pub polygon_orientation: PolygonOrientation,
    /// Output directory; receives embedding.csv and a manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Embedding CSV (`id,y0,...`).
    #[arg(long)]
    pub embedding: PathBuf,
    /// Embed manifest; by default `embed-manifest.json` next to the
    /// embedding is used when present.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory for report.txt and report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print `key=value` lines instead of the text report.
    #[arg(long)]
    pub key_value: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub highlight_boundary: bool,
    #[arg(long)]
    pub mark_crossings: bool,
}

fn parse_kind(s: &str) -> Result<GeneratorKind, String> {
    s.parse().map_err(|e: fplm_core::GeneratorError| e.to_string())
}

fn parse_resolution(s: &str) -> Result<Resolution, String> {
    s.parse().map_err(|e: fplm_core::GeneratorError| e.to_string())
}

fn parse_orientation(s: &str) -> Result<PolygonOrientation, String> {
    match s {
        "ccw" => Ok(PolygonOrientation::Ccw),
        "cw" => Ok(PolygonOrientation::Cw),
        _ => Err(format!("expected ccw or cw, got {s:?}")),
    }
}

/// A failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Embed(a) => commands::embed(a, cli.threads),
        Command::Validate(a) => commands::validate(a),
        Command::Render(a) => commands::render(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
