//! `blockworld`: generate blockouts, bake navmeshes, render depth, decompose
//! meshes and run the evaluation protocols from the command line.
//!
//! Exit status is 0 on success, 1 when inputs fail validation and 2 when a
//! file cannot be read or written. A single JSON summary line goes to
//! stdout; logs go to stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use blockworld::synth_data::GridSize;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "blockworld", version, about = "Procedural blockouts, navmeshes and scene evaluation")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed overriding the one from the spec or config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON file with one object per command name; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel stages; defaults to every core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scene spec to blockout, navmesh, depth map and manifest.
    Generate {
        /// Scene spec JSON; defaults fill absent fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        depth_resolution: Option<usize>,
        /// Relative depth noise.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Apply an edit script to a blockout and re-bake its navmesh.
    Edit {
        #[arg(long)]
        blockout: PathBuf,
        #[arg(long)]
        script: PathBuf,
    },
    /// Bake a navmesh from a mesh file and report its connectivity.
    Navmesh {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        cell_size: Option<f64>,
        #[arg(long)]
        cell_height: Option<f64>,
    },
    /// Render a blockout to a 16-bit depth PNG with a JSON sidecar.
    RenderDepth {
        #[arg(long)]
        blockout: PathBuf,
        /// Camera azimuth in degrees; defaults to the view hiding fewest boxes.
        #[arg(long)]
        azimuth: Option<f64>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Split a mesh into ground and object parts.
    Decompose {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        weld_eps: Option<f64>,
        #[arg(long)]
        small_part_threshold: Option<usize>,
        /// Pivot parts reported before the remainder.
        #[arg(long)]
        pivots: Option<usize>,
    },
    /// Navmesh Chamfer distance of predicted scenes against ground-truth navmeshes.
    EvalNavmesh {
        /// Predicted scene mesh; repeat once per item.
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        /// Ground-truth navmesh (.obj, .gltf or navmesh .json), paired with --pred.
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
        /// Ground-truth scene meshes setting the ground-truth scale, paired with --pred.
        #[arg(long)]
        gt_scene: Vec<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Part matching of predicted parts against ground-truth parts.
    EvalParts {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        /// Comma-separated F-score thresholds.
        #[arg(long, value_delimiter = ',')]
        taus: Option<Vec<f64>>,
    },
    /// Emit synthetic datasets.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Procedural scenes through the full generation pipeline.
    Benchmark {
        #[arg(long)]
        scenes: Option<usize>,
        #[arg(long)]
        min_objects: Option<usize>,
        #[arg(long)]
        max_objects: Option<usize>,
        /// Template scene spec; seed and tier counts are set per scene.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Built-in primitives arranged on a grid, with exact part annotations.
    Grid {
        #[arg(long, default_value = "2x2")]
        grid: GridSize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        spacing: Option<f64>,
        /// Also write a degraded copy of each scene.
        #[arg(long)]
        degrade: bool,
        #[arg(long)]
        with_replacement: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
