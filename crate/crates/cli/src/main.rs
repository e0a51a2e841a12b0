#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{FileConfig, ProbabilityConfig};

#[derive(Debug, Parser)]
#[command(name = "boundmap", version, about = "Boundary-voxel occupancy mapping harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay scans into the map, writing per-scan metrics and the final map.
    Replay {
        #[command(flatten)]
        run: RunArgs,
        /// Per-scan metrics CSV.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Final boundary map CSV.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Final boundary map as PLY.
        #[arg(long)]
        ply: Option<PathBuf>,
        /// Frontier (exterior-unknown) voxels CSV.
        #[arg(long)]
        frontier: Option<PathBuf>,
    },
    /// Run built-in scenes against the dense reference map and check the
    /// acceptance thresholds. Exit status is 0 only if every scene passes.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Directory for per-scene mismatch CSVs.
        #[arg(long)]
        mismatches: Option<PathBuf>,
    },
    /// Look up occupancy states in an exported map.
    Query {
        /// Boundary map CSV written by `replay --map`.
        #[arg(long)]
        map: PathBuf,
        /// CSV with header `x,y,z` (metres).
        #[arg(long, conflicts_with = "random")]
        points: Option<PathBuf>,
        /// Query this many uniform random points inside the map's bounds instead.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV `x,y,z,state`; omitted to print only statistics.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert an exported map CSV to PLY or extract its frontier.
    Export {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        ply: Option<PathBuf>,
        #[arg(long)]
        frontier: Option<PathBuf>,
    },
    /// Write a scene's simulated scans as a replay directory.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "text")]
        encoding: String,
        #[arg(long, default_value = "world")]
        frame: String,
    },
}

/// Run configuration flags; each overrides the config file.
#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scene name (repeatable for `verify`).
    #[arg(long)]
    scene: Vec<String>,
    /// Scene description file.
    #[arg(long)]
    scene_file: Option<PathBuf>,
    /// Replay directory.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Voxel size in metres.
    #[arg(long)]
    resolution: Option<f64>,
    /// Local map size in metres, `X,Y,Z`.
    #[arg(long, value_parser = parse_triple)]
    local_size: Option<[f64; 3]>,
    /// Slide threshold in voxels.
    #[arg(long)]
    slide_threshold: Option<u32>,
    /// Projection axis: x, y or z.
    #[arg(long)]
    axis: Option<String>,
    /// Initial hash table size (power of two).
    #[arg(long)]
    table_size: Option<usize>,
    /// Sensor range in metres (replay directories only).
    #[arg(long)]
    range: Option<f64>,
    #[arg(long)]
    p_hit: Option<f64>,
    #[arg(long)]
    p_miss: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_free: Option<f64>,
    #[arg(long)]
    p_occ: Option<f64>,
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected 3 comma-separated values, got {}", v.len()))
}

impl RunArgs {
    /// File config merged with flags, plus the full `--scene` list.
    fn resolve(&self) -> Result<(FileConfig, Vec<String>)> {
        let base = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let flags = FileConfig {
            resolution: self.resolution,
            local_size: self.local_size,
            slide_threshold: self.slide_threshold,
            axis: self.axis.clone(),
            table_size: self.table_size,
            range: self.range,
            scene: self.scene.first().cloned(),
            scene_file: self.scene_file.clone(),
            replay: self.replay.clone(),
            probabilities: ProbabilityConfig {
                hit: self.p_hit,
                miss: self.p_miss,
                max: self.p_max,
                min: self.p_min,
                free: self.p_free,
                occ: self.p_occ,
            },
        };
        let merged = base.merge(flags);
        let scenes = if self.scene.is_empty() { merged.scene.iter().cloned().collect() } else { self.scene.clone() };
        Ok((merged, scenes))
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Replay { run, metrics, map, ply, frontier } => {
            let (cfg, _) = run.resolve()?;
            let cfg = config::RunConfig::from_file_config(cfg)?;
            commands::replay(&cfg, &commands::ReplayOutputs { metrics, map, ply, frontier })?;
            Ok(true)
        }
        Command::Verify { run, mismatches } => {
            let (mut cfg, scenes) = run.resolve()?;
            let scenes = if scenes.is_empty() {
                commands::DEFAULT_VERIFY_SCENES.iter().map(|s| s.to_string()).collect()
            } else {
                scenes
            };
            cfg.scene = Some(scenes[0].clone());
            let cfg = config::RunConfig::from_file_config(cfg)?;
            commands::verify(&cfg, &scenes, mismatches.as_deref())
        }
        Command::Query { map, points, random, seed, out } => {
            commands::query(&map, points.as_deref(), random, seed, out.as_deref())?;
            Ok(true)
        }
        Command::Export { map, ply, frontier } => {
            commands::export(&map, ply.as_deref(), frontier.as_deref())?;
            Ok(true)
        }
        Command::Simulate { run, out, encoding, frame } => {
            let (cfg, _) = run.resolve()?;
            let cfg = config::RunConfig::from_file_config(cfg)?;
            commands::simulate(&cfg, &out, encoding.parse()?, frame.parse()?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
