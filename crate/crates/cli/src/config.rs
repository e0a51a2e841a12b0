//! Run configuration: built-in defaults, then an optional TOML file, then
//! command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use boundmap::prob::{ProbParams, Probabilities};
use boundmap::ProjectionAxis;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProbabilityConfig {
    pub hit: Option<f64>,
    pub miss: Option<f64>,
    pub max: Option<f64>,
    pub min: Option<f64>,
    pub free: Option<f64>,
    pub occ: Option<f64>,
}

/// Everything a run needs. All fields optional in the file.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub resolution: Option<f64>,
    pub local_size: Option<[f64; 3]>,
    pub slide_threshold: Option<u32>,
    pub axis: Option<String>,
    pub table_size: Option<usize>,
    pub range: Option<f64>,
    pub scene: Option<String>,
    pub scene_file: Option<PathBuf>,
    pub replay: Option<PathBuf>,
    #[serde(default)]
    pub probabilities: ProbabilityConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `other` win.
    pub fn merge(self, other: FileConfig) -> FileConfig {
        let p = self.probabilities;
        let q = other.probabilities;
        FileConfig {
            resolution: other.resolution.or(self.resolution),
            local_size: other.local_size.or(self.local_size),
            slide_threshold: other.slide_threshold.or(self.slide_threshold),
            axis: other.axis.or(self.axis),
            table_size: other.table_size.or(self.table_size),
            range: other.range.or(self.range),
            scene: other.scene.or(self.scene),
            scene_file: other.scene_file.or(self.scene_file),
            replay: other.replay.or(self.replay),
            probabilities: ProbabilityConfig {
                hit: q.hit.or(p.hit),
                miss: q.miss.or(p.miss),
                max: q.max.or(p.max),
                min: q.min.or(p.min),
                free: q.free.or(p.free),
                occ: q.occ.or(p.occ),
            },
        }
    }
}

/// Where scans come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Scene(String),
    SceneFile(PathBuf),
    Replay(PathBuf),
}

/// Validated configuration. `resolution`, `local_size` and `range` are
/// `None` when they should come from the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub resolution: Option<f64>,
    pub local_size: Option<[f64; 3]>,
    pub slide_threshold: u32,
    pub axis: ProjectionAxis,
    pub table_size: usize,
    pub range: Option<f64>,
    pub probabilities: Probabilities,
    pub source: Source,
}

impl RunConfig {
    pub fn from_file_config(c: FileConfig) -> Result<Self> {
        let d = Probabilities::default();
        let p = &c.probabilities;
        let probabilities = Probabilities {
            hit: p.hit.unwrap_or(d.hit),
            miss: p.miss.unwrap_or(d.miss),
            max: p.max.unwrap_or(d.max),
            min: p.min.unwrap_or(d.min),
            free: p.free.unwrap_or(d.free),
            occ: p.occ.unwrap_or(d.occ),
        };
        let source = match (c.scene, c.scene_file, c.replay) {
            (Some(s), None, None) => Source::Scene(s),
            (None, Some(f), None) => Source::SceneFile(f),
            (None, None, Some(r)) => Source::Replay(r),
            (None, None, None) => bail!("no input: set one of scene, scene_file or replay"),
            _ => bail!("set only one of scene, scene_file or replay"),
        };
        let axis = match c.axis {
            Some(a) => a.parse::<ProjectionAxis>()?,
            None => ProjectionAxis::Z,
        };
        let table_size = c.table_size.unwrap_or(boundmap::boundary::DEFAULT_TABLE_SIZE);
        if !table_size.is_power_of_two() {
            bail!("table_size {table_size} must be a power of two");
        }
        let slide_threshold = c.slide_threshold.unwrap_or(1);
        if slide_threshold == 0 {
            bail!("slide_threshold must be at least 1");
        }
        if let Some(s) = c.local_size {
            if s.iter().any(|v| !(*v > 0.0)) {
                bail!("local_size entries must be positive");
            }
        }
        let cfg = RunConfig {
            resolution: c.resolution,
            local_size: c.local_size,
            slide_threshold,
            axis,
            table_size,
            range: c.range,
            probabilities,
            source,
        };
        // Checks the probabilities and, when given, resolution and range.
        ProbParams::<f64>::from_probabilities(probabilities, cfg.resolution.unwrap_or(0.2), cfg.range.unwrap_or(1.0))?;
        Ok(cfg)
    }
}
