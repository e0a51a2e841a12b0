//! Runs a synthetic scene through the framework, optionally alongside the
//! dense reference map.

use crate::coords::{world_to_voxel, ProjectionAxis, VoxelBox, VoxelIndex, WorldPoint};
use crate::error::Result;
use crate::framework::{FrameworkConfig, MappingFramework, UpdateReport};
use crate::oracle::{compare_states, Comparison, MappingSpace, OracleGrid, ReentryTracker};
use crate::prob::{ProbParams, Probabilities};
use crate::scalar::Scalar;
use crate::sim::SyntheticScene;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Overrides the scene's suggested voxel size.
    pub resolution: Option<f64>,
    /// Overrides the scene's suggested local map size (metres).
    pub local_size: Option<[f64; 3]>,
    pub axis: ProjectionAxis,
    pub slide_threshold: u32,
    pub table_size: usize,
    pub probabilities: Probabilities,
    pub with_oracle: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            resolution: None,
            local_size: None,
            axis: ProjectionAxis::Z,
            slide_threshold: 1,
            table_size: crate::boundary::DEFAULT_TABLE_SIZE,
            probabilities: Probabilities::default(),
            with_oracle: true,
        }
    }
}

pub struct SceneRun<T: Scalar> {
    pub framework: MappingFramework<T>,
    pub oracle: Option<OracleGrid<T>>,
    pub space: MappingSpace,
    pub tracker: ReentryTracker,
}

impl<T: Scalar> SceneRun<T> {
    /// Framework against oracle over the mapping space. Panics without an oracle.
    pub fn compare(&self) -> Comparison {
        compare_states(&self.space, self.oracle.as_ref().expect("run without oracle"), &self.framework)
    }
}

/// Voxel box covering the scene extent plus `pad` voxels on every side.
pub fn scene_voxel_box(scene: &SyntheticScene, resolution: f64, pad: i32) -> Result<VoxelBox> {
    let lo = scene.extent.min;
    let hi = scene.extent.max;
    let a = world_to_voxel(WorldPoint::from_f64(lo[0], lo[1], lo[2]), resolution)?;
    let b = world_to_voxel(WorldPoint::from_f64(hi[0], hi[1], hi[2]), resolution)?;
    Ok(VoxelBox::new(a - VoxelIndex::new(pad, pad, pad), b + VoxelIndex::new(pad, pad, pad)))
}

pub fn run_scene<T: Scalar>(
    scene: &SyntheticScene,
    opts: &RunOptions,
    mut on_scan: impl FnMut(usize, &UpdateReport, &MappingFramework<T>),
) -> Result<SceneRun<T>> {
    scene.validate()?;
    let d = opts.resolution.unwrap_or(scene.resolution);
    let range = scene.sensor.range;
    let params = ProbParams::<T>::from_probabilities(opts.probabilities, d, range)?;
    let mut config = FrameworkConfig::new(
        params,
        FrameworkConfig::<T>::local_dims_from_metres(opts.local_size.unwrap_or(scene.local_size), d),
    );
    config.axis = opts.axis;
    config.slide_threshold = opts.slide_threshold;
    config.table_size = opts.table_size;

    let start = scene.trajectory.first().map_or([0.0; 3], |p| p.position);
    let to_point = |p: [f64; 3]| WorldPoint::<T>::from_f64(p[0], p[1], p[2]);
    let mut framework = MappingFramework::new(config, to_point(start))?;
    let mut oracle = if opts.with_oracle {
        Some(OracleGrid::new(scene_voxel_box(scene, d, 0)?, params)?)
    } else {
        None
    };
    let dims = framework.local().dims();
    let pad = dims.iter().copied().max().unwrap_or(0) as i32;
    let mut tracker = ReentryTracker::new(scene_voxel_box(scene, d, pad)?, framework.local_extent());
    let mut origins = Vec::with_capacity(scene.trajectory.len());

    for (i, (pose, pts)) in scene.scans().enumerate() {
        let sensor = to_point(pose.position);
        let points: Vec<WorldPoint<T>> = pts.into_iter().map(to_point).collect();
        let report = framework.map_update(sensor, &points)?;
        if let Some(o) = oracle.as_mut() {
            o.update(sensor, &points)?;
        }
        if report.slid {
            tracker.record(&report.regions, framework.local_extent());
        }
        origins.push(pose.position);
        on_scan(i, &report, &framework);
    }
    let space = MappingSpace::new(&origins, range, d)?;
    Ok(SceneRun { framework, oracle, space, tracker })
}
