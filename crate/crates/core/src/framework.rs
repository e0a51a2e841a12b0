//! Global boundary map plus sliding local grid, kept in step scan by scan.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::boundary::{
    compute_boundary_voxel_status, BoundaryGrid2D, BoundaryType, MemoryReport, Nearest, QueryStats, SearchDir,
};
use crate::coords::{world_to_voxel, CellIndex2D, ProjectionAxis, VoxelBox, VoxelIndex, WorldPoint};
use crate::error::{Error, Result};
use crate::local::{LocalGrid, SlideRegions};
use crate::prob::{OccState, ProbParams};
use crate::raycast::ScanReport;
use crate::scalar::Scalar;

/// Construction parameters. Dimensions are in world axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkConfig<T> {
    pub params: ProbParams<T>,
    /// Local map size in voxels along world x, y, z.
    pub local_dims: [usize; 3],
    pub axis: ProjectionAxis,
    /// The local map slides once the quantised pose is this many voxels
    /// (Chebyshev) away from its centre.
    pub slide_threshold: u32,
    /// Initial hash table size of the global map; a power of two.
    pub table_size: usize,
}

impl<T: Scalar> FrameworkConfig<T> {
    pub fn new(params: ProbParams<T>, local_dims: [usize; 3]) -> Self {
        Self {
            params,
            local_dims,
            axis: ProjectionAxis::Z,
            slide_threshold: 1,
            table_size: crate::boundary::DEFAULT_TABLE_SIZE,
        }
    }

    /// Local dimensions from a size in metres, rounded up to whole voxels.
    pub fn local_dims_from_metres(size: [f64; 3], resolution: f64) -> [usize; 3] {
        size.map(|s| ((s / resolution) - 1e-9).ceil().max(1.0) as usize)
    }
}

/// Per-update timings and counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateReport {
    pub slid: bool,
    pub raycast: Duration,
    pub boundary_update: Duration,
    pub local_update: Duration,
    pub scan: ScanReport,
    /// Voxels whose boundary status was recomputed.
    pub recomputed: usize,
    /// Voxels written into the local grid from the global map.
    pub reconstructed: usize,
    /// Slide regions in world coordinates.
    pub regions: SlideRegions,
}

impl UpdateReport {
    pub fn total(&self) -> Duration {
        self.raycast + self.boundary_update + self.local_update
    }
}

/// Where a query was answered from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuerySource {
    Local,
    Global { dir: SearchDir, nearest: Nearest },
}

#[derive(Debug, Clone)]
pub struct MappingFramework<T: Scalar> {
    global: BoundaryGrid2D,
    local: LocalGrid<T>,
    params: ProbParams<T>,
    axis: ProjectionAxis,
    slide_threshold: u32,
    scans: usize,
    reverse_slide_order: bool,
}

impl<T: Scalar> MappingFramework<T> {
    /// Creates an empty map whose local grid is centred on `pose`.
    pub fn new(config: FrameworkConfig<T>, pose: WorldPoint<T>) -> Result<Self> {
        config.params.validate()?;
        if config.slide_threshold == 0 {
            return Err(Error::InvalidInput("slide threshold must be at least 1 voxel".into()));
        }
        let axis = config.axis;
        let origin = world_to_voxel(axis.point_to_internal(pose), config.params.resolution)?;
        let local = LocalGrid::new(axis.dims_to_internal(config.local_dims), origin, config.params)?;
        Ok(Self {
            global: BoundaryGrid2D::with_table_size(config.table_size)?,
            local,
            params: config.params,
            axis,
            slide_threshold: config.slide_threshold,
            scans: 0,
            reverse_slide_order: false,
        })
    }

    pub fn params(&self) -> &ProbParams<T> {
        &self.params
    }

    pub fn axis(&self) -> ProjectionAxis {
        self.axis
    }

    pub fn scans(&self) -> usize {
        self.scans
    }

    /// The global map, in internal `(u, v, w)` coordinates.
    pub fn global(&self) -> &BoundaryGrid2D {
        &self.global
    }

    /// The local grid, in internal coordinates.
    pub fn local(&self) -> &LocalGrid<T> {
        &self.local
    }

    /// Local extent in world coordinates.
    pub fn local_extent(&self) -> VoxelBox {
        self.axis.box_to_world(self.local.extent())
    }

    pub fn memory_report(&self) -> MemoryReport {
        self.global.memory_report()
    }

    /// Integrates one scan taken at `pose`; points are in the world frame.
    pub fn map_update(&mut self, pose: WorldPoint<T>, points: &[WorldPoint<T>]) -> Result<UpdateReport> {
        if !pose.is_finite() {
            return Err(Error::InvalidInput("pose is not finite".into()));
        }
        let pose = self.axis.point_to_internal(pose);
        let pts: Vec<WorldPoint<T>> = points.iter().map(|&p| self.axis.point_to_internal(p)).collect();
        let target = world_to_voxel(pose, self.params.resolution)?;
        let slide = target.chebyshev(self.local.origin()) >= self.slide_threshold as i32;
        let mut report = UpdateReport { slid: slide, ..Default::default() };

        // A pose that already left the window cannot cast from it; slide first.
        let cast_first = self.local.contains(target);
        if cast_first {
            let t = Instant::now();
            report.scan = self.local.raycast_scan(pose, &pts)?;
            report.raycast = t.elapsed();
        }
        if slide {
            self.slide_to(target, &mut report)?;
        }
        if !cast_first {
            let t = Instant::now();
            report.scan = self.local.raycast_scan(pose, &pts)?;
            report.raycast = t.elapsed();
        }
        self.scans += 1;
        Ok(report)
    }

    /// Runs slide-in reconstruction before slide-out synchronisation, which
    /// reuses slots before their data is saved. Exists so tests can show the
    /// reference comparison catches it.
    #[doc(hidden)]
    pub fn debug_reverse_slide_order(&mut self, on: bool) {
        self.reverse_slide_order = on;
    }

    fn slide_to(&mut self, target: VoxelIndex, report: &mut UpdateReport) -> Result<()> {
        if self.reverse_slide_order {
            let old = self.local.extent();
            let regions = self.local.recenter(target);
            for b in &regions.slide_in {
                self.local.reset_region(b);
            }
            report.reconstructed = self.local_grid_update(&regions.slide_in)?;
            let new = self.local.extent();
            let changed: Vec<VoxelIndex> = regions
                .slide_out
                .iter()
                .flat_map(|b| b.iter())
                .filter(|&v| self.local.slot_in_diff(v))
                .collect();
            report.recomputed = self.incremental_boundary_update(&changed, old, |v| !new.contains(v))?;
            return Ok(());
        }
        let old = self.local.extent();
        let new = VoxelBox::centered(target, self.local.dims());
        let slide_out = old.difference(&new);

        let t = Instant::now();
        let changed = self.local.take_diff_in(&slide_out);
        report.recomputed = self.incremental_boundary_update(&changed, old, |v| !new.contains(v))?;
        report.boundary_update = t.elapsed();

        let t = Instant::now();
        let regions = self.local.recenter(target);
        for b in &regions.slide_in {
            self.local.reset_region(b);
        }
        report.reconstructed = self.local_grid_update(&regions.slide_in)?;
        report.local_update = t.elapsed();
        report.regions = SlideRegions {
            slide_out: regions.slide_out.iter().map(|b| self.axis.box_to_world(*b)).collect(),
            slide_in: regions.slide_in.iter().map(|b| self.axis.box_to_world(*b)).collect(),
        };
        Ok(())
    }

    /// Recomputes the boundary status of `changed` and their face neighbours
    /// and rewrites them in the global map. Voxels of `extent` (the local
    /// window whose data the grid holds) for which `live` holds are read at
    /// their live state, other window voxels at their synchronised state,
    /// and everything outside from the global map. All statuses are
    /// computed before the global map is modified.
    fn incremental_boundary_update(
        &mut self,
        changed: &[VoxelIndex],
        extent: VoxelBox,
        live: impl Fn(VoxelIndex) -> bool,
    ) -> Result<usize> {
        if changed.is_empty() {
            return Ok(0);
        }
        let mut affected = BTreeSet::new();
        for &v in changed {
            affected.insert(v);
            affected.extend(v.neighbors6());
        }
        let lookup = |v: VoxelIndex| -> OccState {
            if extent.contains(v) {
                let (live_state, synced) = self.local.slot_states(v);
                if live(v) {
                    live_state
                } else {
                    synced
                }
            } else {
                self.global.determine_occupancy(v, away_from(extent, v))
            }
        };
        let statuses: Vec<(VoxelIndex, Option<BoundaryType>)> =
            affected.iter().map(|&v| (v, compute_boundary_voxel_status(v, lookup))).collect();
        for (v, status) in &statuses {
            self.global.set_status(*v, *status)?;
        }
        Ok(statuses.len())
    }

    /// Fills the (already reset) slide-in boxes from the global map and fuses
    /// the reconstructed states. Returns the number of fused voxels.
    fn local_grid_update(&mut self, boxes: &[VoxelBox]) -> Result<usize> {
        let mut fused = 0;
        for b in boxes {
            for (v, state) in reconstruct_region(&self.global, b) {
                self.local.fuse(v, state)?;
                fused += 1;
            }
        }
        Ok(fused)
    }

    /// Writes every pending local change into the global map, so that the
    /// global map alone describes the whole current state.
    pub fn synchronize(&mut self) -> Result<usize> {
        let extent = self.local.extent();
        let changed = self.local.take_diff_in(&[extent]);
        let n = self.incremental_boundary_update(&changed, extent, |_| true)?;
        for v in changed {
            self.local.mark_synced(v)?;
        }
        Ok(n)
    }

    /// Occupancy of a world voxel index.
    pub fn query(&self, q: VoxelIndex) -> OccState {
        self.query_traced(q, &mut QueryStats::default()).0
    }

    pub fn query_with_stats(&self, q: VoxelIndex, stats: &mut QueryStats) -> OccState {
        self.query_traced(q, stats).0
    }

    /// Like [`MappingFramework::query`], also reporting which structure
    /// answered and, for global lookups, the boundary voxel found.
    pub fn query_traced(&self, q: VoxelIndex, stats: &mut QueryStats) -> (OccState, QuerySource) {
        let q = self.axis.to_internal(q);
        let extent = self.local.extent();
        if extent.contains(q) {
            return (self.local.state(q).unwrap_or(OccState::Unknown), QuerySource::Local);
        }
        let dir = away_from(extent, q);
        let nearest = self.global.find_nearest_with_stats(q, dir, stats);
        (crate::boundary::grid_classify(nearest), QuerySource::Global { dir, nearest })
    }

    pub fn query_world(&self, p: WorldPoint<T>) -> Result<OccState> {
        if !p.is_finite() {
            return Err(Error::InvalidInput("query point is not finite".into()));
        }
        Ok(self.query(world_to_voxel(p, self.params.resolution)?))
    }

    /// Frontier voxels (world indices) stored in the global map.
    pub fn frontier_voxels(&self) -> Vec<VoxelIndex> {
        let mut out: Vec<_> = self.global.frontier_voxels().into_iter().map(|v| self.axis.to_world(v)).collect();
        out.sort_unstable();
        out
    }

    /// Global boundary set in world coordinates, sorted.
    pub fn boundary_voxels(&self) -> Vec<(VoxelIndex, BoundaryType)> {
        let mut out: Vec<_> = self.global.iter().map(|(v, t)| (self.axis.to_world(v), t)).collect();
        out.sort_unstable();
        out
    }

    /// Overwrites the log-odds of a world voxel inside the local map.
    pub fn set_local_logodds(&mut self, v: VoxelIndex, value: T) -> Result<()> {
        self.local.set_logodds(self.axis.to_internal(v), value)
    }

    /// Local (live) state of a world voxel inside the local map.
    pub fn local_state(&self, v: VoxelIndex) -> Result<OccState> {
        self.local.state(self.axis.to_internal(v))
    }
}

/// Search direction for `q` that never crosses `extent`.
fn away_from(extent: VoxelBox, q: VoxelIndex) -> SearchDir {
    let cell = CellIndex2D::new(q.x, q.y);
    if extent.footprint_contains(cell) && q.z < extent.min.z {
        SearchDir::Negative
    } else {
        SearchDir::Positive
    }
}

/// States of the Free and Occupied voxels of `region` (internal
/// coordinates), recovered from the boundary map alone. Unknown voxels are
/// not listed.
pub fn reconstruct_region(global: &BoundaryGrid2D, region: &VoxelBox) -> Vec<(VoxelIndex, OccState)> {
    let mut out = Vec::new();
    if region.is_empty() {
        return out;
    }
    let (w0, w1) = (region.min.z, region.max.z);
    for cell in region.cells() {
        let entries = global.column(cell).map(|c| c.range(w0, w1)).unwrap_or(&[]);
        if entries.is_empty() {
            if global.determine_occupancy(cell.voxel(w0), SearchDir::Positive) == OccState::Free {
                out.extend((w0..=w1).map(|w| (cell.voxel(w), OccState::Free)));
            }
            continue;
        }
        let mut prev: Option<(i32, BoundaryType)> = None;
        for p in entries {
            let (w, kind) = p.unpack();
            let gap_start = prev.map_or(w0, |(pw, _)| pw + 1);
            let gap_free =
                kind == BoundaryType::Interior || prev.is_some_and(|(_, k)| k == BoundaryType::Interior);
            if gap_free {
                out.extend((gap_start..w).map(|g| (cell.voxel(g), OccState::Free)));
            }
            match kind {
                BoundaryType::Interior => out.push((cell.voxel(w), OccState::Free)),
                BoundaryType::ExteriorOccupied => out.push((cell.voxel(w), OccState::Occupied)),
                BoundaryType::ExteriorUnknown => {}
            }
            prev = Some((w, kind));
        }
        if let Some((pw, BoundaryType::Interior)) = prev {
            out.extend((pw + 1..=w1).map(|g| (cell.voxel(g), OccState::Free)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::PackedBoundaryVoxel;

    fn params() -> ProbParams<f64> {
        ProbParams::standard(0.2, 3.0).unwrap()
    }

    fn framework(dims: [usize; 3]) -> MappingFramework<f64> {
        MappingFramework::new(FrameworkConfig::new(params(), dims), WorldPoint::new(0.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn tile_reconstruction_example() {
        let mut g = BoundaryGrid2D::new();
        g.insert(VoxelIndex::new(0, 0, 15), BoundaryType::ExteriorOccupied).unwrap();
        g.insert(VoxelIndex::new(0, 0, 16), BoundaryType::Interior).unwrap();
        let region = VoxelBox::new(VoxelIndex::new(0, 0, 10), VoxelIndex::new(0, 0, 22));
        let got = reconstruct_region(&g, &region);
        let free: Vec<i32> = got.iter().filter(|(_, s)| *s == OccState::Free).map(|(v, _)| v.z).collect();
        let occ: Vec<i32> = got.iter().filter(|(_, s)| *s == OccState::Occupied).map(|(v, _)| v.z).collect();
        assert_eq!(free, (16..=22).collect::<Vec<_>>());
        assert_eq!(occ, vec![15]);
    }

    #[test]
    fn empty_column_constructs_nothing() {
        let g = BoundaryGrid2D::new();
        let region = VoxelBox::new(VoxelIndex::new(0, 0, 0), VoxelIndex::new(3, 3, 3));
        assert!(reconstruct_region(&g, &region).is_empty());
    }

    #[test]
    fn representative_query_fills_free_segment() {
        let mut g = BoundaryGrid2D::new();
        g.insert(VoxelIndex::new(0, 0, 30), BoundaryType::Interior).unwrap();
        let region = VoxelBox::new(VoxelIndex::new(0, 0, 0), VoxelIndex::new(0, 0, 5));
        let got = reconstruct_region(&g, &region);
        assert_eq!(got.len(), 6);
        assert!(got.iter().all(|(_, s)| *s == OccState::Free));
    }

    #[test]
    fn stationary_pose_leaves_global_untouched() {
        let mut f = framework([20, 20, 20]);
        let pts = [WorldPoint::new(1.0, 0.3, 0.1), WorldPoint::new(-0.6, 0.2, 0.4)];
        for _ in 0..5 {
            let r = f.map_update(WorldPoint::new(0.0, 0.0, 0.0), &pts).unwrap();
            assert!(!r.slid);
        }
        assert!(f.global().is_empty());
    }

    #[test]
    fn one_voxel_displacement_slides_one_slab() {
        let mut f = framework([10, 10, 10]);
        let r = f.map_update(WorldPoint::new(0.2, 0.0, 0.0), &[]).unwrap();
        assert!(r.slid);
        assert_eq!(r.regions.slide_out.len(), 1);
        assert_eq!(r.regions.slide_in.len(), 1);
        assert_eq!(r.regions.slide_out[0].volume(), 100);
    }

    #[test]
    fn query_direction_rule() {
        let f = framework([10, 10, 10]);
        let ext = f.local().extent();
        let mut stats = QueryStats::default();
        let above = VoxelIndex::new(0, 0, ext.max.z + 3);
        let below = VoxelIndex::new(0, 0, ext.min.z - 3);
        let beside = VoxelIndex::new(ext.max.x + 1, 0, 0);
        let mut dir = |q| match f.query_traced(q, &mut stats).1 {
            QuerySource::Global { dir, .. } => Some(dir),
            QuerySource::Local => None,
        };
        assert_eq!(dir(above), Some(SearchDir::Positive));
        assert_eq!(dir(below), Some(SearchDir::Negative));
        assert_eq!(dir(beside), Some(SearchDir::Positive));
        assert_eq!(dir(VoxelIndex::new(0, 0, 0)), None);
    }

    #[test]
    fn packed_example_survives_round_trip() {
        let p = PackedBoundaryVoxel::pack(16, BoundaryType::Interior).unwrap();
        assert_eq!(p.unpack(), (16, BoundaryType::Interior));
    }
}
