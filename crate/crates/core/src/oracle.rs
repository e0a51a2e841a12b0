//! Dense reference map over a fixed extent, with brute-force boundary
//! extraction and state comparison helpers. Works in world coordinates.

use std::collections::HashSet;
use std::io::Write;

use crate::boundary::BoundaryType;
use crate::coords::{world_to_voxel, VoxelBox, VoxelIndex, WorldPoint};
use crate::error::{Error, Result};
use crate::framework::MappingFramework;
use crate::local::SlideRegions;
use crate::prob::{state_from_logodds, OccState, ProbParams};
use crate::raycast::{ScanAccumulator, ScanReport};
use crate::scalar::Scalar;

/// Dense log-odds grid. Updates share the local grid's accumulation and
/// update code, so both maps see bit-identical arithmetic.
#[derive(Debug, Clone)]
pub struct OracleGrid<T: Scalar> {
    extent: VoxelBox,
    logodds: Vec<T>,
    params: ProbParams<T>,
    scratch: ScanAccumulator,
}

impl<T: Scalar> OracleGrid<T> {
    pub fn new(extent: VoxelBox, params: ProbParams<T>) -> Result<Self> {
        params.validate()?;
        if extent.is_empty() {
            return Err(Error::InvalidInput("empty oracle extent".into()));
        }
        let len = usize::try_from(extent.volume())
            .ok()
            .filter(|&n| n <= 1 << 31)
            .ok_or_else(|| Error::InvalidInput(format!("oracle extent {extent} too large")))?;
        Ok(Self { extent, logodds: vec![T::zero(); len], params, scratch: ScanAccumulator::new(len) })
    }

    /// Grid covering the world-space box `[lo, hi]`.
    pub fn covering(lo: [f64; 3], hi: [f64; 3], params: ProbParams<T>) -> Result<Self> {
        let d = params.resolution;
        let a = world_to_voxel(WorldPoint::from_f64(lo[0], lo[1], lo[2]), d)?;
        let b = world_to_voxel(WorldPoint::from_f64(hi[0], hi[1], hi[2]), d)?;
        Self::new(VoxelBox::new(a, b), params)
    }

    pub fn extent(&self) -> VoxelBox {
        self.extent
    }

    pub fn params(&self) -> &ProbParams<T> {
        &self.params
    }

    /// Number of stored voxels.
    pub fn voxel_count(&self) -> usize {
        self.logodds.len()
    }

    #[inline]
    fn index(&self, v: VoxelIndex) -> Option<usize> {
        if !self.extent.contains(v) {
            return None;
        }
        let ny = self.extent.extent(1) as usize;
        let nz = self.extent.extent(2) as usize;
        let i = (v.x - self.extent.min.x) as usize;
        let j = (v.y - self.extent.min.y) as usize;
        let k = (v.z - self.extent.min.z) as usize;
        Some((i * ny + j) * nz + k)
    }

    pub fn update(&mut self, sensor: WorldPoint<T>, points: &[WorldPoint<T>]) -> Result<ScanReport> {
        let mut report = ScanReport::default();
        let mut scratch = std::mem::take(&mut self.scratch);
        let res = scratch.accumulate(sensor, points, &self.params, |v| self.index(v), &mut report);
        if let Err(e) = res {
            self.scratch = ScanAccumulator::new(self.logodds.len());
            return Err(e);
        }
        scratch.drain(&mut self.logodds, &self.params, &mut report, |_, _, _| {});
        self.scratch = scratch;
        Ok(report)
    }

    pub fn logodds(&self, v: VoxelIndex) -> Option<T> {
        self.index(v).map(|i| self.logodds[i])
    }

    /// State of `v`; Unknown outside the extent.
    pub fn state(&self, v: VoxelIndex) -> OccState {
        self.logodds(v).map_or(OccState::Unknown, |l| state_from_logodds(l, &self.params))
    }

    pub fn set_logodds(&mut self, v: VoxelIndex, value: T) -> Result<()> {
        let i = self.index(v).ok_or_else(|| Error::OutOfBounds { voxel: v, extent: self.extent.to_string() })?;
        self.logodds[i] = value;
        Ok(())
    }

    pub fn extract_boundary_bruteforce(&self) -> Vec<(VoxelIndex, BoundaryType)> {
        extract_boundary(self.extent, |v| self.state(v))
    }
}

/// Boundary voxels of the state field `state`, which must be Unknown
/// outside `extent`. Voxels just outside the extent are examined too, since
/// unknown space bordering a free voxel is part of the boundary. Sorted.
pub fn extract_boundary(extent: VoxelBox, state: impl Fn(VoxelIndex) -> OccState) -> Vec<(VoxelIndex, BoundaryType)> {
    let grown = VoxelBox::new(
        extent.min - VoxelIndex::new(1, 1, 1),
        extent.max + VoxelIndex::new(1, 1, 1),
    );
    let mut out = Vec::new();
    for v in grown.iter() {
        let s = state(v);
        let mut free_nbr = false;
        let mut nonfree_nbr = false;
        for (dx, dy, dz) in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)] {
            if state(v + VoxelIndex::new(dx, dy, dz)) == OccState::Free {
                free_nbr = true;
            } else {
                nonfree_nbr = true;
            }
        }
        let kind = match s {
            OccState::Occupied => Some(BoundaryType::ExteriorOccupied),
            OccState::Free if nonfree_nbr => Some(BoundaryType::Interior),
            OccState::Unknown if free_nbr => Some(BoundaryType::ExteriorUnknown),
            _ => None,
        };
        if let Some(k) = kind {
            out.push((v, k));
        }
    }
    out.sort_unstable();
    out
}

/// Voxels whose centre lies within `range` of at least one scan origin.
#[derive(Debug, Clone)]
pub struct MappingSpace {
    bounds: VoxelBox,
    members: Vec<bool>,
    count: usize,
}

impl MappingSpace {
    pub fn new(origins: &[[f64; 3]], range: f64, resolution: f64) -> Result<Self> {
        if origins.is_empty() {
            return Ok(Self { bounds: VoxelBox::EMPTY, members: Vec::new(), count: 0 });
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for o in origins {
            for i in 0..3 {
                lo[i] = lo[i].min(o[i] - range);
                hi[i] = hi[i].max(o[i] + range);
            }
        }
        let a = world_to_voxel(WorldPoint::from_f64(lo[0], lo[1], lo[2]), resolution)?;
        let b = world_to_voxel(WorldPoint::from_f64(hi[0], hi[1], hi[2]), resolution)?;
        let bounds = VoxelBox::new(a, b);
        let mut members = vec![false; bounds.volume() as usize];
        let r2 = range * range;
        let (ny, nz) = (bounds.extent(1) as usize, bounds.extent(2) as usize);
        let reach = (range / resolution).ceil() as i32 + 1;
        for o in origins {
            let c = world_to_voxel(WorldPoint::from_f64(o[0], o[1], o[2]), resolution)?;
            let local = VoxelBox::new(c - VoxelIndex::new(reach, reach, reach), c + VoxelIndex::new(reach, reach, reach))
                .intersect(&bounds);
            for v in local.iter() {
                let p = [v.x as f64 * resolution, v.y as f64 * resolution, v.z as f64 * resolution];
                let d2: f64 = (0..3).map(|i| (p[i] - o[i]).powi(2)).sum();
                if d2 <= r2 {
                    let i = (v.x - bounds.min.x) as usize;
                    let j = (v.y - bounds.min.y) as usize;
                    let k = (v.z - bounds.min.z) as usize;
                    members[(i * ny + j) * nz + k] = true;
                }
            }
        }
        let count = members.iter().filter(|&&m| m).count();
        Ok(Self { bounds, members, count })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn bounds(&self) -> VoxelBox {
        self.bounds
    }

    pub fn contains(&self, v: VoxelIndex) -> bool {
        if !self.bounds.contains(v) {
            return false;
        }
        let (ny, nz) = (self.bounds.extent(1) as usize, self.bounds.extent(2) as usize);
        let i = (v.x - self.bounds.min.x) as usize;
        let j = (v.y - self.bounds.min.y) as usize;
        let k = (v.z - self.bounds.min.z) as usize;
        self.members[(i * ny + j) * nz + k]
    }

    pub fn iter(&self) -> impl Iterator<Item = VoxelIndex> + '_ {
        self.bounds.iter().filter(|v| self.contains(*v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mismatch {
    pub voxel: VoxelIndex,
    pub oracle: OccState,
    pub framework: OccState,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Comparison {
    pub compared: usize,
    pub agreeing: usize,
    pub mismatches: Vec<Mismatch>,
}

impl Comparison {
    /// Fraction of compared voxels that agree; 1.0 when nothing was compared.
    pub fn ratio(&self) -> f64 {
        if self.compared == 0 {
            1.0
        } else {
            self.agreeing as f64 / self.compared as f64
        }
    }

    pub fn write_mismatch_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,z,oracle,framework")?;
        for m in &self.mismatches {
            writeln!(out, "{},{},{},{},{}", m.voxel.x, m.voxel.y, m.voxel.z, m.oracle, m.framework)?;
        }
        Ok(())
    }
}

/// Compares two state functions over every voxel of `space`.
pub fn compare_with(
    space: &MappingSpace,
    oracle: impl Fn(VoxelIndex) -> OccState,
    framework: impl Fn(VoxelIndex) -> OccState,
) -> Comparison {
    let mut c = Comparison::default();
    for v in space.iter() {
        let (a, b) = (oracle(v), framework(v));
        c.compared += 1;
        if a == b {
            c.agreeing += 1;
        } else {
            c.mismatches.push(Mismatch { voxel: v, oracle: a, framework: b });
        }
    }
    c
}

pub fn compare_states<T: Scalar>(space: &MappingSpace, oracle: &OracleGrid<T>, framework: &MappingFramework<T>) -> Comparison {
    compare_with(space, |v| oracle.state(v), |v| framework.query(v))
}

/// Records which voxels re-entered the local map after having been in it
/// before. Tracks voxels inside `bounds` only.
#[derive(Debug, Clone)]
pub struct ReentryTracker {
    bounds: VoxelBox,
    seen: Vec<bool>,
    reentered: HashSet<VoxelIndex>,
}

impl ReentryTracker {
    /// `initial` is the first local extent (world coordinates).
    pub fn new(bounds: VoxelBox, initial: VoxelBox) -> Self {
        let mut t = Self { bounds, seen: vec![false; bounds.volume() as usize], reentered: HashSet::new() };
        t.mark(initial);
        t
    }

    fn index(&self, v: VoxelIndex) -> Option<usize> {
        self.bounds.contains(v).then(|| {
            let (ny, nz) = (self.bounds.extent(1) as usize, self.bounds.extent(2) as usize);
            let i = (v.x - self.bounds.min.x) as usize;
            let j = (v.y - self.bounds.min.y) as usize;
            let k = (v.z - self.bounds.min.z) as usize;
            (i * ny + j) * nz + k
        })
    }

    fn mark(&mut self, b: VoxelBox) {
        for v in b.intersect(&self.bounds).iter() {
            let i = self.index(v).unwrap();
            self.seen[i] = true;
        }
    }

    /// Call after every update that slid, with the new local extent.
    pub fn record(&mut self, regions: &SlideRegions, extent: VoxelBox) {
        for b in &regions.slide_in {
            for v in b.intersect(&self.bounds).iter() {
                if self.seen[self.index(v).unwrap()] {
                    self.reentered.insert(v);
                }
            }
        }
        self.mark(extent);
    }

    pub fn was_reentered(&self, v: VoxelIndex) -> bool {
        self.reentered.contains(&v)
    }

    pub fn reentered_count(&self) -> usize {
        self.reentered.len()
    }
}
