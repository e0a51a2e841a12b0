//! Robot-centred local occupancy grid.
//!
//! A fixed-size dense log-odds array addressed modulo its dimensions: an
//! absolute voxel keeps its slot for as long as it stays inside the window,
//! so sliding the window never copies data. Alongside the live log-odds the
//! grid keeps, per slot, the discrete state last synchronised with the
//! global map (2 bits per voxel), and a difference logger listing the slots
//! whose live state differs from it.

use std::collections::HashSet;

use crate::coords::{VoxelBox, VoxelIndex, WorldPoint};
use crate::error::{Error, Result};
use crate::prob::{clamp_logodds, fuse_increment, state_from_logodds, OccState, ProbParams};
use crate::raycast::{ScanAccumulator, ScanReport};
use crate::scalar::Scalar;

/// Regions leaving and entering the window when it moves.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlideRegions {
    pub slide_out: Vec<VoxelBox>,
    pub slide_in: Vec<VoxelBox>,
}

impl SlideRegions {
    pub fn is_empty(&self) -> bool {
        self.slide_out.is_empty() && self.slide_in.is_empty()
    }
}

/// Slide-out and slide-in boxes for a window of size `dims` moving from
/// `old_origin` to `new_origin`.
pub fn compute_slide_regions(old_origin: VoxelIndex, new_origin: VoxelIndex, dims: [usize; 3]) -> SlideRegions {
    let old = VoxelBox::centered(old_origin, dims);
    let new = VoxelBox::centered(new_origin, dims);
    SlideRegions { slide_out: old.difference(&new), slide_in: new.difference(&old) }
}

/// Discrete states packed four to a byte.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PackedStates(Vec<u8>);

impl PackedStates {
    fn new(len: usize) -> Self {
        Self(vec![0; len.div_ceil(4)])
    }

    #[inline]
    fn get(&self, slot: usize) -> OccState {
        OccState::from_code(self.0[slot / 4] >> ((slot % 4) * 2))
    }

    #[inline]
    fn set(&mut self, slot: usize, s: OccState) {
        let shift = (slot % 4) * 2;
        let byte = &mut self.0[slot / 4];
        *byte = (*byte & !(0b11 << shift)) | (s.code() << shift);
    }

    fn clear(&mut self) {
        self.0.fill(0);
    }
}

#[derive(Debug, Clone)]
pub struct LocalGrid<T: Scalar> {
    dims: [usize; 3],
    origin: VoxelIndex,
    extent: VoxelBox,
    logodds: Vec<T>,
    synced: PackedStates,
    diff: HashSet<usize>,
    params: ProbParams<T>,
    scratch: ScanAccumulator,
}

impl<T: Scalar> LocalGrid<T> {
    pub fn new(dims: [usize; 3], origin: VoxelIndex, params: ProbParams<T>) -> Result<Self> {
        params.validate()?;
        if dims.iter().any(|&n| n == 0 || n > (1 << 20)) {
            return Err(Error::InvalidInput(format!("local map dimensions {dims:?} out of range")));
        }
        let len = dims.iter().product::<usize>();
        let extent = VoxelBox::centered(origin, dims);
        if !extent.min.in_range() || !extent.max.in_range() {
            return Err(Error::InvalidInput(format!("local map extent {extent} exceeds coordinate range")));
        }
        Ok(Self {
            dims,
            origin,
            extent,
            logodds: vec![T::zero(); len],
            synced: PackedStates::new(len),
            diff: HashSet::new(),
            params,
            scratch: ScanAccumulator::new(len),
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> VoxelIndex {
        self.origin
    }

    pub fn extent(&self) -> VoxelBox {
        self.extent
    }

    pub fn params(&self) -> &ProbParams<T> {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.logodds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logodds.is_empty()
    }

    #[inline]
    pub fn contains(&self, v: VoxelIndex) -> bool {
        self.extent.contains(v)
    }

    #[inline]
    fn slot_unchecked(&self, v: VoxelIndex) -> usize {
        let [nx, ny, nz] = self.dims;
        let i = v.x.rem_euclid(nx as i32) as usize;
        let j = v.y.rem_euclid(ny as i32) as usize;
        let k = v.z.rem_euclid(nz as i32) as usize;
        (i * ny + j) * nz + k
    }

    /// Array slot of an in-window voxel.
    pub fn address(&self, v: VoxelIndex) -> Result<usize> {
        if self.contains(v) {
            Ok(self.slot_unchecked(v))
        } else {
            Err(Error::OutOfBounds { voxel: v, extent: self.extent.to_string() })
        }
    }

    /// The in-window voxel currently held by `slot`.
    pub fn slot_voxel(&self, slot: usize) -> VoxelIndex {
        let [nx, ny, nz] = self.dims;
        let k = (slot % nz) as i32;
        let j = ((slot / nz) % ny) as i32;
        let i = (slot / (ny * nz)) as i32;
        let pick = |min: i32, m: i32, n: usize| min + (m - min.rem_euclid(n as i32)).rem_euclid(n as i32);
        VoxelIndex::new(
            pick(self.extent.min.x, i, nx),
            pick(self.extent.min.y, j, ny),
            pick(self.extent.min.z, k, nz),
        )
    }

    pub fn logodds(&self, v: VoxelIndex) -> Result<T> {
        Ok(self.logodds[self.address(v)?])
    }

    pub fn state(&self, v: VoxelIndex) -> Result<OccState> {
        Ok(state_from_logodds(self.logodds(v)?, &self.params))
    }

    pub fn synced_state(&self, v: VoxelIndex) -> Result<OccState> {
        Ok(self.synced.get(self.address(v)?))
    }

    /// Live and synchronised state of whatever slot `v` maps to, without
    /// checking that `v` is inside the window.
    pub(crate) fn slot_states(&self, v: VoxelIndex) -> (OccState, OccState) {
        let slot = self.slot_unchecked(v);
        (state_from_logodds(self.logodds[slot], &self.params), self.synced.get(slot))
    }

    pub(crate) fn slot_in_diff(&self, v: VoxelIndex) -> bool {
        self.diff.contains(&self.slot_unchecked(v))
    }

    #[inline]
    fn refresh_diff(&mut self, slot: usize) {
        let live = state_from_logodds(self.logodds[slot], &self.params);
        if live == self.synced.get(slot) {
            self.diff.remove(&slot);
        } else {
            self.diff.insert(slot);
        }
    }

    /// Overwrites a voxel's log-odds (clamped) and keeps the logger exact.
    pub fn set_logodds(&mut self, v: VoxelIndex, value: T) -> Result<()> {
        let slot = self.address(v)?;
        self.logodds[slot] = clamp_logodds(value, &self.params);
        self.refresh_diff(slot);
        Ok(())
    }

    /// Integrates one scan. `sensor` must lie inside the window; ray voxels
    /// outside the window are dropped and counted in the report.
    pub fn raycast_scan(&mut self, sensor: WorldPoint<T>, points: &[WorldPoint<T>]) -> Result<ScanReport> {
        let sv = crate::coords::world_to_voxel(sensor, self.params.resolution)?;
        if !self.contains(sv) {
            return Err(Error::OutOfBounds { voxel: sv, extent: self.extent.to_string() });
        }
        let mut report = ScanReport::default();
        let mut scratch = std::mem::take(&mut self.scratch);
        let extent = self.extent;
        let result = scratch.accumulate(
            sensor,
            points,
            &self.params,
            |v| extent.contains(v).then(|| self.slot_unchecked(v)),
            &mut report,
        );
        if let Err(e) = result {
            self.scratch = ScanAccumulator::new(self.len());
            return Err(e);
        }
        let params = self.params;
        let mut changed = Vec::new();
        scratch.drain(&mut self.logodds, &params, &mut report, |slot, before, after| {
            if state_from_logodds(before, &params) != state_from_logodds(after, &params) {
                changed.push(slot);
            }
        });
        self.scratch = scratch;
        for slot in changed {
            self.refresh_diff(slot);
        }
        Ok(report)
    }

    /// Moves the window centre without touching data; slots of the slide-in
    /// region still hold slide-out data until [`LocalGrid::reset_region`].
    pub fn recenter(&mut self, new_origin: VoxelIndex) -> SlideRegions {
        let regions = compute_slide_regions(self.origin, new_origin, self.dims);
        self.origin = new_origin;
        self.extent = VoxelBox::centered(new_origin, self.dims);
        regions
    }

    /// Sets every in-window voxel of `region` to log-odds 0 and synced state
    /// unknown, dropping their logger entries.
    pub fn reset_region(&mut self, region: &VoxelBox) {
        let clipped = region.intersect(&self.extent);
        for v in clipped.iter() {
            let slot = self.slot_unchecked(v);
            self.logodds[slot] = T::zero();
            self.synced.set(slot, OccState::Unknown);
            self.diff.remove(&slot);
        }
    }

    pub fn reset_all(&mut self) {
        self.logodds.fill(T::zero());
        self.synced.clear();
        self.diff.clear();
    }

    /// Adds the log-odds increment for a reconstructed state, clamps, records
    /// the state as synchronised and updates the logger by comparing the
    /// fused state against it.
    pub fn fuse(&mut self, v: VoxelIndex, state: OccState) -> Result<()> {
        let slot = self.address(v)?;
        if let Some(inc) = fuse_increment(state, &self.params) {
            self.logodds[slot] = clamp_logodds(self.logodds[slot] + inc, &self.params);
        }
        self.synced.set(slot, state);
        self.refresh_diff(slot);
        Ok(())
    }

    /// Records the live state of `v` as synchronised.
    pub fn mark_synced(&mut self, v: VoxelIndex) -> Result<()> {
        let slot = self.address(v)?;
        let live = state_from_logodds(self.logodds[slot], &self.params);
        self.synced.set(slot, live);
        self.diff.remove(&slot);
        Ok(())
    }

    pub fn diff_len(&self) -> usize {
        self.diff.len()
    }

    /// Voxels whose live state differs from the synchronised one, sorted.
    pub fn diff_voxels(&self) -> Vec<VoxelIndex> {
        let mut out: Vec<_> = self.diff.iter().map(|&s| self.slot_voxel(s)).collect();
        out.sort_unstable();
        out
    }

    /// Removes and returns the logged voxels lying in any of `regions`.
    pub fn take_diff_in(&mut self, regions: &[VoxelBox]) -> Vec<VoxelIndex> {
        let mut taken = Vec::new();
        let slots: Vec<usize> = self.diff.iter().copied().collect();
        for slot in slots {
            let v = self.slot_voxel(slot);
            if regions.iter().any(|r| r.contains(v)) {
                self.diff.remove(&slot);
                taken.push(v);
            }
        }
        taken.sort_unstable();
        taken
    }

    /// The difference set recomputed from scratch.
    pub fn recompute_diff(&self) -> Vec<VoxelIndex> {
        let mut out: Vec<_> = (0..self.len())
            .filter(|&s| state_from_logodds(self.logodds[s], &self.params) != self.synced.get(s))
            .map(|s| self.slot_voxel(s))
            .collect();
        out.sort_unstable();
        out
    }

    /// True when every stored value lies within the clamping bounds.
    pub fn values_within_bounds(&self) -> bool {
        self.logodds.iter().all(|&l| l >= self.params.l_min && l <= self.params.l_max)
    }
}

impl<T: Scalar> PartialEq for LocalGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.origin == other.origin
            && self.logodds == other.logodds
            && self.synced == other.synced
            && self.diff == other.diff
            && self.params == other.params
    }
}
