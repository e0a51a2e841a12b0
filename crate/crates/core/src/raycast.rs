//! Scan integration: 3D-DDA traversal and per-scan hit/miss aggregation.
//!
//! Every ray contributes one miss to each voxel it passes through and one hit
//! to the voxel containing its endpoint. Counts for a whole scan are
//! gathered first and applied once per voxel, so the result does not depend
//! on the order of points within a scan.

use crate::coords::{world_to_voxel, VoxelIndex, WorldPoint};
use crate::error::Result;
use crate::prob::{apply_counts, ProbParams};
use crate::scalar::Scalar;

/// Walks the voxels pierced by the segment `origin -> end` at resolution `d`,
/// calling `visit(voxel, is_last)` for each, starting with the origin voxel
/// and finishing exactly on the voxel containing `end`.
///
/// When the segment crosses several voxel faces at the same parameter all of
/// those axes advance together, which keeps the traversal symmetric under
/// axis permutations.
pub fn traverse<T: Scalar>(
    origin: WorldPoint<T>,
    end: WorldPoint<T>,
    d: T,
    mut visit: impl FnMut(VoxelIndex, bool),
) -> Result<()> {
    let start = world_to_voxel(origin, d)?.to_array();
    let stop = world_to_voxel(end, d)?.to_array();
    let o = origin.to_array();
    let dir = (end - origin).to_array();

    let mut cur = start;
    let mut remaining = [0u32; 3];
    let mut step = [0i32; 3];
    let mut t_max = [T::infinity(); 3];
    let mut t_delta = [T::infinity(); 3];
    let half = T::of(0.5);
    for i in 0..3 {
        let diff = stop[i] - start[i];
        remaining[i] = diff.unsigned_abs();
        step[i] = diff.signum();
        if diff != 0 {
            let face = (T::of(start[i] as f64) + half * T::of(step[i] as f64)) * d;
            t_max[i] = (face - o[i]) / dir[i];
            t_delta[i] = d / dir[i].abs();
        }
    }

    let done = |r: &[u32; 3]| r.iter().all(|&n| n == 0);
    visit(VoxelIndex::from_array(cur), done(&remaining));
    while !done(&remaining) {
        let mut t_min = T::infinity();
        for i in 0..3 {
            if remaining[i] > 0 && t_max[i] < t_min {
                t_min = t_max[i];
            }
        }
        for i in 0..3 {
            if remaining[i] > 0 && t_max[i] <= t_min {
                cur[i] += step[i];
                remaining[i] -= 1;
                t_max[i] = t_max[i] + t_delta[i];
            }
        }
        visit(VoxelIndex::from_array(cur), done(&remaining));
    }
    Ok(())
}

/// Aggregated change for one voxel in one scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoxelUpdate {
    pub voxel: VoxelIndex,
    pub hits: u32,
    pub misses: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanReport {
    /// Points that produced a ray.
    pub rays: usize,
    /// Non-finite points or points coinciding with the sensor origin.
    pub skipped_points: usize,
    /// Points farther than the sensor range; their rays end at the range
    /// limit and record no hit.
    pub truncated_rays: usize,
    /// Traversed voxels that fell outside the grid and were dropped.
    pub out_of_bounds_voxels: usize,
    pub updates: Vec<VoxelUpdate>,
}

/// Reusable dense scratch buffer of per-slot `[hits, misses]`.
#[derive(Debug, Clone, Default)]
pub(crate) struct ScanAccumulator {
    counts: Vec<[u32; 2]>,
    touched: Vec<usize>,
    voxels: Vec<VoxelIndex>,
}

impl ScanAccumulator {
    pub(crate) fn new(slots: usize) -> Self {
        Self { counts: vec![[0, 0]; slots], touched: Vec::new(), voxels: Vec::new() }
    }

    #[inline]
    fn record(&mut self, slot: usize, voxel: VoxelIndex, hit: bool) {
        let c = &mut self.counts[slot];
        if c[0] == 0 && c[1] == 0 {
            self.touched.push(slot);
            self.voxels.push(voxel);
        }
        c[usize::from(!hit)] += 1;
    }

    /// Casts every ray of the scan, counting hits and misses per slot.
    pub(crate) fn accumulate<T: Scalar>(
        &mut self,
        sensor: WorldPoint<T>,
        points: &[WorldPoint<T>],
        params: &ProbParams<T>,
        slot_of: impl Fn(VoxelIndex) -> Option<usize>,
        report: &mut ScanReport,
    ) -> Result<()> {
        let d = params.resolution;
        let tiny = d * T::of(1e-9);
        for &p in points {
            if !p.is_finite() {
                report.skipped_points += 1;
                continue;
            }
            let ray = p - sensor;
            let len = ray.norm();
            if !(len > tiny) {
                report.skipped_points += 1;
                continue;
            }
            let (end, truncated) = if len > params.range {
                (sensor + ray * (params.range / len), true)
            } else {
                (p, false)
            };
            report.rays += 1;
            report.truncated_rays += usize::from(truncated);
            let mut dropped = 0;
            traverse(sensor, end, d, |v, last| match slot_of(v) {
                Some(slot) => self.record(slot, v, last && !truncated),
                None => dropped += 1,
            })?;
            report.out_of_bounds_voxels += dropped;
        }
        Ok(())
    }

    /// Applies the gathered counts through `apply` and clears the buffer.
    pub(crate) fn drain<T: Scalar>(
        &mut self,
        values: &mut [T],
        params: &ProbParams<T>,
        report: &mut ScanReport,
        mut on_change: impl FnMut(usize, T, T),
    ) {
        report.updates.reserve(self.touched.len());
        for (&slot, &voxel) in self.touched.iter().zip(&self.voxels) {
            let [hits, misses] = std::mem::take(&mut self.counts[slot]);
            let before = values[slot];
            let after = apply_counts(before, hits, misses, params);
            values[slot] = after;
            on_change(slot, before, after);
            report.updates.push(VoxelUpdate { voxel, hits, misses });
        }
        self.touched.clear();
        self.voxels.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn walk(o: [f64; 3], e: [f64; 3], d: f64) -> Vec<VoxelIndex> {
        let mut out = Vec::new();
        traverse(WorldPoint::from_array(o), WorldPoint::from_array(e), d, |v, _| out.push(v)).unwrap();
        out
    }

    #[test]
    fn axis_aligned_ray() {
        let vs = walk([0.0, 0.0, 0.0], [0.5, 0.0, 0.0], 0.1);
        let xs: Vec<i32> = vs.iter().map(|v| v.x).collect();
        assert_eq!(xs, vec![0, 1, 2, 3, 4, 5]);
        assert!(vs.iter().all(|v| v.y == 0 && v.z == 0));
    }

    #[test]
    fn single_voxel_ray() {
        assert_eq!(walk([0.01, 0.0, 0.0], [0.02, 0.0, 0.0], 0.1), vec![VoxelIndex::new(0, 0, 0)]);
    }

    #[test]
    fn exact_diagonal_steps_both_axes() {
        let vs = walk([0.0, 0.0, 0.0], [0.3, 0.3, 0.0], 0.1);
        assert_eq!(vs, vec![
            VoxelIndex::new(0, 0, 0),
            VoxelIndex::new(1, 1, 0),
            VoxelIndex::new(2, 2, 0),
            VoxelIndex::new(3, 3, 0),
        ]);
    }

    /// Dense sampling along the segment: every sampled voxel away from faces
    /// must appear in the traversal.
    fn sampled_voxels(o: [f64; 3], e: [f64; 3], d: f64) -> Vec<VoxelIndex> {
        let n = 4000;
        let mut out = Vec::new();
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let p = [o[0] + (e[0] - o[0]) * t, o[1] + (e[1] - o[1]) * t, o[2] + (e[2] - o[2]) * t];
            // skip samples within 1e-6 of a voxel face, where membership is ambiguous
            if p.iter().any(|c| ((c / d).abs().fract() - 0.5).abs() < 1e-6) {
                continue;
            }
            out.push(world_to_voxel(WorldPoint::from_array(p), d).unwrap());
        }
        out
    }

    proptest! {
        #[test]
        fn traversal_is_connected_and_covers_samples(
            o in prop::array::uniform3(-1.0f64..1.0),
            e in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let d = 0.1;
            let vs = walk(o, e, d);
            prop_assert_eq!(vs[0], world_to_voxel(WorldPoint::from_array(o), d).unwrap());
            prop_assert_eq!(*vs.last().unwrap(), world_to_voxel(WorldPoint::from_array(e), d).unwrap());
            for w in vs.windows(2) {
                let step = w[1] - w[0];
                prop_assert!(step.chebyshev(VoxelIndex::default()) == 1);
            }
            for s in sampled_voxels(o, e, d) {
                prop_assert!(vs.contains(&s), "sample voxel {} missing", s);
            }
        }
    }
}
