#![allow(dead_code)]

use boundmap::coords::VoxelBox;
use boundmap::prob::{OccState, ProbParams};
use boundmap::{Scalar, VoxelIndex};
use rand::Rng;

/// Dense random state over `extent`: free and occupied boxes on an unknown
/// background, then per-voxel noise.
pub fn random_states(rng: &mut impl Rng, extent: VoxelBox) -> Vec<(VoxelIndex, OccState)> {
    let n = extent.extent(0) as i32;
    let mut grid: Vec<(VoxelIndex, OccState)> = extent.iter().map(|v| (v, OccState::Unknown)).collect();
    let idx = |v: VoxelIndex| {
        let ny = extent.extent(1) as usize;
        let nz = extent.extent(2) as usize;
        ((v.x - extent.min.x) as usize * ny + (v.y - extent.min.y) as usize) * nz + (v.z - extent.min.z) as usize
    };
    let mut paint = |rng: &mut dyn rand::RngCore, s: OccState, count: usize, max: i32| {
        for _ in 0..count {
            let size = VoxelIndex::new(rng.gen_range(1..max), rng.gen_range(1..max), rng.gen_range(1..max));
            let lo = VoxelIndex::new(
                extent.min.x + rng.gen_range(0..n),
                extent.min.y + rng.gen_range(0..n),
                extent.min.z + rng.gen_range(0..n),
            );
            for v in VoxelBox::new(lo, lo + size).intersect(&extent).iter() {
                grid[idx(v)].1 = s;
            }
        }
    };
    let (free_boxes, occ_boxes) = (rng.gen_range(2..8), rng.gen_range(2..10));
    paint(rng, OccState::Free, free_boxes, n / 2);
    paint(rng, OccState::Occupied, occ_boxes, n / 4);
    let noise = rng.gen_range(0.0..0.08);
    for cell in grid.iter_mut() {
        if rng.gen_bool(noise) {
            cell.1 = OccState::ALL[rng.gen_range(0..3)];
        }
    }
    grid
}

/// A log-odds value whose state is `s`.
pub fn logodds_for<T: Scalar>(rng: &mut impl Rng, s: OccState, p: &ProbParams<T>) -> T {
    let (lo, hi) = match s {
        OccState::Free => (p.l_min.as_f64(), p.l_free.as_f64()),
        OccState::Occupied => (p.l_occ.as_f64(), p.l_max.as_f64()),
        OccState::Unknown => (p.l_free.as_f64() + 1e-3, p.l_occ.as_f64() - 1e-3),
    };
    let v = T::of(rng.gen_range(lo..=hi));
    debug_assert_eq!(boundmap::prob::state_from_logodds(v, p), s);
    v
}
