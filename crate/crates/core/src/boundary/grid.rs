use std::mem::size_of;

use crate::coords::{CellIndex2D, VoxelIndex};
use crate::error::{Error, Result};
use crate::prob::OccState;

use super::column::{Column, PackedBoundaryVoxel};
use super::BoundaryType;

pub const HASH_PRIME: i64 = 1441;
pub const DEFAULT_TABLE_SIZE: usize = 1 << 10;

/// Grow the table once columns exceed three quarters of the bucket count.
const MAX_LOAD_NUM: usize = 3;
const MAX_LOAD_DEN: usize = 4;

/// `(P * u + v) mod Q`, wrapped to `[0, Q)` for negative cells.
#[inline]
pub fn hash_cell(c: CellIndex2D, table_size: usize) -> usize {
    debug_assert!(table_size > 0);
    (HASH_PRIME * c.u as i64 + c.v as i64).rem_euclid(table_size as i64) as usize
}

/// Search direction along the projection axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchDir {
    /// Towards increasing `w`.
    Positive,
    /// Towards decreasing `w`.
    Negative,
}

/// Result of a nearest-boundary search in one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Nearest {
    pub voxel: Option<PackedBoundaryVoxel>,
    /// Distance in voxels to `voxel`; `None` exactly when `voxel` is.
    pub r_min: Option<u32>,
}

impl Nearest {
    const NONE: Nearest = Nearest { voxel: None, r_min: None };
}

/// Accumulated search cost over many queries.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QueryStats {
    pub queries: u64,
    /// Sum of the lengths of the columns that were binary searched.
    pub column_voxels: u64,
    /// Sum of element comparisons made by the binary searches.
    pub comparisons: u64,
}

impl QueryStats {
    /// Mean number of boundary voxels handed to the binary search per query.
    pub fn mean_voxels_per_query(&self) -> f64 {
        if self.queries == 0 {
            0.0
        } else {
            self.column_voxels as f64 / self.queries as f64
        }
    }

    pub fn mean_comparisons(&self) -> f64 {
        if self.queries == 0 {
            0.0
        } else {
            self.comparisons as f64 / self.queries as f64
        }
    }

    pub fn merge(&mut self, other: &QueryStats) {
        self.queries += other.queries;
        self.column_voxels += other.column_voxels;
        self.comparisons += other.comparisons;
    }
}

/// Storage accounting for the boundary map.
///
/// `estimated_bytes` counts the packed payload (4 bytes per voxel), one
/// `Column` header per occupied cell and one bucket header per table slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MemoryReport {
    pub boundary_voxel_count: usize,
    pub column_count: usize,
    pub table_size: usize,
    pub payload_bytes: usize,
    pub column_overhead_bytes: usize,
    pub table_bytes: usize,
    pub estimated_bytes: usize,
}

/// Expected boundary voxel count `2 * rho_e * V_e / d^3` for an environment of
/// volume `volume` (m^3) whose occupied fraction is `sparsity`, assuming one
/// interior voxel per exterior voxel.
pub fn analytic_boundary_estimate(sparsity: f64, volume: f64, resolution: f64) -> f64 {
    2.0 * sparsity * volume / resolution.powi(3)
}

/// Hashed 2D grid of sorted boundary-voxel columns, chained per bucket.
///
/// Coordinates are internal `(u, v, w)`: the column key is `(u, v)` and `w`
/// runs along the projection axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryGrid2D {
    buckets: Vec<Vec<Column>>,
    columns: usize,
    voxels: usize,
}

impl Default for BoundaryGrid2D {
    fn default() -> Self {
        Self::new()
    }
}

impl BoundaryGrid2D {
    pub fn new() -> Self {
        Self::with_table_size(DEFAULT_TABLE_SIZE).expect("default size is a power of two")
    }

    pub fn with_table_size(table_size: usize) -> Result<Self> {
        if table_size == 0 || !table_size.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "hash table size must be a positive power of two, got {table_size}"
            )));
        }
        Ok(Self { buckets: vec![Vec::new(); table_size], columns: 0, voxels: 0 })
    }

    pub fn table_size(&self) -> usize {
        self.buckets.len()
    }

    pub fn voxel_count(&self) -> usize {
        self.voxels
    }

    pub fn column_count(&self) -> usize {
        self.columns
    }

    pub fn is_empty(&self) -> bool {
        self.voxels == 0
    }

    pub fn clear(&mut self) {
        for b in &mut self.buckets {
            b.clear();
        }
        self.columns = 0;
        self.voxels = 0;
    }

    #[inline]
    fn bucket(&self, cell: CellIndex2D) -> &Vec<Column> {
        &self.buckets[hash_cell(cell, self.buckets.len())]
    }

    pub fn column(&self, cell: CellIndex2D) -> Option<&Column> {
        self.bucket(cell).iter().find(|c| c.cell() == cell)
    }

    pub fn columns(&self) -> impl Iterator<Item = &Column> {
        self.buckets.iter().flatten()
    }

    pub fn get(&self, v: VoxelIndex) -> Option<BoundaryType> {
        self.column(v.cell()).and_then(|c| c.get(v.z))
    }

    /// Adds `v`; fails if any type is already stored at `v`.
    pub fn insert(&mut self, v: VoxelIndex, kind: BoundaryType) -> Result<()> {
        PackedBoundaryVoxel::pack(v.z, kind)?;
        let cell = v.cell();
        let idx = hash_cell(cell, self.buckets.len());
        let bucket = &mut self.buckets[idx];
        match bucket.iter_mut().find(|c| c.cell() == cell) {
            Some(col) => col.insert(v.z, kind)?,
            None => {
                let mut col = Column::new(cell);
                col.insert(v.z, kind)?;
                bucket.push(col);
                self.columns += 1;
            }
        }
        self.voxels += 1;
        if self.columns * MAX_LOAD_DEN > self.buckets.len() * MAX_LOAD_NUM {
            self.rehash(self.buckets.len() * 2);
        }
        Ok(())
    }

    /// Removes `v`; fails if nothing is stored there. A column losing its
    /// last voxel is evicted.
    pub fn remove(&mut self, v: VoxelIndex) -> Result<BoundaryType> {
        self.remove_if_present(v).ok_or(Error::MissingVoxel(v))
    }

    pub fn remove_if_present(&mut self, v: VoxelIndex) -> Option<BoundaryType> {
        let cell = v.cell();
        let idx = hash_cell(cell, self.buckets.len());
        let bucket = &mut self.buckets[idx];
        let pos = bucket.iter().position(|c| c.cell() == cell)?;
        let kind = bucket[pos].remove(v.z)?;
        self.voxels -= 1;
        if bucket[pos].is_empty() {
            bucket.swap_remove(pos);
            self.columns -= 1;
        }
        Some(kind)
    }

    /// Replaces whatever is stored at `v` with `kind` (or nothing).
    pub fn set_status(&mut self, v: VoxelIndex, kind: Option<BoundaryType>) -> Result<()> {
        self.remove_if_present(v);
        match kind {
            Some(k) => self.insert(v, k),
            None => Ok(()),
        }
    }

    fn rehash(&mut self, new_size: usize) {
        let old = std::mem::replace(&mut self.buckets, vec![Vec::new(); new_size]);
        for col in old.into_iter().flatten() {
            let idx = hash_cell(col.cell(), new_size);
            self.buckets[idx].push(col);
        }
    }

    pub fn find_nearest(&self, q: VoxelIndex, dir: SearchDir) -> Nearest {
        self.find_nearest_with_stats(q, dir, &mut QueryStats::default())
    }

    /// Nearest stored voxel in column `(q.u, q.v)` at or beyond `q.w` in
    /// direction `dir`, by binary search.
    pub fn find_nearest_with_stats(&self, q: VoxelIndex, dir: SearchDir, stats: &mut QueryStats) -> Nearest {
        stats.queries += 1;
        let Some(col) = self.column(q.cell()) else {
            return Nearest::NONE;
        };
        stats.column_voxels += col.len() as u64;
        let voxels = col.voxels();
        let found = match dir {
            SearchDir::Positive => {
                let i = col.lower_bound(q.z, &mut stats.comparisons);
                voxels.get(i).copied()
            }
            SearchDir::Negative => {
                let i = col.upper_bound(q.z, &mut stats.comparisons);
                i.checked_sub(1).map(|j| voxels[j])
            }
        };
        match found {
            Some(p) => Nearest { voxel: Some(p), r_min: Some(p.w().abs_diff(q.z)) },
            None => Nearest::NONE,
        }
    }

    pub fn determine_occupancy(&self, q: VoxelIndex, dir: SearchDir) -> OccState {
        self.determine_occupancy_with_stats(q, dir, &mut QueryStats::default())
    }

    pub fn determine_occupancy_with_stats(&self, q: VoxelIndex, dir: SearchDir, stats: &mut QueryStats) -> OccState {
        classify(self.find_nearest_with_stats(q, dir, stats))
    }

    /// Every stored boundary voxel, in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = (VoxelIndex, BoundaryType)> + '_ {
        self.columns().flat_map(|c| c.iter())
    }

    /// Contents sorted by voxel index; convenient for set comparisons.
    pub fn to_sorted_vec(&self) -> Vec<(VoxelIndex, BoundaryType)> {
        let mut all: Vec<_> = self.iter().collect();
        all.sort_unstable();
        all
    }

    /// Exterior-unknown voxels, i.e. the free/unknown interface.
    pub fn frontier_voxels(&self) -> Vec<VoxelIndex> {
        self.iter()
            .filter(|(_, t)| *t == BoundaryType::ExteriorUnknown)
            .map(|(v, _)| v)
            .collect()
    }

    pub fn memory_report(&self) -> MemoryReport {
        let payload = self.voxels * size_of::<PackedBoundaryVoxel>();
        let column_overhead = self.columns * size_of::<Column>();
        let table = self.buckets.len() * size_of::<Vec<Column>>();
        MemoryReport {
            boundary_voxel_count: self.voxels,
            column_count: self.columns,
            table_size: self.buckets.len(),
            payload_bytes: payload,
            column_overhead_bytes: column_overhead,
            table_bytes: table,
            estimated_bytes: payload + column_overhead + table,
        }
    }

    /// Checks sortedness, non-empty columns, bucket placement and counters.
    pub fn check_invariants(&self) -> Result<()> {
        let mut voxels = 0;
        let mut columns = 0;
        for (i, bucket) in self.buckets.iter().enumerate() {
            for col in bucket {
                columns += 1;
                voxels += col.len();
                if col.is_empty() {
                    return Err(Error::InvalidInput(format!("empty column at {:?}", col.cell())));
                }
                if hash_cell(col.cell(), self.buckets.len()) != i {
                    return Err(Error::InvalidInput(format!("column {:?} in wrong bucket", col.cell())));
                }
                if col.voxels().windows(2).any(|p| p[0].w() >= p[1].w()) {
                    return Err(Error::InvalidInput(format!("column {:?} not strictly sorted", col.cell())));
                }
            }
        }
        if voxels != self.voxels || columns != self.columns {
            return Err(Error::InvalidInput("counter mismatch".into()));
        }
        Ok(())
    }
}

/// Occupancy from the nearest boundary voxel along the search direction.
#[inline]
pub(crate) fn classify(nearest: Nearest) -> OccState {
    match (nearest.voxel, nearest.r_min) {
        (Some(p), Some(0)) => p.kind().state(),
        (Some(p), Some(_)) if p.kind() == BoundaryType::Interior => OccState::Free,
        _ => OccState::Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn sample_column() -> BoundaryGrid2D {
        let mut g = BoundaryGrid2D::new();
        g.insert(VoxelIndex::new(0, 0, 3), BoundaryType::Interior).unwrap();
        g.insert(VoxelIndex::new(0, 0, 15), BoundaryType::ExteriorOccupied).unwrap();
        g.insert(VoxelIndex::new(0, 0, 7), BoundaryType::ExteriorUnknown).unwrap();
        g
    }

    #[test]
    fn hash_examples() {
        let q = 1 << 20;
        assert_eq!(hash_cell(CellIndex2D::new(0, 0), q), 0);
        assert_eq!(hash_cell(CellIndex2D::new(2, 3), q), 2885);
        assert_eq!(hash_cell(CellIndex2D::new(-1, 0), q), 1_047_135);
    }

    #[test]
    fn table_size_must_be_power_of_two() {
        assert!(BoundaryGrid2D::with_table_size(0).is_err());
        assert!(BoundaryGrid2D::with_table_size(1000).is_err());
        assert!(BoundaryGrid2D::with_table_size(1).is_ok());
    }

    #[test]
    fn insert_and_evict() {
        let mut g = BoundaryGrid2D::new();
        g.insert(VoxelIndex::new(0, 0, 5), BoundaryType::ExteriorOccupied).unwrap();
        let col = g.column(CellIndex2D::new(0, 0)).unwrap();
        assert_eq!(col.voxels().iter().map(|p| p.unpack()).collect::<Vec<_>>(), vec![(5, BoundaryType::ExteriorOccupied)]);
        assert!(matches!(
            g.insert(VoxelIndex::new(0, 0, 5), BoundaryType::Interior),
            Err(Error::DuplicateVoxel(_))
        ));
        g.remove(VoxelIndex::new(0, 0, 5)).unwrap();
        assert!(g.column(CellIndex2D::new(0, 0)).is_none());
        assert_eq!(g.column_count(), 0);
        assert!(matches!(g.remove(VoxelIndex::new(0, 0, 5)), Err(Error::MissingVoxel(_))));
    }

    #[test]
    fn column_order_independent_of_insertion_order() {
        let mut g = BoundaryGrid2D::new();
        g.insert(VoxelIndex::new(0, 0, 7), BoundaryType::ExteriorUnknown).unwrap();
        g.insert(VoxelIndex::new(0, 0, 3), BoundaryType::Interior).unwrap();
        let ws: Vec<i32> = g.column(CellIndex2D::new(0, 0)).unwrap().voxels().iter().map(|p| p.w()).collect();
        assert_eq!(ws, vec![3, 7]);
    }

    #[test]
    fn nearest_examples() {
        let g = sample_column();
        let n = g.find_nearest(VoxelIndex::new(0, 0, 5), SearchDir::Positive);
        assert_eq!(n.voxel.unwrap().unpack(), (7, BoundaryType::ExteriorUnknown));
        assert_eq!(n.r_min, Some(2));
        let n = g.find_nearest(VoxelIndex::new(0, 0, 3), SearchDir::Positive);
        assert_eq!(n.voxel.unwrap().unpack(), (3, BoundaryType::Interior));
        assert_eq!(n.r_min, Some(0));
        let n = g.find_nearest(VoxelIndex::new(0, 0, 20), SearchDir::Positive);
        assert_eq!(n, Nearest::NONE);
        let n = g.find_nearest(VoxelIndex::new(0, 0, 5), SearchDir::Negative);
        assert_eq!(n.voxel.unwrap().unpack(), (3, BoundaryType::Interior));
        assert_eq!(n.r_min, Some(2));
        let n = g.find_nearest(VoxelIndex::new(0, 0, 2), SearchDir::Negative);
        assert_eq!(n, Nearest::NONE);
        let n = g.find_nearest(VoxelIndex::new(1, 0, 2), SearchDir::Negative);
        assert_eq!(n, Nearest::NONE);
    }

    #[test]
    fn determine_occupancy_examples() {
        let g = sample_column();
        // on an occupied boundary voxel
        assert_eq!(g.determine_occupancy(VoxelIndex::new(0, 0, 15), SearchDir::Positive), OccState::Occupied);
        // interior voxel found above at distance 4
        let mut h = BoundaryGrid2D::new();
        h.insert(VoxelIndex::new(0, 0, 4), BoundaryType::Interior).unwrap();
        assert_eq!(h.determine_occupancy(VoxelIndex::new(0, 0, 0), SearchDir::Positive), OccState::Free);
        // exterior found at distance > 0
        assert_eq!(g.determine_occupancy(VoxelIndex::new(0, 0, 8), SearchDir::Positive), OccState::Unknown);
        // nothing found
        assert_eq!(g.determine_occupancy(VoxelIndex::new(0, 0, 16), SearchDir::Positive), OccState::Unknown);
        assert_eq!(g.determine_occupancy(VoxelIndex::new(9, 9, 0), SearchDir::Positive), OccState::Unknown);
        assert_eq!(g.determine_occupancy(VoxelIndex::new(0, 0, 3), SearchDir::Negative), OccState::Free);
        assert_eq!(g.determine_occupancy(VoxelIndex::new(0, 0, 7), SearchDir::Negative), OccState::Unknown);
    }

    #[test]
    fn frontier_and_memory() {
        let empty = BoundaryGrid2D::new();
        assert!(empty.frontier_voxels().is_empty());
        assert_eq!(empty.memory_report().boundary_voxel_count, 0);

        let mut g = BoundaryGrid2D::new();
        g.insert(VoxelIndex::new(1, 1, 1), BoundaryType::ExteriorUnknown).unwrap();
        g.insert(VoxelIndex::new(1, 1, 2), BoundaryType::ExteriorOccupied).unwrap();
        assert_eq!(g.frontier_voxels(), vec![VoxelIndex::new(1, 1, 1)]);

        let mut big = BoundaryGrid2D::new();
        for i in 0..1000 {
            big.insert(VoxelIndex::new(i % 10, i / 10, 0), BoundaryType::Interior).unwrap();
        }
        let m = big.memory_report();
        assert_eq!(m.boundary_voxel_count, 1000);
        assert_eq!(m.payload_bytes, 4000);
        assert_eq!(m.estimated_bytes, m.payload_bytes + m.column_overhead_bytes + m.table_bytes);

        assert!((analytic_boundary_estimate(0.01, 1000.0, 0.1) - 20_000.0).abs() < 1e-6);
    }

    #[test]
    fn rehash_grows_table() {
        let mut g = BoundaryGrid2D::with_table_size(4).unwrap();
        for u in -20..20 {
            for v in -20..20 {
                g.insert(VoxelIndex::new(u, v, u + v), BoundaryType::Interior).unwrap();
            }
        }
        assert!(g.table_size() >= 1600 * 4 / 3);
        assert!(g.table_size().is_power_of_two());
        g.check_invariants().unwrap();
        assert_eq!(g.get(VoxelIndex::new(-20, 19, -1)), Some(BoundaryType::Interior));
    }

    proptest! {
        #[test]
        fn random_ops_match_set_model(ops in prop::collection::vec((any::<bool>(), -4i32..4, -4i32..4, -6i32..6, 0usize..3), 0..400)) {
            let mut g = BoundaryGrid2D::with_table_size(2).unwrap();
            let mut model: BTreeMap<VoxelIndex, BoundaryType> = BTreeMap::new();
            for (ins, u, v, w, t) in ops {
                let vox = VoxelIndex::new(u, v, w);
                if ins {
                    let r = g.insert(vox, BoundaryType::ALL[t]);
                    prop_assert_eq!(r.is_ok(), !model.contains_key(&vox));
                    model.entry(vox).or_insert(BoundaryType::ALL[t]);
                } else {
                    let r = g.remove(vox).ok();
                    prop_assert_eq!(r, model.remove(&vox));
                }
            }
            g.check_invariants().unwrap();
            let want: Vec<_> = model.into_iter().collect();
            prop_assert_eq!(g.to_sorted_vec(), want);
        }

        #[test]
        fn nearest_matches_linear_scan(ws in prop::collection::btree_set(-30i32..30, 0..20), q in -35i32..35, up in any::<bool>()) {
            let mut g = BoundaryGrid2D::new();
            for &w in &ws {
                g.insert(VoxelIndex::new(0, 0, w), BoundaryType::Interior).unwrap();
            }
            let dir = if up { SearchDir::Positive } else { SearchDir::Negative };
            let expect = if up { ws.iter().copied().find(|&w| w >= q) } else { ws.iter().rev().copied().find(|&w| w <= q) };
            let got = g.find_nearest(VoxelIndex::new(0, 0, q), dir);
            prop_assert_eq!(got.voxel.map(|p| p.w()), expect);
            prop_assert_eq!(got.r_min, expect.map(|w| w.abs_diff(q)));
        }
    }
}
