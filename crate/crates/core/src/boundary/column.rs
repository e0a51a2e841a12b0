use crate::coords::{CellIndex2D, VoxelIndex, COORD_LIMIT};
use crate::error::{Error, Result};

use super::BoundaryType;

/// Bias added to the projection-axis coordinate so the low 30 bits order
/// exactly like the signed coordinate.
pub const COORD_BIAS: u32 = 1 << 29;
pub const COORD_MASK: u32 = (1 << 30) - 1;

/// One boundary voxel in a single 32-bit word: bits 31..30 hold the type
/// tag, bits 29..0 the biased coordinate along the projection axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PackedBoundaryVoxel(u32);

impl PackedBoundaryVoxel {
    pub fn pack(w: i32, kind: BoundaryType) -> Result<Self> {
        if w.abs() >= COORD_LIMIT {
            return Err(Error::InvalidInput(format!("coordinate {w} does not fit in 30 biased bits")));
        }
        Ok(Self((kind.code() << 30) | biased(w)))
    }

    pub fn from_word(word: u32) -> Result<Self> {
        if BoundaryType::from_code(word >> 30).is_none() {
            return Err(Error::InvalidInput(format!("word {word:#010x} has the reserved type tag 00")));
        }
        Ok(Self(word))
    }

    #[inline]
    pub fn word(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn w(self) -> i32 {
        (self.0 & COORD_MASK) as i32 - COORD_BIAS as i32
    }

    #[inline]
    pub fn kind(self) -> BoundaryType {
        BoundaryType::from_code(self.0 >> 30).expect("type tag validated at construction")
    }

    #[inline]
    pub fn unpack(self) -> (i32, BoundaryType) {
        (self.w(), self.kind())
    }

    #[inline]
    fn key(self) -> u32 {
        self.0 & COORD_MASK
    }
}

#[inline]
fn biased(w: i32) -> u32 {
    (w + COORD_BIAS as i32) as u32
}

/// All boundary voxels sharing one projection cell, strictly increasing in
/// their projection-axis coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    cell: CellIndex2D,
    voxels: Vec<PackedBoundaryVoxel>,
}

impl Column {
    pub(crate) fn new(cell: CellIndex2D) -> Self {
        Self { cell, voxels: Vec::new() }
    }

    pub fn cell(&self) -> CellIndex2D {
        self.cell
    }

    pub fn voxels(&self) -> &[PackedBoundaryVoxel] {
        &self.voxels
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    /// First index whose coordinate is `>= w`, counting probes.
    pub(crate) fn lower_bound(&self, w: i32, probes: &mut u64) -> usize {
        let key = biased(w);
        let (mut lo, mut hi) = (0, self.voxels.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            *probes += 1;
            if self.voxels[mid].key() < key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// First index whose coordinate is `> w`, counting probes.
    pub(crate) fn upper_bound(&self, w: i32, probes: &mut u64) -> usize {
        let key = biased(w);
        let (mut lo, mut hi) = (0, self.voxels.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            *probes += 1;
            if self.voxels[mid].key() <= key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn get(&self, w: i32) -> Option<BoundaryType> {
        let idx = self.lower_bound(w, &mut 0);
        self.voxels.get(idx).filter(|p| p.w() == w).map(|p| p.kind())
    }

    /// Entries with coordinate in `[lo, hi]`.
    pub fn range(&self, lo: i32, hi: i32) -> &[PackedBoundaryVoxel] {
        if lo > hi {
            return &[];
        }
        let a = self.lower_bound(lo, &mut 0);
        let b = self.upper_bound(hi, &mut 0);
        &self.voxels[a..b.max(a)]
    }

    pub(crate) fn insert(&mut self, w: i32, kind: BoundaryType) -> Result<()> {
        let packed = PackedBoundaryVoxel::pack(w, kind)?;
        let idx = self.lower_bound(w, &mut 0);
        if self.voxels.get(idx).is_some_and(|p| p.w() == w) {
            return Err(Error::DuplicateVoxel(self.cell.voxel(w)));
        }
        self.voxels.insert(idx, packed);
        Ok(())
    }

    pub(crate) fn remove(&mut self, w: i32) -> Option<BoundaryType> {
        let idx = self.lower_bound(w, &mut 0);
        if self.voxels.get(idx).is_some_and(|p| p.w() == w) {
            Some(self.voxels.remove(idx).kind())
        } else {
            None
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (VoxelIndex, BoundaryType)> + '_ {
        self.voxels.iter().map(move |p| (self.cell.voxel(p.w()), p.kind()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn packing_examples() {
        let p = PackedBoundaryVoxel::pack(0, BoundaryType::Interior).unwrap();
        assert_eq!(p.word(), (0b01 << 30) | (1 << 29));
        let p = PackedBoundaryVoxel::pack(16, BoundaryType::Interior).unwrap();
        assert_eq!(p.word(), 1_610_612_752);
        assert_eq!(p.unpack(), (16, BoundaryType::Interior));
        assert!(PackedBoundaryVoxel::pack(COORD_LIMIT, BoundaryType::Interior).is_err());
        assert!(PackedBoundaryVoxel::pack(-COORD_LIMIT, BoundaryType::Interior).is_err());
        assert!(PackedBoundaryVoxel::from_word(1 << 29).is_err());
    }

    #[test]
    fn insertion_keeps_order() {
        let mut c = Column::new(CellIndex2D::new(0, 0));
        c.insert(7, BoundaryType::ExteriorUnknown).unwrap();
        c.insert(3, BoundaryType::Interior).unwrap();
        let ws: Vec<i32> = c.voxels().iter().map(|p| p.w()).collect();
        assert_eq!(ws, vec![3, 7]);
        assert!(matches!(c.insert(3, BoundaryType::ExteriorOccupied), Err(Error::DuplicateVoxel(_))));
        assert_eq!(c.range(4, 10).len(), 1);
        assert_eq!(c.range(8, 10).len(), 0);
        assert_eq!(c.range(3, 7).len(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100_000))]
        #[test]
        fn pack_unpack_identity(w in -(COORD_LIMIT - 1)..COORD_LIMIT, t in 0usize..3) {
            let kind = BoundaryType::ALL[t];
            let p = PackedBoundaryVoxel::pack(w, kind).unwrap();
            prop_assert_eq!(p.unpack(), (w, kind));
            prop_assert_eq!(PackedBoundaryVoxel::from_word(p.word()).unwrap(), p);
        }
    }

    proptest! {
        #[test]
        fn masked_words_order_like_coordinates(a in -(COORD_LIMIT - 1)..COORD_LIMIT, b in -(COORD_LIMIT - 1)..COORD_LIMIT, ta in 0usize..3, tb in 0usize..3) {
            let pa = PackedBoundaryVoxel::pack(a, BoundaryType::ALL[ta]).unwrap();
            let pb = PackedBoundaryVoxel::pack(b, BoundaryType::ALL[tb]).unwrap();
            prop_assert_eq!((pa.word() & COORD_MASK).cmp(&(pb.word() & COORD_MASK)), a.cmp(&b));
        }

        #[test]
        fn column_matches_set_model(ops in prop::collection::vec((any::<bool>(), -20i32..20, 0usize..3), 0..200)) {
            let mut c = Column::new(CellIndex2D::new(1, 2));
            let mut model = BTreeMap::new();
            for (ins, w, t) in ops {
                if ins {
                    let r = c.insert(w, BoundaryType::ALL[t]);
                    if model.contains_key(&w) {
                        prop_assert!(r.is_err());
                    } else {
                        prop_assert!(r.is_ok());
                        model.insert(w, BoundaryType::ALL[t]);
                    }
                } else {
                    prop_assert_eq!(c.remove(w), model.remove(&w));
                }
                let got: Vec<(i32, BoundaryType)> = c.voxels().iter().map(|p| p.unpack()).collect();
                let want: Vec<(i32, BoundaryType)> = model.iter().map(|(w, t)| (*w, *t)).collect();
                prop_assert_eq!(got, want);
            }
        }
    }
}
