//! The global boundary map: only voxels on the free/non-free interface are
//! stored, packed into sorted per-cell columns of a hashed 2D grid.

mod column;
pub mod export;
mod grid;

pub use column::{Column, PackedBoundaryVoxel, COORD_BIAS, COORD_MASK};
pub use grid::{
    analytic_boundary_estimate, hash_cell, BoundaryGrid2D, MemoryReport, Nearest, QueryStats,
    SearchDir, DEFAULT_TABLE_SIZE, HASH_PRIME,
};
pub(crate) use grid::classify as grid_classify;

use std::fmt;
use std::str::FromStr;

use crate::coords::VoxelIndex;
use crate::error::{Error, Result};
use crate::prob::OccState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryType {
    /// Free voxel with at least one non-free face neighbour.
    Interior,
    /// Unknown voxel with at least one free face neighbour. These are the
    /// frontier voxels.
    ExteriorUnknown,
    /// Any occupied voxel.
    ExteriorOccupied,
}

impl BoundaryType {
    pub const ALL: [BoundaryType; 3] =
        [BoundaryType::Interior, BoundaryType::ExteriorUnknown, BoundaryType::ExteriorOccupied];

    /// Two-bit tag stored in the upper bits of a packed voxel; `00` is reserved.
    pub const fn code(self) -> u32 {
        match self {
            BoundaryType::Interior => 0b01,
            BoundaryType::ExteriorUnknown => 0b10,
            BoundaryType::ExteriorOccupied => 0b11,
        }
    }

    pub const fn from_code(code: u32) -> Option<Self> {
        match code {
            0b01 => Some(BoundaryType::Interior),
            0b10 => Some(BoundaryType::ExteriorUnknown),
            0b11 => Some(BoundaryType::ExteriorOccupied),
            _ => None,
        }
    }

    /// Occupancy state of the boundary voxel itself.
    pub const fn state(self) -> OccState {
        match self {
            BoundaryType::Interior => OccState::Free,
            BoundaryType::ExteriorUnknown => OccState::Unknown,
            BoundaryType::ExteriorOccupied => OccState::Occupied,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            BoundaryType::Interior => "interior",
            BoundaryType::ExteriorUnknown => "exterior_unknown",
            BoundaryType::ExteriorOccupied => "exterior_occupied",
        }
    }
}

impl fmt::Display for BoundaryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundaryType::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown boundary type '{s}'")))
    }
}

/// Boundary status of `n` given a state accessor covering `n` and its six
/// face neighbours. Returns `None` when `n` is not a boundary voxel.
pub fn compute_boundary_voxel_status<F>(n: VoxelIndex, mut lookup: F) -> Option<BoundaryType>
where
    F: FnMut(VoxelIndex) -> OccState,
{
    match lookup(n) {
        OccState::Occupied => Some(BoundaryType::ExteriorOccupied),
        OccState::Free => n
            .neighbors6()
            .into_iter()
            .any(|m| lookup(m) != OccState::Free)
            .then_some(BoundaryType::Interior),
        OccState::Unknown => n
            .neighbors6()
            .into_iter()
            .any(|m| lookup(m) == OccState::Free)
            .then_some(BoundaryType::ExteriorUnknown),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_examples() {
        let center = VoxelIndex::new(0, 0, 0);
        assert_eq!(compute_boundary_voxel_status(center, |_| OccState::Free), None);
        assert_eq!(
            compute_boundary_voxel_status(center, |v| if v == center {
                OccState::Occupied
            } else {
                OccState::Free
            }),
            Some(BoundaryType::ExteriorOccupied)
        );
        assert_eq!(compute_boundary_voxel_status(center, |_| OccState::Occupied), Some(BoundaryType::ExteriorOccupied));
        let free_nbr = VoxelIndex::new(0, 0, 1);
        assert_eq!(
            compute_boundary_voxel_status(center, |v| if v == free_nbr {
                OccState::Free
            } else {
                OccState::Unknown
            }),
            Some(BoundaryType::ExteriorUnknown)
        );
        assert_eq!(compute_boundary_voxel_status(center, |_| OccState::Unknown), None);
        let occ_nbr = VoxelIndex::new(-1, 0, 0);
        assert_eq!(
            compute_boundary_voxel_status(center, |v| if v == occ_nbr {
                OccState::Occupied
            } else {
                OccState::Free
            }),
            Some(BoundaryType::Interior)
        );
    }

    #[test]
    fn type_names_round_trip() {
        for t in BoundaryType::ALL {
            assert_eq!(t.as_str().parse::<BoundaryType>().unwrap(), t);
            assert_eq!(BoundaryType::from_code(t.code()), Some(t));
        }
        assert_eq!(BoundaryType::from_code(0), None);
    }
}
