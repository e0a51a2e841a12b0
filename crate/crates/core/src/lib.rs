//! Occupancy mapping that stores only the voxels on the boundary between
//! free and non-free space.
//!
//! A dense, robot-centred [`LocalGrid`] absorbs range scans; when it slides,
//! voxels leaving it are folded into a global [`BoundaryGrid2D`] (columns of
//! packed boundary voxels keyed by a hashed 2D cell) and voxels entering it
//! are rebuilt from that map. [`MappingFramework`] ties the two together and
//! answers occupancy queries anywhere.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root pick `f32`, with `*64` variants for `f64`.

// `!(a > b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod coords;
pub mod error;
pub mod framework;
pub mod harness;
pub mod local;
pub mod oracle;
pub mod prob;
pub mod raycast;
pub mod replay;
pub mod scalar;
pub mod sim;

pub use boundary::{BoundaryGrid2D, BoundaryType, MemoryReport, QueryStats, SearchDir};
pub use coords::{world_to_voxel, CellIndex2D, ProjectionAxis, VoxelBox, VoxelIndex};
pub use error::{Error, Result};
pub use framework::{FrameworkConfig, MappingFramework, UpdateReport};
pub use local::{LocalGrid, SlideRegions};
pub use oracle::{MappingSpace, OracleGrid};
pub use prob::{OccState, Probabilities};
pub use scalar::Scalar;

pub type Framework = MappingFramework<f32>;
pub type Framework64 = MappingFramework<f64>;
pub type Local = LocalGrid<f32>;
pub type Local64 = LocalGrid<f64>;
pub type Oracle = OracleGrid<f32>;
pub type Oracle64 = OracleGrid<f64>;
pub type Params = prob::ProbParams<f32>;
pub type Params64 = prob::ProbParams<f64>;
pub type Point = coords::WorldPoint<f32>;
pub type Point64 = coords::WorldPoint<f64>;
