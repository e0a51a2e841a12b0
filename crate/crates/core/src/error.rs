use thiserror::Error;

use crate::coords::VoxelIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("voxel {0} is already stored in the boundary map")]
    DuplicateVoxel(VoxelIndex),

    #[error("voxel {0} is not stored in the boundary map")]
    MissingVoxel(VoxelIndex),

    #[error("voxel {voxel} lies outside the local map extent {extent}")]
    OutOfBounds { voxel: VoxelIndex, extent: String },

    #[error("unknown scene '{0}'")]
    UnknownScene(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
