//! Text exports of a boundary map.
//!
//! CSV layout (world voxel indices, one row per boundary voxel, sorted):
//!
//! ```text
//! # boundmap boundary map v1
//! # axis=z resolution=0.2
//! x,y,z,type
//! 12,-3,4,exterior_occupied
//! ```
//!
//! `type` is one of `interior`, `exterior_unknown`, `exterior_occupied`.
//! The PLY export is ASCII with one vertex per boundary voxel at its world
//! centre and a `uchar type` property holding the packed type tag (1, 2, 3).

use std::io::{BufRead, Write};

use crate::coords::{ProjectionAxis, VoxelIndex};
use crate::error::{Error, Result};

use super::{BoundaryGrid2D, BoundaryType};

pub const CSV_MAGIC: &str = "# boundmap boundary map v1";
pub const CSV_HEADER: &str = "x,y,z,type";

/// A boundary map with the metadata needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct MapExport {
    pub axis: ProjectionAxis,
    pub resolution: f64,
    pub grid: BoundaryGrid2D,
}

fn world_rows(grid: &BoundaryGrid2D, axis: ProjectionAxis) -> Vec<(VoxelIndex, BoundaryType)> {
    let mut rows: Vec<_> = grid.iter().map(|(v, t)| (axis.to_world(v), t)).collect();
    rows.sort_unstable();
    rows
}

pub fn write_csv<W: Write>(grid: &BoundaryGrid2D, axis: ProjectionAxis, resolution: f64, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_MAGIC}")?;
    writeln!(out, "# axis={axis} resolution={resolution}")?;
    writeln!(out, "{CSV_HEADER}")?;
    for (v, t) in world_rows(grid, axis) {
        writeln!(out, "{},{},{},{}", v.x, v.y, v.z, t)?;
    }
    Ok(())
}

/// Writes only the exterior-unknown (frontier) voxels, same layout as
/// [`write_csv`].
pub fn write_frontier_csv<W: Write>(grid: &BoundaryGrid2D, axis: ProjectionAxis, resolution: f64, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_MAGIC}")?;
    writeln!(out, "# axis={axis} resolution={resolution}")?;
    writeln!(out, "{CSV_HEADER}")?;
    for (v, t) in world_rows(grid, axis).into_iter().filter(|(_, t)| *t == BoundaryType::ExteriorUnknown) {
        writeln!(out, "{},{},{},{}", v.x, v.y, v.z, t)?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<MapExport> {
    let mut axis = None;
    let mut resolution = None;
    let mut grid = BoundaryGrid2D::new();
    let mut saw_header = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            for kv in comment.split_whitespace() {
                if let Some(a) = kv.strip_prefix("axis=") {
                    axis = Some(a.parse::<ProjectionAxis>().map_err(|e| parse_err(lineno, e))?);
                } else if let Some(r) = kv.strip_prefix("resolution=") {
                    let r: f64 = r.parse().map_err(|_| parse_err(lineno, format!("bad resolution '{r}'")))?;
                    if !(r > 0.0 && r.is_finite()) {
                        return Err(parse_err(lineno, format!("resolution must be positive, got {r}")));
                    }
                    resolution = Some(r);
                }
            }
            continue;
        }
        if !saw_header {
            if trimmed != CSV_HEADER {
                return Err(parse_err(lineno, format!("expected header '{CSV_HEADER}', found '{trimmed}'")));
            }
            saw_header = true;
            continue;
        }
        let axis = axis.ok_or_else(|| parse_err(lineno, "missing '# axis=' metadata before data"))?;
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(lineno, format!("expected 4 fields, found {}", fields.len())));
        }
        let coord = |s: &str| s.trim().parse::<i32>().map_err(|_| parse_err(lineno, format!("bad integer '{s}'")));
        let v = VoxelIndex::new(coord(fields[0])?, coord(fields[1])?, coord(fields[2])?);
        let t: BoundaryType = fields[3].parse().map_err(|e| parse_err(lineno, e))?;
        grid.insert(axis.to_internal(v), t).map_err(|e| parse_err(lineno, e))?;
    }
    if !saw_header {
        return Err(parse_err(0, "missing CSV header"));
    }
    Ok(MapExport {
        axis: axis.ok_or_else(|| parse_err(0, "missing axis metadata"))?,
        resolution: resolution.ok_or_else(|| parse_err(0, "missing resolution metadata"))?,
        grid,
    })
}

pub fn write_ply<W: Write>(grid: &BoundaryGrid2D, axis: ProjectionAxis, resolution: f64, mut out: W) -> Result<()> {
    let rows = world_rows(grid, axis);
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "comment boundmap boundary map, type 1=interior 2=exterior_unknown 3=exterior_occupied")?;
    writeln!(out, "element vertex {}", rows.len())?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    writeln!(out, "property uchar type")?;
    writeln!(out, "end_header")?;
    for (v, t) in rows {
        writeln!(
            out,
            "{} {} {} {}",
            v.x as f64 * resolution,
            v.y as f64 * resolution,
            v.z as f64 * resolution,
            t.code()
        )?;
    }
    Ok(())
}

fn parse_err(line: usize, e: impl ToString) -> Error {
    Error::Parse { line, message: e.to_string() }
}
