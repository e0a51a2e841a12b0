//! Voxel, cell and world-space coordinate types.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest magnitude a voxel coordinate may take; the packed boundary word
/// reserves 30 bits for the biased projection-axis coordinate.
pub const COORD_LIMIT: i32 = 1 << 29;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VoxelIndex {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl VoxelIndex {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    pub const fn from_array(a: [i32; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub const fn to_array(self) -> [i32; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn axis(self, i: usize) -> i32 {
        self.to_array()[i]
    }

    #[inline]
    pub fn with_axis(self, i: usize, value: i32) -> Self {
        let mut a = self.to_array();
        a[i] = value;
        Self::from_array(a)
    }

    pub fn in_range(self) -> bool {
        self.to_array().iter().all(|c| c.abs() < COORD_LIMIT)
    }

    /// The six face-adjacent neighbours, ordered -x, +x, -y, +y, -z, +z.
    pub fn neighbors6(self) -> [VoxelIndex; 6] {
        let Self { x, y, z } = self;
        [
            Self::new(x - 1, y, z),
            Self::new(x + 1, y, z),
            Self::new(x, y - 1, z),
            Self::new(x, y + 1, z),
            Self::new(x, y, z - 1),
            Self::new(x, y, z + 1),
        ]
    }

    /// Chebyshev distance in voxels.
    pub fn chebyshev(self, other: VoxelIndex) -> i32 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    /// Projection onto the plane orthogonal to the third (internal) axis.
    #[inline]
    pub fn cell(self) -> CellIndex2D {
        CellIndex2D { u: self.x, v: self.y }
    }
}

impl Add for VoxelIndex {
    type Output = VoxelIndex;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for VoxelIndex {
    type Output = VoxelIndex;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl fmt::Display for VoxelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A cell of the 2D projection plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CellIndex2D {
    pub u: i32,
    pub v: i32,
}

impl CellIndex2D {
    pub const fn new(u: i32, v: i32) -> Self {
        Self { u, v }
    }

    #[inline]
    pub fn voxel(self, w: i32) -> VoxelIndex {
        VoxelIndex::new(self.u, self.v, w)
    }
}

/// A point in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WorldPoint<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> WorldPoint<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(T::of(x), T::of(y), T::of(z))
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn cast<U: Scalar>(self) -> WorldPoint<U> {
        WorldPoint::new(U::of(self.x.as_f64()), U::of(self.y.as_f64()), U::of(self.z.as_f64()))
    }
}

impl<T: Scalar> Add for WorldPoint<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<T: Scalar> Sub for WorldPoint<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<T: Scalar> Mul<T> for WorldPoint<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Rounds half away from zero. Quotients that land within a few ulps of a
/// half-integer are treated as exact ties, so `0.15 / 0.1` rounds to 2 even
/// though the binary quotient is slightly below 1.5.
pub fn round_half_away<T: Scalar>(r: T) -> T {
    let a = r.abs();
    let floor = a.floor();
    let frac = a - floor;
    let tol = T::epsilon() * T::of(8.0) * a.max(T::one());
    let half = T::of(0.5);
    let rounded = if frac + tol >= half { floor + T::one() } else { floor };
    if r < T::zero() {
        -rounded
    } else {
        rounded
    }
}

/// Voxel containing `p` at resolution `d`.
pub fn world_to_voxel<T: Scalar>(p: WorldPoint<T>, d: T) -> Result<VoxelIndex> {
    if !p.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite point {p:?}")));
    }
    if !(d > T::zero()) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("resolution must be positive, got {d}")));
    }
    let mut out = [0i32; 3];
    for (slot, c) in out.iter_mut().zip(p.to_array()) {
        let r = round_half_away(c / d);
        let limit = T::of(COORD_LIMIT as f64);
        if !(r.abs() < limit) {
            return Err(Error::InvalidInput(format!(
                "coordinate {c} exceeds the representable voxel range at resolution {d}"
            )));
        }
        *slot = r.to_i32().expect("bounded above");
    }
    Ok(VoxelIndex::from_array(out))
}

/// Centre of voxel `n` in metres.
pub fn voxel_center<T: Scalar>(n: VoxelIndex, d: T) -> WorldPoint<T> {
    WorldPoint::new(T::of(n.x as f64) * d, T::of(n.y as f64) * d, T::of(n.z as f64) * d)
}

/// Inclusive axis-aligned box of voxels. Empty when any `min > max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VoxelBox {
    pub min: VoxelIndex,
    pub max: VoxelIndex,
}

impl VoxelBox {
    pub const EMPTY: VoxelBox = VoxelBox::new(VoxelIndex::new(0, 0, 0), VoxelIndex::new(-1, -1, -1));

    pub const fn new(min: VoxelIndex, max: VoxelIndex) -> Self {
        Self { min, max }
    }

    /// Box of size `dims` whose centre voxel is `center`; for even sizes the
    /// centre sits at `min + dims / 2`.
    pub fn centered(center: VoxelIndex, dims: [usize; 3]) -> Self {
        let mut min = [0; 3];
        let mut max = [0; 3];
        for i in 0..3 {
            let n = dims[i] as i32;
            min[i] = center.axis(i) - n / 2;
            max[i] = min[i] + n - 1;
        }
        Self::new(VoxelIndex::from_array(min), VoxelIndex::from_array(max))
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min.axis(i) > self.max.axis(i))
    }

    pub fn extent(&self, i: usize) -> i64 {
        (self.max.axis(i) as i64 - self.min.axis(i) as i64 + 1).max(0)
    }

    pub fn volume(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            (0..3).map(|i| self.extent(i) as u64).product()
        }
    }

    #[inline]
    pub fn contains(&self, v: VoxelIndex) -> bool {
        v.x >= self.min.x
            && v.x <= self.max.x
            && v.y >= self.min.y
            && v.y <= self.max.y
            && v.z >= self.min.z
            && v.z <= self.max.z
    }

    /// Whether the 2D footprint (first two axes) contains `c`.
    #[inline]
    pub fn footprint_contains(&self, c: CellIndex2D) -> bool {
        c.u >= self.min.x && c.u <= self.max.x && c.v >= self.min.y && c.v <= self.max.y
    }

    pub fn intersect(&self, other: &VoxelBox) -> VoxelBox {
        let min = VoxelIndex::new(
            self.min.x.max(other.min.x),
            self.min.y.max(other.min.y),
            self.min.z.max(other.min.z),
        );
        let max = VoxelIndex::new(
            self.max.x.min(other.max.x),
            self.max.y.min(other.max.y),
            self.max.z.min(other.max.z),
        );
        VoxelBox::new(min, max)
    }

    /// `self \ other` as pairwise disjoint boxes. Peels slabs axis by axis,
    /// so two boxes of equal size yield at most three pieces.
    pub fn difference(&self, other: &VoxelBox) -> Vec<VoxelBox> {
        if self.is_empty() {
            return Vec::new();
        }
        if self.intersect(other).is_empty() {
            return vec![*self];
        }
        let mut out = Vec::new();
        let mut rest = *self;
        for i in 0..3 {
            let (lo, hi) = (other.min.axis(i), other.max.axis(i));
            if rest.min.axis(i) < lo {
                let mut slab = rest;
                slab.max = slab.max.with_axis(i, lo - 1);
                out.push(slab);
                rest.min = rest.min.with_axis(i, lo);
            }
            if rest.max.axis(i) > hi {
                let mut slab = rest;
                slab.min = slab.min.with_axis(i, hi + 1);
                out.push(slab);
                rest.max = rest.max.with_axis(i, hi);
            }
        }
        out
    }

    /// Iterates voxels with the third axis varying fastest.
    pub fn iter(&self) -> impl Iterator<Item = VoxelIndex> + '_ {
        let b = *self;
        let empty = b.is_empty();
        (b.min.x..=b.max.x)
            .filter(move |_| !empty)
            .flat_map(move |x| {
                (b.min.y..=b.max.y)
                    .flat_map(move |y| (b.min.z..=b.max.z).map(move |z| VoxelIndex::new(x, y, z)))
            })
    }

    /// Cells of the footprint (first two axes).
    pub fn cells(&self) -> impl Iterator<Item = CellIndex2D> + '_ {
        let b = *self;
        let empty = b.is_empty();
        (b.min.x..=b.max.x)
            .filter(move |_| !empty)
            .flat_map(move |u| (b.min.y..=b.max.y).map(move |v| CellIndex2D::new(u, v)))
    }
}

impl fmt::Display for VoxelBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} .. {}]", self.min, self.max)
    }
}

/// Axis along which boundary voxels are collapsed into columns.
///
/// Internally every map works in `(u, v, w)` coordinates with `w` the
/// projection axis; `(u, v)` are the two remaining world axes in their
/// natural order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ProjectionAxis {
    X,
    Y,
    #[default]
    Z,
}

impl ProjectionAxis {
    /// World axis index feeding each internal axis `(u, v, w)`.
    pub const fn permutation(self) -> [usize; 3] {
        match self {
            ProjectionAxis::X => [1, 2, 0],
            ProjectionAxis::Y => [0, 2, 1],
            ProjectionAxis::Z => [0, 1, 2],
        }
    }

    pub fn to_internal(self, v: VoxelIndex) -> VoxelIndex {
        let p = self.permutation();
        let a = v.to_array();
        VoxelIndex::new(a[p[0]], a[p[1]], a[p[2]])
    }

    pub fn to_world(self, v: VoxelIndex) -> VoxelIndex {
        let p = self.permutation();
        let a = v.to_array();
        let mut out = [0; 3];
        for i in 0..3 {
            out[p[i]] = a[i];
        }
        VoxelIndex::from_array(out)
    }

    pub fn point_to_internal<T: Scalar>(self, pt: WorldPoint<T>) -> WorldPoint<T> {
        let p = self.permutation();
        let a = pt.to_array();
        WorldPoint::new(a[p[0]], a[p[1]], a[p[2]])
    }

    pub fn point_to_world<T: Scalar>(self, pt: WorldPoint<T>) -> WorldPoint<T> {
        let p = self.permutation();
        let a = pt.to_array();
        let mut out = [T::zero(); 3];
        for i in 0..3 {
            out[p[i]] = a[i];
        }
        WorldPoint::from_array(out)
    }

    pub fn dims_to_internal(self, dims: [usize; 3]) -> [usize; 3] {
        let p = self.permutation();
        [dims[p[0]], dims[p[1]], dims[p[2]]]
    }

    pub fn box_to_world(self, b: VoxelBox) -> VoxelBox {
        VoxelBox::new(self.to_world(b.min), self.to_world(b.max))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionAxis::X => "x",
            ProjectionAxis::Y => "y",
            ProjectionAxis::Z => "z",
        }
    }
}

impl FromStr for ProjectionAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(ProjectionAxis::X),
            "y" => Ok(ProjectionAxis::Y),
            "z" => Ok(ProjectionAxis::Z),
            other => Err(Error::InvalidInput(format!("unknown projection axis '{other}'"))),
        }
    }
}

impl fmt::Display for ProjectionAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
