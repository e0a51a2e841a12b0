//! Synthetic box worlds and a simulated range sensor.

pub mod catalog;
mod file;

pub use catalog::{builtin_scene, builtin_scene_names};
pub use file::{parse_scene, write_scene};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Axis-aligned box in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        if (0..3).any(|i| !(min[i].is_finite() && max[i].is_finite() && min[i] <= max[i])) {
            return Err(Error::InvalidInput(format!("degenerate box {min:?} {max:?}")));
        }
        Ok(Self { min, max })
    }

    pub fn from_center(center: [f64; 3], size: [f64; 3]) -> Self {
        Self {
            min: std::array::from_fn(|i| center[i] - size[i] / 2.0),
            max: std::array::from_fn(|i| center[i] + size[i] / 2.0),
        }
    }

    pub fn size(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.max[i] - self.min[i])
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, b: &Aabb) -> bool {
        self.contains(b.min) && self.contains(b.max)
    }

    /// Entry distance of the ray `origin + t * dir` (slab method); 0 when
    /// the origin is inside.
    pub fn ray_hit(&self, origin: [f64; 3], dir: [f64; 3]) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let (mut a, mut b) = ((self.min[i] - origin[i]) * inv, (self.max[i] - origin[i]) * inv);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// A box that exists between its first and last waypoint ticks and moves
/// linearly between waypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Mover {
    pub size: [f64; 3],
    /// `(tick, centre)`, ticks strictly increasing.
    pub waypoints: Vec<(u64, [f64; 3])>,
}

impl Mover {
    pub fn box_at(&self, tick: u64) -> Option<Aabb> {
        let first = self.waypoints.first()?;
        let last = self.waypoints.last()?;
        if tick < first.0 || tick > last.0 {
            return None;
        }
        let k = self.waypoints.partition_point(|w| w.0 <= tick);
        let (t0, a) = self.waypoints[k - 1];
        let center = match self.waypoints.get(k) {
            Some(&(t1, b)) => {
                let s = (tick - t0) as f64 / (t1 - t0) as f64;
                std::array::from_fn(|i| a[i] + s * (b[i] - a[i]))
            }
            None => a,
        };
        Some(Aabb::from_center(center, self.size))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub range: f64,
    pub azimuth_count: usize,
    pub elevation_count: usize,
    /// Elevation limits in degrees, inclusive.
    pub elevation_min: f64,
    pub elevation_max: f64,
    /// Emit a point at twice the range for rays that hit nothing.
    pub max_range_marker: bool,
    /// Uniform range noise amplitude in metres, 0 to disable.
    pub jitter: f64,
    pub seed: u64,
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::InvalidInput(format!("sensor range {} must be positive", self.range)));
        }
        if self.azimuth_count == 0 || self.elevation_count == 0 {
            return Err(Error::InvalidInput("sensor needs at least one azimuth and elevation".into()));
        }
        if !(self.elevation_min <= self.elevation_max) || self.elevation_min < -90.0 || self.elevation_max > 90.0 {
            return Err(Error::InvalidInput("elevation limits must satisfy -90 <= min <= max <= 90".into()));
        }
        if !(self.jitter >= 0.0) {
            return Err(Error::InvalidInput("jitter must be non-negative".into()));
        }
        Ok(())
    }

    /// Unit ray directions, azimuth-major.
    pub fn directions(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.azimuth_count * self.elevation_count);
        for a in 0..self.azimuth_count {
            let az = std::f64::consts::TAU * a as f64 / self.azimuth_count as f64;
            for e in 0..self.elevation_count {
                let el = if self.elevation_count == 1 {
                    0.5 * (self.elevation_min + self.elevation_max)
                } else {
                    self.elevation_min
                        + (self.elevation_max - self.elevation_min) * e as f64 / (self.elevation_count - 1) as f64
                }
                .to_radians();
                out.push([el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub tick: u64,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub name: String,
    pub extent: Aabb,
    pub boxes: Vec<Aabb>,
    pub mover: Option<Mover>,
    pub sensor: SensorModel,
    pub trajectory: Vec<Pose>,
    /// Suggested voxel size in metres.
    pub resolution: f64,
    /// Suggested local map size in metres (world x, y, z).
    pub local_size: [f64; 3],
}

impl SyntheticScene {
    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        for b in &self.boxes {
            if !self.extent.contains_box(b) {
                return Err(Error::InvalidInput(format!("box {b:?} outside scene extent")));
            }
        }
        if let Some(m) = &self.mover {
            if m.waypoints.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::InvalidInput("mover waypoint ticks must increase".into()));
            }
            if m.waypoints.iter().any(|w| w.1.iter().any(|c| !c.is_finite())) {
                return Err(Error::InvalidInput("mover waypoint not finite".into()));
            }
        }
        if self.trajectory.windows(2).any(|w| w[0].tick >= w[1].tick) {
            return Err(Error::InvalidInput("pose ticks must increase".into()));
        }
        for p in &self.trajectory {
            if !self.extent.contains(p.position) {
                return Err(Error::InvalidInput(format!("pose at tick {} outside scene extent", p.tick)));
            }
        }
        if !(self.resolution > 0.0) || self.local_size.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidInput("resolution and local size must be positive".into()));
        }
        Ok(())
    }

    /// Obstacles present at `tick`.
    pub fn boxes_at(&self, tick: u64) -> Vec<Aabb> {
        let mut out = self.boxes.clone();
        out.extend(self.mover.as_ref().and_then(|m| m.box_at(tick)));
        out
    }

    /// World-frame returns of one scan from `position` at `tick`.
    pub fn simulate_scan(&self, position: [f64; 3], tick: u64) -> Vec<[f64; 3]> {
        let boxes = self.boxes_at(tick);
        let mut rng = ChaCha8Rng::seed_from_u64(self.sensor.seed ^ tick.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut out = Vec::new();
        for dir in self.sensor.directions() {
            let hit = boxes
                .iter()
                .filter_map(|b| b.ray_hit(position, dir))
                .filter(|&t| t <= self.sensor.range)
                .min_by(f64::total_cmp);
            let t = match hit {
                Some(t) if self.sensor.jitter > 0.0 => {
                    (t + rng.gen_range(-self.sensor.jitter..=self.sensor.jitter)).max(0.0)
                }
                Some(t) => t,
                None if self.sensor.max_range_marker => 2.0 * self.sensor.range,
                None => continue,
            };
            out.push(std::array::from_fn(|i| position[i] + t * dir[i]));
        }
        out
    }

    /// Every scan of the trajectory as `(pose, points)`.
    pub fn scans(&self) -> impl Iterator<Item = (Pose, Vec<[f64; 3]>)> + '_ {
        self.trajectory.iter().map(|p| (*p, self.simulate_scan(p.position, p.tick)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cube_scene(range: f64) -> SyntheticScene {
        let walls = [
            Aabb::new([-5.0, -5.0, -5.0], [-5.0, 5.0, 5.0]).unwrap(),
            Aabb::new([5.0, -5.0, -5.0], [5.0, 5.0, 5.0]).unwrap(),
            Aabb::new([-5.0, -5.0, -5.0], [5.0, -5.0, 5.0]).unwrap(),
            Aabb::new([-5.0, 5.0, -5.0], [5.0, 5.0, 5.0]).unwrap(),
            Aabb::new([-5.0, -5.0, -5.0], [5.0, 5.0, -5.0]).unwrap(),
            Aabb::new([-5.0, -5.0, 5.0], [5.0, 5.0, 5.0]).unwrap(),
        ];
        SyntheticScene {
            name: "cube".into(),
            extent: Aabb::new([-5.0; 3], [5.0; 3]).unwrap(),
            boxes: walls.to_vec(),
            mover: None,
            sensor: SensorModel {
                range,
                azimuth_count: 4,
                elevation_count: 3,
                elevation_min: -90.0,
                elevation_max: 90.0,
                max_range_marker: false,
                jitter: 0.0,
                seed: 0,
            },
            trajectory: vec![Pose { tick: 0, position: [0.0; 3] }],
            resolution: 0.1,
            local_size: [10.0; 3],
        }
    }

    #[test]
    fn axis_rays_hit_walls_at_five_metres() {
        let s = cube_scene(20.0);
        let pts = s.simulate_scan([0.0; 3], 0);
        assert_eq!(pts.len(), 12);
        for p in pts {
            let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((r - 5.0).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn parallel_ray_misses() {
        let b = Aabb::new([1.0, 1.0, 1.0], [2.0, 2.0, 2.0]).unwrap();
        assert_eq!(b.ray_hit([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]), None);
        assert_eq!(b.ray_hit([0.0, 1.5, 1.5], [1.0, 0.0, 0.0]), Some(1.0));
    }

    #[test]
    fn out_of_range_hits_are_dropped_or_marked() {
        let mut s = cube_scene(3.0);
        assert!(s.simulate_scan([0.0; 3], 0).is_empty());
        s.sensor.max_range_marker = true;
        let pts = s.simulate_scan([0.0; 3], 0);
        assert_eq!(pts.len(), 12);
        assert!((pts[0].iter().map(|c| c * c).sum::<f64>().sqrt() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn mover_occludes_then_vacates() {
        let mut s = cube_scene(20.0);
        s.sensor.elevation_count = 1;
        s.sensor.elevation_min = 0.0;
        s.sensor.elevation_max = 0.0;
        s.sensor.azimuth_count = 1;
        s.mover = Some(Mover { size: [1.0, 1.0, 1.0], waypoints: vec![(0, [2.0, 0.0, 0.0]), (3, [2.0, 0.0, 0.0])] });
        assert!((s.simulate_scan([0.0; 3], 3)[0][0] - 1.5).abs() < 1e-12);
        assert!((s.simulate_scan([0.0; 3], 4)[0][0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mover_interpolates() {
        let m = Mover { size: [2.0; 3], waypoints: vec![(10, [0.0; 3]), (20, [10.0, 0.0, 0.0])] };
        assert_eq!(m.box_at(9), None);
        assert_eq!(m.box_at(15).unwrap().min, [4.0, -1.0, -1.0]);
        assert_eq!(m.box_at(20).unwrap().min, [9.0, -1.0, -1.0]);
        assert_eq!(m.box_at(21), None);
    }

    #[test]
    fn jitter_is_seed_deterministic() {
        let mut s = cube_scene(20.0);
        s.sensor.jitter = 0.05;
        assert_eq!(s.simulate_scan([0.0; 3], 7), s.simulate_scan([0.0; 3], 7));
        assert_ne!(s.simulate_scan([0.0; 3], 7), s.simulate_scan([0.0; 3], 8));
    }

    #[test]
    fn directions_are_unit() {
        let s = cube_scene(1.0);
        for d in s.sensor.directions() {
            assert!((d.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    fn march(b: &Aabb, o: [f64; 3], dir: [f64; 3], step: f64, limit: f64) -> Option<f64> {
        let mut t = 0.0;
        while t <= limit {
            if b.contains(std::array::from_fn(|i| o[i] + t * dir[i])) {
                return Some(t);
            }
            t += step;
        }
        None
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn slab_matches_point_marching(
            lo in prop::array::uniform3(-3.0f64..3.0),
            size in prop::array::uniform3(0.3f64..2.0),
            o in prop::array::uniform3(-5.0f64..5.0),
            theta in 0.0f64..std::f64::consts::TAU,
            phi in -1.5f64..1.5,
        ) {
            let d = 0.2;
            let b = Aabb::new(lo, std::array::from_fn(|i| lo[i] + size[i])).unwrap();
            prop_assume!(!b.contains(o));
            let dir = [phi.cos() * theta.cos(), phi.cos() * theta.sin(), phi.sin()];
            let limit = 10.0;
            let exact = b.ray_hit(o, dir).filter(|&t| t <= limit);
            let marched = march(&b, o, dir, d / 10.0, limit);
            match (exact, marched) {
                (Some(a), Some(m)) => prop_assert!((a - m).abs() <= d / 10.0 + 1e-9),
                (None, None) => {}
                // grazing rays: the marcher may step over a thin corner
                (Some(a), None) => {
                    let exit = {
                        let mut lo_t = a;
                        while b.contains(std::array::from_fn(|i| o[i] + (lo_t + 1e-4) * dir[i])) { lo_t += 1e-4; }
                        lo_t
                    };
                    prop_assert!(exit - a < d / 10.0 + 1e-3 || a > limit - d / 10.0);
                }
                (None, Some(m)) => prop_assert!(false, "marcher hit at {} but slab missed", m),
            }
        }
    }
}
