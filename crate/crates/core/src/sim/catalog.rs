use super::{Aabb, Mover, Pose, SensorModel, SyntheticScene};
use crate::error::{Error, Result};

const NAMES: [&str; 5] = ["corridor", "loop", "aniso", "dynamic", "out_and_back"];

pub fn builtin_scene_names() -> &'static [&'static str] {
    &NAMES
}

pub fn builtin_scene(name: &str) -> Result<SyntheticScene> {
    match name {
        "corridor" => Ok(corridor(40.0, 200, 1)),
        "loop" => Ok(ring_loop()),
        "out_and_back" => Ok(out_and_back(24.0, 100)),
        "aniso" => Ok(tunnel(48.0, 6.0, 200)),
        "dynamic" => Ok(dynamic_room()),
        other => Err(Error::UnknownScene(other.to_string())),
    }
}

fn b(min: [f64; 3], max: [f64; 3]) -> Aabb {
    Aabb { min, max }
}

fn sensor(range: f64, density: usize) -> SensorModel {
    SensorModel {
        range,
        azimuth_count: 120 * density,
        elevation_count: 12 * density + 1,
        elevation_min: -60.0,
        elevation_max: 60.0,
        max_range_marker: false,
        jitter: 0.0,
        seed: 7,
    }
}

/// Closed box room with walls, floor and ceiling 0.4 m thick.
fn shell(size: [f64; 3], t: f64) -> Vec<Aabb> {
    let [x, y, z] = size;
    vec![
        b([0.0, 0.0, 0.0], [x, y, t]),
        b([0.0, 0.0, z - t], [x, y, z]),
        b([0.0, 0.0, t], [x, 1.0, z - t]),
        b([0.0, y - 1.0, t], [x, y, z - t]),
        b([0.0, 1.0, t], [t, y - 1.0, z - t]),
        b([x - t, 1.0, t], [x, y - 1.0, z - t]),
    ]
}

fn corridor_geometry(length: f64) -> Vec<Aabb> {
    let mut boxes = shell([length, 8.0, 4.0], 0.4);
    let mut x = 8.0;
    let mut low = true;
    while x + 4.0 < length {
        let (y0, y1) = if low { (1.0, 2.2) } else { (5.8, 7.0) };
        boxes.push(b([x, y0, 0.4], [x + 0.6, y1, 3.6]));
        boxes.push(b([x + 3.0, 3.4, 0.4], [x + 3.8, 4.6, 1.2]));
        low = !low;
        x += 6.0;
    }
    boxes
}

/// Straight corridor of the given length (8 m wide, 4 m high) travelled
/// once from end to end. `density` multiplies the ray count per axis.
pub fn corridor(length: f64, scans: usize, density: usize) -> SyntheticScene {
    let (x0, x1) = (4.0, length - 4.0);
    let trajectory = (0..scans)
        .map(|i| {
            let s = if scans > 1 { i as f64 / (scans - 1) as f64 } else { 0.0 };
            Pose { tick: i as u64, position: [x0 + s * (x1 - x0), 4.0, 2.0] }
        })
        .collect();
    SyntheticScene {
        name: "corridor".into(),
        extent: b([0.0; 3], [length, 8.0, 4.0]),
        boxes: corridor_geometry(length),
        mover: None,
        sensor: sensor(3.0, density),
        trajectory,
        resolution: 0.2,
        local_size: [8.0, 8.0, 4.0],
    }
}

/// Poses every `step` metres along the polyline `corners`.
fn polyline(corners: &[[f64; 3]], step: f64) -> Vec<Pose> {
    let mut out = vec![corners[0]];
    for w in corners.windows(2) {
        let len = (0..3).map(|i| (w[1][i] - w[0][i]).powi(2)).sum::<f64>().sqrt();
        let n = (len / step).ceil().max(1.0) as usize;
        for k in 1..=n {
            let s = k as f64 / n as f64;
            out.push(std::array::from_fn(|i| w[0][i] + s * (w[1][i] - w[0][i])));
        }
    }
    out.into_iter().enumerate().map(|(i, position)| Pose { tick: i as u64, position }).collect()
}

/// Square ring corridor (24 m outside, 6 m wide) driven once around and
/// then a few metres past the start, so the end revisits mapped space.
pub fn ring_loop() -> SyntheticScene {
    let (size, t, h) = (24.0, 0.4, 4.0);
    let mut boxes = vec![
        b([0.0, 0.0, 0.0], [size, size, t]),
        b([0.0, 0.0, h - t], [size, size, h]),
        b([0.0, 0.0, t], [size, t, h - t]),
        b([0.0, size - t, t], [size, size, h - t]),
        b([0.0, t, t], [t, size - t, h - t]),
        b([size - t, t, t], [size, size - t, h - t]),
        b([6.4, 6.4, t], [17.6, 17.6, h - t]),
    ];
    boxes.push(b([0.4, 13.0, t], [1.2, 14.0, 2.0]));
    boxes.push(b([10.0, 22.6, 1.6], [11.0, 23.6, h - t]));
    boxes.push(b([22.8, 9.0, t], [23.6, 10.5, 3.0]));
    let (lo, hi, z) = (3.4, 20.6, 2.0);
    let trajectory = polyline(
        &[[lo, 12.0, z], [lo, hi, z], [hi, hi, z], [hi, lo, z], [lo, lo, z], [lo, 16.0, z]],
        0.16,
    );
    SyntheticScene {
        name: "loop".into(),
        extent: b([0.0; 3], [size, size, h]),
        boxes,
        mover: None,
        sensor: sensor(3.0, 1),
        trajectory,
        resolution: 0.2,
        local_size: [8.0, 8.0, 4.0],
    }
}

/// Corridor travelled to the far end and back again.
pub fn out_and_back(length: f64, scans_each_way: usize) -> SyntheticScene {
    let mut s = corridor(length, scans_each_way, 1);
    let back: Vec<Pose> = s.trajectory.iter().rev().skip(1).copied().collect();
    let n = s.trajectory.len() as u64;
    s.trajectory.extend(back.into_iter().enumerate().map(|(i, p)| Pose { tick: n + i as u64, ..p }));
    s.name = "out_and_back".into();
    s
}

/// Long narrow tunnel, `length` x `width` x 4 m.
pub fn tunnel(length: f64, width: f64, scans: usize) -> SyntheticScene {
    let mut boxes = shell([length, width, 4.0], 0.4);
    let mut x = 7.0;
    while x + 4.0 < length {
        boxes.push(b([x, 1.0, 0.4], [x + 0.8, 2.0, 2.0]));
        boxes.push(b([x + 4.0, width - 2.0, 2.0], [x + 4.8, width - 1.0, 3.6]));
        x += 8.0;
    }
    let (x0, x1) = (4.0, length - 4.0);
    let trajectory = (0..scans)
        .map(|i| Pose { tick: i as u64, position: [x0 + (x1 - x0) * i as f64 / (scans - 1) as f64, width / 2.0, 2.0] })
        .collect();
    SyntheticScene {
        name: "aniso".into(),
        extent: b([0.0; 3], [length, width, 4.0]),
        boxes,
        mover: None,
        sensor: sensor(3.0, 1),
        trajectory,
        resolution: 0.2,
        local_size: [8.0, width, 4.0],
    }
}

/// Stationary sensor in a 10 m room; a box appears at tick 40, moves
/// between ticks 60 and 100, and is gone after tick 120.
pub fn dynamic_room() -> SyntheticScene {
    let mover = Mover {
        size: [1.0, 1.0, 2.0],
        waypoints: vec![
            (40, [7.5, 5.0, 1.4]),
            (60, [7.5, 5.0, 1.4]),
            (100, [7.5, 6.5, 1.4]),
            (120, [7.5, 6.5, 1.4]),
        ],
    };
    SyntheticScene {
        name: "dynamic".into(),
        extent: b([0.0; 3], [10.0, 10.0, 4.0]),
        boxes: shell([10.0, 10.0, 4.0], 0.4),
        mover: Some(mover),
        sensor: sensor(5.0, 1),
        trajectory: (0..260).map(|t| Pose { tick: t, position: [5.0, 5.0, 2.0] }).collect(),
        resolution: 0.2,
        local_size: [12.0, 12.0, 6.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_valid() {
        for name in builtin_scene_names() {
            let s = builtin_scene(name).unwrap();
            s.validate().unwrap();
            assert_eq!(&s.name, name);
        }
        assert!(matches!(builtin_scene("nope"), Err(Error::UnknownScene(_))));
    }

    #[test]
    fn aniso_ratio() {
        let s = builtin_scene("aniso").unwrap();
        let size = s.extent.size();
        let max = size.iter().cloned().fold(0.0, f64::max);
        let min = size.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min >= 8.0);
    }

    #[test]
    fn corridor_moves_one_way_and_loop_returns() {
        let c = builtin_scene("corridor").unwrap();
        assert!(c.trajectory.windows(2).all(|w| w[1].position[0] > w[0].position[0]));
        let l = builtin_scene("out_and_back").unwrap();
        assert_eq!(l.trajectory.first().unwrap().position, l.trajectory.last().unwrap().position);
        let r = builtin_scene("loop").unwrap();
        let start = r.trajectory[0].position;
        assert!(r.trajectory.iter().filter(|p| p.position == [start[0], 14.0, 2.0]).count() == 0);
        assert!(r.trajectory.last().unwrap().position[1] > start[1]);
    }
}
