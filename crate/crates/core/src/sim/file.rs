//! Plain-text scene description.
//!
//! One directive per line, `#` starts a comment, lengths in metres,
//! angles in degrees:
//!
//! ```text
//! name corridor
//! extent x0 y0 z0 x1 y1 z1
//! resolution 0.2
//! local 8 8 4
//! box x0 y0 z0 x1 y1 z1
//! mover sx sy sz
//! waypoint tick cx cy cz
//! sensor range azimuths elevations elev_min elev_max
//! marker on
//! jitter 0.02 seed
//! pose tick x y z
//! ```
//!
//! `extent`, `sensor` and at least one `pose` are required.

use std::fmt::Write as _;

use super::{Aabb, Mover, Pose, SensorModel, SyntheticScene};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn floats<const N: usize>(line: usize, args: &[&str]) -> Result<[f64; N]> {
    if args.len() != N {
        return Err(parse_err(line, format!("expected {N} numbers, found {}", args.len())));
    }
    let mut out = [0.0; N];
    for (o, a) in out.iter_mut().zip(args) {
        *o = a.parse().map_err(|_| parse_err(line, format!("'{a}' is not a number")))?;
    }
    Ok(out)
}

fn int<T: std::str::FromStr>(line: usize, a: &str) -> Result<T> {
    a.parse().map_err(|_| parse_err(line, format!("'{a}' is not a non-negative integer")))
}

pub fn parse_scene(text: &str) -> Result<SyntheticScene> {
    let mut name = String::from("scene");
    let mut extent = None;
    let mut resolution = 0.2;
    let mut local_size = None;
    let mut boxes = Vec::new();
    let mut mover_size = None;
    let mut waypoints = Vec::new();
    let mut sensor: Option<SensorModel> = None;
    let mut marker = false;
    let mut jitter = (0.0, 0u64);
    let mut trajectory = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        match key {
            "name" => {
                name = args.first().ok_or_else(|| parse_err(ln, "missing scene name"))?.to_string();
            }
            "extent" | "box" => {
                let v = floats::<6>(ln, &args)?;
                let bx = Aabb::new([v[0], v[1], v[2]], [v[3], v[4], v[5]])
                    .map_err(|e| parse_err(ln, e.to_string()))?;
                if key == "extent" {
                    extent = Some(bx);
                } else {
                    boxes.push(bx);
                }
            }
            "resolution" => resolution = floats::<1>(ln, &args)?[0],
            "local" => local_size = Some(floats::<3>(ln, &args)?),
            "mover" => mover_size = Some(floats::<3>(ln, &args)?),
            "waypoint" | "pose" => {
                if args.len() != 4 {
                    return Err(parse_err(ln, format!("{key} needs a tick and three coordinates")));
                }
                let tick: u64 = int(ln, args[0])?;
                let p = floats::<3>(ln, &args[1..])?;
                if key == "pose" {
                    trajectory.push(Pose { tick, position: p });
                } else {
                    waypoints.push((tick, p));
                }
            }
            "sensor" => {
                if args.len() != 5 {
                    return Err(parse_err(ln, "sensor needs range azimuths elevations elev_min elev_max"));
                }
                let range = floats::<1>(ln, &args[..1])?[0];
                let az = int(ln, args[1])?;
                let el = int(ln, args[2])?;
                let lim = floats::<2>(ln, &args[3..])?;
                sensor = Some(SensorModel {
                    range,
                    azimuth_count: az,
                    elevation_count: el,
                    elevation_min: lim[0],
                    elevation_max: lim[1],
                    max_range_marker: false,
                    jitter: 0.0,
                    seed: 0,
                });
            }
            "marker" => {
                marker = match args.as_slice() {
                    ["on"] => true,
                    ["off"] => false,
                    _ => return Err(parse_err(ln, "marker takes 'on' or 'off'")),
                }
            }
            "jitter" => {
                if args.len() != 2 {
                    return Err(parse_err(ln, "jitter needs an amplitude and a seed"));
                }
                jitter = (floats::<1>(ln, &args[..1])?[0], int(ln, args[1])?);
            }
            other => return Err(parse_err(ln, format!("unknown directive '{other}'"))),
        }
    }

    let extent = extent.ok_or_else(|| parse_err(0, "missing 'extent' line"))?;
    let mut sensor = sensor.ok_or_else(|| parse_err(0, "missing 'sensor' line"))?;
    sensor.max_range_marker = marker;
    sensor.jitter = jitter.0;
    sensor.seed = jitter.1;
    if trajectory.is_empty() {
        return Err(parse_err(0, "no 'pose' lines"));
    }
    let mover = match (mover_size, waypoints.is_empty()) {
        (Some(size), false) => Some(Mover { size, waypoints }),
        (None, true) => None,
        (Some(_), true) => return Err(parse_err(0, "mover without waypoints")),
        (None, false) => return Err(parse_err(0, "waypoints without a 'mover' line")),
    };
    let scene = SyntheticScene {
        name,
        extent,
        boxes,
        mover,
        sensor,
        trajectory,
        resolution,
        local_size: local_size.unwrap_or_else(|| extent.size()),
    };
    scene.validate()?;
    Ok(scene)
}

pub fn write_scene(scene: &SyntheticScene) -> String {
    let mut s = String::new();
    let j = |a: &[f64]| a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(s, "name {}", scene.name);
    let _ = writeln!(s, "extent {} {}", j(&scene.extent.min), j(&scene.extent.max));
    let _ = writeln!(s, "resolution {}", scene.resolution);
    let _ = writeln!(s, "local {}", j(&scene.local_size));
    for b in &scene.boxes {
        let _ = writeln!(s, "box {} {}", j(&b.min), j(&b.max));
    }
    if let Some(m) = &scene.mover {
        let _ = writeln!(s, "mover {}", j(&m.size));
        for (t, c) in &m.waypoints {
            let _ = writeln!(s, "waypoint {t} {}", j(c));
        }
    }
    let sn = &scene.sensor;
    let _ = writeln!(
        s,
        "sensor {} {} {} {} {}",
        sn.range, sn.azimuth_count, sn.elevation_count, sn.elevation_min, sn.elevation_max
    );
    if sn.max_range_marker {
        let _ = writeln!(s, "marker on");
    }
    if sn.jitter > 0.0 || sn.seed != 0 {
        let _ = writeln!(s, "jitter {} {}", sn.jitter, sn.seed);
    }
    for p in &scene.trajectory {
        let _ = writeln!(s, "pose {} {}", p.tick, j(&p.position));
    }
    s
}
