use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use boundmap::boundary::export::{read_csv, write_csv, write_frontier_csv, write_ply, MapExport};
use boundmap::coords::WorldPoint;
use boundmap::harness::{run_scene, RunOptions};
use boundmap::prob::ProbParams;
use boundmap::replay::{write_replay, Encoding, Frame, Replay, ReplayRecord};
use boundmap::sim::{builtin_scene, parse_scene, SyntheticScene};
use boundmap::{world_to_voxel, Framework, FrameworkConfig, OccState, QueryStats, SearchDir, VoxelIndex};
use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Source};

pub const DEFAULT_VERIFY_SCENES: [&str; 3] = ["corridor", "loop", "dynamic"];

/// Header of the per-scan metrics CSV; pinned by tests.
pub const METRICS_HEADER: &str =
    "scan,tick,slid,rays,raycast_us,boundary_us,local_us,total_us,boundary_voxels,columns,estimated_bytes";

#[derive(Debug, Serialize)]
struct MetricsRow {
    scan: usize,
    tick: u64,
    slid: u8,
    rays: usize,
    raycast_us: u128,
    boundary_us: u128,
    local_us: u128,
    total_us: u128,
    boundary_voxels: usize,
    columns: usize,
    estimated_bytes: usize,
}

pub struct ReplayOutputs {
    pub metrics: Option<PathBuf>,
    pub map: Option<PathBuf>,
    pub ply: Option<PathBuf>,
    pub frontier: Option<PathBuf>,
}

fn load_scene(source: &Source) -> Result<Option<SyntheticScene>> {
    Ok(match source {
        Source::Scene(name) => Some(builtin_scene(name)?),
        Source::SceneFile(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(parse_scene(&text).with_context(|| format!("in scene file {}", path.display()))?)
        }
        Source::Replay(_) => None,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run_options(cfg: &RunConfig) -> RunOptions {
    RunOptions {
        resolution: cfg.resolution,
        local_size: cfg.local_size,
        axis: cfg.axis,
        slide_threshold: cfg.slide_threshold,
        table_size: cfg.table_size,
        probabilities: cfg.probabilities,
        with_oracle: true,
    }
}

pub fn replay(cfg: &RunConfig, out: &ReplayOutputs) -> Result<()> {
    let scene = load_scene(&cfg.source)?;
    let (records, frame, resolution, local_size, range): (Box<dyn Iterator<Item = Result<ReplayRecord>>>, _, _, _, _) =
        match (&scene, &cfg.source) {
            (Some(s), _) => {
                let it = s.scans().map(|(p, points)| Ok(ReplayRecord { tick: p.tick, pose: p.position, points }));
                (
                    Box::new(it),
                    Frame::World,
                    cfg.resolution.unwrap_or(s.resolution),
                    cfg.local_size.unwrap_or(s.local_size),
                    cfg.range.unwrap_or(s.sensor.range),
                )
            }
            (None, Source::Replay(dir)) => {
                let r = Replay::open(dir).with_context(|| format!("opening replay {}", dir.display()))?;
                let frame = r.header.frame;
                let it = (0..r.len()).map(move |i| r.record(i).map_err(anyhow::Error::from));
                (
                    Box::new(it),
                    frame,
                    cfg.resolution.unwrap_or(0.2),
                    cfg.local_size.unwrap_or([8.0, 8.0, 4.0]),
                    cfg.range.unwrap_or(10.0),
                )
            }
            (None, _) => unreachable!("scene sources always load a scene"),
        };
    let mut records = records.peekable();
    let start = match records.peek() {
        Some(Ok(r)) => r.pose,
        _ => [0.0; 3],
    };
    let params = ProbParams::<f32>::from_probabilities(cfg.probabilities, resolution, range)?;
    let mut fc = FrameworkConfig::new(params, FrameworkConfig::<f32>::local_dims_from_metres(local_size, resolution));
    fc.axis = cfg.axis;
    fc.slide_threshold = cfg.slide_threshold;
    fc.table_size = cfg.table_size;
    let mut fw = Framework::new(fc, WorldPoint::from_f64(start[0], start[1], start[2]))?;

    let mut metrics = match &out.metrics {
        Some(p) => Some(csv::WriterBuilder::new().has_headers(false).from_writer(create(p)?)),
        None => None,
    };
    if let Some(m) = metrics.as_mut() {
        m.write_record(METRICS_HEADER.split(','))?;
    }
    let mut last_tick: Option<u64> = None;
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        if last_tick.is_some_and(|t| rec.tick <= t) {
            bail!("scan {i}: tick {} does not increase", rec.tick);
        }
        last_tick = Some(rec.tick);
        let pts: Vec<WorldPoint<f32>> =
            rec.world_points(frame).into_iter().map(|p| WorldPoint::from_f64(p[0], p[1], p[2])).collect();
        let report = fw.map_update(WorldPoint::from_f64(rec.pose[0], rec.pose[1], rec.pose[2]), &pts)?;
        if report.scan.skipped_points > 0 {
            warn!("scan {i}: skipped {} invalid points", report.scan.skipped_points);
        }
        let mem = fw.memory_report();
        if let Some(m) = metrics.as_mut() {
            m.serialize(MetricsRow {
                scan: i,
                tick: rec.tick,
                slid: u8::from(report.slid),
                rays: report.scan.rays,
                raycast_us: report.raycast.as_micros(),
                boundary_us: report.boundary_update.as_micros(),
                local_us: report.local_update.as_micros(),
                total_us: report.total().as_micros(),
                boundary_voxels: mem.boundary_voxel_count,
                columns: mem.column_count,
                estimated_bytes: mem.estimated_bytes,
            })?;
        }
        info!("scan {i}: {} rays, slid={}, {} boundary voxels", report.scan.rays, report.slid, mem.boundary_voxel_count);
    }
    if let Some(mut m) = metrics {
        m.flush()?;
    }
    fw.synchronize()?;
    let d = resolution;
    if let Some(p) = &out.map {
        let mut w = create(p)?;
        write_csv(fw.global(), fw.axis(), d, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = &out.ply {
        let mut w = create(p)?;
        write_ply(fw.global(), fw.axis(), d, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = &out.frontier {
        let mut w = create(p)?;
        write_frontier_csv(fw.global(), fw.axis(), d, &mut w)?;
        w.flush()?;
    }
    let mem = fw.memory_report();
    println!(
        "scans={} boundary_voxels={} columns={} estimated_bytes={}",
        fw.scans(),
        mem.boundary_voxel_count,
        mem.column_count,
        mem.estimated_bytes
    );
    Ok(())
}

pub fn verify(cfg: &RunConfig, scenes: &[String], mismatch_dir: Option<&Path>) -> Result<bool> {
    if let Some(dir) = mismatch_dir {
        std::fs::create_dir_all(dir)?;
    }
    let opts = run_options(cfg);
    let mut all = true;
    for name in scenes {
        let scene = builtin_scene(name)?;
        let d = opts.resolution.unwrap_or(scene.resolution);
        // Moving obstacle: voxels it occupied when last present, and the misses each
        // received afterwards (once the box is gone every drop in log-odds comes from misses).
        let last_present = scene.mover.as_ref().and_then(|m| m.waypoints.last()).map(|w| w.0);
        let mut vacated: HashMap<VoxelIndex, (f32, usize)> = HashMap::new();
        let t = Instant::now();
        let run = run_scene::<f32>(&scene, &opts, |i, _, fw| {
            let tick = scene.trajectory[i].tick;
            let Some(last) = last_present else { return };
            if tick == last {
                let b = scene.mover.as_ref().unwrap().box_at(tick).unwrap();
                for v in fw.local_extent().iter() {
                    let c = [v.x as f64 * d, v.y as f64 * d, v.z as f64 * d];
                    if b.contains(c) && !scene.boxes.iter().any(|s| s.contains(c)) && fw.query(v) == OccState::Occupied {
                        vacated.insert(v, (fw.local().logodds(v).unwrap_or(0.0), 0));
                    }
                }
            } else if tick > last {
                for (v, (prev, misses)) in vacated.iter_mut() {
                    if let Ok(l) = fw.local().logodds(*v) {
                        // Several rays can cross a voxel in one scan.
                        *misses += ((*prev - l) / fw.params().l_miss.abs()).round() as usize;
                        *prev = l;
                    }
                }
            }
        })?;
        let cmp = run.compare();
        let reentered = run.tracker.reentered_count();
        let stray = cmp.mismatches.iter().filter(|m| !run.tracker.was_reentered(m.voxel)).count();
        let mut failures = Vec::new();
        if reentered == 0 {
            if cmp.ratio() < 1.0 {
                failures.push(format!("agreement {:.6} < 1 without re-entry", cmp.ratio()));
            }
        } else {
            if cmp.ratio() < 0.99 {
                failures.push(format!("agreement {:.6} < 0.99", cmp.ratio()));
            }
            if stray > 0 {
                failures.push(format!("{stray} mismatches outside re-entered space"));
            }
        }
        let mut extra = String::new();
        if last_present.is_some() {
            let p = run.framework.params();
            let needed = ((p.l_max - p.l_free) / p.l_miss.abs()).ceil() as usize;
            let observed: Vec<_> = vacated.iter().filter(|(_, (_, m))| *m >= needed).map(|(v, _)| *v).collect();
            let still = observed.iter().filter(|v| run.framework.query(**v) != OccState::Free).count();
            extra = format!(" vacated_voxels={} observed={} not_free={still}", vacated.len(), observed.len());
            if observed.is_empty() {
                failures.push(format!("no vacated voxel received {needed} misses"));
            } else if still > 0 {
                failures.push(format!("{still} vacated voxels not free after {needed} misses"));
            }
        }
        if let Some(dir) = mismatch_dir {
            let path = dir.join(format!("{name}_mismatches.csv"));
            cmp.write_mismatch_csv(create(&path)?)?;
        }
        let pass = failures.is_empty();
        all &= pass;
        println!(
            "{name} {} agreement={:.6} compared={} mismatches={} reentered={reentered}{extra} time={:.2?}{}",
            if pass { "PASS" } else { "FAIL" },
            cmp.ratio(),
            cmp.compared,
            cmp.mismatches.len(),
            t.elapsed(),
            if pass { String::new() } else { format!(" ({})", failures.join("; ")) }
        );
    }
    println!("overall {}", if all { "PASS" } else { "FAIL" });
    Ok(all)
}

#[derive(Debug, Deserialize)]
struct PointRow {
    x: f64,
    y: f64,
    z: f64,
}

fn load_map(path: &Path) -> Result<MapExport> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_csv(BufReader::new(f)).with_context(|| format!("reading map {}", path.display()))
}

pub fn query(map: &Path, points: Option<&Path>, random: Option<usize>, seed: u64, out: Option<&Path>) -> Result<()> {
    let m = load_map(map)?;
    let pts: Vec<[f64; 3]> = match (points, random) {
        (Some(p), _) => {
            let mut rdr = csv::Reader::from_path(p).with_context(|| format!("opening {}", p.display()))?;
            let mut v = Vec::new();
            for (i, row) in rdr.deserialize::<PointRow>().enumerate() {
                let r = row.with_context(|| format!("{}: row {}", p.display(), i + 2))?;
                v.push([r.x, r.y, r.z]);
            }
            v
        }
        (None, Some(n)) => {
            let world: Vec<VoxelIndex> = m.grid.iter().map(|(v, _)| m.axis.to_world(v)).collect();
            let lo = world.iter().fold([i32::MAX; 3], |a, v| [a[0].min(v.x), a[1].min(v.y), a[2].min(v.z)]);
            let hi = world.iter().fold([i32::MIN; 3], |a, v| [a[0].max(v.x), a[1].max(v.y), a[2].max(v.z)]);
            let (lo, hi) = if world.is_empty() { ([0; 3], [0; 3]) } else { (lo, hi) };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| std::array::from_fn(|i| rng.gen_range((lo[i] - 2) as f64..=(hi[i] + 2) as f64) * m.resolution))
                .collect()
        }
        (None, None) => bail!("give --points or --random"),
    };
    let mut voxels = Vec::with_capacity(pts.len());
    for p in &pts {
        let v = world_to_voxel(WorldPoint::from_f64(p[0], p[1], p[2]), m.resolution)
            .with_context(|| format!("query point {p:?}"))?;
        voxels.push(m.axis.to_internal(v));
    }
    let mut stats = QueryStats::default();
    let t = Instant::now();
    let states: Vec<OccState> =
        voxels.iter().map(|&v| m.grid.determine_occupancy_with_stats(v, SearchDir::Positive, &mut stats)).collect();
    let elapsed = t.elapsed();
    if let Some(path) = out {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["x", "y", "z", "state"])?;
        for (p, s) in pts.iter().zip(&states) {
            w.write_record([p[0].to_string(), p[1].to_string(), p[2].to_string(), s.to_string()])?;
        }
        w.flush()?;
    }
    let n = states.len();
    let latency = if n == 0 { 0.0 } else { elapsed.as_nanos() as f64 / n as f64 };
    let count = |s: OccState| states.iter().filter(|x| **x == s).count();
    println!("queries={n}");
    println!("free={} occupied={} unknown={}", count(OccState::Free), count(OccState::Occupied), count(OccState::Unknown));
    println!("mean_latency_ns={latency:.1}");
    println!("mean_boundary_voxels_per_query={:.3}", stats.mean_voxels_per_query());
    println!("mean_comparisons={:.3}", stats.mean_comparisons());
    Ok(())
}

pub fn export(map: &Path, ply: Option<&Path>, frontier: Option<&Path>) -> Result<()> {
    if ply.is_none() && frontier.is_none() {
        bail!("nothing to do: give --ply and/or --frontier");
    }
    let m = load_map(map)?;
    if let Some(p) = ply {
        let mut w = create(p)?;
        write_ply(&m.grid, m.axis, m.resolution, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = frontier {
        let mut w = create(p)?;
        write_frontier_csv(&m.grid, m.axis, m.resolution, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path, encoding: Encoding, frame: Frame) -> Result<()> {
    let Some(scene) = load_scene(&cfg.source)? else {
        bail!("simulate needs a scene or scene file");
    };
    let records: Vec<ReplayRecord> = scene
        .scans()
        .map(|(p, points)| {
            let points = match frame {
                Frame::World => points,
                Frame::Sensor => points.iter().map(|q| std::array::from_fn(|i| q[i] - p.position[i])).collect(),
            };
            ReplayRecord { tick: p.tick, pose: p.position, points }
        })
        .collect();
    write_replay(out, frame, encoding, &records)?;
    println!("wrote {} scans to {}", records.len(), out.display());
    Ok(())
}
