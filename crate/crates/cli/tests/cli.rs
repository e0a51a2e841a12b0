use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn boundmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boundmap")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = boundmap(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn read(path: &str) -> String {
    fs::read_to_string(path).unwrap()
}

/// Metrics rows with the timing columns blanked.
fn metrics_without_timing(path: &str) -> Vec<String> {
    read(path)
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[4..8].fill("_");
            f.join(",")
        })
        .collect()
}

const METRICS_HEADER: &str =
    "scan,tick,slid,rays,raycast_us,boundary_us,local_us,total_us,boundary_voxels,columns,estimated_bytes";

#[test]
fn output_headers_are_stable() {
    let dir = TempDir::new().unwrap();
    let (metrics, map, frontier, ply) = (p(&dir, "m.csv"), p(&dir, "map.csv"), p(&dir, "f.csv"), p(&dir, "m.ply"));
    let summary = ok(&[
        "replay", "--scene", "dynamic", "--metrics", &metrics, "--map", &map, "--frontier", &frontier, "--ply", &ply,
    ]);
    assert!(summary.starts_with("scans=260 "), "{summary}");

    let m = read(&metrics);
    let mut lines = m.lines();
    assert_eq!(lines.next(), Some(METRICS_HEADER));
    assert_eq!(lines.count(), 260);

    let map_text = read(&map);
    let head: Vec<&str> = map_text.lines().take(3).collect();
    assert_eq!(head, ["# boundmap boundary map v1", "# axis=z resolution=0.2", "x,y,z,type"]);
    assert!(map_text.lines().skip(3).all(|l| {
        let f: Vec<&str> = l.split(',').collect();
        f.len() == 4
            && f[..3].iter().all(|x| x.parse::<i32>().is_ok())
            && ["interior", "exterior_unknown", "exterior_occupied"].contains(&f[3])
    }));

    let f = read(&frontier);
    assert_eq!(f.lines().nth(2), Some("x,y,z,type"));
    assert!(f.lines().skip(3).all(|l| l.ends_with(",exterior_unknown")));
    assert!(f.lines().count() > 3);

    let ply_text = read(&ply);
    assert!(ply_text.starts_with("ply\nformat ascii 1.0\n"));
    let vertices = map_text.lines().count() - 3;
    assert!(ply_text.contains(&format!("element vertex {vertices}\n")));
}

#[test]
fn replay_query_export_round_trip() {
    let dir = TempDir::new().unwrap();
    let scene_map = p(&dir, "scene.csv");
    ok(&["replay", "--scene", "corridor", "--map", &scene_map]);

    // The same scans through a replay directory in each encoding and frame.
    for (encoding, frame) in [("text", "world"), ("binary", "sensor")] {
        let rdir = p(&dir, &format!("replay_{encoding}"));
        ok(&["simulate", "--scene", "corridor", "--out", &rdir, "--encoding", encoding, "--frame", frame]);
        let map = p(&dir, &format!("{encoding}.csv"));
        ok(&[
            "replay", "--replay", &rdir, "--resolution", "0.2", "--local-size", "8,8,4", "--range", "3", "--map", &map,
        ]);
        assert_eq!(read(&map), read(&scene_map), "{encoding}/{frame}");
    }

    // Exported occupied boundary voxels read back as occupied.
    let text = read(&scene_map);
    let occupied: Vec<[f64; 3]> = text
        .lines()
        .skip(3)
        .filter(|l| l.ends_with("exterior_occupied"))
        .take(50)
        .map(|l| {
            let f: Vec<f64> = l.split(',').take(3).map(|x| x.parse::<f64>().unwrap() * 0.2).collect();
            [f[0], f[1], f[2]]
        })
        .collect();
    assert_eq!(occupied.len(), 50);
    let points = p(&dir, "points.csv");
    let mut body = String::from("x,y,z\n");
    for q in &occupied {
        body.push_str(&format!("{},{},{}\n", q[0], q[1], q[2]));
    }
    fs::write(&points, body).unwrap();
    let out = p(&dir, "states.csv");
    let stats = ok(&["query", "--map", &scene_map, "--points", &points, "--out", &out]);
    assert!(stats.contains("queries=50\n"), "{stats}");
    assert!(stats.contains("occupied=50 "), "{stats}");
    let states = read(&out);
    assert_eq!(states.lines().next(), Some("x,y,z,state"));
    assert!(states.lines().skip(1).all(|l| l.ends_with(",occupied")));

    let random = ok(&["query", "--map", &scene_map, "--random", "200", "--seed", "3"]);
    assert!(random.contains("queries=200\n"));
    assert_eq!(random.lines().nth(1), ok(&["query", "--map", &scene_map, "--random", "200", "--seed", "3"]).lines().nth(1));

    let (ply_a, ply_b) = (p(&dir, "a.ply"), p(&dir, "b.ply"));
    let (fr_a, fr_b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    ok(&["replay", "--scene", "corridor", "--ply", &ply_a, "--frontier", &fr_a]);
    ok(&["export", "--map", &scene_map, "--ply", &ply_b, "--frontier", &fr_b]);
    assert_eq!(read(&ply_a), read(&ply_b));
    assert_eq!(read(&fr_a), read(&fr_b));
}

#[test]
fn zero_scan_replay_writes_empty_outputs() {
    let dir = TempDir::new().unwrap();
    let rdir = dir.path().join("empty");
    fs::create_dir(&rdir).unwrap();
    fs::write(rdir.join("header.txt"), "boundmap replay v1\nframe world\nscans 0\nencoding text\n").unwrap();
    let (metrics, map) = (p(&dir, "m.csv"), p(&dir, "map.csv"));
    let summary = ok(&["replay", "--replay", rdir.to_str().unwrap(), "--metrics", &metrics, "--map", &map]);
    assert!(summary.starts_with("scans=0 boundary_voxels=0 "), "{summary}");
    assert_eq!(read(&metrics), format!("{METRICS_HEADER}\n"));
    assert_eq!(read(&map).lines().count(), 3);
    let stats = ok(&["query", "--map", &map, "--random", "10"]);
    assert!(stats.contains("unknown=10"), "{stats}");
}

#[test]
fn verify_corridor_passes() {
    let out = boundmap(&["verify", "--scene", "corridor"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("corridor PASS agreement=1.000000"), "{stdout}");
    assert!(stdout.trim_end().ends_with("overall PASS"));
}

#[test]
fn verify_writes_mismatch_files() {
    let dir = TempDir::new().unwrap();
    let mdir = p(&dir, "mm");
    ok(&["verify", "--scene", "dynamic", "--mismatches", &mdir]);
    assert_eq!(read(&format!("{mdir}/dynamic_mismatches.csv")), "x,y,z,oracle,framework\n");
}

fn assert_error(args: &[&str], needle: &str) {
    let out = boundmap(args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(2), "{args:?}: {stderr}");
    assert!(stderr.contains(needle), "{args:?}: expected {needle:?} in {stderr}");
}

#[test]
fn malformed_inputs_are_reported() {
    let dir = TempDir::new().unwrap();
    let write = |name: &str, body: &str| {
        let path = p(&dir, name);
        fs::write(&path, body).unwrap();
        path
    };

    let cfg = write("bad.toml", "scene = \"corridor\"\nresolutoin = 0.1\n");
    assert_error(&["replay", "--config", &cfg], "resolutoin");

    let scene = write("bad.scene", "name x\nextent 0 0 0 4 4 4\nbox 0 0 0 1 1\n");
    assert_error(&["replay", "--scene-file", &scene], "line 3");

    let map = write("bad.csv", "x,y,z,type\n1,2,3,sideways\n");
    assert_error(&["query", "--map", &map, "--random", "1"], "bad.csv");

    let points = write("pts.csv", "x,y,z\n1,2\n");
    let good_map = p(&dir, "map.csv");
    ok(&["replay", "--scene", "dynamic", "--map", &good_map]);
    assert_error(&["query", "--map", &good_map, "--points", &points], "pts.csv");

    assert_error(&["replay", "--scene", "nowhere"], "nowhere");
    assert_error(&["replay", "--replay", &p(&dir, "missing")], "missing");
    assert_error(&["replay", "--scene", "corridor", "--p-hit", "0.3"], "");
    assert_error(&["replay", "--scene", "corridor", "--axis", "w"], "w");
}

#[test]
fn runs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let (metrics, map) = (p(&dir, &format!("m{tag}.csv")), p(&dir, &format!("map{tag}.csv")));
        ok(&["replay", "--scene", "loop", "--metrics", &metrics, "--map", &map]);
        (metrics_without_timing(&metrics), read(&map))
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a.0[0], METRICS_HEADER.replace("raycast_us,boundary_us,local_us,total_us", "_,_,_,_"));
    assert_eq!(a, b);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "run.toml");
    fs::write(&cfg, "scene = \"dynamic\"\nresolution = 0.25\naxis = \"x\"\n\n[probabilities]\nhit = 0.75\n").unwrap();
    let map = p(&dir, "map.csv");
    ok(&["replay", "--config", &cfg, "--resolution", "0.4", "--map", &map]);
    assert_eq!(read(&map).lines().nth(1), Some("# axis=x resolution=0.4"));
    assert!(Path::new(&map).exists());
}
