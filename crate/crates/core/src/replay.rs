//! Scan replay directories.
//!
//! A replay is a directory holding `header.txt` and one file per scan.
//! The header is four `key value` lines after a magic line:
//!
//! ```text
//! boundmap replay v1
//! frame world
//! scans 200
//! encoding text
//! ```
//!
//! `frame` is `world` (points are world coordinates) or `sensor` (points are
//! offsets from the pose). Text scans are `scan_NNNNNN.txt`: a line
//! `tick px py pz count` followed by `count` lines `x y z`. Binary scans are
//! `scan_NNNNNN.bin`: little-endian `u64 tick`, `3 x f64` pose, `u64 count`,
//! then `count x 3 x f64`.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

const MAGIC: &str = "boundmap replay v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    World,
    Sensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Text,
    Binary,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::World => "world",
            Frame::Sensor => "sensor",
        })
    }
}

impl FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "world" => Ok(Frame::World),
            "sensor" => Ok(Frame::Sensor),
            _ => Err(Error::InvalidInput(format!("unknown frame '{s}'"))),
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Text => "text",
            Encoding::Binary => "binary",
        })
    }
}

impl FromStr for Encoding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Encoding::Text),
            "binary" => Ok(Encoding::Binary),
            _ => Err(Error::InvalidInput(format!("unknown encoding '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayHeader {
    pub frame: Frame,
    pub scans: usize,
    pub encoding: Encoding,
}

/// One scan; `points` are in the frame named by the header.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRecord {
    pub tick: u64,
    pub pose: [f64; 3],
    pub points: Vec<[f64; 3]>,
}

impl ReplayRecord {
    pub fn world_points(&self, frame: Frame) -> Vec<[f64; 3]> {
        match frame {
            Frame::World => self.points.clone(),
            Frame::Sensor => self.points.iter().map(|p| std::array::from_fn(|i| p[i] + self.pose[i])).collect(),
        }
    }
}

fn scan_path(dir: &Path, i: usize, enc: Encoding) -> PathBuf {
    dir.join(match enc {
        Encoding::Text => format!("scan_{i:06}.txt"),
        Encoding::Binary => format!("scan_{i:06}.bin"),
    })
}

/// Writes a replay directory, creating it if needed.
pub fn write_replay(dir: &Path, frame: Frame, encoding: Encoding, records: &[ReplayRecord]) -> Result<()> {
    if records.windows(2).any(|w| w[0].tick >= w[1].tick) {
        return Err(Error::InvalidInput("replay ticks must be strictly increasing".into()));
    }
    fs::create_dir_all(dir)?;
    let mut h = BufWriter::new(fs::File::create(dir.join("header.txt"))?);
    writeln!(h, "{MAGIC}\nframe {frame}\nscans {}\nencoding {encoding}", records.len())?;
    h.flush()?;
    for (i, r) in records.iter().enumerate() {
        let mut out = BufWriter::new(fs::File::create(scan_path(dir, i, encoding))?);
        match encoding {
            Encoding::Text => {
                writeln!(out, "{} {} {} {} {}", r.tick, r.pose[0], r.pose[1], r.pose[2], r.points.len())?;
                for p in &r.points {
                    writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
                }
            }
            Encoding::Binary => {
                out.write_all(&r.tick.to_le_bytes())?;
                for c in r.pose {
                    out.write_all(&c.to_le_bytes())?;
                }
                out.write_all(&(r.points.len() as u64).to_le_bytes())?;
                for p in &r.points {
                    for c in p {
                        out.write_all(&c.to_le_bytes())?;
                    }
                }
            }
        }
        out.flush()?;
    }
    Ok(())
}

/// An opened replay directory; scans are read on demand.
#[derive(Debug, Clone)]
pub struct Replay {
    dir: PathBuf,
    pub header: ReplayHeader,
}

impl Replay {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join("header.txt");
        let text = fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, MAGIC)) => {}
            _ => return Err(Error::Parse { line: 1, message: format!("expected '{MAGIC}'") }),
        }
        let (mut frame, mut scans, mut encoding) = (None, None, Encoding::Text);
        for (ln, line) in lines {
            let perr = |m: String| Error::Parse { line: ln, message: m };
            let (k, v) = line.split_once(' ').ok_or_else(|| perr(format!("expected 'key value', got '{line}'")))?;
            let v = v.trim();
            match k {
                "frame" => frame = Some(v.parse().map_err(|e: Error| perr(e.to_string()))?),
                "scans" => scans = Some(v.parse().map_err(|_| perr(format!("bad scan count '{v}'")))?),
                "encoding" => encoding = v.parse().map_err(|e: Error| perr(e.to_string()))?,
                _ => return Err(perr(format!("unknown header key '{k}'"))),
            }
        }
        let frame = frame.ok_or_else(|| Error::Parse { line: 0, message: "header lacks 'frame'".into() })?;
        let scans = scans.ok_or_else(|| Error::Parse { line: 0, message: "header lacks 'scans'".into() })?;
        Ok(Self { dir: dir.to_path_buf(), header: ReplayHeader { frame, scans, encoding } })
    }

    pub fn len(&self) -> usize {
        self.header.scans
    }

    pub fn is_empty(&self) -> bool {
        self.header.scans == 0
    }

    pub fn record(&self, i: usize) -> Result<ReplayRecord> {
        let path = scan_path(&self.dir, i, self.header.encoding);
        let file = fs::File::open(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let ctx = |e: Error| match e {
            Error::Parse { line, message } => Error::Io(format!("{}:{line}: {message}", path.display())),
            other => Error::Io(format!("{}: {other}", path.display())),
        };
        match self.header.encoding {
            Encoding::Text => read_text(BufReader::new(file)).map_err(ctx),
            Encoding::Binary => read_binary(BufReader::new(file)).map_err(ctx),
        }
    }

    /// All records in order, checking that ticks increase.
    pub fn records(&self) -> impl Iterator<Item = Result<ReplayRecord>> + '_ {
        let mut last: Option<u64> = None;
        (0..self.len()).map(move |i| {
            let r = self.record(i)?;
            if last.is_some_and(|t| r.tick <= t) {
                return Err(Error::InvalidInput(format!("scan {i}: tick {} does not increase", r.tick)));
            }
            last = Some(r.tick);
            Ok(r)
        })
    }
}

fn read_text<R: BufRead>(input: R) -> Result<ReplayRecord> {
    let mut lines = input.lines();
    let head = lines.next().ok_or(Error::Parse { line: 1, message: "empty scan file".into() })??;
    let f: Vec<&str> = head.split_whitespace().collect();
    if f.len() != 5 {
        return Err(Error::Parse { line: 1, message: "expected 'tick px py pz count'".into() });
    }
    let num = |s: &str, line| s.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("'{s}' is not a number") });
    let tick = f[0].parse().map_err(|_| Error::Parse { line: 1, message: format!("bad tick '{}'", f[0]) })?;
    let pose = [num(f[1], 1)?, num(f[2], 1)?, num(f[3], 1)?];
    let count: usize = f[4].parse().map_err(|_| Error::Parse { line: 1, message: format!("bad count '{}'", f[4]) })?;
    let mut points = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let ln = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split_whitespace().collect();
        if c.len() != 3 {
            return Err(Error::Parse { line: ln, message: "expected 'x y z'".into() });
        }
        points.push([num(c[0], ln)?, num(c[1], ln)?, num(c[2], ln)?]);
    }
    if points.len() != count {
        return Err(Error::Parse { line: 1, message: format!("header says {count} points, found {}", points.len()) });
    }
    Ok(ReplayRecord { tick, pose, points })
}

fn read_binary<R: Read>(mut input: R) -> Result<ReplayRecord> {
    let mut buf = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8]> {
        input.read_exact(&mut buf).map_err(|_| Error::Parse { line: 0, message: "truncated binary scan".into() })?;
        Ok(buf)
    };
    let tick = u64::from_le_bytes(next(&mut input)?);
    let mut pose = [0.0; 3];
    for c in &mut pose {
        *c = f64::from_le_bytes(next(&mut input)?);
    }
    let count = u64::from_le_bytes(next(&mut input)?) as usize;
    let mut points = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        let mut p = [0.0; 3];
        for c in &mut p {
            *c = f64::from_le_bytes(next(&mut input)?);
        }
        points.push(p);
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Parse { line: 0, message: format!("{} trailing bytes", rest.len()) });
    }
    Ok(ReplayRecord { tick, pose, points })
}
