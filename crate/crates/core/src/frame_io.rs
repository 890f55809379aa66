//! Scan-frame files.
//!
//! PLY, binary little-endian, one vertex per ray in this exact layout:
//!
//! ```text
//! ply
//! format binary_little_endian 1.0
//! comment env_id <u32>
//! comment t <f64>
//! comment frame_index <u64>
//! comment mount <qw> <qx> <qy> <qz> <tx> <ty> <tz>
//! element vertex <N>
//! property double x
//! property double y
//! property double z
//! property double range
//! property uchar hit
//! end_header
//! ```
//!
//! `x y z` is the return in the robot base frame, `hit` is 0 or 1. The
//! comments are optional on read (defaults: env 0, t 0, identity mount).
//!
//! CSV has the header `x,y,z,range,hit` and the same columns, floats printed
//! in shortest round-trip form.
//!
//! Sensor-frame directions are not stored; readers recover them as
//! `mount⁻¹(p) / range`, falling back to +x for zero-range points.

use std::io::{BufRead, Read, Write};

use thiserror::Error;

use crate::geometry::Vec3;
use crate::sensor::ScanFrame;
use crate::transform::RigidTransform;

#[derive(Debug, Error)]
pub enum FrameIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed frame file: {0}")]
    Format(String),
}

const PROPERTIES: [&str; 5] = [
    "property double x",
    "property double y",
    "property double z",
    "property double range",
    "property uchar hit",
];

pub fn write_ply(frame: &ScanFrame, mount: &RigidTransform, mut w: impl Write) -> Result<(), FrameIoError> {
    let q = mount.quaternion_wxyz();
    let t = mount.translation();
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    writeln!(w, "comment env_id {}", frame.env_id)?;
    writeln!(w, "comment t {}", frame.t)?;
    writeln!(w, "comment frame_index {}", frame.frame_index)?;
    writeln!(w, "comment mount {} {} {} {} {} {} {}", q[0], q[1], q[2], q[3], t.x, t.y, t.z)?;
    writeln!(w, "element vertex {}", frame.len())?;
    for p in PROPERTIES {
        writeln!(w, "{p}")?;
    }
    writeln!(w, "end_header")?;
    let mut buf = Vec::with_capacity(frame.len() * 33);
    for i in 0..frame.len() {
        let p = frame.points_base[i];
        for v in [p.x, p.y, p.z, frame.ranges[i]] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.push(frame.hit_flags[i] as u8);
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_ply(mut r: impl BufRead) -> Result<(ScanFrame, RigidTransform), FrameIoError> {
    let bad = |m: String| FrameIoError::Format(m);
    let mut line = String::new();
    let mut next_line = |r: &mut dyn BufRead| -> Result<String, FrameIoError> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(FrameIoError::Format("unexpected end of header".into()));
        }
        Ok(line.trim_end().to_owned())
    };
    if next_line(&mut r)? != "ply" {
        return Err(bad("missing ply magic".into()));
    }
    if next_line(&mut r)? != "format binary_little_endian 1.0" {
        return Err(bad("only binary_little_endian 1.0 is supported".into()));
    }
    let (mut env_id, mut t, mut frame_index) = (0u32, 0.0f64, 0u64);
    let mut mount = RigidTransform::identity();
    let mut count: Option<usize> = None;
    let mut props = Vec::new();
    loop {
        let l = next_line(&mut r)?;
        let mut f = l.split_whitespace();
        match f.next() {
            Some("comment") => {
                let key = f.next().unwrap_or_default();
                let vals: Vec<&str> = f.collect();
                let parse_err = |_| bad(format!("bad comment value in {l:?}"));
                match (key, vals.as_slice()) {
                    ("env_id", [v]) => env_id = v.parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
                    ("t", [v]) => t = v.parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?,
                    ("frame_index", [v]) => {
                        frame_index = v.parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?
                    }
                    ("mount", v) if v.len() == 7 => {
                        let n: Vec<f64> = v
                            .iter()
                            .map(|s| s.parse::<f64>())
                            .collect::<Result<_, _>>()
                            .map_err(|e| parse_err(e.to_string()))?;
                        mount = RigidTransform::new([n[0], n[1], n[2], n[3]], Vec3::new(n[4], n[5], n[6]))
                            .map_err(|e| bad(e.to_string()))?;
                    }
                    _ => {}
                }
            }
            Some("element") => {
                if f.next() != Some("vertex") {
                    return Err(bad(format!("unexpected element line {l:?}")));
                }
                let n = f.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad vertex count".into()))?;
                count = Some(n);
            }
            Some("property") => props.push(l.clone()),
            Some("end_header") => break,
            _ => return Err(bad(format!("unexpected header line {l:?}"))),
        }
    }
    if props != PROPERTIES {
        return Err(bad(format!("expected properties {PROPERTIES:?}, found {props:?}")));
    }
    let n = count.ok_or_else(|| bad("missing element vertex".into()))?;
    let mut body = vec![0u8; n * 33];
    r.read_exact(&mut body)?;
    let mut points = Vec::with_capacity(n);
    let mut ranges = Vec::with_capacity(n);
    let mut hits = Vec::with_capacity(n);
    for rec in body.chunks_exact(33) {
        let f = |k: usize| f64::from_le_bytes(rec[8 * k..8 * k + 8].try_into().expect("8 bytes"));
        points.push(Vec3::new(f(0), f(1), f(2)));
        ranges.push(f(3));
        hits.push(match rec[32] {
            0 => false,
            1 => true,
            v => return Err(bad(format!("hit flag must be 0 or 1, got {v}"))),
        });
    }
    let mut frame = assemble(env_id, t, points, ranges, hits, &mount);
    frame.frame_index = frame_index;
    Ok((frame, mount))
}

pub fn write_csv(frame: &ScanFrame, w: impl Write) -> Result<(), FrameIoError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "z", "range", "hit"])?;
    for i in 0..frame.len() {
        let p = frame.points_base[i];
        out.write_record([
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
            frame.ranges[i].to_string(),
            (frame.hit_flags[i] as u8).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a CSV frame. The file carries no metadata, so env, time and mount
/// come from the caller.
pub fn read_csv(r: impl Read, env_id: u32, t: f64, mount: &RigidTransform) -> Result<ScanFrame, FrameIoError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "y", "z", "range", "hit"] {
        return Err(FrameIoError::Format(format!("expected header x,y,z,range,hit, got {header:?}")));
    }
    let mut points = Vec::new();
    let mut ranges = Vec::new();
    let mut hits = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64, FrameIoError> {
            rec[k]
                .trim()
                .parse()
                .map_err(|e| FrameIoError::Format(format!("column {k}: {e}")))
        };
        points.push(Vec3::new(num(0)?, num(1)?, num(2)?));
        ranges.push(num(3)?);
        hits.push(match rec[4].trim() {
            "0" => false,
            "1" => true,
            v => return Err(FrameIoError::Format(format!("hit must be 0 or 1, got {v:?}"))),
        });
    }
    Ok(assemble(env_id, t, points, ranges, hits, mount))
}

fn assemble(
    env_id: u32,
    t: f64,
    points_base: Vec<Vec3>,
    ranges: Vec<f64>,
    hit_flags: Vec<bool>,
    mount: &RigidTransform,
) -> ScanFrame {
    let inv = mount.inverse();
    let directions = points_base
        .iter()
        .map(|p| {
            let local = inv.apply_point(p);
            let n = local.norm();
            if n > 0.0 {
                local / n
            } else {
                Vec3::x()
            }
        })
        .collect();
    ScanFrame {
        env_id,
        t,
        frame_index: 0,
        directions,
        ranges,
        hit_flags,
        points_base,
    }
}
