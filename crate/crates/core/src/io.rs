//! Text formats.
//!
//! **Pose file**: one pose per line, 12 whitespace-separated decimals holding
//! the row-major 3x4 matrix `[R | t]` of frame `i` in the frame-0 coordinate
//! system. Blank lines are ignored.
//!
//! **Prediction file**: one sample per line,
//! `id r11 r12 r13 t1 r21 r22 r23 t2 r31 r32 r33 t3 p11 p12 p13 p21 p22 p23 p31 p32 p33`,
//! i.e. an id token (no whitespace), the relative pose of frame `i` with
//! respect to frame `i - 1`, and the row-major matrix Fisher parameters.
//!
//! **Manifest**: JSON lines. The first line is `{"header": {...}}`, every
//! further line is one entry object.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, so emit -> parse -> emit is byte-stable.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::curation::{DatasetManifest, ManifestEntry, ManifestHeader, SampleRecord};
use crate::error::{Error, Result};
use crate::fisher::FisherParams;
use crate::pose::{Pose, Trajectory, ROTATION_TOLERANCE};

/// Field count of a pose line.
pub const POSE_FIELDS: usize = 12;
/// Numeric field count of a prediction line (after the id).
pub const PREDICTION_FIELDS: usize = 21;

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_fields<const N: usize>(tokens: &[&str], line: usize, first_field: usize) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    for (k, (slot, tok)) in out.iter_mut().zip(tokens).enumerate() {
        let field = first_field + k;
        let v: f64 = tok.parse().map_err(|_| parse_error(line, format!("field {field}: not a number: {tok:?}")))?;
        if !v.is_finite() {
            return Err(parse_error(line, format!("field {field}: non-finite value {tok:?}")));
        }
        *slot = v;
    }
    Ok(out)
}

fn pose_from_fields(v: &[f64; 12], line: usize) -> Result<Pose> {
    Pose::from_row_major(v, ROTATION_TOLERANCE).map_err(|e| parse_error(line, e.to_string()))
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(Error::Io(e))),
    })
}

/// Reads absolute poses. Rotation blocks off by up to the loose tolerance are
/// projected onto SO(3); larger deviations are rejected with the line number.
pub fn parse_kitti_poses(reader: impl BufRead) -> Result<Trajectory> {
    let mut poses = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != POSE_FIELDS {
            return Err(parse_error(line, format!("expected {POSE_FIELDS} fields, found {}", tokens.len())));
        }
        let v = parse_fields::<12>(&tokens, line, 1)?;
        poses.push(pose_from_fields(&v, line)?);
    }
    if poses.is_empty() {
        return Err(parse_error(0, "pose file contains no poses"));
    }
    Ok(Trajectory::from_poses(poses))
}

fn write_numbers(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            w.write_all(b" ")?;
        }
        w.write_all(format_number(*v).as_bytes())?;
    }
    Ok(())
}

pub fn emit_kitti_poses(traj: &Trajectory, mut w: impl Write) -> Result<()> {
    for p in traj.poses() {
        write_numbers(&mut w, &p.to_row_major())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn kitti_poses_to_string(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    emit_kitti_poses(traj, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Reads prediction records (entropy not yet computed). Ids must be unique.
pub fn parse_predictions(reader: impl BufRead) -> Result<Vec<SampleRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != PREDICTION_FIELDS + 1 {
            return Err(parse_error(
                line,
                format!(
                    "expected an id and {PREDICTION_FIELDS} numeric fields, found {} fields in total",
                    tokens.len()
                ),
            ));
        }
        let id = tokens[0];
        if !seen.insert(id.to_string()) {
            return Err(parse_error(line, format!("duplicate id {id:?}")));
        }
        let pose = pose_from_fields(&parse_fields::<12>(&tokens[1..13], line, 2)?, line)?;
        let psi = FisherParams::from_row_major(&parse_fields::<9>(&tokens[13..], line, 14)?)
            .map_err(|e| parse_error(line, e.to_string()))?;
        records.push(SampleRecord::new(id, pose, psi));
    }
    Ok(records)
}

pub fn emit_predictions(records: &[SampleRecord], mut w: impl Write) -> Result<()> {
    for r in records {
        if r.id.is_empty() || r.id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("id {:?} is empty or contains whitespace", r.id)));
        }
        w.write_all(r.id.as_bytes())?;
        w.write_all(b" ")?;
        write_numbers(&mut w, &r.pose.to_row_major())?;
        w.write_all(b" ")?;
        write_numbers(&mut w, &r.psi.to_row_major())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn predictions_to_string(records: &[SampleRecord]) -> Result<String> {
    let mut buf = Vec::new();
    emit_predictions(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: ManifestHeader,
}

pub fn write_manifest(m: &DatasetManifest, mut w: impl Write) -> Result<()> {
    m.validate()?;
    let json = |e: serde_json::Error| Error::Manifest(e.to_string());
    serde_json::to_writer(&mut w, &HeaderLine { header: m.header.clone() }).map_err(json)?;
    w.write_all(b"\n")?;
    for e in &m.entries {
        serde_json::to_writer(&mut w, e).map_err(json)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn manifest_to_string(m: &DatasetManifest) -> Result<String> {
    let mut buf = Vec::new();
    write_manifest(m, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn read_manifest(reader: impl BufRead) -> Result<DatasetManifest> {
    let mut lines = content_lines(reader);
    let (line, first) = lines.next().ok_or_else(|| parse_error(0, "manifest is empty"))??;
    let header = serde_json::from_str::<HeaderLine>(&first)
        .map_err(|e| parse_error(line, format!("bad manifest header: {e}")))?
        .header;
    let mut entries = Vec::new();
    for item in lines {
        let (line, text) = item?;
        let e: ManifestEntry =
            serde_json::from_str(&text).map_err(|e| parse_error(line, format!("bad manifest entry: {e}")))?;
        if let Some(p) = &e.pose {
            pose_from_fields(p, line)?;
        }
        entries.push(e);
    }
    let m = DatasetManifest { header, entries };
    m.validate()?;
    Ok(m)
}

/// Whether the first non-blank line looks like a manifest header.
pub fn looks_like_manifest(text: &str) -> bool {
    text.lines().map(str::trim).find(|l| !l.is_empty()).is_some_and(|l| l.starts_with('{'))
}
