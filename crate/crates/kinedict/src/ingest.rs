//! Dataset ingestion and export.
//!
//! Three rotation formats and one plain-vector format:
//!
//! * `csv-axisangle` — each row is `frame_id` followed by 3 reals per joint.
//!   The 3-vector is a *rotation vector* (axis times angle in radians), the
//!   encoding most MoCap exports use.
//! * `csv-quat` — each row is 4 reals per joint, `w,x,y,z`. No frame id.
//! * `jsonl` — one JSON object per line: `{"joints": [[w,x,y,z], ...]}`.
//! * `csv-vec` — each row is one d-dimensional real vector (Euclidean-mode
//!   dictionaries; carries no rotations).
//!
//! Every rotation is canonicalized on ingest (unit norm, `w ≥ 0`), so a
//! dataset compares bitwise after `ingest → export → ingest` for the exact
//! decimal formats (`csv-quat`, `jsonl`). Malformed content is reported with
//! 1-based line numbers.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use kinedict_core::quat::UnitQuaternion;

use crate::error::{CliError, CliResult, StageExt};

/// Input/output encodings understood by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    CsvAxisAngle,
    CsvQuat,
    Jsonl,
    CsvVec,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::CsvAxisAngle => "csv-axisangle",
            Format::CsvQuat => "csv-quat",
            Format::Jsonl => "jsonl",
            Format::CsvVec => "csv-vec",
        }
    }

    /// True for the formats that carry rotations (everything but `csv-vec`).
    pub fn is_rotation(self) -> bool {
        self != Format::CsvVec
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv-axisangle" => Ok(Format::CsvAxisAngle),
            "csv-quat" => Ok(Format::CsvQuat),
            "jsonl" => Ok(Format::Jsonl),
            "csv-vec" => Ok(Format::CsvVec),
            other => Err(format!(
                "unknown format \"{other}\" (expected csv-axisangle, csv-quat, jsonl, or csv-vec)"
            )),
        }
    }
}

/// A stream of per-frame joint rotations, canonicalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseDataset {
    pub joint_names: Vec<String>,
    /// `frames[t][j]` is joint `j`'s rotation at frame `t`.
    pub frames: Vec<Vec<UnitQuaternion>>,
    pub format: Format,
}

impl PoseDataset {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_joints(&self) -> usize {
        self.joint_names.len()
    }

    /// All rotations of one joint across frames.
    pub fn joint_column(&self, j: usize) -> CliResult<Vec<UnitQuaternion>> {
        if j >= self.n_joints() {
            return Err(CliError::Usage(format!(
                "joint index {j} out of range for a {}-joint dataset",
                self.n_joints()
            )));
        }
        Ok(self.frames.iter().map(|f| f[j]).collect())
    }
}

/// A stream of plain d-dimensional vectors (`csv-vec`).
#[derive(Debug, Clone, PartialEq)]
pub struct VecDataset {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

fn auto_names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("joint{j}")).collect()
}

fn parse_real(field: &str, line: usize, what: &str) -> CliResult<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| CliError::Data(format!("line {line}: {what} \"{}\" is not a real", field.trim())))?;
    if !v.is_finite() {
        return Err(CliError::Data(format!(
            "line {line}: {what} \"{}\" is not finite",
            field.trim()
        )));
    }
    Ok(v)
}

fn data_lines(body: &str) -> impl Iterator<Item = (usize, &str)> {
    body.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Read rotations from `path` in the given rotation `format`.
pub fn ingest(path: &Path, format: Format) -> CliResult<PoseDataset> {
    if !format.is_rotation() {
        return Err(CliError::Usage(
            "csv-vec carries plain vectors, not rotations; use a rotation format here".into(),
        ));
    }
    let body =
        fs::read_to_string(path).data_stage(&format!("reading {}", path.display()))?;
    let frames = match format {
        Format::CsvAxisAngle => parse_csv_axisangle(&body)?,
        Format::CsvQuat => parse_csv_quat(&body)?,
        Format::Jsonl => parse_jsonl(&body)?,
        Format::CsvVec => unreachable!("rejected above"),
    };
    if frames.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let n_joints = frames[0].len();
    Ok(PoseDataset {
        joint_names: auto_names(n_joints),
        frames,
        format,
    })
}

fn parse_csv_axisangle(body: &str) -> CliResult<Vec<Vec<UnitQuaternion>>> {
    let mut frames = Vec::new();
    let mut expected_joints: Option<usize> = None;
    for (line, row) in data_lines(body) {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() < 4 || (fields.len() - 1) % 3 != 0 {
            return Err(CliError::Data(format!(
                "line {line}: expected frame_id plus 3 reals per joint, got {} fields",
                fields.len()
            )));
        }
        let joints = (fields.len() - 1) / 3;
        if *expected_joints.get_or_insert(joints) != joints {
            return Err(CliError::Data(format!(
                "line {line}: {joints} joints, expected {} as in the first row",
                expected_joints.unwrap()
            )));
        }
        // The frame id must parse but is otherwise ignored; frame order is
        // file order.
        parse_real(fields[0], line, "frame id")?;
        let mut frame = Vec::with_capacity(joints);
        for j in 0..joints {
            let v = [
                parse_real(fields[1 + 3 * j], line, "rotation-vector component")?,
                parse_real(fields[2 + 3 * j], line, "rotation-vector component")?,
                parse_real(fields[3 + 3 * j], line, "rotation-vector component")?,
            ];
            let q = UnitQuaternion::from_rotation_vector(v)
                .map_err(|e| CliError::Data(format!("line {line}: joint {j}: {e}")))?;
            frame.push(q);
        }
        frames.push(frame);
    }
    Ok(frames)
}

fn parse_csv_quat(body: &str) -> CliResult<Vec<Vec<UnitQuaternion>>> {
    let mut frames = Vec::new();
    let mut expected_joints: Option<usize> = None;
    for (line, row) in data_lines(body) {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.is_empty() || fields.len() % 4 != 0 {
            return Err(CliError::Data(format!(
                "line {line}: expected 4 reals (w,x,y,z) per joint, got {} fields",
                fields.len()
            )));
        }
        let joints = fields.len() / 4;
        if *expected_joints.get_or_insert(joints) != joints {
            return Err(CliError::Data(format!(
                "line {line}: {joints} joints, expected {} as in the first row",
                expected_joints.unwrap()
            )));
        }
        let mut frame = Vec::with_capacity(joints);
        for j in 0..joints {
            let w = parse_real(fields[4 * j], line, "quaternion component")?;
            let x = parse_real(fields[4 * j + 1], line, "quaternion component")?;
            let y = parse_real(fields[4 * j + 2], line, "quaternion component")?;
            let z = parse_real(fields[4 * j + 3], line, "quaternion component")?;
            let q = UnitQuaternion::new(w, x, y, z)
                .map_err(|e| CliError::Data(format!("line {line}: joint {j}: {e}")))?;
            frame.push(q);
        }
        frames.push(frame);
    }
    Ok(frames)
}

#[derive(Deserialize)]
struct JsonlRecord {
    joints: Vec<[f64; 4]>,
}

fn parse_jsonl(body: &str) -> CliResult<Vec<Vec<UnitQuaternion>>> {
    let mut frames = Vec::new();
    let mut expected_joints: Option<usize> = None;
    for (line, row) in data_lines(body) {
        let record: JsonlRecord = serde_json::from_str(row)
            .map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
        if record.joints.is_empty() {
            return Err(CliError::Data(format!("line {line}: empty joint list")));
        }
        if *expected_joints.get_or_insert(record.joints.len()) != record.joints.len() {
            return Err(CliError::Data(format!(
                "line {line}: {} joints, expected {} as in the first row",
                record.joints.len(),
                expected_joints.unwrap()
            )));
        }
        let mut frame = Vec::with_capacity(record.joints.len());
        for (j, q) in record.joints.iter().enumerate() {
            let q = UnitQuaternion::from_array(*q)
                .map_err(|e| CliError::Data(format!("line {line}: joint {j}: {e}")))?;
            frame.push(q);
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Read plain vectors from a `csv-vec` file.
pub fn ingest_vectors(path: &Path) -> CliResult<VecDataset> {
    let body =
        fs::read_to_string(path).data_stage(&format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    let mut dim: Option<usize> = None;
    for (line, row) in data_lines(&body) {
        let fields: Vec<&str> = row.split(',').collect();
        if *dim.get_or_insert(fields.len()) != fields.len() {
            return Err(CliError::Data(format!(
                "line {line}: {} entries, expected {} as in the first row",
                fields.len(),
                dim.unwrap()
            )));
        }
        let mut v = Vec::with_capacity(fields.len());
        for field in fields {
            v.push(parse_real(field, line, "vector entry")?);
        }
        rows.push(v);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(VecDataset {
        dim: dim.unwrap(),
        rows,
    })
}

/// Shortest decimal that parses back to the same `f64` bits.
fn real(v: f64) -> String {
    format!("{v}")
}

/// Write a pose dataset in `format`.
///
/// `csv-quat` and `jsonl` are exact: components print as shortest
/// round-trip decimals and re-ingest bitwise. `csv-axisangle` re-encodes
/// through trigonometry and preserves rotations to ~1e-15 rad, not bitwise.
pub fn export(dataset: &PoseDataset, path: &Path, format: Format) -> CliResult<()> {
    if !format.is_rotation() {
        return Err(CliError::Usage(
            "csv-vec carries plain vectors, not rotations; use export_vectors".into(),
        ));
    }
    let mut out = String::new();
    for (t, frame) in dataset.frames.iter().enumerate() {
        match format {
            Format::CsvAxisAngle => {
                out.push_str(&t.to_string());
                for q in frame {
                    let aa = q.to_axis_angle();
                    for k in 0..3 {
                        out.push(',');
                        out.push_str(&real(aa.axis()[k] * aa.angle()));
                    }
                }
            }
            Format::CsvQuat => {
                for (j, q) in frame.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    let c = q.components();
                    out.push_str(&format!(
                        "{},{},{},{}",
                        real(c[0]),
                        real(c[1]),
                        real(c[2]),
                        real(c[3])
                    ));
                }
            }
            Format::Jsonl => {
                let joints: Vec<[f64; 4]> = frame.iter().map(|q| q.components()).collect();
                out.push_str(
                    &serde_json::to_string(&serde_json::json!({ "joints": joints }))
                        .expect("jsonl row serialization cannot fail"),
                );
            }
            Format::CsvVec => unreachable!("rejected above"),
        }
        out.push('\n');
    }
    fs::write(path, out).data_stage(&format!("writing {}", path.display()))
}

/// Write plain vectors as `csv-vec`.
pub fn export_vectors(rows: &[Vec<f64>], path: &Path) -> CliResult<()> {
    let mut out = String::new();
    for row in rows {
        let fields: Vec<String> = row.iter().map(|v| real(*v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).data_stage(&format!("writing {}", path.display()))
}
