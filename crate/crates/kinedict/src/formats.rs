//! On-disk JSON schemas and (de)serialization helpers.
//!
//! Every artifact the CLI writes is JSON with a fixed field order (struct
//! order), shortest-round-trip decimal floats — lossless for `f64` — and a
//! trailing newline, so identical inputs produce byte-identical files. Each
//! top-level artifact carries a [`ProvenanceBlock`] recording how it was made.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use kinedict_core::dict::{Dictionary, InnerConfig, Mode, Provenance};
use kinedict_core::kinematics::{Joint, Skeleton};
use kinedict_core::mat::Mat;
use kinedict_core::quat::UnitQuaternion;

use crate::error::{CliError, CliResult, StageExt};

/// How an artifact came to be: the exact command line, the seed it resolved,
/// and the tool version. Written into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceBlock {
    pub command: String,
    pub seed: u64,
    pub version: String,
}

impl ProvenanceBlock {
    pub fn new(command: String, seed: u64) -> Self {
        ProvenanceBlock {
            command,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Inner-solver knobs as stored in files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerConfigDto {
    pub max_steps: usize,
    pub tol: f64,
    pub step0: f64,
}

impl From<&InnerConfig> for InnerConfigDto {
    fn from(c: &InnerConfig) -> Self {
        InnerConfigDto {
            max_steps: c.max_steps,
            tol: c.tol,
            step0: c.step0,
        }
    }
}

impl InnerConfigDto {
    pub fn to_core(&self) -> InnerConfig {
        InnerConfig {
            max_steps: self.max_steps,
            tol: self.tol,
            step0: self.step0,
        }
    }
}

/// Learning provenance mirrored from the core dictionary type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnProvenanceDto {
    pub method: String,
    pub seed: u64,
    pub batch_size: usize,
    pub steps: usize,
    pub momentum: f64,
    pub inner: InnerConfigDto,
    pub notes: Vec<String>,
}

impl From<&Provenance> for LearnProvenanceDto {
    fn from(p: &Provenance) -> Self {
        LearnProvenanceDto {
            method: p.method.clone(),
            seed: p.seed,
            batch_size: p.batch_size,
            steps: p.steps,
            momentum: p.momentum,
            inner: InnerConfigDto::from(&p.inner),
            notes: p.notes.clone(),
        }
    }
}

impl LearnProvenanceDto {
    pub fn to_core(&self) -> Provenance {
        Provenance {
            method: self.method.clone(),
            seed: self.seed,
            batch_size: self.batch_size,
            steps: self.steps,
            momentum: self.momentum,
            inner: self.inner.to_core(),
            notes: self.notes.clone(),
        }
    }
}

/// A dictionary on disk: atoms stored as columns, one `Vec<f64>` per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryFile {
    /// `"quaternion"` or `"euclidean"`.
    pub mode: String,
    pub joint_label: String,
    /// Atom dimension (4 in quaternion mode).
    pub d: usize,
    pub n_atoms: usize,
    pub atoms: Vec<Vec<f64>>,
    pub learn: LearnProvenanceDto,
    /// Absent in hand-assembled files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceBlock>,
}

impl DictionaryFile {
    pub fn from_core(dict: &Dictionary, provenance: Option<ProvenanceBlock>) -> Self {
        DictionaryFile {
            mode: match dict.mode() {
                Mode::Quaternion => "quaternion".to_string(),
                Mode::Euclidean => "euclidean".to_string(),
            },
            joint_label: dict.joint_label().to_string(),
            d: dict.d(),
            n_atoms: dict.n_atoms(),
            atoms: (0..dict.n_atoms()).map(|j| dict.atom(j).to_vec()).collect(),
            learn: LearnProvenanceDto::from(dict.provenance()),
            provenance,
        }
    }

    pub fn to_core(&self) -> CliResult<Dictionary> {
        let mode = match self.mode.as_str() {
            "quaternion" => Mode::Quaternion,
            "euclidean" => Mode::Euclidean,
            other => {
                return Err(CliError::Data(format!(
                    "dictionary mode must be \"quaternion\" or \"euclidean\", got \"{other}\""
                )))
            }
        };
        if self.atoms.len() != self.n_atoms {
            return Err(CliError::Data(format!(
                "dictionary declares {} atoms but stores {}",
                self.n_atoms,
                self.atoms.len()
            )));
        }
        for (j, atom) in self.atoms.iter().enumerate() {
            if atom.len() != self.d {
                return Err(CliError::Data(format!(
                    "atom {j} has {} entries, expected d={}",
                    atom.len(),
                    self.d
                )));
            }
        }
        let atoms = Mat::from_columns(&self.atoms).data_stage("dictionary atoms")?;
        Dictionary::new(mode, self.joint_label.clone(), atoms, self.learn.to_core())
            .data_stage("dictionary")
    }
}

/// Coverage report artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageFile {
    pub method: String,
    pub joint_label: String,
    pub n_atoms: usize,
    pub threshold_deg: f64,
    pub ratio: f64,
    pub mean_error_deg: f64,
    pub per_sample_errors_deg: Vec<f64>,
    pub provenance: ProvenanceBlock,
}

/// Skeleton definition file (also the schema of the bundled default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFile {
    pub joints: Vec<JointDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDto {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: [f64; 3],
}

impl SkeletonFile {
    pub fn from_core(skeleton: &Skeleton) -> Self {
        SkeletonFile {
            joints: skeleton
                .joints()
                .iter()
                .map(|j| JointDto {
                    name: j.name.clone(),
                    parent: j.parent,
                    offset: j.offset,
                })
                .collect(),
        }
    }

    pub fn to_core(&self) -> CliResult<Skeleton> {
        Skeleton::new(
            self.joints
                .iter()
                .map(|j| Joint {
                    name: j.name.clone(),
                    parent: j.parent,
                    offset: j.offset,
                })
                .collect(),
        )
        .data_stage("skeleton")
    }
}

/// Ground-truth metadata emitted next to synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum SynthTruth {
    Clusters {
        joint_label: String,
        count: usize,
        spread_deg: f64,
        separation_deg: f64,
        centers: Vec<[f64; 4]>,
    },
    Arcs {
        joint_label: String,
        count: usize,
        arc_deg: f64,
        endpoints: Vec<[[f64; 4]; 2]>,
    },
    PlantedEuclidean {
        dim: usize,
        count: usize,
        support: usize,
        noise: f64,
        pure_frac: f64,
        atoms: Vec<Vec<f64>>,
    },
}

/// The `truth.json` artifact: what was generated, where the sample file went,
/// and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub data_file: String,
    pub data_format: String,
    #[serde(flatten)]
    pub truth: SynthTruth,
    pub provenance: ProvenanceBlock,
}

/// One fitted problem in a fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub loss_total: f64,
    pub loss_2d: f64,
    pub loss_3d: f64,
    pub iterations: usize,
    pub winning_restart: usize,
    pub camera_scale: f64,
    pub camera_t: [f64; 2],
    pub camera_r6: [f64; 6],
    /// Canonical unit quaternions for joints `1..K`, in joint order.
    pub rotations: Vec<[f64; 4]>,
    /// Simplex codes per non-root joint (same order as `rotations`).
    pub codes: Vec<Vec<f64>>,
}

/// The `fit` subcommand's output artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub skeleton_joints: usize,
    pub result: FitReport,
    pub provenance: ProvenanceBlock,
}

/// Which dictionaries a fit problem uses: one shared file for all joints, or
/// one file per non-root joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DictionariesRef {
    All { all: String },
    PerJoint(Vec<String>),
}

/// A fit problem file. Paths resolve relative to the problem file's own
/// directory, so a pipeline is reproducible from any working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    /// Path to a skeleton JSON; omit for the bundled default skeleton.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<String>,
    pub dictionaries: DictionariesRef,
    /// One entry per joint; `null` marks an invisible joint.
    pub keypoints_2d: Vec<Option<[f64; 2]>>,
    /// One entry per joint; omit entirely when no 3D evidence exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keypoints_3d: Option<Vec<Option<[f64; 3]>>>,
    #[serde(default = "default_lambda")]
    pub lambda_2d: f64,
    #[serde(default = "default_lambda")]
    pub lambda_3d: f64,
}

fn default_lambda() -> f64 {
    1.0
}

/// The `inspect` subcommand's stdout document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectFile {
    pub format: String,
    pub frames: usize,
    pub joints: usize,
    pub joint_names: Vec<String>,
    pub per_joint: Vec<JointSummary>,
    pub provenance: ProvenanceBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSummary {
    pub name: String,
    pub mean_angle_deg: f64,
    pub max_angle_deg: f64,
}

/// Metadata written by `plot-hull` alongside the SVG and CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullMetaFile {
    pub csv_file: String,
    /// Absent when the dictionary has fewer than 3 atoms (no hull polygon).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg_file: Option<String>,
    pub n_atoms: usize,
    pub n_samples: usize,
    pub highlighted_sample: usize,
    pub active_atoms: Vec<usize>,
    pub provenance: ProvenanceBlock,
}

/// Serialize any artifact: pretty JSON, stable field order, trailing newline.
pub fn json_to_string<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("serializing JSON: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let body = json_to_string(value)?;
    fs::write(path, body).data_stage(&format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let body =
        fs::read_to_string(path).data_stage(&format!("reading {}", path.display()))?;
    serde_json::from_str(&body).data_stage(&format!("parsing {}", path.display()))
}

/// Store a quaternion as its four canonical components.
pub fn quat_to_array(q: &UnitQuaternion) -> [f64; 4] {
    q.components()
}
