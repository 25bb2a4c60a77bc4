//! The bundled default skeleton and skeleton-file loading.

use std::path::Path;

use kinedict_core::kinematics::Skeleton;

use crate::error::CliResult;
use crate::formats::{read_json, SkeletonFile};

/// The default skeleton JSON shipped inside the binary: a 24-joint human
/// figure (pelvis root; legs, spine, arms, head) about 1.7 m tall.
pub const DEFAULT_SKELETON_JSON: &str = include_str!("../assets/default_skeleton.json");

/// Parse the bundled 24-joint skeleton.
pub fn default_skeleton() -> Skeleton {
    let file: SkeletonFile =
        serde_json::from_str(DEFAULT_SKELETON_JSON).expect("bundled skeleton JSON parses");
    file.to_core().expect("bundled skeleton is a valid tree")
}

/// Load a skeleton from a user-supplied JSON file.
pub fn skeleton_from_file(path: &Path) -> CliResult<Skeleton> {
    let file: SkeletonFile = read_json(path)?;
    file.to_core()
}
