//! Joint-tree forward kinematics and the weak-perspective camera.
//!
//! A [`Skeleton`] is a topologically ordered tree of joints with fixed rest
//! offsets; a [`Pose`] holds one relative rotation per non-root joint. The
//! body's global orientation deliberately does *not* live in the pose: it is
//! part of the [`Camera`], as a 6-parameter rotation (first two columns of
//! the rotation matrix) alongside scale and image translation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{ensure_finite, Error, Result};
use crate::math;
use crate::quat::UnitQuaternion;

/// One joint: display name, parent index (`None` for the root), rest offset
/// from the parent in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: [f64; 3],
}

/// A kinematic tree in topological order (every parent precedes its child).
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
}

impl Skeleton {
    /// Validate and wrap a joint list: joint 0 is the unique root, every
    /// other joint's parent index is smaller than its own, offsets finite.
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidInput("skeleton needs at least one joint".into()));
        }
        for (i, joint) in joints.iter().enumerate() {
            ensure_finite(&joint.offset, "joint offset")?;
            match joint.parent {
                None if i != 0 => {
                    return Err(Error::InvalidInput(format!(
                        "joint {i} ({}) has no parent; only joint 0 may be the root",
                        joint.name
                    )));
                }
                Some(p) if i == 0 => {
                    return Err(Error::InvalidInput(format!(
                        "root joint claims parent {p}"
                    )));
                }
                Some(p) if p >= i => {
                    return Err(Error::InvalidInput(format!(
                        "joint {i} ({}) has parent {p}; parents must precede children",
                        joint.name
                    )));
                }
                _ => {}
            }
        }
        Ok(Skeleton { joints })
    }

    /// Joint count `K`.
    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint(&self, i: usize) -> &Joint {
        &self.joints[i]
    }
}

/// Per-joint relative rotations for the non-root joints, in joint order
/// (entry `i` belongs to joint `i + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    rotations: Vec<UnitQuaternion>,
}

impl Pose {
    pub fn new(rotations: Vec<UnitQuaternion>) -> Self {
        Pose { rotations }
    }

    /// The rest pose for a skeleton with `k` joints.
    pub fn identity(k: usize) -> Self {
        Pose {
            rotations: alloc::vec![UnitQuaternion::identity(); k.saturating_sub(1)],
        }
    }

    pub fn rotations(&self) -> &[UnitQuaternion] {
        &self.rotations
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }
}

/// Weak-perspective camera: global rotation (6D, first two matrix columns),
/// isotropic scale, and 2D image translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub scale: f64,
    pub t: [f64; 2],
    pub r6: [f64; 6],
}

impl Camera {
    /// Validate: finite fields and a non-degenerate 6D rotation.
    pub fn new(scale: f64, t: [f64; 2], r6: [f64; 6]) -> Result<Self> {
        ensure_finite(&[scale], "camera scale")?;
        ensure_finite(&t, "camera translation")?;
        r6_to_rotation(&r6)?;
        Ok(Camera { scale, t, r6 })
    }

    /// Unit scale, zero translation, identity rotation.
    pub fn identity() -> Self {
        Camera {
            scale: 1.0,
            t: [0.0, 0.0],
            r6: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        }
    }

    /// The full rotation matrix recovered from the 6D parameters.
    pub fn rotation(&self) -> Result<Mat3> {
        r6_to_rotation(&self.r6)
    }
}

/// A 3×3 matrix as rows.
pub type Mat3 = [[f64; 3]; 3];

/// Recover a proper rotation from its first two columns by Gram–Schmidt:
/// `c₁ = a₁/‖a₁‖`, `c₂ = normalize(a₂ − ⟨c₁,a₂⟩c₁)`, `c₃ = c₁ × c₂`.
///
/// `r6` holds the two columns contiguously: `(a₁, a₂)`. Parallel or
/// near-zero columns are rejected.
pub fn r6_to_rotation(r6: &[f64; 6]) -> Result<Mat3> {
    ensure_finite(r6, "6D rotation parameters")?;
    let a1 = [r6[0], r6[1], r6[2]];
    let a2 = [r6[3], r6[4], r6[5]];
    let n1 = math::norm(&a1);
    if n1 < 1e-12 {
        return Err(Error::InvalidInput("6D rotation: first column is near zero".into()));
    }
    let c1 = [a1[0] / n1, a1[1] / n1, a1[2] / n1];
    let d = math::dot(&c1, &a2);
    let w = [a2[0] - d * c1[0], a2[1] - d * c1[1], a2[2] - d * c1[2]];
    let n2 = math::norm(&w);
    if n2 < 1e-12 {
        return Err(Error::InvalidInput(
            "6D rotation: columns are parallel or second column is zero".into(),
        ));
    }
    let c2 = [w[0] / n2, w[1] / n2, w[2] / n2];
    let c3 = [
        c1[1] * c2[2] - c1[2] * c2[1],
        c1[2] * c2[0] - c1[0] * c2[2],
        c1[0] * c2[1] - c1[1] * c2[0],
    ];
    Ok([
        [c1[0], c2[0], c3[0]],
        [c1[1], c2[1], c3[1]],
        [c1[2], c2[2], c3[2]],
    ])
}

/// World positions of all joints, in meters.
///
/// The root sits at its own offset (the bundled skeleton uses the origin);
/// every other joint adds its parent's world rotation applied to its rest
/// offset, and world rotations accumulate parent-first:
/// `W_j = W_parent ⊗ q_j`.
pub fn forward_kinematics(skel: &Skeleton, pose: &Pose) -> Result<Vec<[f64; 3]>> {
    let k = skel.len();
    if pose.len() != k - 1 {
        return Err(Error::DimensionMismatch {
            context: "pose length (non-root joints)",
            expected: k - 1,
            got: pose.len(),
        });
    }
    let mut positions = Vec::with_capacity(k);
    let mut world = Vec::with_capacity(k);
    positions.push(skel.joint(0).offset);
    world.push(UnitQuaternion::identity());
    for j in 1..k {
        let joint = skel.joint(j);
        let p = joint.parent.expect("non-root joints have parents");
        let rotated = world[p].rotate(joint.offset);
        let pp = positions[p];
        positions.push([pp[0] + rotated[0], pp[1] + rotated[1], pp[2] + rotated[2]]);
        world.push(world[p].compose(&pose.rotations()[j - 1]));
    }
    Ok(positions)
}

/// Weak-perspective projection: rotate, drop the third coordinate, scale,
/// translate — `x₂D = s·Π(R·x₃D) + t`.
pub fn project(x3: &[[f64; 3]], cam: &Camera) -> Result<Vec<[f64; 2]>> {
    let r = cam.rotation()?;
    Ok(x3
        .iter()
        .map(|p| {
            let y0 = r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2];
            let y1 = r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2];
            [cam.scale * y0 + cam.t[0], cam.scale * y1 + cam.t[1]]
        })
        .collect())
}
