//! Unit quaternions with double-cover discipline.
//!
//! `q` and `-q` encode the same 3D rotation, so every [`UnitQuaternion`] in
//! this crate is kept in a *canonical* form (scalar part non-negative; on the
//! `w = 0` equator, the first nonzero vector component positive). Operations
//! that blend several quaternions additionally sign-align their inputs first:
//! linear combinations across hemispheres cancel instead of interpolating.
//!
//! Interpolation comes in two flavors: exact geodesic [`slerp`] between two
//! rotations, and [`nlerp`] — a normalized convex combination of any number of
//! atoms. For small arcs the two agree to high order (the deviation grows like
//! the cube of the arc length), which is what makes convex hulls of nearby
//! atoms a usable parameterization of a rotation neighborhood.

use alloc::format;

use rand::Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::math;

/// A rotation stored as a canonical unit quaternion `(w, x, y, z)`.
///
/// Invariants (enforced by every constructor):
/// * unit norm: `w² + x² + y² + z² = 1` within 1e-9;
/// * canonical hemisphere: `w >= 0`, and if `w == 0` the first nonzero of
///   `(x, y, z)` is positive;
/// * no negative zeros, so equal rotations compare bitwise-equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// An axis–angle rotation: unit axis, angle in radians canonicalized to `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    axis: [f64; 3],
    angle: f64,
}

impl AxisAngle {
    /// Build from any nonzero axis and finite angle.
    ///
    /// The axis is normalized to unit length; the angle is wrapped into
    /// `[0, 2π)` and then folded into `[0, π]` by flipping the axis, which
    /// leaves the rotation unchanged.
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        ensure_finite(&axis, "AxisAngle axis")?;
        ensure_finite(&[angle], "AxisAngle angle")?;
        let n = math::norm(&axis);
        if n < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "AxisAngle axis has near-zero norm {n:e}"
            )));
        }
        let mut axis = [axis[0] / n, axis[1] / n, axis[2] / n];
        let two_pi = 2.0 * core::f64::consts::PI;
        let mut angle = angle - two_pi * math::floor(angle / two_pi);
        if angle > core::f64::consts::PI {
            angle = two_pi - angle;
            for a in &mut axis {
                *a = -*a + 0.0;
            }
        }
        Ok(AxisAngle { axis, angle })
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// Canonicalize a raw 4-vector in place: pick the `w >= 0` hemisphere
/// representative (ties broken by the first nonzero vector component) and
/// scrub negative zeros so canonical forms are bitwise stable.
pub(crate) fn canonical4(mut q: [f64; 4]) -> [f64; 4] {
    let flip = if q[0] < 0.0 {
        true
    } else if q[0] == 0.0 {
        let mut flip = false;
        for &c in &q[1..] {
            if c != 0.0 {
                flip = c < 0.0;
                break;
            }
        }
        flip
    } else {
        false
    };
    for c in &mut q {
        if flip {
            *c = -*c;
        }
        // -0.0 + 0.0 == +0.0; everything else is unchanged. Keeps
        // canonicalization idempotent at the bit level.
        *c += 0.0;
    }
    q
}

impl UnitQuaternion {
    /// The identity rotation `(1, 0, 0, 0)`.
    pub fn identity() -> Self {
        UnitQuaternion {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    /// Build from raw components, normalizing and canonicalizing.
    ///
    /// Errors on non-finite components or a near-zero norm.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let raw = [w, x, y, z];
        ensure_finite(&raw, "UnitQuaternion components")?;
        let n = math::norm(&raw);
        if n < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "UnitQuaternion components have near-zero norm {n:e}"
            )));
        }
        // Already unit to within a few ulps: keep the components bitwise
        // instead of dividing, so the constructor is idempotent. Dividing by
        // a norm this close to 1 perturbs the last ulp about a third of the
        // time, which would break exact round-trips through file formats; the
        // window is wider than anything one normalization can leave behind.
        let q = if math::abs(n - 1.0) <= 4.0 * f64::EPSILON {
            canonical4(raw)
        } else {
            canonical4([w / n, x / n, y / n, z / n])
        };
        Ok(UnitQuaternion {
            w: q[0],
            x: q[1],
            y: q[2],
            z: q[3],
        })
    }

    /// Build from a `[w, x, y, z]` array (normalizing, canonicalizing).
    pub fn from_array(q: [f64; 4]) -> Result<Self> {
        Self::new(q[0], q[1], q[2], q[3])
    }

    /// Wrap components that are already unit-norm and canonical, bitwise.
    ///
    /// Used where re-normalizing would perturb stored values (dictionary
    /// atoms must round-trip exactly). Debug builds assert the invariants.
    pub(crate) fn from_canonical_parts(q: [f64; 4]) -> Self {
        debug_assert!((crate::math::norm(&q) - 1.0).abs() <= 1e-9);
        debug_assert_eq!(q, canonical4(q));
        UnitQuaternion {
            w: q[0],
            x: q[1],
            y: q[2],
            z: q[3],
        }
    }

    /// The rotation by `a.angle` about `a.axis`.
    pub fn from_axis_angle(a: &AxisAngle) -> Self {
        let half = 0.5 * a.angle;
        let (s, c) = (math::sin(half), math::cos(half));
        let q = canonical4([c, s * a.axis[0], s * a.axis[1], s * a.axis[2]]);
        UnitQuaternion {
            w: q[0],
            x: q[1],
            y: q[2],
            z: q[3],
        }
    }

    /// Build from a rotation vector (axis scaled by angle); the zero vector is
    /// the identity.
    pub fn from_rotation_vector(v: [f64; 3]) -> Result<Self> {
        ensure_finite(&v, "rotation vector")?;
        let angle = math::norm(&v);
        if angle < 1e-12 {
            return Ok(Self::identity());
        }
        Ok(Self::from_axis_angle(&AxisAngle::new(v, angle)?))
    }

    /// Convert back to axis–angle; the identity maps to angle 0 about `z`.
    pub fn to_axis_angle(&self) -> AxisAngle {
        let s = math::norm(&[self.x, self.y, self.z]);
        // atan2 avoids the acos precision cliff near w = 1; w >= 0 and s >= 0
        // keep the result in [0, π].
        let angle = 2.0 * math::atan2(s, self.w);
        if s < 1e-12 {
            AxisAngle {
                axis: [0.0, 0.0, 1.0],
                angle: 0.0,
            }
        } else {
            AxisAngle {
                axis: [self.x / s, self.y / s, self.z / s],
                angle,
            }
        }
    }

    /// Draw a uniformly random rotation (normalized 4D Gaussian).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = crate::rng::gaussian_vec(rng, 4);
            if let Ok(q) = Self::new(v[0], v[1], v[2], v[3]) {
                return q;
            }
        }
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Components as `[w, x, y, z]`.
    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// 4D inner product of the component vectors.
    pub fn dot(&self, other: &UnitQuaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// The inverse rotation (conjugate, for unit quaternions).
    pub fn conjugate(&self) -> Self {
        let q = canonical4([self.w, -self.x, -self.y, -self.z]);
        UnitQuaternion {
            w: q[0],
            x: q[1],
            y: q[2],
            z: q[3],
        }
    }

    /// Hamilton product `self ⊗ other` (apply `other`, then `self`),
    /// renormalized and canonicalized.
    pub fn compose(&self, other: &UnitQuaternion) -> Self {
        let (pw, px, py, pz) = (self.w, self.x, self.y, self.z);
        let (qw, qx, qy, qz) = (other.w, other.x, other.y, other.z);
        let raw = [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ];
        // Unit in exact arithmetic; renormalize so long chains cannot drift.
        let n = math::norm(&raw);
        let q = canonical4([raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n]);
        UnitQuaternion {
            w: q[0],
            x: q[1],
            y: q[2],
            z: q[3],
        }
    }

    /// Rotate a 3-vector.
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        // v' = v + w·t + u×t with t = 2 u×v: cheaper than building the matrix
        // and exact for the identity (t = 0).
        let u = [self.x, self.y, self.z];
        let t = [
            2.0 * (u[1] * v[2] - u[2] * v[1]),
            2.0 * (u[2] * v[0] - u[0] * v[2]),
            2.0 * (u[0] * v[1] - u[1] * v[0]),
        ];
        [
            v[0] + self.w * t[0] + (u[1] * t[2] - u[2] * t[1]),
            v[1] + self.w * t[1] + (u[2] * t[0] - u[0] * t[2]),
            v[2] + self.w * t[2] + (u[0] * t[1] - u[1] * t[0]),
        ]
    }

    /// The equivalent 3×3 rotation matrix (rows).
    pub fn to_rotation_matrix(&self) -> [[f64; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }
}

/// Rotation angle between two rotations: `2·arccos(|⟨p, q⟩|)`, in `[0, π]`.
///
/// Sign-invariant under the double cover. Bitwise-equal inputs return exactly
/// `0.0` (the clamped `acos` route would return ~1e-8 for them, which matters
/// when callers compare errors against a zero threshold).
pub fn geodesic_distance(p: &UnitQuaternion, q: &UnitQuaternion) -> f64 {
    if p == q {
        return 0.0;
    }
    let d = math::abs(p.dot(q)).clamp(0.0, 1.0);
    2.0 * math::acos(d)
}

/// Geodesic (constant-speed) interpolation; `x1` weights `q1`, `1 - x1`
/// weights `q2`. Note the convention: `slerp(1.0, q1, q2) == q1`.
///
/// The two quaternions are sign-aligned before the arc `δ` is measured; for
/// `δ < 1e-7` the sine weights are numerically meaningless and the function
/// falls back to a normalized linear blend, which agrees to machine precision
/// at such arcs.
pub fn slerp(x1: f64, q1: &UnitQuaternion, q2: &UnitQuaternion) -> Result<UnitQuaternion> {
    if !x1.is_finite() || !(0.0..=1.0).contains(&x1) {
        return Err(Error::InvalidInput(format!(
            "slerp weight x1 must lie in [0, 1], got {x1}"
        )));
    }
    if x1 == 1.0 {
        return Ok(*q1);
    }
    if x1 == 0.0 {
        return Ok(*q2);
    }
    let d = q1.dot(q2);
    let sign = if d < 0.0 { -1.0 } else { 1.0 };
    let da = math::abs(d).clamp(0.0, 1.0);
    let delta = math::acos(da);
    let (w1, w2) = if delta < 1e-7 {
        (x1, 1.0 - x1)
    } else {
        let sd = math::sin(delta);
        (
            math::sin(x1 * delta) / sd,
            math::sin((1.0 - x1) * delta) / sd,
        )
    };
    let a = q1.components();
    let b = q2.components();
    UnitQuaternion::new(
        w1 * a[0] + w2 * sign * b[0],
        w1 * a[1] + w2 * sign * b[1],
        w1 * a[2] + w2 * sign * b[2],
        w1 * a[3] + w2 * sign * b[3],
    )
}

/// Normalized convex combination of quaternion atoms — the rotation-recovery
/// primitive `θ = normalize(D·γ)`.
///
/// All atoms with positive weight are sign-aligned to the most heavily
/// weighted atom before blending, then the combination is normalized and
/// canonicalized. Alignment makes every aligned atom have non-negative dot
/// with the pivot, so the combination norm is at least the pivot's weight
/// (≥ 1/N): cancellation cannot occur for valid simplex weights. The norm
/// check below 1e-6 and its [`Error::DegenerateCombination`] are retained
/// defensively for callers that bypass alignment guarantees via near-zero
/// weight mass on the pivot combined with pathological inputs.
pub fn nlerp(weights: &[f64], atoms: &[UnitQuaternion]) -> Result<UnitQuaternion> {
    if atoms.is_empty() {
        return Err(Error::InvalidInput("nlerp needs at least one atom".into()));
    }
    if weights.len() != atoms.len() {
        return Err(Error::DimensionMismatch {
            context: "nlerp weights vs atoms",
            expected: atoms.len(),
            got: weights.len(),
        });
    }
    ensure_finite(weights, "nlerp weights")?;
    let mut sum = 0.0;
    let mut dominant = 0usize;
    let mut any_positive = false;
    for (i, &w) in weights.iter().enumerate() {
        if w < 0.0 {
            return Err(Error::InvalidInput(format!(
                "nlerp weight {i} is negative ({w})"
            )));
        }
        sum += w;
        if w > weights[dominant] {
            dominant = i;
        }
        any_positive |= w > 0.0;
    }
    if !any_positive {
        return Err(Error::InvalidInput("nlerp weights are all zero".into()));
    }
    if math::abs(sum - 1.0) > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "nlerp weights must sum to 1, got {sum}"
        )));
    }

    let pivot = &atoms[dominant];
    // One-hot codes and duplicated atoms must reproduce the atom bitwise, not
    // within a normalization ulp; detect that case before any arithmetic.
    let exact = weights
        .iter()
        .zip(atoms)
        .all(|(&w, a)| w == 0.0 || a == pivot);
    if exact {
        return Ok(*pivot);
    }

    let mut c = [0.0; 4];
    for (&w, a) in weights.iter().zip(atoms) {
        if w == 0.0 {
            continue;
        }
        let s = if a.dot(pivot) < 0.0 { -w } else { w };
        let comps = a.components();
        for (acc, comp) in c.iter_mut().zip(comps) {
            *acc += s * comp;
        }
    }
    let n = math::norm(&c);
    if n < 1e-6 {
        return Err(Error::DegenerateCombination);
    }
    UnitQuaternion::new(c[0], c[1], c[2], c[3])
}

/// Mean of a set of quaternions after sign-aligning each to `reference`,
/// normalized and canonicalized. Used by clustering centroids.
pub fn aligned_mean(members: &[UnitQuaternion], reference: &UnitQuaternion) -> Result<UnitQuaternion> {
    if members.is_empty() {
        return Err(Error::InvalidInput("aligned_mean of no members".into()));
    }
    let mut c = [0.0; 4];
    for m in members {
        let s = if m.dot(reference) < 0.0 { -1.0 } else { 1.0 };
        let comps = m.components();
        for (acc, comp) in c.iter_mut().zip(comps) {
            *acc += s * comp;
        }
    }
    let n = math::norm(&c);
    if n < 1e-9 {
        return Err(Error::DegenerateCombination);
    }
    UnitQuaternion::new(c[0], c[1], c[2], c[3])
}
