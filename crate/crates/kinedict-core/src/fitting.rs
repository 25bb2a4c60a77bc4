//! Dictionary-constrained pose recovery from 2D/3D keypoints.
//!
//! Each non-root joint's rotation is parameterized as logits that pass through
//! sparsemax and a normalized blend of that joint's dictionary atoms, so every
//! candidate pose stays inside the per-joint convex hulls by construction. The
//! optimizer descends the reprojection / keypoint loss jointly over all logits
//! and a weak-perspective camera, restarted from several seeded
//! initializations; the gradient is written out by hand (reverse-mode through
//! the blend normalization, the quaternion product chain, forward kinematics,
//! Gram–Schmidt and the projection) rather than approximated.

use alloc::vec;
use alloc::vec::Vec;

use crate::dict::{Dictionary, Mode};
use crate::error::{ensure_finite, Error, Result};
use crate::kinematics::{forward_kinematics, project, Camera, Pose, Skeleton};
use crate::math;
use crate::rng::{derive_seed, gaussian_vec, rng_from_seed};
use crate::simplex::{jacobian_apply, sparsemax};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum number of visible 2D joints for a problem without full 3D
/// observations to be well-posed (scale/translation/rotation plus at least one
/// articulation residual).
const MIN_VISIBLE_2D: usize = 4;

/// A pose-recovery instance: skeleton, one quaternion dictionary per non-root
/// joint, observations, and loss weights.
///
/// Observation vectors always have one entry per joint; `None` marks an
/// invisible joint, whose residual contributes exactly zero. 3D keypoints are
/// compared root-relative (both sides centered on joint 0), since absolute
/// depth is unobservable under a weak-perspective camera — which is why a
/// problem with any 3D observations must include the root among them.
#[derive(Debug, Clone)]
pub struct FitProblem {
    skeleton: Skeleton,
    dictionaries: Vec<Dictionary>,
    observed_2d: Vec<Option<[f64; 2]>>,
    observed_3d: Vec<Option<[f64; 3]>>,
    lambda_2d: f64,
    lambda_3d: f64,
}

impl FitProblem {
    /// Validate and assemble a problem.
    ///
    /// Requires one quaternion dictionary per non-root joint, observation
    /// vectors of length `K`, finite values, non-negative weights, and enough
    /// data to pin the unknowns down: at least 4 visible 2D joints or 3D
    /// observations for every joint.
    pub fn new(
        skeleton: Skeleton,
        dictionaries: Vec<Dictionary>,
        observed_2d: Vec<Option<[f64; 2]>>,
        observed_3d: Vec<Option<[f64; 3]>>,
        lambda_2d: f64,
        lambda_3d: f64,
    ) -> Result<Self> {
        let k = skeleton.len();
        if dictionaries.len() != k - 1 {
            return Err(Error::DimensionMismatch {
                context: "dictionaries (one per non-root joint)",
                expected: k - 1,
                got: dictionaries.len(),
            });
        }
        for (j, dict) in dictionaries.iter().enumerate() {
            if dict.mode() != Mode::Quaternion {
                return Err(Error::InvalidInput(alloc::format!(
                    "dictionary {j} ({}) is not in quaternion mode",
                    dict.joint_label()
                )));
            }
        }
        if observed_2d.len() != k {
            return Err(Error::DimensionMismatch {
                context: "2D observations",
                expected: k,
                got: observed_2d.len(),
            });
        }
        if observed_3d.len() != k {
            return Err(Error::DimensionMismatch {
                context: "3D observations",
                expected: k,
                got: observed_3d.len(),
            });
        }
        for o in observed_2d.iter().flatten() {
            ensure_finite(o, "2D observation")?;
        }
        for o in observed_3d.iter().flatten() {
            ensure_finite(o, "3D observation")?;
        }
        ensure_finite(&[lambda_2d, lambda_3d], "loss weights")?;
        if lambda_2d < 0.0 || lambda_3d < 0.0 {
            return Err(Error::InvalidInput("loss weights must be non-negative".into()));
        }
        let visible = observed_2d.iter().flatten().count();
        let full_3d = observed_3d.iter().all(Option::is_some);
        if visible < MIN_VISIBLE_2D && !full_3d {
            return Err(Error::UnderConstrained {
                visible,
                needed: MIN_VISIBLE_2D,
            });
        }
        if observed_3d.iter().any(Option::is_some) && observed_3d[0].is_none() {
            return Err(Error::InvalidInput(
                "3D observations are compared root-relative; the root joint must be observed"
                    .into(),
            ));
        }
        Ok(FitProblem {
            skeleton,
            dictionaries,
            observed_2d,
            observed_3d,
            lambda_2d,
            lambda_3d,
        })
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn dictionaries(&self) -> &[Dictionary] {
        &self.dictionaries
    }

    pub fn observed_2d(&self) -> &[Option<[f64; 2]>] {
        &self.observed_2d
    }

    pub fn observed_3d(&self) -> &[Option<[f64; 3]>] {
        &self.observed_3d
    }

    pub fn lambda_2d(&self) -> f64 {
        self.lambda_2d
    }

    pub fn lambda_3d(&self) -> f64 {
        self.lambda_3d
    }

    /// Number of visible 2D joints.
    pub fn visible_2d(&self) -> usize {
        self.observed_2d.iter().flatten().count()
    }

    /// Decode per-joint logits into a pose through sparsemax + blend.
    pub fn pose_from_logits(&self, logits: &[Vec<f64>]) -> Result<Pose> {
        if logits.len() != self.dictionaries.len() {
            return Err(Error::DimensionMismatch {
                context: "per-joint logits",
                expected: self.dictionaries.len(),
                got: logits.len(),
            });
        }
        let rotations = self
            .dictionaries
            .iter()
            .zip(logits)
            .map(|(dict, z)| dict.reconstruct_quat(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(Pose::new(rotations))
    }
}

/// The loss split: `total = λ₂D·l2d + λ₃D·l3d` with unweighted parts kept for
/// reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Losses {
    pub total: f64,
    pub l2d: f64,
    pub l3d: f64,
}

/// Optimizer knobs. `restarts` seeded initializations are descended
/// independently and the lowest final loss wins; restart `r` always draws from
/// the same stream regardless of how many restarts run alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Relative-decrease convergence threshold.
    pub tol: f64,
    /// Initial line-search step.
    pub step0: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 8,
            max_iters: 300,
            seed: 0,
            tol: 1e-10,
            step0: 1.0,
        }
    }
}

/// Outcome of a fit: winning logits, the decoded pose and camera, final
/// losses, and bookkeeping.
///
/// `pose` is exactly the public reconstruction of `logits` through each
/// joint's dictionary, and `losses` is exactly [`loss`] evaluated at
/// (`logits`, `camera`).
#[derive(Debug, Clone)]
pub struct FitResult {
    pub logits: Vec<Vec<f64>>,
    pub pose: Pose,
    pub camera: Camera,
    pub losses: Losses,
    /// Accepted descent steps taken by the winning restart.
    pub iterations: usize,
    pub winning_restart: usize,
}

/// Evaluate the loss at explicit logits and camera.
///
/// `l3d` sums squared root-relative residuals over joints with 3D
/// observations, `l2d` sums squared reprojection residuals over visible 2D
/// joints; invisible joints contribute exactly zero.
pub fn loss(problem: &FitProblem, logits: &[Vec<f64>], camera: &Camera) -> Result<Losses> {
    for (j, (dict, z)) in problem.dictionaries.iter().zip(logits).enumerate() {
        if z.len() != dict.n_atoms() {
            return Err(Error::DimensionMismatch {
                context: "logits length for one joint",
                expected: dict.n_atoms(),
                got: if j < logits.len() { z.len() } else { 0 },
            });
        }
    }
    let pose = problem.pose_from_logits(logits)?;
    let positions = forward_kinematics(&problem.skeleton, &pose)?;
    losses_at(problem, &positions, camera)
}

/// Loss terms given already-computed keypoints.
fn losses_at(problem: &FitProblem, positions: &[[f64; 3]], camera: &Camera) -> Result<Losses> {
    let projected = project(positions, camera)?;
    let mut l2d = 0.0;
    for (p, o) in projected.iter().zip(&problem.observed_2d) {
        if let Some(o) = o {
            let r = [p[0] - o[0], p[1] - o[1]];
            l2d += r[0] * r[0] + r[1] * r[1];
        }
    }
    let mut l3d = 0.0;
    if let Some(root_obs) = problem.observed_3d[0] {
        let root = positions[0];
        for (p, o) in positions.iter().zip(&problem.observed_3d) {
            if let Some(o) = o {
                let mut s = 0.0;
                for c in 0..3 {
                    let d = (p[c] - root[c]) - (o[c] - root_obs[c]);
                    s += d * d;
                }
                l3d += s;
            }
        }
    }
    Ok(Losses {
        total: problem.lambda_2d * l2d + problem.lambda_3d * l3d,
        l2d,
        l3d,
    })
}

// ---------------------------------------------------------------------------
// Internal differentiable forward pass.
//
// The optimizer works on one packed parameter vector per restart:
// `[logits_1, …, logits_{K−1}, s, t0, t1, r6[0..6]]`. Its forward pass mirrors
// the public reconstruct/FK/project pipeline but keeps raw (un-renormalized)
// quaternion products so the hand-written backward pass is the exact
// derivative of the computed composite; the two pipelines agree to rounding
// error, and all *reported* losses go through the public `loss` above.
// ---------------------------------------------------------------------------

/// Block layout of the packed parameter vector.
struct Packing {
    offsets: Vec<usize>,
    sizes: Vec<usize>,
    cam_base: usize,
    total: usize,
}

impl Packing {
    fn new(problem: &FitProblem) -> Self {
        let mut offsets = Vec::with_capacity(problem.dictionaries.len());
        let mut sizes = Vec::with_capacity(problem.dictionaries.len());
        let mut run = 0;
        for dict in &problem.dictionaries {
            offsets.push(run);
            sizes.push(dict.n_atoms());
            run += dict.n_atoms();
        }
        Packing {
            offsets,
            sizes,
            cam_base: run,
            total: run + 9,
        }
    }
}

/// Per-joint intermediates of the code → rotation stage.
struct JointBlend {
    support: Vec<usize>,
    /// Index of the dominant atom — the alignment pivot. Signs are
    /// recomputed against it in the backward pass.
    dominant: usize,
    /// Norm of the pre-normalization blend.
    n: f64,
    /// The blended relative rotation (unit up to rounding, not canonicalized —
    /// rotation action is sign-invariant so canonicalization is irrelevant
    /// here).
    q: [f64; 4],
}

fn dot4(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Hamilton product on raw 4-vectors (scalar first), no renormalization.
fn hamilton(p: &[f64; 4], q: &[f64; 4]) -> [f64; 4] {
    [
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    ]
}

/// `Rmat(q)ᵀ·g` where `p⊗q = Rmat(q)·p` — adjoint of the product w.r.t. its
/// left factor.
fn right_product_adjoint(q: &[f64; 4], g: &[f64; 4]) -> [f64; 4] {
    [
        q[0] * g[0] + q[1] * g[1] + q[2] * g[2] + q[3] * g[3],
        -q[1] * g[0] + q[0] * g[1] - q[3] * g[2] + q[2] * g[3],
        -q[2] * g[0] + q[3] * g[1] + q[0] * g[2] - q[1] * g[3],
        -q[3] * g[0] - q[2] * g[1] + q[1] * g[2] + q[0] * g[3],
    ]
}

/// `Lmat(p)ᵀ·g` where `p⊗q = Lmat(p)·q` — adjoint of the product w.r.t. its
/// right factor.
fn left_product_adjoint(p: &[f64; 4], g: &[f64; 4]) -> [f64; 4] {
    [
        p[0] * g[0] + p[1] * g[1] + p[2] * g[2] + p[3] * g[3],
        -p[1] * g[0] + p[0] * g[1] + p[3] * g[2] - p[2] * g[3],
        -p[2] * g[0] - p[3] * g[1] + p[0] * g[2] + p[1] * g[3],
        -p[3] * g[0] + p[2] * g[1] - p[1] * g[2] + p[0] * g[3],
    ]
}

/// Rotation matrix of a (unit) quaternion given as a raw 4-vector.
fn rot_matrix(q: &[f64; 4]) -> [[f64; 3]; 3] {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
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

/// Adjoint of `R(q)·v` w.r.t. `q`: contracts `gout` against the four
/// `∂R/∂q_k · v` vectors.
fn rot_q_adjoint(q: &[f64; 4], v: &[f64; 3], gout: &[f64; 3]) -> [f64; 4] {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    let dw = [
        2.0 * (y * v[2] - z * v[1]),
        2.0 * (z * v[0] - x * v[2]),
        2.0 * (x * v[1] - y * v[0]),
    ];
    let dx = [
        2.0 * (y * v[1] + z * v[2]),
        2.0 * (y * v[0] - 2.0 * x * v[1] - w * v[2]),
        2.0 * (z * v[0] + w * v[1] - 2.0 * x * v[2]),
    ];
    let dy = [
        2.0 * (-2.0 * y * v[0] + x * v[1] + w * v[2]),
        2.0 * (x * v[0] + z * v[2]),
        2.0 * (-w * v[0] + z * v[1] - 2.0 * y * v[2]),
    ];
    let dz = [
        2.0 * (-2.0 * z * v[0] - w * v[1] + x * v[2]),
        2.0 * (w * v[0] - 2.0 * z * v[1] + y * v[2]),
        2.0 * (x * v[0] + y * v[1]),
    ];
    [
        dot3(&dw, gout),
        dot3(&dx, gout),
        dot3(&dy, gout),
        dot3(&dz, gout),
    ]
}

/// Gram–Schmidt forward with every intermediate the backward pass needs.
struct GsForward {
    a2: [f64; 3],
    n1: f64,
    c1: [f64; 3],
    proj: f64,
    n2: f64,
    c2: [f64; 3],
    c3: [f64; 3],
}

fn gs_forward(r6: &[f64]) -> Result<GsForward> {
    let a1 = [r6[0], r6[1], r6[2]];
    let a2 = [r6[3], r6[4], r6[5]];
    let n1 = math::norm(&a1);
    if n1 < 1e-12 {
        return Err(Error::InvalidInput("6D rotation: first column is near zero".into()));
    }
    let c1 = [a1[0] / n1, a1[1] / n1, a1[2] / n1];
    let proj = dot3(&c1, &a2);
    let w = [
        a2[0] - proj * c1[0],
        a2[1] - proj * c1[1],
        a2[2] - proj * c1[2],
    ];
    let n2 = math::norm(&w);
    if n2 < 1e-12 {
        return Err(Error::InvalidInput(
            "6D rotation: columns are parallel or second column is zero".into(),
        ));
    }
    let c2 = [w[0] / n2, w[1] / n2, w[2] / n2];
    let c3 = cross(&c1, &c2);
    Ok(GsForward {
        a2,
        n1,
        c1,
        proj,
        n2,
        c2,
        c3,
    })
}

/// Decode all per-joint blends from the packed vector.
fn blend_joints(problem: &FitProblem, x: &[f64], pk: &Packing) -> Result<Vec<JointBlend>> {
    let mut blends = Vec::with_capacity(problem.dictionaries.len());
    for (j, dict) in problem.dictionaries.iter().enumerate() {
        let z = &x[pk.offsets[j]..pk.offsets[j] + pk.sizes[j]];
        let code = sparsemax(z)?;
        let gamma = code.as_slice();
        let support = code.support();
        // Dominant atom: largest weight, first index on ties — the same pivot
        // the public blend picks.
        let mut dominant = support[0];
        for &i in &support {
            if gamma[i] > gamma[dominant] {
                dominant = i;
            }
        }
        let pivot = dict.atom(dominant);
        let mut u = [0.0; 4];
        for &i in &support {
            let atom = dict.atom(i);
            let sign = if dot4(atom, pivot) < 0.0 { -1.0 } else { 1.0 };
            let w = gamma[i] * sign;
            for (acc, a) in u.iter_mut().zip(atom) {
                *acc += w * a;
            }
        }
        let n = math::norm(&u);
        if n < 1e-6 {
            return Err(Error::DegenerateCombination);
        }
        blends.push(JointBlend {
            support,
            dominant,
            n,
            q: [u[0] / n, u[1] / n, u[2] / n, u[3] / n],
        });
    }
    Ok(blends)
}

/// World pass: accumulated raw world quaternions and joint positions.
fn world_pass(
    skeleton: &Skeleton,
    blends: &[JointBlend],
) -> (Vec<[f64; 4]>, Vec<[[f64; 3]; 3]>, Vec<[f64; 3]>) {
    let k = skeleton.len();
    let mut wq: Vec<[f64; 4]> = Vec::with_capacity(k);
    let mut rmats = Vec::with_capacity(k);
    let mut pos: Vec<[f64; 3]> = Vec::with_capacity(k);
    wq.push([1.0, 0.0, 0.0, 0.0]);
    rmats.push([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    pos.push(skeleton.joint(0).offset);
    for j in 1..k {
        let joint = skeleton.joint(j);
        let par = joint.parent.expect("non-root joints have parents");
        let r = &rmats[par];
        let off = joint.offset;
        let rotated = [
            r[0][0] * off[0] + r[0][1] * off[1] + r[0][2] * off[2],
            r[1][0] * off[0] + r[1][1] * off[1] + r[1][2] * off[2],
            r[2][0] * off[0] + r[2][1] * off[1] + r[2][2] * off[2],
        ];
        let pp = pos[par];
        pos.push([pp[0] + rotated[0], pp[1] + rotated[1], pp[2] + rotated[2]]);
        let w = hamilton(&wq[par], &blends[j - 1].q);
        rmats.push(rot_matrix(&w));
        wq.push(w);
    }
    (wq, rmats, pos)
}

/// Which gradient the caller wants in the code blocks.
///
/// `Logits` chains through the fixed-support sparsemax Jacobian — the
/// derivative w.r.t. the packed logits themselves, the quantity checked
/// against finite differences. `Codes` stops at the simplex coordinates
/// (∂loss/∂γ, alignment signs included), which is what the projected descent
/// step consumes; without it, a joint whose support collapses to a single
/// atom would receive an identically zero logits gradient (the Jacobian of a
/// vertex is the zero matrix) and freeze there.
#[derive(Clone, Copy, PartialEq)]
enum GradKind {
    Logits,
    Codes,
}

/// Internal loss (and, when requested, its gradient w.r.t. the packed vector).
///
/// The gradient is the exact reverse-mode derivative of this forward pass at
/// the computed sparsemax supports and alignment signs.
fn eval(
    problem: &FitProblem,
    x: &[f64],
    pk: &Packing,
    mut grad: Option<(&mut [f64], GradKind)>,
) -> Result<f64> {
    let k = problem.skeleton.len();
    let blends = blend_joints(problem, x, pk)?;
    let (wq, _rmats, pos) = world_pass(&problem.skeleton, &blends);

    if let Some((g, _)) = grad.as_mut() {
        g.fill(0.0);
    }
    let mut total = 0.0;

    let mut g_pos = vec![[0.0f64; 3]; k];
    let mut g_cam_r = [[0.0f64; 3]; 3];
    let mut g_s = 0.0;
    let mut g_t = [0.0f64; 2];

    // 2D term: s·Π(R_cam · pos) + t against visible observations.
    let any_2d = problem.observed_2d.iter().any(Option::is_some);
    let mut gs: Option<GsForward> = None;
    if any_2d {
        let cb = pk.cam_base;
        let s = x[cb];
        let t = [x[cb + 1], x[cb + 2]];
        let g = gs_forward(&x[cb + 3..cb + 9])?;
        let r = [
            [g.c1[0], g.c2[0], g.c3[0]],
            [g.c1[1], g.c2[1], g.c3[1]],
            [g.c1[2], g.c2[2], g.c3[2]],
        ];
        let two_l2 = 2.0 * problem.lambda_2d;
        for (j, obs) in problem.observed_2d.iter().enumerate() {
            let Some(obs) = obs else { continue };
            let p = pos[j];
            let y = [
                r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2],
                r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2],
            ];
            let res = [s * y[0] + t[0] - obs[0], s * y[1] + t[1] - obs[1]];
            total += problem.lambda_2d * (res[0] * res[0] + res[1] * res[1]);
            if grad.is_some() {
                g_s += two_l2 * (res[0] * y[0] + res[1] * y[1]);
                g_t[0] += two_l2 * res[0];
                g_t[1] += two_l2 * res[1];
                let gy = [two_l2 * s * res[0], two_l2 * s * res[1]];
                for c in 0..3 {
                    g_pos[j][c] += r[0][c] * gy[0] + r[1][c] * gy[1];
                    g_cam_r[0][c] += gy[0] * p[c];
                    g_cam_r[1][c] += gy[1] * p[c];
                }
            }
        }
        gs = Some(g);
    }

    // 3D term: root-relative residuals.
    if let Some(root_obs) = problem.observed_3d[0] {
        let root = pos[0];
        let two_l3 = 2.0 * problem.lambda_3d;
        for (j, obs) in problem.observed_3d.iter().enumerate() {
            let Some(obs) = obs else { continue };
            let mut sq = 0.0;
            for c in 0..3 {
                let d = (pos[j][c] - root[c]) - (obs[c] - root_obs[c]);
                sq += d * d;
                if grad.is_some() {
                    // The matching −d flows to pos[0], which is constant.
                    g_pos[j][c] += two_l3 * d;
                }
            }
            total += problem.lambda_3d * sq;
        }
    }

    let Some((grad, kind)) = grad else {
        return Ok(total);
    };

    // Backward FK sweep: children first, so each node's world-quaternion
    // adjoint is complete before it is pushed to its parent and its own
    // relative rotation.
    let mut g_wq = vec![[0.0f64; 4]; k];
    let mut g_q = vec![[0.0f64; 4]; k];
    for j in (1..k).rev() {
        let joint = problem.skeleton.joint(j);
        let par = joint.parent.expect("non-root joints have parents");
        let gp = g_pos[j];
        for c in 0..3 {
            g_pos[par][c] += gp[c];
        }
        // pos[j] uses R(wq[par])·offset.
        let dw = rot_q_adjoint(&wq[par], &joint.offset, &gp);
        for c in 0..4 {
            g_wq[par][c] += dw[c];
        }
        // wq[j] = wq[par] ⊗ q_j.
        let gw = g_wq[j];
        let to_par = right_product_adjoint(&blends[j - 1].q, &gw);
        for c in 0..4 {
            g_wq[par][c] += to_par[c];
        }
        g_q[j] = left_product_adjoint(&wq[par], &gw);
    }

    // Per-joint blend backward: normalization, alignment signs, and either the
    // sparsemax Jacobian (logits gradient) or the raw simplex gradient.
    for (j, (blend, dict)) in blends.iter().zip(&problem.dictionaries).enumerate() {
        let gq = g_q[j + 1];
        let qdot = dot4(&blend.q, &gq);
        let gu = [
            (gq[0] - blend.q[0] * qdot) / blend.n,
            (gq[1] - blend.q[1] * qdot) / blend.n,
            (gq[2] - blend.q[2] * qdot) / blend.n,
            (gq[3] - blend.q[3] * qdot) / blend.n,
        ];
        let n_j = pk.sizes[j];
        let pivot = dict.atom(blend.dominant);
        let mut g_gamma = vec![0.0; n_j];
        for (i, slot) in g_gamma.iter_mut().enumerate() {
            let atom = dict.atom(i);
            let sign = if dot4(atom, pivot) < 0.0 { -1.0 } else { 1.0 };
            *slot = sign * dot4(atom, &gu);
        }
        let out = &mut grad[pk.offsets[j]..pk.offsets[j] + n_j];
        match kind {
            GradKind::Logits => jacobian_apply(&blend.support, &g_gamma, out),
            GradKind::Codes => out.copy_from_slice(&g_gamma),
        }
    }

    // Camera backward: projection scalars, then Gram–Schmidt.
    let cb = pk.cam_base;
    grad[cb] = g_s;
    grad[cb + 1] = g_t[0];
    grad[cb + 2] = g_t[1];
    if let Some(g) = gs {
        // g_cam_r rows are image axes: R[i][j] = c_j[i], so column j's adjoint
        // picks component j of each row.
        let mut g_c1 = [g_cam_r[0][0], g_cam_r[1][0], g_cam_r[2][0]];
        let mut g_c2 = [g_cam_r[0][1], g_cam_r[1][1], g_cam_r[2][1]];
        let g_c3 = [g_cam_r[0][2], g_cam_r[1][2], g_cam_r[2][2]];
        // c3 = c1 × c2.
        let add1 = cross(&g.c2, &g_c3);
        let add2 = cross(&g_c3, &g.c1);
        for c in 0..3 {
            g_c1[c] += add1[c];
            g_c2[c] += add2[c];
        }
        // c2 = w/‖w‖.
        let cdot = dot3(&g.c2, &g_c2);
        let g_w = [
            (g_c2[0] - g.c2[0] * cdot) / g.n2,
            (g_c2[1] - g.c2[1] * cdot) / g.n2,
            (g_c2[2] - g.c2[2] * cdot) / g.n2,
        ];
        // w = a2 − ⟨c1,a2⟩·c1.
        let wdot = dot3(&g.c1, &g_w);
        let g_a2 = [
            g_w[0] - wdot * g.c1[0],
            g_w[1] - wdot * g.c1[1],
            g_w[2] - wdot * g.c1[2],
        ];
        for c in 0..3 {
            g_c1[c] += -wdot * g.a2[c] - g.proj * g_w[c];
        }
        // c1 = a1/‖a1‖.
        let c1dot = dot3(&g.c1, &g_c1);
        for c in 0..3 {
            grad[cb + 3 + c] = (g_c1[c] - g.c1[c] * c1dot) / g.n1;
            grad[cb + 6 + c] = g_a2[c];
        }
    }

    Ok(total)
}

/// Analytic gradient of [`loss`] w.r.t. per-joint logits and camera.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    /// One block per non-root joint, chained through the fixed-support
    /// sparsemax Jacobian (zero off the support, and zero everywhere when a
    /// support is a single atom).
    pub logits: Vec<Vec<f64>>,
    pub scale: f64,
    pub t: [f64; 2],
    pub r6: [f64; 6],
}

/// Reverse-mode gradient of [`loss`] at explicit logits and camera.
///
/// Matches central finite differences of [`loss`] wherever the sparsemax
/// supports and alignment signs are locally stable.
pub fn loss_gradient(
    problem: &FitProblem,
    logits: &[Vec<f64>],
    camera: &Camera,
) -> Result<LossGradient> {
    if logits.len() != problem.dictionaries.len() {
        return Err(Error::DimensionMismatch {
            context: "per-joint logits",
            expected: problem.dictionaries.len(),
            got: logits.len(),
        });
    }
    let pk = Packing::new(problem);
    let mut x = vec![0.0; pk.total];
    for (j, z) in logits.iter().enumerate() {
        if z.len() != pk.sizes[j] {
            return Err(Error::DimensionMismatch {
                context: "logits length for one joint",
                expected: pk.sizes[j],
                got: z.len(),
            });
        }
        x[pk.offsets[j]..pk.offsets[j] + pk.sizes[j]].copy_from_slice(z);
    }
    let cb = pk.cam_base;
    x[cb] = camera.scale;
    x[cb + 1] = camera.t[0];
    x[cb + 2] = camera.t[1];
    x[cb + 3..cb + 9].copy_from_slice(&camera.r6);

    let mut grad = vec![0.0; pk.total];
    eval(problem, &x, &pk, Some((&mut grad, GradKind::Logits)))?;
    let blocks = problem
        .dictionaries
        .iter()
        .enumerate()
        .map(|(j, _)| grad[pk.offsets[j]..pk.offsets[j] + pk.sizes[j]].to_vec())
        .collect();
    Ok(LossGradient {
        logits: blocks,
        scale: grad[cb],
        t: [grad[cb + 1], grad[cb + 2]],
        r6: [
            grad[cb + 3],
            grad[cb + 4],
            grad[cb + 5],
            grad[cb + 6],
            grad[cb + 7],
            grad[cb + 8],
        ],
    })
}

// ---------------------------------------------------------------------------
// Optimizer.
// ---------------------------------------------------------------------------

/// Rotation candidates for camera initialization: a coarse yaw × pitch grid.
const INIT_YAW_DEG: [f64; 6] = [0.0, 60.0, -60.0, 120.0, -120.0, 180.0];
const INIT_PITCH_DEG: [f64; 3] = [0.0, 30.0, -30.0];

/// Seed the camera block of `x` from a coarse 2D alignment: for each grid
/// rotation, match scale and translation to the observed bounding box, then
/// keep the candidate with the lowest loss. Problems with no visible 2D
/// joints keep the identity camera (the camera does not enter their loss).
fn init_camera(problem: &FitProblem, pk: &Packing, x: &mut [f64]) -> Result<()> {
    let cb = pk.cam_base;
    x[cb] = 1.0;
    x[cb + 1] = 0.0;
    x[cb + 2] = 0.0;
    x[cb + 3..cb + 9].copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    if !problem.observed_2d.iter().any(Option::is_some) {
        return Ok(());
    }

    let blends = blend_joints(problem, x, pk)?;
    let (_, _, pos) = world_pass(&problem.skeleton, &blends);

    // Observed bounding box.
    let mut obs_min = [f64::INFINITY; 2];
    let mut obs_max = [f64::NEG_INFINITY; 2];
    for o in problem.observed_2d.iter().flatten() {
        for c in 0..2 {
            obs_min[c] = obs_min[c].min(o[c]);
            obs_max[c] = obs_max[c].max(o[c]);
        }
    }

    let mut best: Option<(f64, [f64; 9])> = None;
    for yaw in INIT_YAW_DEG {
        for pitch in INIT_PITCH_DEG {
            let a = yaw * math::RAD_PER_DEG;
            let b = pitch * math::RAD_PER_DEG;
            let (sa, ca) = (math::sin(a), math::cos(a));
            let (sb, cb_) = (math::sin(b), math::cos(b));
            // R = Ry(yaw)·Rx(pitch); its first two columns stay orthonormal,
            // so Gram–Schmidt reproduces it exactly.
            let r6 = [ca, 0.0, -sa, sa * sb, cb_, ca * sb];
            let r = [
                [ca, sa * sb, sa * cb_],
                [0.0, cb_, -sb],
                [-sa, sb, ca * cb_],
            ];
            // Bounding box of the rotated, orthographically dropped keypoints.
            let mut pr_min = [f64::INFINITY; 2];
            let mut pr_max = [f64::NEG_INFINITY; 2];
            for (j, o) in problem.observed_2d.iter().enumerate() {
                if o.is_none() {
                    continue;
                }
                let p = pos[j];
                let y = [
                    r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2],
                    r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2],
                ];
                for c in 0..2 {
                    pr_min[c] = pr_min[c].min(y[c]);
                    pr_max[c] = pr_max[c].max(y[c]);
                }
            }
            let obs_extent = (obs_max[0] - obs_min[0]) + (obs_max[1] - obs_min[1]);
            let pr_extent = (pr_max[0] - pr_min[0]) + (pr_max[1] - pr_min[1]);
            let s = if pr_extent > 1e-9 && obs_extent > 0.0 {
                obs_extent / pr_extent
            } else {
                1.0
            };
            let t = [
                0.5 * (obs_min[0] + obs_max[0]) - s * 0.5 * (pr_min[0] + pr_max[0]),
                0.5 * (obs_min[1] + obs_max[1]) - s * 0.5 * (pr_min[1] + pr_max[1]),
            ];
            let cam = [s, t[0], t[1], r6[0], r6[1], r6[2], r6[3], r6[4], r6[5]];
            x[cb..cb + 9].copy_from_slice(&cam);
            let f = eval(problem, x, pk, None)?;
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, cam));
            }
        }
    }
    let (_, cam) = best.expect("grid is non-empty");
    x[cb..cb + 9].copy_from_slice(&cam);
    Ok(())
}

struct RestartRun {
    x: Vec<f64>,
    iterations: usize,
}

/// Current simplex coordinates of every code block in `x`.
fn codes_of(x: &[f64], pk: &Packing) -> Result<Vec<f64>> {
    let mut gamma = vec![0.0; pk.cam_base];
    for (&off, &sz) in pk.offsets.iter().zip(&pk.sizes) {
        let code = sparsemax(&x[off..off + sz])?;
        gamma[off..off + sz].copy_from_slice(code.as_slice());
    }
    Ok(gamma)
}

/// One restart: seeded Gaussian logits, coarse camera alignment, then Armijo
/// backtracking *projected* gradient descent — each code block steps from its
/// current simplex point along −∂loss/∂γ and lands back on the simplex
/// through sparsemax (its native role: Euclidean projection), while the
/// camera block takes a plain gradient step. Descending the raw logits
/// instead would stall whenever a support shrinks to one atom, since the
/// vertex Jacobian is zero; the projected step has no such flat spots. The
/// stored logits are always the pre-projection point, so
/// `sparsemax(logits)` reproduces the returned code exactly.
fn run_restart(
    problem: &FitProblem,
    pk: &Packing,
    config: &FitConfig,
    restart: usize,
) -> Result<RestartRun> {
    let mut rng = rng_from_seed(derive_seed(config.seed, restart as u64));
    let logits = gaussian_vec(&mut rng, pk.cam_base);
    let mut x = vec![0.0; pk.total];
    x[..pk.cam_base].copy_from_slice(&logits);
    init_camera(problem, pk, &mut x)?;

    let mut grad = vec![0.0; pk.total];
    let mut fx = eval(problem, &x, pk, Some((&mut grad, GradKind::Codes)))?;
    let mut gamma = codes_of(&x, pk)?;
    let mut step = config.step0;
    let mut iterations = 0;

    for _ in 0..config.max_iters {
        let mut t = step;
        let mut accepted = false;
        while t > 1e-18 {
            // Code blocks: project(γ − t·g); camera block: plain step.
            let mut cand = vec![0.0; pk.total];
            for i in 0..pk.cam_base {
                cand[i] = gamma[i] - t * grad[i];
            }
            for i in pk.cam_base..pk.total {
                cand[i] = x[i] - t * grad[i];
            }
            // A candidate that fails to evaluate (degenerate camera columns)
            // is treated like an insufficient decrease.
            let (cand_f, cand_gamma) = match eval(problem, &cand, pk, None) {
                Ok(f) if f.is_finite() => (f, codes_of(&cand, pk)?),
                _ => {
                    t *= 0.5;
                    continue;
                }
            };
            // Projected-arc sufficient decrease: the predicted gain is the
            // squared distance actually travelled, divided by the step.
            let mut travelled = 0.0;
            for i in 0..pk.cam_base {
                let d = cand_gamma[i] - gamma[i];
                travelled += d * d;
            }
            for i in pk.cam_base..pk.total {
                let d = cand[i] - x[i];
                travelled += d * d;
            }
            if cand_f <= fx - 1e-4 / t * travelled {
                let decrease = fx - cand_f;
                x = cand;
                gamma = cand_gamma;
                fx = cand_f;
                step = (t * 1.1).min(1e6);
                accepted = true;
                iterations += 1;
                if decrease < config.tol * fx.max(1e-12) {
                    return Ok(RestartRun { x, iterations });
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        eval(problem, &x, pk, Some((&mut grad, GradKind::Codes)))?;
    }
    Ok(RestartRun { x, iterations })
}

fn unpack(problem: &FitProblem, pk: &Packing, x: &[f64]) -> (Vec<Vec<f64>>, Camera) {
    let logits = problem
        .dictionaries
        .iter()
        .enumerate()
        .map(|(j, _)| x[pk.offsets[j]..pk.offsets[j] + pk.sizes[j]].to_vec())
        .collect();
    let cb = pk.cam_base;
    let camera = Camera {
        scale: x[cb],
        t: [x[cb + 1], x[cb + 2]],
        r6: [
            x[cb + 3],
            x[cb + 4],
            x[cb + 5],
            x[cb + 6],
            x[cb + 7],
            x[cb + 8],
        ],
    };
    (logits, camera)
}

/// Recover pose, codes and camera from observations by multi-restart descent.
///
/// Every restart draws its initialization from a stream derived from
/// `(config.seed, restart index)`, so the first `r` restarts of an
/// `r+1`-restart run are identical to an `r`-restart run and the best final
/// loss can only improve as restarts are added. The winner is the restart
/// whose final loss — recomputed through the public [`loss`] — is lowest,
/// with ties broken toward the lower restart index.
pub fn fit(problem: &FitProblem, config: &FitConfig) -> Result<FitResult> {
    if config.restarts == 0 {
        return Err(Error::InvalidInput("fit needs at least one restart".into()));
    }
    ensure_finite(&[config.tol, config.step0], "fit config")?;
    if config.tol < 0.0 || config.step0 <= 0.0 {
        return Err(Error::InvalidInput(
            "fit config: tol must be ≥ 0 and step0 > 0".into(),
        ));
    }
    let pk = Packing::new(problem);

    #[cfg(feature = "parallel")]
    let runs: Result<Vec<RestartRun>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(problem, &pk, config, r))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let runs: Result<Vec<RestartRun>> = (0..config.restarts)
        .map(|r| run_restart(problem, &pk, config, r))
        .collect();
    let runs = runs?;

    let mut best: Option<(usize, Losses, Vec<Vec<f64>>, Camera)> = None;
    for (r, run) in runs.iter().enumerate() {
        let (logits, camera) = unpack(problem, &pk, &run.x);
        let losses = loss(problem, &logits, &camera)?;
        if best.as_ref().is_none_or(|(_, b, _, _)| losses.total < b.total) {
            best = Some((r, losses, logits, camera));
        }
    }
    let (winning_restart, losses, logits, camera) = best.expect("at least one restart ran");
    let pose = problem.pose_from_logits(&logits)?;
    Ok(FitResult {
        logits,
        pose,
        camera,
        losses,
        iterations: runs[winning_restart].iterations,
        winning_restart,
    })
}
