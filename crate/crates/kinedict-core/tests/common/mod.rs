//! Shared oracles for the integration suite.
//!
//! Everything here recomputes a quantity the library also computes, but by a
//! deliberately different route (brute force, closed forms, homogeneous
//! matrices), so agreement between the two is evidence rather than tautology.

#![allow(dead_code)] // each test binary pulls in its own subset

use kinedict_core::kinematics::{Pose, Skeleton};
use kinedict_core::quat::UnitQuaternion;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gauss_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| gauss(rng)).collect()
}

pub const DEG: f64 = core::f64::consts::PI / 180.0;

// ---------------------------------------------------------------------------
// Simplex projection by exhaustive support enumeration.
// ---------------------------------------------------------------------------

/// Exact projection of `z` onto the probability simplex, by brute force.
///
/// For every non-empty candidate support the equality-constrained least
/// squares has the closed form `p_i = z_i − τ` with `τ = (Σ_S z_i − 1)/|S|`;
/// keep the candidates whose weights are all non-negative and return the one
/// closest to `z`. The true projection appears among the candidates (its own
/// support passes the filter), and every surviving candidate is a simplex
/// point, so the minimum-distance survivor is the projection.
pub fn sparsemax_qp_oracle(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    assert!((1..=16).contains(&n), "oracle is exponential in n");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let sum: f64 = members.iter().map(|&i| z[i]).sum();
        let tau = (sum - 1.0) / members.len() as f64;
        let mut p = vec![0.0; n];
        let mut feasible = true;
        for &i in &members {
            let v = z[i] - tau;
            if v < 0.0 {
                feasible = false;
                break;
            }
            p[i] = v;
        }
        if !feasible {
            continue;
        }
        let dist: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, p));
        }
    }
    // The singleton holding the largest entry always yields p = e_i, which is
    // feasible, so a candidate exists for every input.
    best.expect("a singleton support is always feasible").1
}

// ---------------------------------------------------------------------------
// Plain 3x3 / 4x4 matrix arithmetic for the rotation and kinematics oracles.
// ---------------------------------------------------------------------------

pub type Mat3 = [[f64; 3]; 3];
pub type Mat4 = [[f64; 4]; 4];

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat3_transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[j][i];
        }
    }
    out
}

pub fn mat3_vec(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub fn mat3_max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Rotation matrix from axis (unit) and angle: `R = I + sinθ·K + (1−cosθ)·K²`.
pub fn rodrigues(axis: [f64; 3], angle: f64) -> Mat3 {
    let (x, y, z) = (axis[0], axis[1], axis[2]);
    let k = [[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]];
    let k2 = mat3_mul(&k, &k);
    let (s, c) = angle.sin_cos();
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let id = if i == j { 1.0 } else { 0.0 };
            *cell = id + s * k[i][j] + (1.0 - c) * k2[i][j];
        }
    }
    out
}

/// Axis and angle of a rotation matrix: `θ = acos((tr − 1)/2)`, axis from the
/// skew part. Callers must keep θ away from 0 and π where the skew part
/// vanishes.
pub fn matrix_axis_angle(r: &Mat3) -> ([f64; 3], f64) {
    let tr = r[0][0] + r[1][1] + r[2][2];
    let angle = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
    let s = angle.sin();
    assert!(s > 1e-6, "axis extraction needs the angle away from 0 and pi");
    let axis = [
        (r[2][1] - r[1][2]) / (2.0 * s),
        (r[0][2] - r[2][0]) / (2.0 * s),
        (r[1][0] - r[0][1]) / (2.0 * s),
    ];
    (axis, angle)
}

/// Rotation matrix of a unit quaternion via the outer-product form
/// `R = (w² − ‖v‖²)·I + 2·v·vᵀ + 2w·[v]×` — algebraically different from the
/// library's expanded per-entry formula, so a shared transcription error is
/// unlikely.
pub fn quat_matrix_oracle(q: &UnitQuaternion) -> Mat3 {
    let [w, x, y, z] = q.components();
    let v = [x, y, z];
    let lead = w * w - (x * x + y * y + z * z);
    let skew = [[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]];
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let id = if i == j { 1.0 } else { 0.0 };
            *cell = lead * id + 2.0 * v[i] * v[j] + 2.0 * w * skew[i][j];
        }
    }
    out
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn homogeneous(r: &Mat3, t: [f64; 3]) -> Mat4 {
    [
        [r[0][0], r[0][1], r[0][2], t[0]],
        [r[1][0], r[1][1], r[1][2], t[1]],
        [r[2][0], r[2][1], r[2][2], t[2]],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Forward kinematics recomputed with 4×4 homogeneous transforms:
/// `G_root = [I | offset_root]`, `G_j = G_parent · [R(q_j) | offset_j]`, and
/// the joint position is the translation column of `G_j`.
pub fn fk_homogeneous_oracle(skeleton: &Skeleton, pose: &Pose) -> Vec<[f64; 3]> {
    let joints = skeleton.joints();
    let mut world: Vec<Mat4> = Vec::with_capacity(joints.len());
    for (j, joint) in joints.iter().enumerate() {
        let local_rot = match j {
            0 => IDENTITY3,
            _ => quat_matrix_oracle(&pose.rotations()[j - 1]),
        };
        let local = homogeneous(&local_rot, joint.offset);
        let g = match joint.parent {
            None => local,
            Some(p) => mat4_mul(&world[p], &local),
        };
        world.push(g);
    }
    world.iter().map(|g| [g[0][3], g[1][3], g[2][3]]).collect()
}

// ---------------------------------------------------------------------------
// Optimal assignment (for matching learned atoms to planted ones).
// ---------------------------------------------------------------------------

/// Minimum-cost perfect assignment of rows to columns, by dynamic programming
/// over column subsets — exact, O(n·2ⁿ), fine for n ≤ 16. Returns the column
/// chosen for each row and the total cost.
pub fn optimal_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    assert!((1..=16).contains(&n));
    assert!(cost.iter().all(|row| row.len() == n));
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full];
    // Column assigned to the last row when reaching this mask optimally.
    let mut choice = vec![usize::MAX; full];
    dp[0] = 0.0;
    for mask in 0..full {
        if !dp[mask].is_finite() {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == n {
            continue;
        }
        for col in 0..n {
            if mask >> col & 1 == 1 {
                continue;
            }
            let next = mask | (1 << col);
            let c = dp[mask] + cost[row][col];
            if c < dp[next] {
                dp[next] = c;
                choice[next] = col;
            }
        }
    }
    let mut assign = vec![0usize; n];
    let mut mask = full - 1;
    for row in (0..n).rev() {
        let col = choice[mask];
        assign[row] = col;
        mask &= !(1 << col);
    }
    (assign, dp[full - 1])
}

// ---------------------------------------------------------------------------
// Distance to the convex hull of a small atom set.
// ---------------------------------------------------------------------------

/// Solve a dense linear system by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot collapses (singular system).
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Euclidean distance from `x` to the convex hull of `atoms`, by enumerating
/// supports (≤ 16 atoms). For each support the equality-constrained least
/// squares `min ‖A·λ − x‖² s.t. Σλ = 1` is solved via its KKT system; the
/// projection onto the hull sits in the interior of some face, where it is
/// exactly such a stationary point with non-negative weights, so the best
/// feasible candidate attains the hull distance.
pub fn hull_distance(x: &[f64], atoms: &[&[f64]]) -> f64 {
    let n = atoms.len();
    let d = x.len();
    assert!((1..=16).contains(&n));
    assert!(atoms.iter().all(|a| a.len() == d));
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let s = members.len();
        // KKT system: [AᵀA 1; 1ᵀ 0]·[λ; μ] = [Aᵀx; 1].
        let mut m = vec![vec![0.0; s + 1]; s + 1];
        let mut rhs = vec![0.0; s + 1];
        for (r, &ir) in members.iter().enumerate() {
            for (c, &ic) in members.iter().enumerate() {
                m[r][c] = dot(atoms[ir], atoms[ic]);
            }
            m[r][s] = 1.0;
            m[s][r] = 1.0;
            rhs[r] = dot(atoms[ir], x);
        }
        rhs[s] = 1.0;
        let Some(sol) = solve_dense(m, rhs) else {
            continue;
        };
        if sol[..s].iter().any(|&l| l < -1e-12) {
            continue;
        }
        let mut resid = 0.0;
        for (k, &xk) in x.iter().enumerate() {
            let yk: f64 = members.iter().zip(&sol[..s]).map(|(&i, &l)| l * atoms[i][k]).sum();
            resid += (yk - xk) * (yk - xk);
        }
        best = best.min(resid.sqrt());
    }
    assert!(best.is_finite(), "every singleton support is solvable");
    best
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Synthetic rotation data.
// ---------------------------------------------------------------------------

/// `k` random rotations, rejection-sampled until all pairwise geodesic
/// distances are at least `min_sep_deg` degrees.
pub fn separated_centers<R: Rng + ?Sized>(rng: &mut R, k: usize, min_sep_deg: f64) -> Vec<UnitQuaternion> {
    let min = min_sep_deg * DEG;
    let mut centers: Vec<UnitQuaternion> = Vec::with_capacity(k);
    let mut attempts = 0;
    while centers.len() < k {
        attempts += 1;
        assert!(attempts < 100_000, "separation {min_sep_deg} deg too strict for k = {k}");
        let q = UnitQuaternion::random(rng);
        if centers
            .iter()
            .all(|c| kinedict_core::quat::geodesic_distance(c, &q) >= min)
        {
            centers.push(q);
        }
    }
    centers
}

/// One sample near `center`: compose with a rotation whose rotation vector is
/// an isotropic Gaussian of standard deviation `spread_deg` degrees.
pub fn cluster_sample<R: Rng + ?Sized>(
    rng: &mut R,
    center: &UnitQuaternion,
    spread_deg: f64,
) -> UnitQuaternion {
    let s = spread_deg * DEG;
    let v = [s * gauss(rng), s * gauss(rng), s * gauss(rng)];
    let perturb = UnitQuaternion::from_rotation_vector(v).expect("finite rotation vector");
    center.compose(&perturb)
}
