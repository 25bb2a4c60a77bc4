//! Shared oracles for the acceptance suite.
//!
//! Everything here recomputes a quantity the library also computes, but by a
//! deliberately different route (brute force, closed forms, homogeneous
//! matrices, an off-the-shelf SVD), so agreement between the two is evidence
//! rather than tautology.

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

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

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
// Plain 3x3 / 4x4 matrix arithmetic for the kinematics oracle.
// ---------------------------------------------------------------------------

pub type Mat3 = [[f64; 3]; 3];
pub type Mat4 = [[f64; 4]; 4];

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
// Synthetic rotation data.
// ---------------------------------------------------------------------------

/// `k` random rotations, rejection-sampled until all pairwise geodesic
/// distances are at least `min_sep_deg` degrees.
pub fn separated_centers<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    min_sep_deg: f64,
) -> Vec<UnitQuaternion> {
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

// ---------------------------------------------------------------------------
// Similarity alignment (Procrustes with scale) via an independent SVD.
// ---------------------------------------------------------------------------

/// Per-point residuals after the best similarity transform `x ↦ s·R·x + t`
/// mapping `fitted` onto `truth` (least squares over all proper rotations,
/// positive scales and translations; the classical closed form via the SVD of
/// the cross-covariance, computed here with nalgebra rather than any code
/// under test).
pub fn procrustes_aligned_errors(fitted: &[[f64; 3]], truth: &[[f64; 3]]) -> Vec<f64> {
    assert_eq!(fitted.len(), truth.len());
    let k = fitted.len() as f64;
    assert!(k >= 3.0, "a similarity needs at least three points");
    let centroid = |pts: &[[f64; 3]]| {
        let mut c = [0.0; 3];
        for p in pts {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi / k;
            }
        }
        c
    };
    let mu_x = centroid(fitted);
    let mu_y = centroid(truth);

    // Cross-covariance Σ = (1/k)·Σᵢ (yᵢ−μy)(xᵢ−μx)ᵀ and source variance.
    let mut sigma = nalgebra::Matrix3::<f64>::zeros();
    let mut var_x = 0.0;
    for (x, y) in fitted.iter().zip(truth) {
        let xc = [x[0] - mu_x[0], x[1] - mu_x[1], x[2] - mu_x[2]];
        let yc = [y[0] - mu_y[0], y[1] - mu_y[1], y[2] - mu_y[2]];
        for r in 0..3 {
            for c in 0..3 {
                sigma[(r, c)] += yc[r] * xc[c] / k;
            }
        }
        var_x += (xc[0] * xc[0] + xc[1] * xc[1] + xc[2] * xc[2]) / k;
    }
    assert!(var_x > 1e-12, "degenerate (coincident) source points");

    let svd = sigma.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    // Reflection guard: flip the smallest singular direction if needed so the
    // recovered map is a proper rotation.
    let flip = if (u.determinant() * v_t.determinant()) < 0.0 { -1.0 } else { 1.0 };
    let d = nalgebra::Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, flip));
    let rot = u * d * v_t;
    let scale = (svd.singular_values[0]
        + svd.singular_values[1]
        + flip * svd.singular_values[2])
        / var_x;
    let t = nalgebra::Vector3::new(mu_y[0], mu_y[1], mu_y[2])
        - scale * rot * nalgebra::Vector3::new(mu_x[0], mu_x[1], mu_x[2]);

    fitted
        .iter()
        .zip(truth)
        .map(|(x, y)| {
            let mapped = scale * rot * nalgebra::Vector3::new(x[0], x[1], x[2]) + t;
            let dy = nalgebra::Vector3::new(y[0], y[1], y[2]) - mapped;
            dy.norm()
        })
        .collect()
}

#[cfg(test)]
mod self_checks {
    use super::*;

    /// The alignment must recover an exact planted similarity to machine
    /// precision — a sanity check of the oracle itself.
    #[test]
    fn procrustes_recovers_a_planted_similarity() {
        let mut r = rng(0x77aa);
        let q = UnitQuaternion::random(&mut r);
        let m = quat_matrix_oracle(&q);
        let s = 1.7;
        let t = [0.3, -1.1, 0.25];
        let pts: Vec<[f64; 3]> = (0..10)
            .map(|_| [gauss(&mut r), gauss(&mut r), gauss(&mut r)])
            .collect();
        let mapped: Vec<[f64; 3]> = pts
            .iter()
            .map(|p| {
                let rp = [
                    m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
                    m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
                    m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
                ];
                [s * rp[0] + t[0], s * rp[1] + t[1], s * rp[2] + t[2]]
            })
            .collect();
        for e in procrustes_aligned_errors(&pts, &mapped) {
            assert!(e < 1e-10, "residual {e:.3e} after exact similarity");
        }
    }
}
