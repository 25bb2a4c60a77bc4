//! Spherical k-means baseline and the coverage-ratio metric.
//!
//! K-means places isolated representative rotations; a learned dictionary
//! additionally spans the convex hull between its atoms. The coverage ratio —
//! the fraction of held-out rotations reconstructible within a geodesic
//! threshold — is the yardstick this crate uses to compare the two.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dict::{solve_code, Dictionary, InnerConfig, Mode, Provenance};
use crate::error::{Error, Result};
use crate::math;
use crate::quat::{aligned_mean, geodesic_distance, nlerp, UnitQuaternion};
use crate::rng::{derive_seed, rng_from_seed};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How well a dictionary covers a held-out sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Producing method of the dictionary (`"obdl"`, `"kmeans"`, ...).
    pub method: String,
    /// Atom count of the dictionary.
    pub n_atoms: usize,
    /// Acceptance threshold, degrees.
    pub threshold_deg: f64,
    /// `|{errors <= threshold}| / samples`, computed exactly from the list
    /// below.
    pub ratio: f64,
    /// Per-sample geodesic reconstruction errors, degrees, in input order.
    pub per_sample_errors_deg: Vec<f64>,
}

/// Squared aligned-chordal distance `2 − 2|⟨p, q⟩|`.
///
/// Monotone in the geodesic angle, so nearest-centroid assignments agree with
/// geodesic assignments; unlike the geodesic it is exactly the quantity
/// Lloyd's centroid step (normalized aligned mean) minimizes, which makes the
/// iteration provably monotone in this inertia.
fn aligned_chordal_sq(p: &UnitQuaternion, q: &UnitQuaternion) -> f64 {
    (2.0 - 2.0 * math::abs(p.dot(q))).max(0.0)
}

/// Sum over samples of the squared geodesic distance to the nearest centroid.
pub fn geodesic_inertia(centroids: &[UnitQuaternion], data: &[UnitQuaternion]) -> f64 {
    data.iter()
        .map(|q| {
            centroids
                .iter()
                .map(|c| {
                    let d = geodesic_distance(q, c);
                    d * d
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

fn nearest_centroid(q: &UnitQuaternion, centroids: &[UnitQuaternion]) -> usize {
    let mut best = 0usize;
    let mut best_dot = -1.0;
    for (i, c) in centroids.iter().enumerate() {
        let d = math::abs(q.dot(c));
        if d > best_dot {
            best_dot = d;
            best = i;
        }
    }
    best
}

/// Spherical k-means on rotations, with per-iteration inertia trace.
///
/// k-means++ seeding (distances measured on the sign-aligned sphere), Lloyd
/// iterations with assignment by geodesic distance (equivalently, largest
/// `|dot|`), centroids as normalized sign-aligned means, and empty clusters
/// re-seeded from the point farthest from its assigned centroid. The trace
/// records the aligned-chordal inertia after each centroid update.
pub fn kmeans_quat_with_trace(
    data: &[UnitQuaternion],
    n: usize,
    seed: u64,
    max_iters: usize,
) -> Result<(Dictionary, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::InvalidInput("kmeans_quat: empty data".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("kmeans_quat: need at least one centroid".into()));
    }
    let mut rng = rng_from_seed(seed);

    // --- k-means++ seeding ---
    let mut centroids: Vec<UnitQuaternion> = Vec::with_capacity(n);
    centroids.push(data[rng.random_range(0..data.len())]);
    let mut d2: Vec<f64> = data
        .iter()
        .map(|q| {
            let g = geodesic_distance(q, &centroids[0]);
            g * g
        })
        .collect();
    while centroids.len() < n {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut chosen = data.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            // All residual distances zero (duplicates or n > distinct data):
            // any point works, take a random one.
            rng.random_range(0..data.len())
        };
        let c = data[pick];
        centroids.push(c);
        for (q, slot) in data.iter().zip(d2.iter_mut()) {
            let g = geodesic_distance(q, &c);
            *slot = slot.min(g * g);
        }
    }

    // --- Lloyd iterations ---
    let mut assignment: Vec<usize> = data.iter().map(|q| nearest_centroid(q, centroids.as_slice())).collect();
    let mut trace = Vec::new();
    let mut iters_run = 0usize;
    for _ in 0..max_iters {
        iters_run += 1;

        // Re-seed empty clusters from the farthest points before updating.
        // Only clusters with at least two members may donate a point; with
        // more centroids than points some clusters stay empty and keep their
        // previous (duplicate) centroid.
        loop {
            let mut counts = vec![0usize; n];
            for &a in &assignment {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let farthest = (0..data.len())
                .filter(|&i| counts[assignment[i]] >= 2)
                .max_by(|&i, &j| {
                    let di = geodesic_distance(&data[i], &centroids[assignment[i]]);
                    let dj = geodesic_distance(&data[j], &centroids[assignment[j]]);
                    di.partial_cmp(&dj).unwrap()
                });
            let Some(farthest) = farthest else {
                break;
            };
            centroids[empty] = data[farthest];
            assignment[farthest] = empty;
        }

        // Centroid update: normalized aligned mean of each cluster.
        for c in 0..n {
            let members: Vec<UnitQuaternion> = data
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == c)
                .map(|(q, _)| *q)
                .collect();
            if members.is_empty() {
                continue;
            }
            match aligned_mean(&members, &centroids[c]) {
                Ok(m) => centroids[c] = m,
                // A perfectly cancelling cluster: keep the previous centroid.
                Err(_) => {}
            }
        }

        trace.push(
            data.iter()
                .zip(&assignment)
                .map(|(q, &a)| aligned_chordal_sq(q, &centroids[a]))
                .sum(),
        );

        // Re-assign; stop when stable.
        let next: Vec<usize> = data.iter().map(|q| nearest_centroid(q, &centroids)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }

    let mut notes = Vec::new();
    if n > data.len() {
        notes.push(String::from("requested more centroids than samples; duplicates expected"));
    }
    let mut seen = centroids.clone();
    seen.sort_by(|a, b| a.components().partial_cmp(&b.components()).unwrap());
    if seen.windows(2).any(|w| w[0] == w[1]) {
        notes.push(String::from("duplicate centroids present"));
    }

    let provenance = Provenance {
        method: "kmeans".into(),
        seed,
        batch_size: 0,
        steps: iters_run,
        momentum: 0.0,
        inner: InnerConfig::default(),
        notes,
    };
    let dict = Dictionary::from_quaternions(String::new(), &centroids, provenance)?;
    Ok((dict, trace))
}

/// Spherical k-means on rotations; see [`kmeans_quat_with_trace`].
pub fn kmeans_quat(data: &[UnitQuaternion], n: usize, seed: u64, max_iters: usize) -> Result<Dictionary> {
    kmeans_quat_with_trace(data, n, seed, max_iters).map(|(d, _)| d)
}

/// Fraction of held-out rotations a dictionary reconstructs within a
/// geodesic threshold.
///
/// Each sample gets its own best-of-`restarts` simplex-code solve (the same
/// inner machinery the learner uses, plus a deterministic nearest-atom
/// restart), is reconstructed with [`nlerp`], and scored by geodesic error.
/// Samples are independent; with the `parallel` feature they are evaluated
/// concurrently with per-sample derived seeds, so the report is identical
/// regardless of thread count.
pub fn coverage(
    dict: &Dictionary,
    data: &[UnitQuaternion],
    threshold_deg: f64,
    inner: &InnerConfig,
    restarts: usize,
    seed: u64,
) -> Result<CoverageReport> {
    if dict.mode() != Mode::Quaternion {
        return Err(Error::InvalidInput("coverage needs a quaternion dictionary".into()));
    }
    if data.is_empty() {
        return Err(Error::InvalidInput("coverage: empty sample set".into()));
    }
    if !(threshold_deg >= 0.0 && threshold_deg.is_finite()) {
        return Err(Error::InvalidInput("coverage threshold must be finite and >= 0".into()));
    }
    let atoms = dict.atoms_quat()?;

    let sample_error = |i: usize| -> Result<f64> {
        let q = &data[i];
        let fit = solve_code(dict, &q.components(), inner, restarts, derive_seed(seed, i as u64))?;
        let recon = nlerp(fit.code.as_slice(), atoms)?;
        Ok(geodesic_distance(&recon, q) * math::DEG_PER_RAD)
    };

    #[cfg(feature = "parallel")]
    let errors: Result<Vec<f64>> = (0..data.len()).into_par_iter().map(sample_error).collect();
    #[cfg(not(feature = "parallel"))]
    let errors: Result<Vec<f64>> = (0..data.len()).map(sample_error).collect();
    let per_sample_errors_deg = errors?;

    let covered = per_sample_errors_deg.iter().filter(|&&e| e <= threshold_deg).count();
    Ok(CoverageReport {
        method: dict.provenance().method.clone(),
        n_atoms: dict.n_atoms(),
        threshold_deg,
        ratio: covered as f64 / per_sample_errors_deg.len() as f64,
        per_sample_errors_deg,
    })
}
