//! Euclidean projection onto the probability simplex (sparsemax) and its
//! generalized Jacobian.
//!
//! Unlike softmax, the projection hits the simplex boundary: coordinates that
//! fall below the threshold come out *exactly* zero, which is what makes the
//! sparse codes in this crate genuinely sparse (and their supports — the sets
//! of selected dictionary atoms — well-defined).

use alloc::vec::Vec;

use crate::error::{ensure_finite, Error, Result};
use crate::mat::Mat;

/// A point on the probability simplex.
///
/// Invariants: entries non-negative (exactly — clipped entries are `0.0`, not
/// a small epsilon), summing to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    p: Vec<f64>,
}

impl SimplexPoint {
    /// The coordinates.
    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }
}

/// Project `z` onto the probability simplex: `argmin_{p ∈ Δ} ‖p − z‖²`.
///
/// Sort-and-threshold algorithm: sort `z` descending (stable, so ties keep
/// their original order), keep the largest prefix length `k` with
/// `1 + k·z_(k) > Σ_{j≤k} z_(j)`, set `τ = (Σ_{j≤k} z_(j) − 1)/k`, and output
/// `[z − τ]₊`. Runs in O(N log N) and produces exact zeros outside the
/// support.
pub fn sparsemax(z: &[f64]) -> Result<SimplexPoint> {
    if z.is_empty() {
        return Err(Error::InvalidInput("sparsemax of an empty vector".into()));
    }
    ensure_finite(z, "sparsemax input")?;

    let mut sorted: Vec<f64> = z.to_vec();
    // Descending; total order is fine, inputs are finite.
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut cumsum = 0.0;
    let mut k = 0usize;
    let mut tau = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let kk = (i + 1) as f64;
        if 1.0 + kk * v > cumsum {
            k = i + 1;
            tau = (cumsum - 1.0) / kk;
        }
    }
    debug_assert!(k >= 1, "the largest element always satisfies the prefix test");
    let _ = k;

    let p = z
        .iter()
        .map(|&v| if v > tau { v - tau } else { 0.0 })
        .collect();
    Ok(SimplexPoint { p })
}

/// The generalized Jacobian of [`sparsemax`] at `z`.
///
/// With `s` the 0/1 indicator of the support `S` of the computed output,
/// `J = Diag(s) − s·sᵀ/|S|`. At points where the support is about to change
/// the projection is not differentiable; this returns the subgradient
/// selection consistent with the support actually produced, which is the
/// choice a descent method needs.
pub fn sparsemax_jacobian(z: &[f64]) -> Result<Mat> {
    let p = sparsemax(z)?;
    let support = p.support();
    let inv = 1.0 / support.len() as f64;
    let n = z.len();
    let mut j = Mat::zeros(n, n);
    for &r in &support {
        for &c in &support {
            j.set(r, c, if r == c { 1.0 - inv } else { -inv });
        }
    }
    Ok(j)
}

/// Apply the sparsemax Jacobian at `z` to a vector without materializing the
/// matrix: `J·g = s∘g − s·(Σ_{i∈S} g_i)/|S|`. The hot path of code updates.
pub(crate) fn jacobian_apply(support: &[usize], g: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    if support.is_empty() {
        return;
    }
    let mean: f64 = support.iter().map(|&i| g[i]).sum::<f64>() / support.len() as f64;
    for &i in support {
        out[i] = g[i] - mean;
    }
}

/// Build a `SimplexPoint` from raw coordinates, validating the invariants.
pub fn simplex_point(p: Vec<f64>) -> Result<SimplexPoint> {
    if p.is_empty() {
        return Err(Error::InvalidInput("empty simplex point".into()));
    }
    ensure_finite(&p, "simplex point")?;
    if p.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("simplex point has a negative entry".into()));
    }
    let sum: f64 = p.iter().sum();
    if crate::math::abs(sum - 1.0) > 1e-9 {
        return Err(Error::InvalidInput(alloc::format!(
            "simplex point sums to {sum}, not 1"
        )));
    }
    Ok(SimplexPoint { p })
}
