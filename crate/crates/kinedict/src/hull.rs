//! Hull plots: project a quaternion dictionary and samples to 2D and draw
//! the convex hull of the atoms, the active atoms, and the reconstruction.
//!
//! Projection is PCA on sign-aligned quaternion coordinates: every atom and
//! sample is flipped (if needed) into the hemisphere of the first atom, the
//! principal directions are computed from the atoms alone, and all points are
//! projected onto the top two. The SVG is emitted only when the dictionary
//! has at least 3 atoms; the CSV always is.

use kinedict_core::dict::{Dictionary, Mode};
use kinedict_core::quat::{nlerp, UnitQuaternion};

use crate::error::{CliError, CliResult};

/// Everything `plot-hull` produces, before any file is written.
#[derive(Debug, Clone, PartialEq)]
pub struct HullPlot {
    /// `None` when the dictionary has fewer than 3 atoms.
    pub svg: Option<String>,
    /// One row per atom, one per sample, one for the reconstruction.
    pub csv: String,
    /// Indices of atoms with nonzero code weight, ascending.
    pub active_atoms: Vec<usize>,
    pub atom_points: Vec<[f64; 2]>,
    pub sample_points: Vec<[f64; 2]>,
    pub reconstruction_point: [f64; 2],
    /// Hull vertices as atom indices, counter-clockwise. Empty when no SVG.
    pub hull: Vec<usize>,
}

/// Flip `q`'s components into the hemisphere of `reference`.
fn aligned_components(q: &UnitQuaternion, reference: &UnitQuaternion) -> [f64; 4] {
    let c = q.components();
    if q.dot(reference) < 0.0 {
        [-c[0], -c[1], -c[2], -c[3]]
    } else {
        c
    }
}

/// Eigen-decomposition of a symmetric 4x4 matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues (descending) and matching unit eigenvectors, each with
/// a deterministic sign (largest-magnitude component positive).
fn jacobi_eigen_4(mut a: [[f64; 4]; 4]) -> ([f64; 4], [[f64; 4]; 4]) {
    let mut v = [[0.0; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..60 {
        let off: f64 = (0..4)
            .flat_map(|p| ((p + 1)..4).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off < 1e-28 {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    // Columns of v are eigenvectors; sort by eigenvalue descending.
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let mut values = [0.0; 4];
    let mut vectors = [[0.0; 4]; 4];
    for (slot, &col) in order.iter().enumerate() {
        values[slot] = a[col][col];
        for k in 0..4 {
            vectors[slot][k] = v[k][col];
        }
        // Deterministic sign: make the largest-magnitude component positive.
        let lead = (0..4)
            .max_by(|&i, &j| {
                vectors[slot][i]
                    .abs()
                    .partial_cmp(&vectors[slot][j].abs())
                    .unwrap()
            })
            .unwrap();
        if vectors[slot][lead] < 0.0 {
            for entry in vectors[slot].iter_mut() {
                *entry = -*entry;
            }
        }
    }
    (values, vectors)
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Andrew's monotone chain; returns hull point indices counter-clockwise.
fn convex_hull(points: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        points[i]
            .partial_cmp(&points[j])
            .expect("finite projected coordinates")
    });
    idx.dedup_by(|&mut i, &mut j| points[i] == points[j]);
    if idx.len() < 3 {
        return idx;
    }
    let cross = |o: usize, a: usize, b: usize| -> f64 {
        (points[a][0] - points[o][0]) * (points[b][1] - points[o][1])
            - (points[a][1] - points[o][1]) * (points[b][0] - points[o][0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(idx.len() + 1);
    for &i in &idx {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in idx.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0
        {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    hull
}

/// Shortest round-trip decimal for CSV cells.
fn real(v: f64) -> String {
    format!("{v}")
}

/// Fixed-precision coordinate for SVG attributes.
fn coord(v: f64) -> String {
    format!("{v:.3}")
}

/// Build the hull plot for `dict`, a set of `samples`, and the simplex
/// `codes` of the sample at `highlight`.
pub fn emit_hull_plot(
    dict: &Dictionary,
    samples: &[UnitQuaternion],
    highlight: usize,
    codes: &[f64],
) -> CliResult<HullPlot> {
    if dict.mode() != Mode::Quaternion {
        return Err(CliError::Usage(
            "plot-hull needs a quaternion-mode dictionary".into(),
        ));
    }
    if samples.is_empty() {
        return Err(CliError::Data("plot-hull: no samples".into()));
    }
    if highlight >= samples.len() {
        return Err(CliError::Usage(format!(
            "--index {highlight} out of range for {} samples",
            samples.len()
        )));
    }
    if codes.len() != dict.n_atoms() {
        return Err(CliError::Usage(format!(
            "codes have {} entries for {} atoms",
            codes.len(),
            dict.n_atoms()
        )));
    }
    let n = dict.n_atoms();
    let atoms_quat = dict.atoms_quat().expect("quaternion mode checked above");
    let reconstruction = nlerp(codes, atoms_quat)
        .map_err(|e| CliError::Numeric(format!("reconstructing the coded rotation: {e}")))?;

    // Sign-align everything to the first atom's hemisphere.
    let reference = atoms_quat[0];
    let atom_coords: Vec<[f64; 4]> = atoms_quat
        .iter()
        .map(|a| aligned_components(a, &reference))
        .collect();
    let sample_coords: Vec<[f64; 4]> = samples
        .iter()
        .map(|s| aligned_components(s, &reference))
        .collect();
    let reconstruction_coords = aligned_components(&reconstruction, &reference);

    // PCA frame from the atoms alone.
    let mut mean = [0.0; 4];
    for a in &atom_coords {
        for k in 0..4 {
            mean[k] += a[k] / n as f64;
        }
    }
    let mut cov = [[0.0; 4]; 4];
    for a in &atom_coords {
        for r in 0..4 {
            for c in 0..4 {
                cov[r][c] += (a[r] - mean[r]) * (a[c] - mean[c]) / n as f64;
            }
        }
    }
    let (_, axes) = jacobi_eigen_4(cov);
    let project = |x: &[f64; 4]| -> [f64; 2] {
        let centered = [x[0] - mean[0], x[1] - mean[1], x[2] - mean[2], x[3] - mean[3]];
        [dot4(&axes[0], &centered), dot4(&axes[1], &centered)]
    };
    let atom_points: Vec<[f64; 2]> = atom_coords.iter().map(|a| project(a)).collect();
    let sample_points: Vec<[f64; 2]> = sample_coords.iter().map(|s| project(s)).collect();
    let reconstruction_point = project(&reconstruction_coords);

    let active_atoms: Vec<usize> = (0..n).filter(|&j| codes[j] > 0.0).collect();

    // CSV: atoms, then samples, then the reconstruction — no header row.
    let mut csv = String::new();
    for (j, p) in atom_points.iter().enumerate() {
        let active = u8::from(active_atoms.contains(&j));
        csv.push_str(&format!("atom,{j},{},{},{active}\n", real(p[0]), real(p[1])));
    }
    for (i, p) in sample_points.iter().enumerate() {
        let hl = u8::from(i == highlight);
        csv.push_str(&format!("sample,{i},{},{},{hl}\n", real(p[0]), real(p[1])));
    }
    csv.push_str(&format!(
        "reconstruction,0,{},{},1\n",
        real(reconstruction_point[0]),
        real(reconstruction_point[1])
    ));

    let (svg, hull) = if n >= 3 {
        let hull = convex_hull(&atom_points);
        (
            Some(render_svg(
                &atom_points,
                &sample_points,
                reconstruction_point,
                &hull,
                &active_atoms,
                highlight,
            )),
            hull,
        )
    } else {
        (None, Vec::new())
    };

    Ok(HullPlot {
        svg,
        csv,
        active_atoms,
        atom_points,
        sample_points,
        reconstruction_point,
        hull,
    })
}

fn render_svg(
    atoms: &[[f64; 2]],
    samples: &[[f64; 2]],
    reconstruction: [f64; 2],
    hull: &[usize],
    active: &[usize],
    highlight: usize,
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const MARGIN: f64 = 40.0;

    let all = atoms
        .iter()
        .chain(samples.iter())
        .chain(std::iter::once(&reconstruction));
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in all {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = [(hi[0] - lo[0]).max(1e-9), (hi[1] - lo[1]).max(1e-9)];
    let scale = ((W - 2.0 * MARGIN) / span[0]).min((H - 2.0 * MARGIN) / span[1]);
    let to_px = |p: [f64; 2]| -> [f64; 2] {
        [
            MARGIN + (p[0] - lo[0]) * scale,
            // SVG y grows downward; flip so the second principal axis points up.
            H - MARGIN - (p[1] - lo[1]) * scale,
        ]
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    if hull.len() >= 2 {
        let pts: Vec<String> = hull
            .iter()
            .map(|&i| {
                let p = to_px(atoms[i]);
                format!("{},{}", coord(p[0]), coord(p[1]))
            })
            .collect();
        svg.push_str(&format!(
            "  <polygon class=\"hull\" points=\"{}\" fill=\"#f3e9ff\" \
             stroke=\"#8757c9\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
    }

    for (i, p) in samples.iter().enumerate() {
        let px = to_px(*p);
        if i == highlight {
            svg.push_str(&format!(
                "  <circle class=\"sample highlight\" cx=\"{}\" cy=\"{}\" r=\"6\" \
                 fill=\"none\" stroke=\"#111111\" stroke-width=\"2\"/>\n",
                coord(px[0]),
                coord(px[1])
            ));
        } else {
            svg.push_str(&format!(
                "  <circle class=\"sample\" cx=\"{}\" cy=\"{}\" r=\"2.5\" \
                 fill=\"#b9b9b9\"/>\n",
                coord(px[0]),
                coord(px[1])
            ));
        }
    }

    for (j, p) in atoms.iter().enumerate() {
        let px = to_px(*p);
        let fill = if active.contains(&j) { "#d03030" } else { "#3566c4" };
        svg.push_str(&format!(
            "  <circle class=\"atom{}\" cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"{fill}\">\
             <title>atom {j}</title></circle>\n",
            if active.contains(&j) { " active" } else { "" },
            coord(px[0]),
            coord(px[1])
        ));
    }

    let rp = to_px(reconstruction);
    svg.push_str(&format!(
        "  <path class=\"reconstruction\" d=\"M {} {} l 6 6 l -6 6 l -6 -6 z\" \
         fill=\"#1e9e57\"><title>reconstruction</title></path>\n",
        coord(rp[0]),
        coord(rp[1] - 6.0)
    ));
    svg.push_str("</svg>\n");
    svg
}
