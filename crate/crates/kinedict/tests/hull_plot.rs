//! Hull-plot behavior: CSV inventory, active-atom marking, SVG shape, and the
//! 2D projection checked against an independent PCA.

use kinedict::hull::emit_hull_plot;
use kinedict_core::dict::{Dictionary, Mode, Provenance};
use kinedict_core::mat::Mat;
use kinedict_core::quat::UnitQuaternion;
use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quat_dict(atoms: &[[f64; 4]]) -> Dictionary {
    let cols: Vec<Vec<f64>> = atoms
        .iter()
        .map(|a| {
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            a.iter().map(|v| v / norm).collect()
        })
        .collect();
    Dictionary::new(
        Mode::Quaternion,
        "test".into(),
        Mat::from_columns(&cols).unwrap(),
        Provenance::manual(),
    )
    .unwrap()
}

fn random_samples(seed: u64, count: usize) -> Vec<UnitQuaternion> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| UnitQuaternion::random(&mut rng)).collect()
}

/// Minimal well-formedness check: every open tag is closed in order, quotes
/// balance inside tags, and processing instructions/comments terminate.
fn assert_well_formed_xml(doc: &str) {
    let bytes = doc.as_bytes();
    let mut stack: Vec<String> = Vec::new();
    let mut elements = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        if doc[i..].starts_with("<?") {
            let end = doc[i..].find("?>").expect("unterminated processing instruction");
            i += end + 2;
            continue;
        }
        if doc[i..].starts_with("<!--") {
            let end = doc[i..].find("-->").expect("unterminated comment");
            i += end + 3;
            continue;
        }
        if doc[i..].starts_with("</") {
            let end = doc[i..].find('>').expect("unterminated close tag");
            let name = doc[i + 2..i + end].trim().to_string();
            let open = stack.pop().unwrap_or_else(|| panic!("stray closing </{name}>"));
            assert_eq!(open, name, "mismatched close tag");
            i += end + 1;
            continue;
        }
        // An open (or self-closing) tag: scan to its '>' respecting quotes.
        let mut j = i + 1;
        let mut quote: Option<u8> = None;
        while j < bytes.len() {
            match (quote, bytes[j]) {
                (Some(q), c) if c == q => quote = None,
                (Some(_), _) => {}
                (None, b'"') | (None, b'\'') => quote = Some(bytes[j]),
                (None, b'>') => break,
                _ => {}
            }
            j += 1;
        }
        assert!(j < bytes.len(), "unterminated tag");
        assert!(quote.is_none(), "unterminated attribute quote");
        let inner = &doc[i + 1..j];
        let self_closing = inner.ends_with('/');
        let name: String = inner
            .split([' ', '\t', '\n', '/'])
            .next()
            .expect("empty tag")
            .to_string();
        assert!(!name.is_empty(), "empty tag name");
        elements += 1;
        if !self_closing {
            stack.push(name);
        }
        i = j + 1;
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    assert!(elements > 0, "no elements at all");
}

#[test]
fn csv_holds_one_row_per_atom_sample_and_reconstruction() {
    let dict = quat_dict(&[
        [1.0, 0.0, 0.0, 0.0],
        [0.9, 0.1, 0.0, 0.0],
        [0.9, 0.0, 0.1, 0.0],
        [0.9, 0.0, 0.0, 0.1],
    ]);
    let samples = random_samples(3, 17);
    let codes = [0.25, 0.25, 0.25, 0.25];
    let plot = emit_hull_plot(&dict, &samples, 5, &codes).unwrap();
    let rows: Vec<&str> = plot.csv.lines().collect();
    assert_eq!(rows.len(), 4 + 17 + 1);
    assert_eq!(rows.iter().filter(|r| r.starts_with("atom,")).count(), 4);
    assert_eq!(rows.iter().filter(|r| r.starts_with("sample,")).count(), 17);
    assert!(rows.last().unwrap().starts_with("reconstruction,0,"));
    // The highlighted sample is flagged in its final column, exactly once.
    let flagged: Vec<&str> = rows
        .iter()
        .filter(|r| r.starts_with("sample,") && r.ends_with(",1"))
        .copied()
        .collect();
    assert_eq!(flagged.len(), 1);
    assert!(flagged[0].starts_with("sample,5,"));
}

#[test]
fn active_atoms_are_exactly_the_code_support() {
    let dict = quat_dict(&[
        [1.0, 0.0, 0.0, 0.0],
        [0.9, 0.1, 0.0, 0.0],
        [0.9, 0.0, 0.1, 0.0],
        [0.9, 0.0, 0.0, 0.1],
        [0.8, 0.1, 0.1, 0.0],
    ]);
    let samples = random_samples(4, 6);
    let codes = [0.5, 0.0, 0.3, 0.0, 0.2];
    let plot = emit_hull_plot(&dict, &samples, 0, &codes).unwrap();
    assert_eq!(plot.active_atoms, vec![0, 2, 4]);
    // The CSV rows agree with the active flags.
    for row in plot.csv.lines().filter(|r| r.starts_with("atom,")) {
        let fields: Vec<&str> = row.split(',').collect();
        let j: usize = fields[1].parse().unwrap();
        let active: u8 = fields[4].parse().unwrap();
        assert_eq!(active == 1, plot.active_atoms.contains(&j), "atom {j}");
    }
    // And the SVG highlights exactly those atoms.
    let svg = plot.svg.unwrap();
    for j in 0..5 {
        let marker = format!("<title>atom {j}</title>");
        assert!(svg.contains(&marker), "missing {marker}");
    }
}

#[test]
fn two_atoms_produce_csv_only() {
    let dict = quat_dict(&[[1.0, 0.0, 0.0, 0.0], [0.9, 0.1, 0.0, 0.0]]);
    let samples = random_samples(5, 4);
    let plot = emit_hull_plot(&dict, &samples, 0, &[0.6, 0.4]).unwrap();
    assert!(plot.svg.is_none());
    assert!(plot.hull.is_empty());
    assert_eq!(plot.csv.lines().count(), 2 + 4 + 1);
}

#[test]
fn the_svg_is_well_formed_xml_with_the_expected_structure() {
    let dict = quat_dict(&[
        [1.0, 0.0, 0.0, 0.0],
        [0.9, 0.2, 0.0, 0.0],
        [0.9, 0.0, 0.2, 0.0],
        [0.9, 0.1, 0.1, 0.1],
    ]);
    let samples = random_samples(6, 12);
    let plot = emit_hull_plot(&dict, &samples, 2, &[0.4, 0.3, 0.3, 0.0]).unwrap();
    let svg = plot.svg.unwrap();
    assert_well_formed_xml(&svg);
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<polygon"), "hull polygon missing");
    assert!(svg.matches("<circle").count() >= 4 + 12, "atom/sample dots missing");
    assert!(svg.contains("<path"), "reconstruction marker missing");
    // Deterministic output: the same call produces the same bytes.
    let again = emit_hull_plot(&dict, &samples, 2, &[0.4, 0.3, 0.3, 0.0]).unwrap();
    assert_eq!(svg, again.svg.unwrap());
}

/// Independent PCA via nalgebra: center the atom coordinates, eigendecompose
/// the covariance, project on the two leading eigenvectors.
fn oracle_projection(atoms: &[[f64; 4]], points: &[[f64; 4]]) -> Vec<[f64; 2]> {
    let n = atoms.len() as f64;
    let mut mean = Vector4::zeros();
    for a in atoms {
        mean += Vector4::from_column_slice(a) / n;
    }
    let mut cov = Matrix4::zeros();
    for a in atoms {
        let c = Vector4::from_column_slice(a) - mean;
        cov += c * c.transpose() / n;
    }
    let eig = cov.symmetric_eigen();
    // Two largest eigenvalues.
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let e0 = eig.eigenvectors.column(order[0]).into_owned();
    let e1 = eig.eigenvectors.column(order[1]).into_owned();
    points
        .iter()
        .map(|p| {
            let c = Vector4::from_column_slice(p) - mean;
            [e0.dot(&c), e1.dot(&c)]
        })
        .collect()
}

fn pairwise_distances(points: &[[f64; 2]]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            out.push((dx * dx + dy * dy).sqrt());
        }
    }
    out
}

#[test]
fn projection_of_orthogonal_atoms_matches_an_independent_pca() {
    // Three mutually orthogonal unit quaternions. Centered, they span a plane,
    // so a rank-2 PCA must keep their geometry exactly — and both our
    // projection and the oracle's must agree on every pairwise distance.
    let atoms = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    let dict = quat_dict(&atoms);
    let samples = vec![UnitQuaternion::from_array([1.0, 0.0, 0.0, 0.0]).unwrap()];
    let plot = emit_hull_plot(&dict, &samples, 0, &[1.0, 0.0, 0.0]).unwrap();

    let ours = pairwise_distances(&plot.atom_points);
    let oracle = pairwise_distances(&oracle_projection(&atoms, &atoms));
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-9, "ours {a} vs oracle {b}");
    }
    // The plane-spanning property: projected distances equal the 4D originals.
    let expected = std::f64::consts::SQRT_2;
    for d in &ours {
        assert!((d - expected).abs() < 1e-9, "distance {d} != sqrt(2)");
    }
}
