//! Quaternion interpolation against rotation-matrix oracles, and metric /
//! canonical-form properties.

mod common;

use common::{matrix_axis_angle, mat3_mul, mat3_transpose, mat3_max_abs_diff, quat_matrix_oracle, rng, rodrigues, DEG};
use kinedict_core::quat::{geodesic_distance, nlerp, slerp, AxisAngle, UnitQuaternion};
use proptest::prelude::*;
use rand::Rng;

fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [common::gauss(rng), common::gauss(rng), common::gauss(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

#[test]
fn slerp_agrees_with_the_matrix_fractional_power_oracle() {
    // slerp(x1, q1, q2) follows the geodesic from q2 (x1 = 0) to q1 (x1 = 1);
    // in matrix form that is exp(x1 * log(R1 * R2^T)) * R2, which we evaluate
    // through axis-angle extraction and Rodrigues, never touching quaternion
    // interpolation itself.
    let mut rng = rng(0x51e9);
    for trial in 0..50 {
        let q2 = UnitQuaternion::random(&mut rng);
        let angle = rng.random_range(0.1..2.8);
        let rel = UnitQuaternion::from_axis_angle(&AxisAngle::new(random_axis(&mut rng), angle).unwrap());
        let q1 = q2.compose(&rel);

        let r1 = quat_matrix_oracle(&q1);
        let r2 = quat_matrix_oracle(&q2);
        let (axis, theta) = matrix_axis_angle(&mat3_mul(&r1, &mat3_transpose(&r2)));

        for step in 0..=4 {
            let x1 = step as f64 / 4.0;
            let s = slerp(x1, &q1, &q2).unwrap();
            let expected = mat3_mul(&rodrigues(axis, x1 * theta), &r2);
            let diff = mat3_max_abs_diff(&quat_matrix_oracle(&s), &expected);
            assert!(
                diff <= 1e-9,
                "trial {trial}, x1 = {x1}: slerp is {diff:e} from the matrix power"
            );
        }
    }
}

#[test]
fn nlerp_deviation_from_slerp_is_small_at_ten_degrees_and_grows_with_arc() {
    let mut rng = rng(0x9e12);
    let base = UnitQuaternion::random(&mut rng);
    let axis = random_axis(&mut rng);

    // Maximum geodesic gap between the normalized-linear and spherical
    // interpolants over a dense weight grid, one arc length at a time. The
    // gap scales like the cube of the arc, so it must come out tiny at small
    // arcs and non-decreasing across them.
    let mut deviation_deg = Vec::with_capacity(30);
    for delta_deg in 1..=30 {
        let q1 = base.compose(&UnitQuaternion::from_axis_angle(
            &AxisAngle::new(axis, delta_deg as f64 * DEG).unwrap(),
        ));
        let mut worst: f64 = 0.0;
        for step in 0..=20 {
            let x1 = step as f64 / 20.0;
            let s = slerp(x1, &q1, &base).unwrap();
            let l = nlerp(&[x1, 1.0 - x1], &[q1, base]).unwrap();
            worst = worst.max(geodesic_distance(&s, &l));
        }
        deviation_deg.push(worst / DEG);
    }

    let at_ten = deviation_deg[9];
    assert!(at_ten < 0.05, "deviation at a 10-degree arc is {at_ten} degrees");
    for (i, pair) in deviation_deg.windows(2).enumerate() {
        assert!(
            pair[1] >= pair[0] - 1e-9,
            "deviation shrank from {} to {} between arcs {} and {} degrees",
            pair[0],
            pair[1],
            i + 1,
            i + 2
        );
    }
}

#[test]
fn composition_matches_matrix_multiplication() {
    let mut rng = rng(0xc0de);
    for _ in 0..100 {
        let p = UnitQuaternion::random(&mut rng);
        let q = UnitQuaternion::random(&mut rng);
        let composed = quat_matrix_oracle(&p.compose(&q));
        let product = mat3_mul(&quat_matrix_oracle(&p), &quat_matrix_oracle(&q));
        assert!(mat3_max_abs_diff(&composed, &product) <= 1e-12);
    }
}

fn quat_from_parts(parts: [f64; 4]) -> Option<UnitQuaternion> {
    let norm2: f64 = parts.iter().map(|v| v * v).sum();
    if norm2 < 1e-6 {
        return None;
    }
    Some(UnitQuaternion::new(parts[0], parts[1], parts[2], parts[3]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn geodesic_distance_satisfies_the_triangle_inequality(
        pa in prop::array::uniform4(-1.0..1.0_f64),
        pb in prop::array::uniform4(-1.0..1.0_f64),
        pc in prop::array::uniform4(-1.0..1.0_f64),
    ) {
        let (Some(a), Some(b), Some(c)) = (quat_from_parts(pa), quat_from_parts(pb), quat_from_parts(pc)) else {
            return Ok(());
        };
        let ac = geodesic_distance(&a, &c);
        let through_b = geodesic_distance(&a, &b) + geodesic_distance(&b, &c);
        prop_assert!(ac <= through_b + 1e-9, "{ac} > {through_b}");
    }

    #[test]
    fn axis_angle_round_trips_to_the_same_rotation(
        raw_axis in prop::array::uniform3(-1.0..1.0_f64),
        angle in 1e-6..3.1_f64,
    ) {
        let n = (raw_axis[0].powi(2) + raw_axis[1].powi(2) + raw_axis[2].powi(2)).sqrt();
        prop_assume!(n > 1e-3);
        let axis = [raw_axis[0] / n, raw_axis[1] / n, raw_axis[2] / n];
        let q = UnitQuaternion::from_axis_angle(&AxisAngle::new(axis, angle).unwrap());
        let back = UnitQuaternion::from_axis_angle(&q.to_axis_angle());
        // The round trip is exact to the last ulp, but the metric itself
        // cannot resolve below ~3e-8 rad: one ulp of error in the dot
        // product inflates to sqrt-scale through the arccos cliff at 1.
        prop_assert!(geodesic_distance(&q, &back) <= 1e-7);
    }

    #[test]
    fn sign_flipped_components_canonicalize_to_the_same_quaternion(
        parts in prop::array::uniform4(-1.0..1.0_f64),
    ) {
        let Some(q) = quat_from_parts(parts) else { return Ok(()); };
        let flipped = UnitQuaternion::new(-parts[0], -parts[1], -parts[2], -parts[3]).unwrap();
        prop_assert_eq!(q.components(), flipped.components());
        prop_assert!(q.w() >= 0.0);
    }

    #[test]
    fn rotation_preserves_lengths_and_the_matrix_agrees(
        parts in prop::array::uniform4(-1.0..1.0_f64),
        v in prop::array::uniform3(-2.0..2.0_f64),
    ) {
        let Some(q) = quat_from_parts(parts) else { return Ok(()); };
        let rotated = q.rotate(v);
        let len_in: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let len_out: f64 = rotated.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((len_in - len_out).abs() <= 1e-12 * (1.0 + len_in));

        let by_matrix = common::mat3_vec(&quat_matrix_oracle(&q), v);
        for (a, b) in rotated.iter().zip(&by_matrix) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
