//! Cross-module invariants: conjugation and cyclic symmetry of the
//! Jordan data, subadditivity of the Cartan data in the dominant order,
//! compatibility of folding with Kronecker products, agreement of the two
//! enumeration modes, and a round trip through the prescribed-spectrum
//! construction.

use jointspec::hyp2::mechanical_word;
use jointspec::mat::{
    cartan, det_chart, det_chart_xy, fold, jordan, kronecker, ChamberVector, GroupFrame,
    ProjectionKind, RepDescriptor, ScaledMatrix, SquareMatrix,
};
use jointspec::rng::stream_rng;
use jointspec::spectrum::{
    enumerate_level, estimate_joint_spectrum, prescribed_spectrum_set, CloudMode, Projection,
};
use jointspec::words::{Budget, DEFAULT_BUDGET};
use jointspec::hull::{hausdorff, hull2};
use proptest::prelude::*;
use rand::Rng;

/// Random invertible d×d matrix with entries in [-2, 2] and determinant
/// bounded away from 0.
fn random_invertible(rng: &mut impl Rng, d: usize) -> SquareMatrix {
    loop {
        let m = SquareMatrix::from_fn(d, |_, _| rng.gen_range(-2.0..2.0));
        if m.det().abs() > 0.1 {
            return m;
        }
    }
}

/// Random SL(2, ℝ) matrix: a random invertible matrix rescaled to
/// determinant one (sign fixed by a column flip when negative).
fn random_sl2(rng: &mut impl Rng) -> SquareMatrix {
    loop {
        let m = random_invertible(rng, 2);
        let det = m.det();
        let scale = det.abs().sqrt();
        let flip = if det < 0.0 { -1.0 } else { 1.0 };
        let s = SquareMatrix::from_fn(2, |i, j| m.get(i, j) / scale * if j == 0 { flip } else { 1.0 });
        if (s.det() - 1.0).abs() < 1e-12 {
            return s;
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn jordan_data_is_conjugation_and_cyclic_invariant() {
    let frame = GroupFrame::gl(3);
    let mut rng = stream_rng(11, 0);
    for _ in 0..200 {
        let g = random_invertible(&mut rng, 3);
        let h = random_invertible(&mut rng, 3);
        let gh = jordan(&g.mul(&h), &frame).unwrap();
        let hg = jordan(&h.mul(&g), &frame).unwrap();
        assert!(
            max_abs_diff(&gh.coords, &hg.coords) < 1e-9,
            "cyclic shift moved the Jordan data: {:?} vs {:?}",
            gh.coords,
            hg.coords
        );
        let m = random_invertible(&mut rng, 3);
        let conj = m.mul(&g).mul(&m.inverse().unwrap());
        let base = jordan(&g, &frame).unwrap();
        let moved = jordan(&conj, &frame).unwrap();
        assert!(
            max_abs_diff(&base.coords, &moved.coords) < 1e-7 * (1.0 + base.sup_norm()),
            "conjugation moved the Jordan data: {:?} vs {:?}",
            base.coords,
            moved.coords
        );
    }
}

#[test]
fn cartan_data_is_subadditive_in_the_dominant_order() {
    // Partial sums of sorted log singular values: every prefix sum of
    // kappa(gh) stays below the matching prefix sum of kappa(g) +
    // kappa(h), because each is a log operator norm of an exterior power.
    let frame = GroupFrame::gl(3);
    let mut rng = stream_rng(12, 0);
    for _ in 0..200 {
        let g = random_invertible(&mut rng, 3);
        let h = random_invertible(&mut rng, 3);
        let kg = cartan(&g, &frame).unwrap().coords;
        let kh = cartan(&h, &frame).unwrap().coords;
        let kgh = cartan(&g.mul(&h), &frame).unwrap().coords;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for i in 0..3 {
            lhs += kgh[i];
            rhs += kg[i] + kh[i];
            assert!(
                lhs <= rhs + 1e-9,
                "prefix {i} violates subadditivity: {lhs} > {rhs}"
            );
        }
    }
}

#[test]
fn power_norm_rates_shrink_toward_the_spectral_radius() {
    let frame = GroupFrame::gl(2);
    let mut rng = stream_rng(13, 0);
    for _ in 0..100 {
        let g = random_invertible(&mut rng, 2);
        let lam = jordan(&g, &frame).unwrap().coords[0];
        let rate = |k: u64| cartan(&g.pow(k), &frame).unwrap().coords[0] / k as f64;
        for k in [1u64, 2, 4] {
            assert!(
                rate(2 * k) <= rate(k) + 1e-9,
                "doubling the power raised the norm rate at k = {k}"
            );
            assert!(rate(k) >= lam - 1e-9, "norm rate fell below the top eigenvalue at k = {k}");
        }
    }
}

#[test]
fn folding_block_data_matches_the_kronecker_product() {
    let frame2 = GroupFrame::product(2);
    let frame4 = GroupFrame::gl(4);
    let mut rng = stream_rng(14, 0);
    for trial in 0..1000 {
        let g = random_sl2(&mut rng);
        let h = random_sl2(&mut rng);
        let block = SquareMatrix::block_diag(&[g.clone(), h.clone()]);
        for kind in [ProjectionKind::Cartan, ProjectionKind::Jordan] {
            let per_block = match kind {
                ProjectionKind::Cartan => cartan(&block, &frame2).unwrap(),
                ProjectionKind::Jordan => jordan(&block, &frame2).unwrap(),
            };
            let folded = fold(&per_block, RepDescriptor::LeftRightSl2).unwrap();
            let kron = kronecker(&g, &h);
            let direct = match kind {
                ProjectionKind::Cartan => cartan(&kron, &frame4).unwrap(),
                ProjectionKind::Jordan => jordan(&kron, &frame4).unwrap(),
            };
            let scale = 1.0 + direct.sup_norm();
            assert!(
                max_abs_diff(&folded.coords, &direct.coords) < 1e-9 * scale,
                "trial {trial} {kind:?}: folded {:?} vs direct {:?}",
                folded.coords,
                direct.coords
            );
        }
    }
}

#[test]
fn necklace_and_full_jordan_clouds_agree() {
    let frame = GroupFrame::gl(2);
    let mut rng = stream_rng(15, 0);
    for trial in 0..6 {
        let size = 2 + trial % 2;
        let gens: Vec<SquareMatrix> = (0..size).map(|_| random_invertible(&mut rng, 2)).collect();
        for n in [3u32, 5, 8] {
            let mut b1 = Budget::new(DEFAULT_BUDGET);
            let full = enumerate_level(
                &gens,
                &frame,
                n,
                ProjectionKind::Jordan,
                CloudMode::Full,
                Projection::Coords(0, 1),
                &mut b1,
            )
            .unwrap();
            let mut b2 = Budget::new(DEFAULT_BUDGET);
            let neck = enumerate_level(
                &gens,
                &frame,
                n,
                ProjectionKind::Jordan,
                CloudMode::Necklace,
                Projection::Coords(0, 1),
                &mut b2,
            )
            .unwrap();
            assert!(
                full.same_point_set(&neck, 1e-9),
                "necklace and full clouds differ for |S| = {size}, n = {n}"
            );
            assert!(b2.used() < b1.used(), "the cyclic-class walk should cost less");
        }
    }
}

#[test]
fn prescribed_polygon_round_trip() {
    let target = hull2(&[[0.3, -0.2], [1.0, -0.6], [1.1, 0.4], [0.5, 0.3]]).unwrap();
    let gens = prescribed_spectrum_set(&target, 0.05, 7).unwrap();
    let frame = GroupFrame::gl(2);
    let mut budget = Budget::new(DEFAULT_BUDGET);
    let est = estimate_joint_spectrum(
        &gens,
        &frame,
        &[2, 4, 6],
        Projection::Coords(0, 1),
        &mut budget,
    )
    .unwrap();
    // Level-1 eigenvalue data already contains every vertex, so the inner
    // hull can only grow past the polygon by the eta perturbation.
    let d = hausdorff(&est.inner, &target);
    assert!(d < 0.1, "prescribed polygon drifted by {d}");
    for v in target.vertices() {
        assert!(
            est.inner.distance_to(*v) < 1e-9,
            "vertex {v:?} missing from the inner hull"
        );
    }
}

#[test]
fn scaled_and_plain_products_tell_the_same_story() {
    // Dual route: accumulate a word with per-factor renormalization, then
    // compare against the singular values of the naive product.
    let frame = GroupFrame::gl(2);
    let mut rng = stream_rng(16, 0);
    for _ in 0..100 {
        let gens: Vec<SquareMatrix> = (0..3).map(|_| random_invertible(&mut rng, 2)).collect();
        let len = rng.gen_range(2..=10);
        let mut scaled = ScaledMatrix::identity(&frame);
        let mut plain = SquareMatrix::identity(2);
        for _ in 0..len {
            let pick = rng.gen_range(0..gens.len());
            scaled = scaled.times(&gens[pick]);
            plain = plain.mul(&gens[pick]);
        }
        let via_scaled = scaled.cartan().unwrap().coords;
        let via_plain = cartan(&plain, &frame).unwrap().coords;
        let scale = 1.0 + via_plain.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        assert!(
            max_abs_diff(&via_scaled, &via_plain) < 1e-9 * scale,
            "renormalized product disagrees with the naive product"
        );
    }
}

proptest! {
    #[test]
    fn top_eigenvalue_never_exceeds_top_singular_value(
        e00 in -3.0f64..3.0, e01 in -3.0f64..3.0,
        e10 in -3.0f64..3.0, e11 in -3.0f64..3.0,
    ) {
        let g = SquareMatrix::from_rows(&[vec![e00, e01], vec![e10, e11]]);
        prop_assume!(g.det().abs() > 0.05);
        let frame = GroupFrame::gl(2);
        let lam = jordan(&g, &frame).unwrap().coords[0];
        let kap = cartan(&g, &frame).unwrap().coords[0];
        prop_assert!(lam <= kap + 1e-9, "log spectral radius {lam} above log norm {kap}");
    }

    #[test]
    fn inverse_negates_and_reverses_cartan_data(
        e00 in -3.0f64..3.0, e01 in -3.0f64..3.0,
        e10 in -3.0f64..3.0, e11 in -3.0f64..3.0,
    ) {
        let g = SquareMatrix::from_rows(&[vec![e00, e01], vec![e10, e11]]);
        prop_assume!(g.det().abs() > 0.05);
        let frame = GroupFrame::gl(2);
        let k = cartan(&g, &frame).unwrap().coords;
        let ki = cartan(&g.inverse().unwrap(), &frame).unwrap().coords;
        let scale = 1.0 + k[0].abs() + k[1].abs();
        prop_assert!((ki[0] + k[1]).abs() < 1e-9 * scale);
        prop_assert!((ki[1] + k[0]).abs() < 1e-9 * scale);
    }

    #[test]
    fn chart_coordinates_round_trip(c1 in -5.0f64..5.0, delta in 0.0f64..5.0) {
        let c2 = c1 - delta;
        let (x, y) = det_chart_xy(c1, c2);
        prop_assert!((x - 0.5 * (c1 - c2)).abs() < 1e-12);
        prop_assert!((y - (c1 + c2)).abs() < 1e-12);
        // Pull back and compare.
        let r1 = 0.5 * y + x;
        let r2 = 0.5 * y - x;
        prop_assert!((r1 - c1).abs() < 1e-12 && (r2 - c2).abs() < 1e-12);
        let cv = ChamberVector {
            coords: vec![c1, c2],
            kind: ProjectionKind::Cartan,
            frame: GroupFrame::gl(2),
        };
        let (cx, cy) = det_chart(&cv).unwrap();
        prop_assert!((cx - x).abs() < 1e-12 && (cy - y).abs() < 1e-12);
    }

    #[test]
    fn mechanical_words_stay_balanced(
        alpha in 0.0f64..=1.0,
        phase in -2.0f64..2.0,
        n in 1usize..240,
    ) {
        let w = mechanical_word(alpha, phase, n).unwrap();
        prop_assert!(w.balance_defect() < 1.0);
        let ones = w.ones() as f64;
        prop_assert!((ones - n as f64 * alpha).abs() < 1.0);
    }
}
