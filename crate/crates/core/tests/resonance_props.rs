use periodic_averaging::averaging::{classify_zero, Classification, ClassifyTolerance};
use periodic_averaging::models::{
    classical_det_check, det_trace_analytic, g0_jacobian_analytic, ClassicalDetForm, Model,
    Variant, VdpParams,
};
use periodic_averaging::resonance::{
    amplitude_roots, fold_band, fold_locus, residual, stability_tag, trace_curve,
    zero_from_amplitude,
};
use proptest::prelude::*;

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Nonsmooth), Just(Variant::Classical)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_satisfy_the_amplitude_equation(a in -2.0f64..2.0, lambda in 0.0f64..2.0, v in variant()) {
        for r in amplitude_roots(a, lambda, v).unwrap().roots {
            prop_assert!(residual(a, lambda, r.amplitude, v).abs() <= 1e-10);
        }
    }

    #[test]
    fn root_count_matches_sign_changes(a in -2.0f64..2.0, lambda in 0.01f64..2.0, v in variant()) {
        let roots = amplitude_roots(a, lambda, v).unwrap();
        prop_assert!((1..=3).contains(&roots.roots.len()));
        prop_assume!(roots.roots.iter().all(|r| r.multiplicity == 1));
        let upper = 8.0;
        let n = 10_000;
        let h = upper / n as f64;
        let amps = roots.amplitudes();
        prop_assume!(amps.windows(2).all(|w| w[1] - w[0] > 2.0 * h));
        prop_assume!(amps.iter().all(|x| (x / h - (x / h).round()).abs() > 1e-6));
        let mut changes = 0;
        let mut prev = residual(a, lambda, h * 0.5, v);
        for i in 1..=n {
            let cur = residual(a, lambda, h * (i as f64 + 0.5), v);
            if (cur < 0.0) != (prev < 0.0) {
                changes += 1;
            }
            prev = cur;
        }
        prop_assert_eq!(changes, amps.len());
    }

    #[test]
    fn roots_are_symmetric_in_detuning(a in 0.0f64..2.0, lambda in 0.0f64..2.0, v in variant()) {
        prop_assert_eq!(amplitude_roots(a, lambda, v).unwrap(), amplitude_roots(-a, lambda, v).unwrap());
    }

    #[test]
    fn tags_agree_with_the_classifier(a in -1.5f64..1.5, lambda in 0.05f64..2.0) {
        let p = VdpParams::nonsmooth(a, lambda);
        for r in amplitude_roots(a, lambda, Variant::Nonsmooth).unwrap().roots {
            prop_assume!(r.multiplicity == 1);
            let tag = stability_tag(r.amplitude, a, Variant::Nonsmooth).unwrap();
            let [m, n] = zero_from_amplitude(r.amplitude, a, Variant::Nonsmooth);
            let j = g0_jacobian_analytic(m, n, &p).unwrap();
            let j = nalgebra::DMatrix::from_row_slice(2, 2, &[j[0][0], j[0][1], j[1][0], j[1][1]]);
            let class = classify_zero(&j, &ClassifyTolerance::default());
            prop_assume!(class != Classification::Degenerate);
            prop_assert_eq!(tag.stable, class == Classification::UniqueAsymptoticallyStable);
            prop_assert_eq!(tag.det < 0.0, class == Classification::NonAsymptoticallyStable);
        }
    }

    #[test]
    fn fold_points_have_vanishing_determinant(t in 0.0f64..1.0) {
        let (lo, hi) = fold_band(Variant::Nonsmooth);
        let amp = lo + t * (hi - lo);
        let p = fold_locus(Variant::Nonsmooth, &[amp])[0].unwrap();
        let (det, _) = det_trace_analytic(0.0, amp, p.a).unwrap();
        prop_assert!(det.abs() <= 1e-8, "det {det:e}");
        let roots = amplitude_roots(p.a, p.lambda, Variant::Nonsmooth).unwrap();
        prop_assert!(roots.roots.iter().any(|r| (r.amplitude - amp).abs() <= 1e-6));
    }

    #[test]
    fn classical_fold_points_have_vanishing_numeric_determinant(t in 0.0f64..1.0) {
        let (lo, hi) = fold_band(Variant::Classical);
        let amp = lo + t * (hi - lo);
        let p = fold_locus(Variant::Classical, &[amp])[0].unwrap();
        let tag = stability_tag(amp, p.a, Variant::Classical).unwrap();
        prop_assert!(tag.det.abs() <= 1e-6, "det {:e}", tag.det);
    }
}

#[test]
fn classical_determinant_matches_the_plus_sign() {
    for (a, amp) in [(0.5, 1.0), (-0.8, 2.2), (1.3, 0.4)] {
        let check = classical_det_check(a, amp).unwrap();
        assert_eq!(check.matches, ClassicalDetForm::PlusASquared, "{check:?}");
        assert!((check.numeric - check.plus_form).abs() < 1e-6);
    }
    let check = classical_det_check(0.0, 1.5).unwrap();
    assert_eq!(check.matches, ClassicalDetForm::Indistinguishable);
}

#[test]
fn classical_stability_uses_the_trace_threshold() {
    // trace = π(2 − A²) changes sign at A = √2
    let below = stability_tag(2f64.sqrt() - 1e-3, 2.0, Variant::Classical).unwrap();
    let above = stability_tag(2f64.sqrt() + 1e-3, 2.0, Variant::Classical).unwrap();
    assert!(below.trace > 0.0 && !below.stable);
    assert!(above.trace < 0.0 && above.stable);
}

#[test]
fn every_curve_point_resubstitutes() {
    for (lambda, v) in [
        (0.4, Variant::Nonsmooth),
        (1.5, Variant::Nonsmooth),
        (2.0, Variant::Classical),
        (0.5, Variant::Classical),
    ] {
        let curve = trace_curve(lambda, -2.0, 2.0, 101, v).unwrap();
        for s in &curve.samples {
            for p in &s.points {
                assert!(residual(p.a, p.lambda, p.amplitude, v).abs() <= 1e-10);
                assert_eq!(
                    p.stable,
                    p.det > 0.0 && p.trace < 0.0 && p.multiplicity == 1
                );
            }
        }
    }
}

#[test]
fn nonsmooth_model_field_zero_matches_reconstruction() {
    let field = Model::Vdp(VdpParams::nonsmooth(0.3, 0.9))
        .averaged_field()
        .without_analytic();
    for r in amplitude_roots(0.3, 0.9, Variant::Nonsmooth).unwrap().roots {
        let seed = zero_from_amplitude(r.amplitude, 0.3, Variant::Nonsmooth);
        let z = field.find_zero(&seed, 1e-11, 50).unwrap();
        assert!((z.v0[0] - seed[0]).abs() < 1e-8 && (z.v0[1] - seed[1]).abs() < 1e-8);
    }
}
