mod common;

use assouad_lab::bounds::*;
use assouad_lab::families::oracle_spiral_spectrum;
use proptest::prelude::*;

#[test]
fn formula_identities_hold() {
    let bad = common::formula_violations();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn spiral_closed_forms_have_the_expected_properties() {
    let bad = common::oracle_violations();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn classification_thresholds() {
    for (a, b) in [(2.0, 1.0), (3.0, 0.5), (1.0, 1.0), (0.3, 0.2)] {
        let c = classify_spirals(a, b).unwrap();
        let k = a / b;
        assert_eq!(c.k, k);
        let t = 1.0 / b;
        assert!((theta_of_t(t / k).unwrap() - a / (1.0 + a)).abs() < 1e-12);
        assert!((theta_of_t(t).unwrap() - b / (1.0 + b)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn theta_and_t_are_inverse(t in 1e-3..1e3f64) {
        let th = theta_of_t(t).unwrap();
        prop_assert!((t_of_theta(th).unwrap() - t).abs() <= 1e-9 * t);
    }

    #[test]
    fn spectrum_bounds_bracket_the_spiral_image(a in 0.2..5.0f64, k in 1.0..6.0f64, th in 0.02..0.98f64) {
        // the radial stretch sends S_a to S_{a/K}, so the true image
        // spectrum lies between the bounds
        let ctx = ExponentContext::planar(k).unwrap();
        let source = |x: f64| oracle_spiral_spectrum(a, x).ok();
        let b = spectrum_bounds(t_of_theta(th).unwrap(), &ctx, &source, None).unwrap();
        let image = oracle_spiral_spectrum(a / k, th).unwrap();
        prop_assert!(b.lower <= image + 1e-9, "{} > {image}", b.lower);
        prop_assert!(image <= b.upper + 1e-9, "{image} > {}", b.upper);
    }

    #[test]
    fn assouad_bounds_are_ordered(alpha in 0.01..1.99f64, k in 1.0..20.0f64) {
        let ctx = ExponentContext::planar(k).unwrap();
        let b = assouad_bounds(alpha, &ctx, None, None).unwrap();
        prop_assert!(b.lower <= alpha + 1e-12 && alpha <= b.upper + 1e-12);
        prop_assert!(b.upper <= 2.0 && b.lower > 0.0);
    }

    #[test]
    fn bi_holder_bound_dominates_the_source(th in 0.01..0.2f64, k in 1.0..2.2f64, d in 0.0..2.0f64) {
        prop_assume!(th < 1.0 / (k * k));
        let u = biholder_upper(th, k, d).unwrap();
        prop_assert!(u >= d.min(2.0) - 1e-12);
    }
}
