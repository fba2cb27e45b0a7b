//! Geometry checked against independent discretized and closed-form oracles.

mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use curator::geometry::{area, direction, intersection_area, iou, rel_dist, BBox};

use common::{bb, raster_iou};

fn arb_box() -> impl Strategy<Value = BBox> {
    (0.02f64..0.6, 0.02f64..0.6)
        .prop_flat_map(|(w, h)| (0.001f64..(0.999 - w), 0.001f64..(0.999 - h), Just(w), Just(h)))
        .prop_filter_map("inside the unit square", |(x, y, w, h)| BBox::new(x, y, w, h).ok())
}

#[test]
fn third_overlap_from_raster() {
    // two 0.4-wide squares offset by 0.2: intersection 0.08, union 0.24
    let a = bb(0.1, 0.1, 0.4, 0.4);
    let b = bb(0.3, 0.1, 0.4, 0.4);
    let oracle = raster_iou(&a, &b, 1000);
    assert_abs_diff_eq!(oracle, 1.0 / 3.0, epsilon = 1e-3);
    assert_abs_diff_eq!(iou(&a, &b), oracle, epsilon = 1e-3);
}

#[test]
fn disjoint_and_nested() {
    let outer = bb(0.1, 0.1, 0.8, 0.8);
    let inner = bb(0.3, 0.3, 0.2, 0.2);
    assert_abs_diff_eq!(iou(&outer, &inner), raster_iou(&outer, &inner, 1000), epsilon = 1e-3);
    assert_abs_diff_eq!(iou(&outer, &inner), 0.04 / 0.64, epsilon = 1e-12);
    let far = bb(0.8, 0.8, 0.1, 0.1);
    assert_eq!(iou(&inner, &far), 0.0);
    assert_eq!(raster_iou(&inner, &far, 1000), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn iou_matches_raster(a in arb_box(), b in arb_box()) {
        prop_assert!((iou(&a, &b) - raster_iou(&a, &b, 4000)).abs() < 2e-3);
    }

    #[test]
    fn iou_bounds_and_symmetry(a in arb_box(), b in arb_box()) {
        let v = iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, iou(&b, &a));
        prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
        prop_assert!(intersection_area(&a, &b) <= area(&a).min(area(&b)) + 1e-15);
    }

    #[test]
    fn rel_dist_closed_form(a in arb_box(), b in arb_box()) {
        let (ca, cb) = (a.center(), b.center());
        let oracle = ((ca.x - cb.x).powi(2) + (ca.y - cb.y).powi(2)).sqrt() / 2f64.sqrt();
        prop_assert!((rel_dist(&a, &b) - oracle).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&rel_dist(&a, &b)));
    }

    #[test]
    fn direction_is_unit_and_antisymmetric(a in arb_box(), b in arb_box()) {
        let d = direction(&a, &b);
        let back = direction(&b, &a);
        if d.is_zero() {
            prop_assert!(back.is_zero());
        } else {
            prop_assert!((d.norm() - 1.0).abs() < 1e-12);
            prop_assert!((d.x + back.x).abs() < 1e-12 && (d.y + back.y).abs() < 1e-12);
        }
    }
}
