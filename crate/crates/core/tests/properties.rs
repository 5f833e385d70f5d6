use std::f64::consts::{FRAC_PI_2, PI};

use ewd_core::ewd::{box_loss, edwd_obox, egwd_obox};
use ewd_core::gaussian::{box_gaussian, sqrtm_2x2, w2_gaussian, Gauss2, Mat2};
use ewd_core::geom::{box_iou, canonicalize, convex_contains, BoxDef, OBox5, Vec2};
use ewd_core::grad::{edwd_grad, fd_loss_gradient};
use ewd_core::{LossConfig, NormScheme, PostFn, VarianceMode};
use proptest::prelude::*;

fn obox() -> impl Strategy<Value = OBox5> {
    (-10.0..10.0f64, -10.0..10.0f64, 0.1..20.0f64, 0.1..20.0f64, -PI..PI)
        .prop_map(|(cx, cy, w, h, t)| OBox5::new(cx, cy, w, h, t).unwrap())
}

fn psd() -> impl Strategy<Value = Mat2> {
    (-PI..PI, 0.0..10.0f64, 0.0..10.0f64).prop_map(|(t, a, b)| {
        let r = Mat2::rotation(t);
        (r * Mat2::diag(a, b) * r.transpose()).symmetrized()
    })
}

fn corner_sets_match(a: &OBox5, b: &OBox5) -> bool {
    let (qa, qb) = (a.to_corners(), b.to_corners());
    qa.corners
        .iter()
        .all(|p| qb.corners.iter().any(|q| (*p - *q).norm() <= 1e-9 * (1.0 + p.norm())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonicalize_keeps_the_rectangle(b in obox()) {
        for def in [BoxDef::Oc, BoxDef::Le, BoxDef::Min] {
            let c = canonicalize(&b, def);
            let (lo, hi) = def.range();
            prop_assert!(c.theta >= lo && c.theta < hi);
            prop_assert!(corner_sets_match(&b, &c));
        }
    }

    #[test]
    fn edges_are_closed_and_clockwise(b in obox()) {
        let e = b.to_edges();
        prop_assert!(e.is_closed(1e-9));
        prop_assert!(e.signed_area() > 0.0);
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in obox(), b in obox()) {
        let (x, y) = (box_iou(&a, &b), box_iou(&b, &a));
        prop_assert!((x - y).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!((box_iou(&a, &a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sqrtm_squares_back(m in psd()) {
        let r = sqrtm_2x2(m).unwrap();
        let back = r * r;
        let tol = 1e-10 * (1.0 + m.trace());
        prop_assert!((back - m).norm() < tol, "{m:?}");
    }

    #[test]
    fn w2_symmetric_nonnegative(s1 in psd(), s2 in psd(), dx in -3.0..3.0f64) {
        let g1 = Gauss2::new(Vec2::new(dx, 0.0), s1).unwrap();
        let g2 = Gauss2::new(Vec2::new(0.0, 1.0), s2).unwrap();
        let (a, b) = (w2_gaussian(&g1, &g2).unwrap(), w2_gaussian(&g2, &g1).unwrap());
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        prop_assert!(w2_gaussian(&g1, &g1).unwrap() < 1e-9 * (1.0 + s1.trace()));
    }

    #[test]
    fn shifted_self_is_at_distance_zero(b in obox(), k in 0usize..4) {
        let s = b.shifted(k);
        prop_assert!(egwd_obox(&s, &b).value < 1e-9);
        prop_assert!(edwd_obox(&s, &b, &LossConfig::edwd()).unwrap().value < 1e-9);
    }

    #[test]
    fn egwd_symmetric_without_normalization(a in obox(), b in obox()) {
        let cfg = LossConfig::egwd().with_norm(NormScheme::None);
        let x = edwd_obox(&a, &b, &cfg).unwrap().value;
        let y = edwd_obox(&b, &a, &cfg).unwrap().value;
        prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x));
        prop_assert!((x - egwd_obox(&a, &b).value).abs() <= 1e-9 * (1.0 + x));
    }

    #[test]
    fn egwd_is_edwd_with_unit_variance(a in obox(), b in obox()) {
        let e = LossConfig::egwd();
        let d = LossConfig::edwd().with_variance(VarianceMode::Constant(1.0));
        prop_assert_eq!(edwd_obox(&a, &b, &e).unwrap().value, edwd_obox(&a, &b, &d).unwrap().value);
    }

    #[test]
    fn monotone_posts_keep_the_pairing(a in obox(), b in obox()) {
        let base = box_loss(&a, &b, &LossConfig::edwd()).unwrap();
        for post in [PostFn::Sqrt, PostFn::Log1p, PostFn::inv_tau(2.0, PostFn::Log1p)] {
            let v = box_loss(&a, &b, &LossConfig::edwd().with_post(post)).unwrap();
            prop_assert_eq!(v.k, base.k);
        }
    }
}

#[test]
fn square_gaussian_ignores_rotation() {
    let base = box_gaussian(&OBox5::new(1.0, 2.0, 3.0, 3.0, 0.0).unwrap());
    for i in 0..72 {
        let g = box_gaussian(&OBox5::new(1.0, 2.0, 3.0, 3.0, i as f64 * 5f64.to_radians()).unwrap());
        assert!((g.sigma - base.sigma).norm() < 1e-12);
    }
}

#[test]
fn square_discriminability() {
    let b = OBox5::new(0.0, 0.0, 2.0, 2.0, 0.0).unwrap();
    for deg in 0..=90 {
        let p = b.rotated((deg as f64).to_radians());
        let edwd = box_loss(&p, &b, &LossConfig::edwd()).unwrap().value;
        let gwd = box_loss(&p, &b, &LossConfig::gwd()).unwrap().value;
        let kld = box_loss(&p, &b, &LossConfig::kld()).unwrap().value;
        if deg == 0 || deg == 90 {
            assert!(edwd < 1e-12, "{deg}: {edwd}");
        } else {
            assert!(edwd > 0.0, "{deg}");
        }
        assert!(gwd < 1e-12 && kld < 1e-12, "{deg}: {gwd} {kld}");
    }
}

#[test]
fn large_aspect_ratio_keeps_one_pairing() {
    for ratio in [4.0f64, 8.0] {
        let b = OBox5::new(0.0, 0.0, ratio.sqrt(), 1.0 / ratio.sqrt(), 0.0).unwrap();
        for deg in -89..=89 {
            let p = b.rotated((deg as f64).to_radians());
            assert_eq!(edwd_obox(&p, &b, &LossConfig::edwd()).unwrap().k, 0, "ratio {ratio} at {deg}");
        }
    }
}

#[test]
fn square_theta_gradient_survives_where_gaussians_vanish() {
    let t = OBox5::new(0.0, 0.0, 2.0, 2.0, 0.0).unwrap();
    for deg in [5.0f64, 15.0, 30.0, 45.0, 60.0, 85.0] {
        let p = t.rotated(deg.to_radians());
        let g = edwd_grad(&p, &t, &LossConfig::edwd()).unwrap();
        assert!(g.grad.d_theta.abs() > 1e-3, "{deg}");
        for cfg in [LossConfig::gwd(), LossConfig::kld()] {
            assert!(fd_loss_gradient(&p, &t, &cfg, 1e-5).d_theta.abs() < 1e-8);
        }
    }
}

#[test]
fn target_normalization_makes_gradients_scale_free() {
    let t = OBox5::new(3.0, -1.0, 6.0, 2.0, 0.2).unwrap();
    let p = OBox5::new(3.6, -0.5, 5.0, 2.5, 0.5).unwrap();
    let half = |b: &OBox5| OBox5::new(b.cx * 0.5, b.cy * 0.5, b.w * 0.5, b.h * 0.5, b.theta).unwrap();
    let (ph, th) = (half(&p), half(&t));

    let cfg = LossConfig::edwd();
    let g = edwd_grad(&p, &t, &cfg).unwrap();
    let gh = edwd_grad(&ph, &th, &cfg).unwrap();
    // Loss is scale invariant; length derivatives pick up the inverse scale.
    assert!((g.loss - gh.loss).abs() < 1e-12);
    let a = g.grad.to_array();
    let b = gh.grad.to_array();
    for i in 0..4 {
        assert!((b[i] - 2.0 * a[i]).abs() < 1e-10, "{i}");
    }
    assert!((a[4] - b[4]).abs() < 1e-12);

    let raw = LossConfig::edwd().with_norm(NormScheme::None);
    let r = edwd_grad(&p, &t, &raw).unwrap();
    let rh = edwd_grad(&ph, &th, &raw).unwrap();
    assert!((r.loss - 4.0 * rh.loss).abs() < 1e-9);
    assert!((r.grad.d_theta - rh.grad.d_theta).abs() > 1e-3);
}

#[test]
fn sqrt_post_at_optimum_is_flagged_not_nan() {
    let t = OBox5::new(0.0, 0.0, 3.0, 1.0, 0.1).unwrap();
    let g = edwd_grad(&t, &t, &LossConfig::edwd().with_post(PostFn::Sqrt)).unwrap();
    assert!(g.degenerate);
    assert_eq!(g.grad.norm(), 0.0);
}

#[test]
fn contains_matches_clockwise_and_counter_clockwise() {
    let q = OBox5::new(0.0, 0.0, 2.0, 2.0, FRAC_PI_2 / 3.0).unwrap().to_corners();
    let mut rev = q.corners;
    rev.reverse();
    for p in [Vec2::new(0.0, 0.0), Vec2::new(0.9, 0.0), Vec2::new(1.5, 1.5)] {
        assert_eq!(convex_contains(&q.corners, p), convex_contains(&rev, p));
    }
}
