use std::f64::consts::PI;

use ewd_core::ewd::egwd_obox;
use ewd_core::gaussian::{w2_gaussian, Gauss2, Mat2};
use ewd_core::geom::{DirectedEdge, OBox5, Vec2};
use ewd_core::oracle::{
    discrete_ot, edwd_edge_integral, egwd_matching_oracle, ot_upper_bound, w2_gaussian_numeric,
    Density, PointCloud, Quadrature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_box(rng: &mut ChaCha8Rng) -> OBox5 {
    OBox5::new(
        rng.gen_range(-10.0..10.0),
        rng.gen_range(-10.0..10.0),
        rng.gen_range(0.1..20.0),
        rng.gen_range(0.1..20.0),
        rng.gen_range(-PI..PI),
    )
    .unwrap()
}

fn random_edge(rng: &mut ChaCha8Rng) -> DirectedEdge {
    let mut p = || Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    DirectedEdge::new(p(), p())
}

fn random_psd(rng: &mut ChaCha8Rng) -> Mat2 {
    let r = Mat2::rotation(rng.gen_range(-PI..PI));
    let l1 = rng.gen_range(0.0..10.0);
    let l2 = match rng.gen_range(0..3) {
        0 => 0.0,
        1 => l1 * rng.gen_range(1e-6..1e-3),
        _ => rng.gen_range(0.0..10.0),
    };
    (r * Mat2::diag(l1, l2) * r.transpose()).symmetrized()
}

#[test]
fn egwd_closed_form_equals_matching_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let closed = egwd_obox(&a, &b).value;
        let (oracle, _) = egwd_matching_oracle(&a, &b).unwrap();
        let dev = (closed - oracle).abs() / closed.abs().max(1e-3);
        worst = worst.max(dev);
        assert!(
            (closed - oracle).abs() <= 1e-9 * closed.abs() + 1e-12,
            "{a:?} {b:?}: {closed} vs {oracle}"
        );
    }
    eprintln!("max relative deviation {worst:e}");
}

#[test]
fn w2_closed_form_matches_eigen_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let mu = |rng: &mut ChaCha8Rng| Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let g1 = Gauss2::new(mu(&mut rng), random_psd(&mut rng)).unwrap();
        let g2 = Gauss2::new(mu(&mut rng), random_psd(&mut rng)).unwrap();
        let a = w2_gaussian(&g1, &g2).unwrap();
        let b = w2_gaussian_numeric(&g1, &g2).unwrap();
        let scale = a.abs().max(g1.sigma.trace() + g2.sigma.trace()).max(1e-12);
        assert!((a - b).abs() <= 1e-9 * scale, "{g1:?} {g2:?}: {a} vs {b}");
    }
}

#[test]
fn edge_integral_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1_000 {
        let (e1, e2) = (random_edge(&mut rng), random_edge(&mut rng));
        let closed = (e1.center() - e2.center()).norm_sq()
            + (e1.vector() - e2.vector()).norm_sq() / 12.0;
        let s = edwd_edge_integral(&e1, &e2, &Density::Uniform, 3, Quadrature::Simpson).unwrap();
        assert!((s - closed).abs() <= 1e-12 * (1.0 + closed));
        let t = edwd_edge_integral(&e1, &e2, &Density::Uniform, 10_000, Quadrature::Trapezoid)
            .unwrap();
        assert!((t - closed).abs() <= 1e-6 * (1.0 + closed), "{t} vs {closed}");
    }
}

#[test]
fn trapezoid_error_shrinks_quadratically() {
    let e1 = DirectedEdge::new(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0));
    let e2 = DirectedEdge::new(Vec2::new(0.5, -2.0), Vec2::new(0.0, 1.5));
    let closed = (e1.center() - e2.center()).norm_sq() + (e1.vector() - e2.vector()).norm_sq() / 12.0;
    let err = |n| {
        (edwd_edge_integral(&e1, &e2, &Density::Uniform, n, Quadrature::Trapezoid).unwrap() - closed)
            .abs()
    };
    // Intervals double: 100 -> 200 -> 400.
    let (e100, e200, e400) = (err(101), err(201), err(401));
    for ratio in [e100 / e200, e200 / e400] {
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }
}

#[test]
fn sampled_ot_never_exceeds_constrained_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let (e1, e2) = (random_edge(&mut rng), random_edge(&mut rng));
        let p = PointCloud::from_edge(&e1, 16).unwrap();
        let q = PointCloud::from_edge(&e2, 16).unwrap();
        let ot = discrete_ot(&p, &q).unwrap();
        assert!(ot <= ot_upper_bound(&e1, &e2, 16), "{e1:?} {e2:?}");
    }
}
