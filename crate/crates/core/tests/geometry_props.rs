use fml_core::geometry::{
    dist, exp_map, geodesic_point, log_map, uniform_random_point, Ball, Geometry, ModelSpace, Point,
};
use proptest::prelude::*;

fn spaces() -> Vec<ModelSpace> {
    let mut out = Vec::new();
    for dim in [2, 3] {
        for k in [1.0, 4.0, 0.0, -1.0, -0.25] {
            out.push(ModelSpace::new(k, dim).unwrap());
        }
    }
    out
}

fn draw(space: &ModelSpace, seed: u64) -> Point {
    let ball = match space.geometry() {
        Geometry::Sphere => None,
        _ => Some(Ball { center: space.origin(), radius: 3.0 }),
    };
    uniform_random_point(space, seed, ball.as_ref()).unwrap()
}

fn space_strategy() -> impl Strategy<Value = ModelSpace> {
    (0..spaces().len()).prop_map(|i| spaces()[i])
}

fn within_cut(space: &ModelSpace, x: &Point, y: &Point, frac: f64) -> bool {
    match space.cut_distance().finite() {
        Some(cut) => dist(space, x, y).unwrap() < frac * cut,
        None => true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn metric_axioms(space in space_strategy(), a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (x, y, z) = (draw(&space, a), draw(&space, b), draw(&space, c));
        let dxy = dist(&space, &x, &y).unwrap();
        prop_assert!((dxy - dist(&space, &y, &x).unwrap()).abs() <= 1e-12);
        prop_assert!(dxy >= 0.0);
        prop_assert!(dist(&space, &x, &x).unwrap() == 0.0);
        let slack = dist(&space, &x, &z).unwrap() + dist(&space, &z, &y).unwrap() - dxy;
        prop_assert!(slack >= -1e-10, "triangle slack {slack}");
    }

    #[test]
    fn exp_inverts_log(space in space_strategy(), a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (draw(&space, a), draw(&space, b));
        prop_assume!(within_cut(&space, &x, &y, 0.9));
        let v = log_map(&space, &x, &y).unwrap();
        let d = dist(&space, &x, &y).unwrap();
        prop_assert!((space.tangent_norm(&v) - d).abs() <= 1e-10);
        let back = exp_map(&space, &v).unwrap();
        prop_assert!(dist(&space, &back, &y).unwrap() < 1e-9);
    }

    #[test]
    fn geodesic_arclength_is_additive(
        space in space_strategy(),
        a in any::<u64>(),
        b in any::<u64>(),
        t1 in 0.0..=1.0f64,
        t2 in 0.0..=1.0f64,
    ) {
        let (x, y) = (draw(&space, a), draw(&space, b));
        prop_assume!(within_cut(&space, &x, &y, 0.9));
        let d = dist(&space, &x, &y).unwrap();
        let g1 = geodesic_point(&space, &x, &y, t1).unwrap();
        let g2 = geodesic_point(&space, &x, &y, t2).unwrap();
        let got = dist(&space, &g1, &g2).unwrap();
        prop_assert!((got - (t2 - t1).abs() * d).abs() < 1e-10, "{got} vs {}", (t2 - t1).abs() * d);
    }

    #[test]
    fn spherical_law_of_cosines(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let s = ModelSpace::sphere(2).unwrap();
        let (p, q, r) = (draw(&s, a), draw(&s, b), draw(&s, c));
        prop_assume!(within_cut(&s, &r, &p, 0.99) && within_cut(&s, &r, &q, 0.99));
        let (da, db) = (dist(&s, &r, &p).unwrap(), dist(&s, &r, &q).unwrap());
        prop_assume!(da > 1e-3 && db > 1e-3);
        let (u, v) = (log_map(&s, &r, &p).unwrap(), log_map(&s, &r, &q).unwrap());
        let cos_c = s.inner(u.vec(), v.vec()) / (da * db);
        let dc = dist(&s, &p, &q).unwrap();
        let residual = dc.cos() - (da.cos() * db.cos() + da.sin() * db.sin() * cos_c);
        prop_assert!(residual.abs() < 1e-10, "{residual}");
    }
}

#[test]
fn hyperbolic_log_stays_accurate_far_from_the_origin() {
    // Coordinates of order cosh(20) ~ 2.4e8 make the Minkowski norm of a
    // radial tangent vector cancel; the log must still have length d.
    let h = ModelSpace::hyperbolic(2).unwrap();
    for (r1, r2, turn) in [(20.0, 0.3, 0.5), (21.6, 0.2, 3.0), (12.0, 15.0, 1.0), (18.0, 18.0, 0.01)] {
        let x = h.polar_point(r1, &[1.0, 0.0]).unwrap();
        let dir = [f64::cos(turn), f64::sin(turn)];
        let y = h.polar_point(r2, &dir).unwrap();
        let d = dist(&h, &x, &y).unwrap();
        let v = log_map(&h, &x, &y).unwrap();
        let rel = (h.tangent_norm(&v) - d).abs() / d;
        assert!(rel < 1e-9, "r1={r1} r2={r2}: relative norm error {rel}");
        // A short step along the log direction makes exact progress.
        let step = v.scaled(0.5 / d);
        let p = exp_map(&h, &step).unwrap();
        let from_x = dist(&h, &x, &p).unwrap();
        let to_y = dist(&h, &p, &y).unwrap();
        assert!((from_x - 0.5).abs() < 1e-6, "r1={r1} r2={r2}: step length {from_x}");
        assert!((to_y - (d - 0.5)).abs() < 1e-6, "r1={r1} r2={r2}: progress {}", d - to_y);
    }
}

#[test]
fn hyperbolic_distance_is_accurate_far_from_the_origin() {
    let h = ModelSpace::hyperbolic(2).unwrap();
    for r in [5.0, 15.0, 25.0, 30.0] {
        // Coordinates of size cosh r only resolve positions to ~ε·cosh r.
        let floor = 4.0 * f64::EPSILON * f64::cosh(r);
        for gap in [1e-6, 0.13, 0.5, 2.0] {
            let x = h.polar_point(r, &[0.6, 0.8]).unwrap();
            let y = h.polar_point(r + gap, &[0.6, 0.8]).unwrap();
            let d = dist(&h, &x, &y).unwrap();
            assert!((d - gap).abs() < 1e-10 * gap + floor, "r={r} gap={gap}: {d}");
        }
        for phi in [1e-9, 1e-4, 0.3, 3.0] {
            let x = h.polar_point(r, &[1.0, 0.0]).unwrap();
            let y = h.polar_point(r, &[f64::cos(phi), f64::sin(phi)]).unwrap();
            let expected = 2.0 * (f64::sinh(r) * (phi / 2.0).sin()).asinh();
            let d = dist(&h, &x, &y).unwrap();
            assert!((d - expected).abs() < 1e-10 * expected + floor, "r={r} phi={phi}: {d} vs {expected}");
        }
    }
}

#[test]
fn distance_examples_in_three_dimensions() {
    let s = ModelSpace::sphere(3).unwrap();
    let x = s.point(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let y = s.point(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    assert!((dist(&s, &x, &y).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    let h = ModelSpace::hyperbolic(3).unwrap();
    let p = h.point(vec![0.0, 0.0, 2f64.sinh(), 2f64.cosh()]).unwrap();
    assert!((dist(&h, &h.origin(), &p).unwrap() - 2.0).abs() < 1e-14);
    let e = ModelSpace::flat(3).unwrap();
    let q = e.point(vec![1.0, 2.0, 2.0]).unwrap();
    assert_eq!(dist(&e, &e.origin(), &q).unwrap(), 3.0);
}
