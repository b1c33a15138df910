use std::f64::consts::PI;

use fml_core::bounds::{
    assumption_check, f_eval, f_root, position_radius, r_star, refined_bound_radius, s_delta,
};
use fml_core::{CaseTag, ConcentrationSpec, ModelSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(k: f64, alpha: f64, rho: f64) -> Option<fml_core::BoundReport> {
    let space = ModelSpace::new(k, 2).unwrap();
    let spec = ConcentrationSpec::new(space.origin(), rho, alpha).unwrap();
    refined_bound_radius(&space, &spec).ok()
}

#[test]
fn refined_radius_is_monotone_on_grids() {
    for k in [1.0, 0.0, -1.0] {
        let rhos: Vec<f64> = (1..=50).map(|i| 0.02 * i as f64).collect();
        let alphas: Vec<f64> = (0..50).map(|j| 0.52 + 0.48 * j as f64 / 49.0).collect();
        let grid: Vec<Vec<Option<f64>>> = alphas
            .iter()
            .map(|&a| rhos.iter().map(|&r| report(k, a, r).and_then(|b| b.refined_radius)).collect())
            .collect();
        let mut certified = 0;
        for (i, row) in grid.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                let Some(r) = cell else { continue };
                certified += 1;
                if let Some(Some(next)) = row.get(j + 1) {
                    assert!(*next >= r - 1e-12, "k={k}: not nondecreasing in rho at ({i},{j})");
                }
                if let Some(Some(next)) = grid.get(i + 1).map(|g| g[j]) {
                    assert!(next <= r + 1e-12, "k={k}: not nonincreasing in alpha at ({i},{j})");
                }
            }
        }
        assert!(certified > 1000, "k={k}: only {certified} certified cells");
    }
}

#[test]
fn small_curvature_approaches_the_flat_radius() {
    for (alpha, rho) in [(0.6, 0.5), (0.75, 1.0), (0.9, 2.0), (0.55, 0.1)] {
        let flat = position_radius(0.0, alpha, rho).unwrap();
        for k in [1e-6, -1e-6] {
            let r = position_radius(k, alpha, rho).unwrap();
            assert!((r - flat).abs() / flat < 1e-5, "k={k} alpha={alpha} rho={rho}: {r} vs {flat}");
        }
        let tight = report(1e-6, alpha, rho).unwrap().refined_radius.unwrap();
        assert!((tight - flat).abs() / flat < 1e-5);
    }
}

#[test]
fn hyperbolic_root_matches_a_sign_scan() {
    let (alpha, rho, k) = (0.75, 1.0, -1.0);
    let root = f_root(alpha, rho, k).unwrap();
    let hi = rho / (2.0 * alpha - 1.0);
    let h = 1e-6;
    let n = (hi / h) as usize;
    let mut prev = (h, f_eval(alpha, rho, k, h).unwrap());
    let mut scanned = None;
    for i in 2..n {
        let t = i as f64 * h;
        let f = f_eval(alpha, rho, k, t).unwrap();
        if prev.1 > 0.0 && f <= 0.0 {
            // linear interpolation inside the sign-change cell
            scanned = Some(prev.0 + h * prev.1 / (prev.1 - f));
            break;
        }
        prev = (t, f);
    }
    let scanned = scanned.expect("F changes sign");
    assert!((root - scanned).abs() < 1e-9, "{root} vs {scanned}");
    // coth(t/2) − coth t = 2 coth ρ at the root
    let residual = (0.5 * root).tanh().recip() - root.tanh().recip() - 2.0 / 1f64.tanh();
    assert!(residual.abs() < 1e-8, "{residual}");
}

#[test]
fn root_brackets_the_sign_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let k = [1.0, 0.0, -1.0, 0.3, -2.5][rng.gen_range(0..5)];
        let alpha = rng.gen_range(0.52..0.99);
        let rho = rng.gen_range(0.01..1.5);
        let Ok(t) = f_root(alpha, rho, k) else {
            continue;
        };
        let eps = 1e-6 * rho;
        assert!(f_eval(alpha, rho, k, t - eps).unwrap() > 0.0, "k={k} alpha={alpha} rho={rho}");
        assert!(f_eval(alpha, rho, k, t + eps).unwrap() < 0.0, "k={k} alpha={alpha} rho={rho}");
    }
}

#[test]
fn refined_radius_makes_sense() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 2000 {
        let k = match checked % 3 {
            0 => rng.gen_range(0.05..4.0),
            1 => 0.0,
            _ => -rng.gen_range(0.05..4.0),
        };
        let alpha = rng.gen_range(0.51..=1.0);
        let rho = rng.gen_range(0.01..2.0);
        let space = ModelSpace::new(k, 2).unwrap();
        let spec = ConcentrationSpec::new(space.origin(), rho, alpha).unwrap();
        if !assumption_check(&space, &spec) {
            continue;
        }
        let lhs = alpha * s_delta(&space, rho).unwrap() / (2.0 * alpha - 1.0).sqrt();
        let rhs = match r_star(&space).finite() {
            Some(r) => s_delta(&space, r / 2.0).unwrap(),
            None => s_delta(&space, 50.0 * rho).unwrap(),
        };
        assert!(lhs < rhs, "k={k} alpha={alpha} rho={rho}: {lhs} >= {rhs}");

        let b = refined_bound_radius(&space, &spec).unwrap();
        assert!(b.invariant_violations().is_empty(), "{b:?}");
        if let Some(r) = b.refined_radius {
            assert!(r <= b.r_basic);
            if alpha < 1.0 {
                assert!(r < b.r_basic && r > rho);
            } else {
                assert!((r - rho).abs() <= 1e-12);
            }
        }
        checked += 1;
    }
}

#[test]
fn case_tags_follow_the_curvature_sign() {
    assert_eq!(report(0.0, 0.75, 1.0).unwrap().case_tag, CaseTag::Flat);
    assert_eq!(report(-1.0, 0.6, 0.5).unwrap().case_tag, CaseTag::Negative);
    assert_eq!(report(1.0, 0.75, 0.3).unwrap().case_tag, CaseTag::PositiveA);
    let alpha = 0.51;
    let rho = 0.99 * PI * (1.0 - 1.0 / (2.0 * alpha));
    let b = report(1.0, alpha, rho).unwrap();
    assert_eq!(b.case_tag, CaseTag::PositiveUnverified);
    assert_eq!(b.refined_radius, None);
    assert_eq!(b.certified_radius(), b.r_basic);
    assert!(report(1.0, 0.6, 1.0).is_none(), "assumption fails: 6 > pi");
}

#[test]
fn flat_f_without_outside_mass_is_negative() {
    for t in [1e-3, 0.25, 0.5, 1.0] {
        assert!((f_eval(1.0, 1.0, 0.0, t).unwrap() + t).abs() < 1e-15);
    }
}
