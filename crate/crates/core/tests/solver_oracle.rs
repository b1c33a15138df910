use fml_core::geometry::{sample_uniform, Ball, Geometry, ModelSpace};
use fml_core::oracle::grid_median;
use fml_core::solver::{first_order_residual, lipschitz_certificate, median_solve};
use fml_core::{DiscreteMeasure, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(geometry: Geometry, n: usize, seed: u64) -> DiscreteMeasure {
    let space = ModelSpace::unit(geometry, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ball = match geometry {
        Geometry::Sphere => None,
        _ => Some(Ball { center: space.origin(), radius: 2.0 }),
    };
    let points = (0..n).map(|_| sample_uniform(&space, &mut rng, ball.as_ref()).unwrap()).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::new(space, points, raw.iter().map(|w| w / total).collect()).unwrap()
}

#[test]
fn solver_matches_grid_oracle() {
    let cfg = SolverConfig::default();
    let mut worst = (0.0f64, 0.0f64);
    for geometry in Geometry::ALL {
        for seed in 0..12u64 {
            let mu = instance(geometry, 3 + (seed as usize % 3), seed);
            let res = median_solve(&mu, &cfg).unwrap();
            let oracle = grid_median(&mu).unwrap();
            assert!(res.converged, "{geometry:?} seed {seed}: {res:?}");
            let r = first_order_residual(&mu, &res.median).unwrap();
            assert!(r < 1e-8, "{geometry:?} seed {seed}: residual {r}");
            let gap = (res.cost - oracle.cost).abs();
            worst.0 = worst.0.max(gap);
            assert!(gap < 1e-6, "{geometry:?} seed {seed}: {} vs {}", res.cost, oracle.cost);
            let cert = lipschitz_certificate(&mu, &res.median, res.cost, 200, seed).unwrap();
            worst.1 = worst.1.min(cert.min_slack);
            assert!(cert.passed, "{geometry:?} seed {seed}: {cert:?}");
        }
    }
    eprintln!("worst cost gap {:e}, min slack {:e}", worst.0, worst.1);
}
