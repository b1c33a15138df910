//! The invariant suite behind `fml verify`: one check per headline claim,
//! each returning a pass flag and the measured quantities.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::experiments::{
    consistency_experiment, genericity_experiment, hmin_verification_run, position_bound_experiment,
    AdversaryGrid, HminGrid,
};
use super::trial_seed;
use crate::bounds::{self, ConcentrationSpec};
use crate::error::Result;
use crate::geometry::{
    exp_map, log_map, sample_uniform, Ball, Geometry, ModelSpace, Point, Radius,
};
use crate::oracle::grid_median;
use crate::solver::{
    first_order_residual, lipschitz_certificate, median_solve, move_toward_median_check,
    two_point_move_check, DiscreteMeasure, SolverConfig, LIPSCHITZ_SLACK,
};

/// `Full` runs the sizes of the acceptance criteria; `Quick` is a smoke run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteScale {
    Quick,
    Full,
}

impl SuiteScale {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            SuiteScale::Quick => quick,
            SuiteScale::Full => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl CheckOutcome {
    fn new(name: &str, pass: bool, detail: Value) -> Self {
        CheckOutcome {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// The concentration parameters of the worked numeric remark.
pub fn remark_parameters() -> (f64, f64) {
    let alpha = 0.51;
    (alpha, 0.99 * PI * (1.0 - 1.0 / (2.0 * alpha)))
}

pub fn check_f_remark() -> Result<CheckOutcome> {
    let (alpha, rho) = remark_parameters();
    let value = bounds::f_eval(alpha, rho, 1.0, FRAC_PI_2 - rho)?;
    let pass = (value - 0.2907).abs() <= 5e-4;
    Ok(CheckOutcome::new("f_remark", pass, json!({ "alpha": alpha, "rho": rho, "value": value })))
}

pub fn check_hmin(scale: SuiteScale, seed: u64) -> Result<CheckOutcome> {
    let run = hmin_verification_run(&HminGrid {
        instances_per_geometry: scale.pick(50, 500),
        resolution: scale.pick(10_000, 100_000),
        seed,
    })?;
    Ok(CheckOutcome::new("hmin_oracle", run.report.verdict.pass, run.report.summary))
}

fn origin_spec(space: &ModelSpace, rho: f64, alpha: f64) -> Result<ConcentrationSpec> {
    ConcentrationSpec::new(space.origin(), rho, alpha)
}

/// Flat, sphere (certified case) and hyperbolic sweeps.
pub fn check_position(scale: SuiteScale, seed: u64) -> Result<CheckOutcome> {
    let trials = scale.pick(96, 500);
    let cases = [
        (ModelSpace::flat(2)?, 1.0, 0.75),
        (ModelSpace::sphere(2)?, 0.3, 0.75),
        (ModelSpace::hyperbolic(2)?, 0.5, 0.6),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (i, (space, rho, alpha)) in cases.into_iter().enumerate() {
        let report = position_bound_experiment(
            &space,
            &origin_spec(&space, rho, alpha)?,
            &AdversaryGrid {
                trials,
                ..AdversaryGrid::default()
            },
            &SolverConfig::default(),
            trial_seed(seed, i as u64),
        )?;
        pass &= report.verdict.pass;
        details.push(json!({
            "geometry": space.geometry(),
            "pass": report.verdict.pass,
            "certified_radius": report.params["certified_radius"],
            "case_tag": report.params["case_tag"],
            "max_dist_median_center": report.summary["max_dist_median_center"],
            "sharpness_ratio": report.summary["sharpness_ratio"],
        }));
    }
    Ok(CheckOutcome::new("position_bound", pass, Value::Array(details)))
}

/// All mass inside `B̄(a, ρ)` with `ρ < r_*/4` on the sphere.
pub fn check_alpha_one(scale: SuiteScale, seed: u64) -> Result<CheckOutcome> {
    let space = ModelSpace::sphere(2)?;
    let rho = 0.7;
    let report = position_bound_experiment(
        &space,
        &origin_spec(&space, rho, 1.0)?,
        &AdversaryGrid {
            trials: scale.pick(40, 200),
            ..AdversaryGrid::default()
        },
        &SolverConfig::default(),
        seed,
    )?;
    let max = report.summary["max_dist_median_center"].as_f64().unwrap_or(f64::NAN);
    let pass = report.verdict.pass && max <= rho + 1e-6;
    Ok(CheckOutcome::new("alpha_one", pass, json!({ "rho": rho, "max_dist_median_center": max })))
}

/// `(κ, α, ρ)` grid of 10 × 25 × 10 points, all satisfying the assumption.
pub fn bounds_grid() -> Vec<(f64, f64, f64)> {
    let kappas: [f64; 10] = [-4.0, -1.0, -0.25, -0.01, 0.0, 0.01, 0.25, 1.0, 2.0, 9.0];
    let mut out = Vec::with_capacity(2500);
    for &k in &kappas {
        for i in 0..25 {
            let alpha = 0.51 + 0.49 * i as f64 / 24.0;
            for j in 0..10 {
                let rho = if k > 0.0 {
                    let s = 0.05 + 0.9 * j as f64 / 9.0;
                    s * (2.0 * alpha - 1.0) / (2.0 * alpha) * PI / k.sqrt()
                } else {
                    0.01 * 500f64.powf(j as f64 / 9.0)
                };
                out.push((k, alpha, rho));
            }
        }
    }
    out
}

pub fn check_bounds_grid() -> Result<CheckOutcome> {
    let grid = bounds_grid();
    let mut violations = Vec::new();
    let mut assumption_failures = 0;
    let mut certified = 0;
    for &(k, alpha, rho) in &grid {
        let space = ModelSpace::new(k, 2)?;
        let spec = origin_spec(&space, rho, alpha)?;
        if !bounds::assumption_check(&space, &spec) {
            assumption_failures += 1;
            continue;
        }
        let rep = bounds::refined_bound_radius(&space, &spec)?;
        let Some(r) = rep.refined_radius else {
            continue;
        };
        certified += 1;
        let mut bad = rep.invariant_violations();
        if r > rep.r_basic {
            bad.push("refined above basic".into());
        }
        if r < rho || ((r == rho) != (alpha == 1.0)) {
            bad.push("refined vs rho".into());
        }
        if let Radius::Finite(rs) = rep.r_star {
            if !(r < rs / 2.0) {
                bad.push("refined not below r_*/2".into());
            }
        }
        if !bad.is_empty() {
            violations.push(json!({ "curvature": k, "alpha": alpha, "rho": rho, "problems": bad }));
        }
    }
    let pass = violations.is_empty() && assumption_failures == 0;
    Ok(CheckOutcome::new(
        "bounds_grid",
        pass,
        json!({
            "grid_points": grid.len(),
            "certified": certified,
            "assumption_failures": assumption_failures,
            "violations": violations,
        }),
    ))
}

/// Seeded instance for the solver checks: `n` atoms with random weights,
/// uniform on the sphere or in the radius-2 ball about the origin.
pub fn random_instance(geometry: Geometry, n: usize, seed: u64) -> Result<DiscreteMeasure> {
    let space = ModelSpace::unit(geometry, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ball = (geometry != Geometry::Sphere).then(|| Ball {
        center: space.origin(),
        radius: 2.0,
    });
    let points: Vec<Point> = (0..n)
        .map(|_| sample_uniform(&space, &mut rng, ball.as_ref()))
        .collect::<Result<_>>()?;
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::new(space, points, raw.iter().map(|w| w / total).collect())
}

fn instance_plan(per_geometry: usize) -> Vec<(Geometry, usize, usize)> {
    Geometry::ALL
        .into_iter()
        .flat_map(|g| (0..per_geometry).map(move |i| (g, 3 + i % 3, i)))
        .collect()
}

/// Stationarity, optimality against the grid oracle, and Lipschitz certificates.
pub fn check_solver(scale: SuiteScale, seed: u64) -> Result<CheckOutcome> {
    let cfg = SolverConfig::default();
    let plan = instance_plan(scale.pick(4, 50));
    let rows: Vec<Value> = plan
        .par_iter()
        .map(|&(g, n, i)| -> Result<Value> {
            let s = trial_seed(seed, (i as u64) << 2 | g as u64);
            let mu = random_instance(g, n, s)?;
            let res = median_solve(&mu, &cfg.with_seed(s))?;
            let residual = first_order_residual(&mu, &res.median)?;
            let oracle = grid_median(&mu)?;
            let cert = lipschitz_certificate(&mu, &res.median, res.cost, 200, s)?;
            Ok(json!({
                "geometry": g,
                "converged": res.converged,
                "residual": residual,
                "cost_gap": (res.cost - oracle.cost).abs(),
                "min_slack": cert.min_slack,
            }))
        })
        .collect::<Result<_>>()?;
    let max = |key: &str| rows.iter().filter_map(|r| r[key].as_f64()).fold(0.0, f64::max);
    let min_slack = rows
        .iter()
        .filter_map(|r| r["min_slack"].as_f64())
        .fold(f64::INFINITY, f64::min);
    let all_converged = rows.iter().all(|r| r["converged"] == true);
    let pass = all_converged
        && max("residual") < 1e-8
        && max("cost_gap") < 1e-6
        && min_slack >= -LIPSCHITZ_SLACK;
    Ok(CheckOutcome::new(
        "solver_oracle",
        pass,
        json!({
            "instances": rows.len(),
            "all_converged": all_converged,
            "max_residual": max("residual"),
            "max_cost_gap": max("cost_gap"),
            "min_lipschitz_slack": min_slack,
        }),
    ))
}

/// Moving one atom towards the median keeps it optimal; moving two pins it.
pub fn check_moves(scale: SuiteScale, seed: u64) -> Result<CheckOutcome> {
    let cfg = SolverConfig::default();
    let plan = instance_plan(scale.pick(2, 17));
    let plan = &plan[..plan.len().min(scale.pick(6, 50))];
    let rows: Vec<Value> = plan
        .par_iter()
        .map(|&(g, n, i)| -> Result<Value> {
            let s = trial_seed(seed, (i as u64) << 2 | g as u64);
            let mu = random_instance(g, n + 1, s)?;
            let m = median_solve(&mu, &cfg.with_seed(s))?.median;
            let mut single_ok = true;
            for t in [0.25, 0.5, 0.75] {
                for k in 0..mu.len() {
                    single_ok &= move_toward_median_check(&mu, &m, k, t, &cfg.with_seed(s))?;
                }
            }
            let pair = two_point_move_check(&mu, &m, (0, 0.5), (1, 0.5), &cfg.with_seed(s))?;
            Ok(json!({
                "geometry": g,
                "single_moves_ok": single_ok,
                "two_point_cluster_diameter": pair.result.cluster_diameter,
                "two_point_offset": pair.median_offset,
            }))
        })
        .collect::<Result<_>>()?;
    let single = rows.iter().all(|r| r["single_moves_ok"] == true);
    let max_diam = rows
        .iter()
        .filter_map(|r| r["two_point_cluster_diameter"].as_f64())
        .fold(0.0, f64::max);
    let max_offset = rows
        .iter()
        .filter_map(|r| r["two_point_offset"].as_f64())
        .fold(0.0, f64::max);
    Ok(CheckOutcome::new(
        "move_toward_median",
        single && max_diam < 1e-7 && max_offset < 1e-7,
        json!({
            "instances": rows.len(),
            "single_moves_ok": single,
            "max_two_point_cluster_diameter": max_diam,
            "max_two_point_offset": max_offset,
        }),
    ))
}

pub fn check_genericity(scale: SuiteScale, seed: u64) -> Result<CheckOutcome> {
    let report = genericity_experiment(
        &ModelSpace::sphere(2)?,
        5,
        scale.pick(40, 200),
        seed,
        &SolverConfig::default().with_multistarts(32),
    )?;
    Ok(CheckOutcome::new("genericity", report.verdict.pass, report.summary))
}

/// Base measure of the consistency check: five atoms in the unit-radius cap
/// about the north pole, with unequal weights.
pub fn consistency_base(seed: u64) -> Result<DiscreteMeasure> {
    let space = ModelSpace::sphere(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = Ball {
        center: space.origin(),
        radius: 1.0,
    };
    let points: Vec<Point> = (0..5)
        .map(|_| sample_uniform(&space, &mut rng, Some(&cap)))
        .collect::<Result<_>>()?;
    DiscreteMeasure::new(space, points, vec![0.3, 0.25, 0.2, 0.15, 0.1])
}

pub fn check_consistency(scale: SuiteScale, seed: u64) -> Result<CheckOutcome> {
    let mu = consistency_base(seed)?;
    let report = consistency_experiment(
        &mu,
        &[16, 64, 256, 1024],
        scale.pick(20, 50),
        seed,
        &SolverConfig::default(),
        0.05,
    )?;
    Ok(CheckOutcome::new("consistency", report.verdict.pass, report.summary))
}

fn kernel_spaces() -> Result<Vec<ModelSpace>> {
    [1.0, 4.0, 0.0, -1.0, -0.25]
        .iter()
        .map(|&k| ModelSpace::new(k, 2))
        .collect()
}

fn sample_kernel_point(space: &ModelSpace, rng: &mut ChaCha8Rng) -> Result<Point> {
    let ball = (space.geometry() != Geometry::Sphere).then(|| Ball {
        center: space.origin(),
        radius: 3.0 / space.curvature().abs().max(1.0).sqrt(),
    });
    sample_uniform(space, rng, ball.as_ref())
}

/// Angle at `x` between the geodesics to `y` and `z`.
fn angle_at(space: &ModelSpace, x: &Point, y: &Point, z: &Point) -> Result<f64> {
    let u = log_map(space, x, y)?;
    let v = log_map(space, x, z)?;
    let nu = space.tangent_norm(&u);
    let nv = space.tangent_norm(&v);
    let c = space.inner(u.vec(), v.vec()) / (nu * nv);
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Law-of-cosines residual, relative to the size of the terms.
fn cosine_law_residual(k: f64, a: f64, b: f64, c: f64, gamma: f64) -> f64 {
    if k > 0.0 {
        let s = k.sqrt();
        let (a, b, c) = (s * a, s * b, s * c);
        (c.cos() - (a.cos() * b.cos() + a.sin() * b.sin() * gamma.cos())).abs()
    } else if k == 0.0 {
        (c * c - (a * a + b * b - 2.0 * a * b * gamma.cos())).abs() / (a * a + b * b).max(1.0)
    } else {
        let s = (-k).sqrt();
        let (a, b, c) = (s * a, s * b, s * c);
        let lhs = c.cosh();
        let rhs = a.cosh() * b.cosh() - a.sinh() * b.sinh() * gamma.cos();
        (lhs - rhs).abs() / (a.cosh() * b.cosh())
    }
}

/// Metric axioms, exp/log inversion, law of cosines and distance-formula
/// continuity on `cases` seeded triangles per space.
pub fn check_geometry(scale: SuiteScale, seed: u64) -> Result<CheckOutcome> {
    let cases = scale.pick(200, 1000);
    let mut worst = json!({});
    let mut pass = true;
    for (si, space) in kernel_spaces()?.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, si as u64));
        let (mut axiom, mut inversion, mut cosine) = (0.0f64, 0.0f64, 0.0f64);
        let cut = space.cut_distance();
        let mut lawful = 0;
        for _ in 0..cases {
            let x = sample_kernel_point(&space, &mut rng)?;
            let y = sample_kernel_point(&space, &mut rng)?;
            let z = sample_kernel_point(&space, &mut rng)?;
            let d = |p: &Point, q: &Point| space.dist_coords(p.coords(), q.coords());
            let (xy, yz, xz) = (d(&x, &y), d(&y, &z), d(&x, &z));
            axiom = axiom
                .max(d(&x, &x))
                .max((xy - d(&y, &x)).abs())
                .max((xz - xy - yz).max(0.0));
            if cut.exceeds(xy / 0.9) {
                let back = exp_map(&space, &log_map(&space, &x, &y)?)?;
                inversion = inversion.max(d(&back, &y));
            }
            let spread = cut.finite().is_none_or(|c| xy < 0.9 * c && xz < 0.9 * c);
            if spread && xy > 1e-6 && xz > 1e-6 {
                let gamma = angle_at(&space, &x, &y, &z)?;
                cosine = cosine.max(cosine_law_residual(space.curvature(), xy, xz, yz, gamma));
                lawful += 1;
            }
        }
        let ok = axiom <= 1e-12 && inversion <= 1e-9 && cosine <= 1e-10;
        pass &= ok;
        worst[format!("curvature_{}", space.curvature())] = json!({
            "metric_axioms": axiom,
            "exp_log_inversion": inversion,
            "law_of_cosines": cosine,
            "law_of_cosines_cases": lawful,
        });
    }

    // Distance formulas switch representation internally; probe both sides of
    // each switch against the constructed radius.
    let mut continuity = 0.0f64;
    for space in kernel_spaces()? {
        let s = space.curvature().abs().sqrt().max(1.0);
        for base in [2f64.acosh(), FRAC_PI_2, 1.0] {
            for eps in [-1e-9, 0.0, 1e-9] {
                let r = (base + eps) / s;
                let p = space.polar_point(r, &[0.6, 0.8])?;
                continuity = continuity.max((space.dist_coords(space.origin().coords(), p.coords()) - r).abs());
            }
        }
    }
    let flat_gap = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..cases)
            .map(|_| {
                let rho: f64 = rng.gen_range(0.05..2.0);
                let t: f64 = rng.gen_range(0.0..2.0);
                let u = (rho + t) * rho / (rho + 2.0 * t);
                let inst = crate::hmin::HminInstance::new(Geometry::Flat, rho, t, u)?;
                Ok((t - rho + u - crate::hmin::second_branch_value(&inst)?).abs())
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max)
    };
    pass &= continuity <= 1e-12 && flat_gap <= 1e-10;
    worst["distance_branch_continuity"] = json!(continuity);
    worst["hmin_flat_branch_gap"] = json!(flat_gap);
    Ok(CheckOutcome::new("geometry_kernel", pass, worst))
}

/// Every check at the given scale, in criterion order.
pub fn verify_suite(scale: SuiteScale, seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_f_remark()?,
        check_hmin(scale, seed)?,
        check_position(scale, seed)?,
        check_alpha_one(scale, seed)?,
        check_bounds_grid()?,
        check_solver(scale, seed)?,
        check_moves(scale, seed)?,
        check_genericity(scale, seed)?,
        check_consistency(scale, seed)?,
        check_geometry(scale, seed)?,
    ])
}
