//! The four seeded experiments. Each returns an [`ExperimentReport`] whose
//! verdict is a pure function of its params, trial records and tolerances
//! (see [`verdict_from_records`]).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::report::{field_bool, field_f64, field_str, tolerance, ExperimentReport};
use super::trial_seed;
use crate::bounds::{self, CaseTag, ConcentrationSpec};
use crate::error::{Error, Result};
use crate::geometry::{move_origin_to, sample_uniform, Ball, Geometry, ModelSpace, Point, Radius};
use crate::hmin::{
    self, argmin_condition_check, hmin_bruteforce, ArgminCheck, Branch, HminComparison,
    HminInstance,
};
use crate::solver::{median_solve, DiscreteMeasure, SolverConfig};

pub const POSITION_BOUND: &str = "position_bound";
pub const CONSISTENCY: &str = "consistency";
pub const GENERICITY: &str = "genericity";
pub const HMIN_VERIFICATION: &str = "hmin_verification";

/// Containment slack on top of the certified radius.
pub const CONTAINMENT_TOL: f64 = 1e-6;
/// Observed/refined ratio that counts as a tight probe.
pub const SHARPNESS_RATIO: f64 = 0.8;
/// Relative slack allowed when the per-n median distance goes up.
pub const MONOTONE_SLACK: f64 = 0.2;
pub const MIN_UNIQUE_FRACTION: f64 = 0.99;
/// Points spanning a subspace this close to 2-dimensional count as lying on one great circle.
pub const DEGENERACY_TOL: f64 = 1e-12;
pub const HMIN_ORACLE_TOL: f64 = 1e-7;
pub const FLAT_BRANCH_GAP_TOL: f64 = 1e-10;
/// On curved planes the second branch goes through `arccos`/`arccosh` near 1
/// at the branch boundary, which costs about half the digits.
pub const CURVED_BRANCH_GAP_TOL: f64 = 1e-7;

fn tolerances(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Recomputes the verdict of a stored experiment from its records.
pub fn verdict_from_records(
    experiment: &str,
    params: &Value,
    trials: &[Value],
    tol: &BTreeMap<String, f64>,
) -> Result<bool> {
    match experiment {
        POSITION_BOUND => position_verdict(params, trials, tol),
        CONSISTENCY => consistency_verdict(params, trials, tol),
        GENERICITY => genericity_verdict(trials, tol),
        HMIN_VERIFICATION => hmin_verdict(trials, tol),
        other => Err(Error::invalid(format!("unknown experiment `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// Position bound
// ---------------------------------------------------------------------------

/// Where the adversarial mass `1 − α` is placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryGrid {
    /// Directions on a uniform angular grid in the first coordinate plane.
    pub directions: usize,
    /// Number of distances on the geometric schedule.
    pub distances: usize,
    /// Largest adversary distance; `None` picks the default for the geometry.
    pub max_distance: Option<f64>,
    pub trials: usize,
}

impl Default for AdversaryGrid {
    fn default() -> Self {
        AdversaryGrid {
            directions: 16,
            distances: 10,
            max_distance: None,
            trials: 500,
        }
    }
}

/// Placement of the concentrated mass `α` inside `B̄(a, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InsideKind {
    /// Three uniform points in the ball.
    Random,
    /// Three points on the boundary sphere.
    Boundary,
    /// Two boundary points at `±φ*` about the adversary direction, the
    /// flat-space extremal configuration.
    Extremal,
}

impl InsideKind {
    fn name(self) -> &'static str {
        match self {
            InsideKind::Random => "random",
            InsideKind::Boundary => "boundary",
            InsideKind::Extremal => "extremal",
        }
    }
}

fn default_max_distance(space: &ModelSpace, spec: &ConcentrationSpec) -> f64 {
    match bounds::r_star(space) {
        Radius::Finite(r) => {
            let basic = spec.basic_radius();
            basic + 0.95 * (r - basic)
        }
        Radius::Unbounded => 50.0 * spec.rho,
    }
}

/// Unit vector at angle `angle` in the plane of the first two tangent coordinates.
fn planar_direction(dim: usize, angle: f64) -> Vec<f64> {
    let mut d = vec![0.0; dim];
    d[0] = angle.cos();
    d[1] = angle.sin();
    d
}

fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            return v;
        }
    }
}

struct PositionTrial {
    kind: InsideKind,
    direction: f64,
    distance: Option<f64>,
}

fn position_trial_plan(grid: &AdversaryGrid, alpha: f64, rho: f64, max_d: f64, idx: usize) -> PositionTrial {
    let kinds: &[InsideKind] = if alpha < 1.0 {
        &[InsideKind::Random, InsideKind::Boundary, InsideKind::Extremal]
    } else {
        &[InsideKind::Random, InsideKind::Boundary]
    };
    let dir = idx % grid.directions;
    let dist_idx = (idx / grid.directions) % grid.distances;
    let kind = kinds[(idx / (grid.directions * grid.distances)) % kinds.len()];
    let direction = 2.0 * PI * dir as f64 / grid.directions as f64;
    let distance = (alpha < 1.0).then(|| {
        if grid.distances == 1 {
            max_d
        } else {
            rho * (max_d / rho).powf(dist_idx as f64 / (grid.distances - 1) as f64)
        }
    });
    PositionTrial {
        kind,
        direction,
        distance,
    }
}

/// Builds the trial measure in normal coordinates at the origin, then moves it to `center`.
fn position_measure(
    space: &ModelSpace,
    spec: &ConcentrationSpec,
    plan: &PositionTrial,
    rng: &mut ChaCha8Rng,
) -> Result<DiscreteMeasure> {
    let l = space.dim();
    let origin = space.origin();
    let (rho, alpha) = (spec.rho, spec.alpha);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match plan.kind {
        InsideKind::Random => {
            let ball = Ball {
                center: origin.clone(),
                radius: rho,
            };
            for _ in 0..3 {
                points.push(sample_uniform(space, rng, Some(&ball))?);
                weights.push(alpha / 3.0);
            }
        }
        InsideKind::Boundary => {
            for _ in 0..3 {
                points.push(space.polar_point(rho, &random_direction(l, rng))?);
                weights.push(alpha / 3.0);
            }
        }
        InsideKind::Extremal => {
            let phi = ((1.0 - alpha) / (2.0 * alpha - 1.0).sqrt()).atan();
            for sign in [1.0, -1.0] {
                let dir = planar_direction(l, plan.direction + sign * phi);
                points.push(space.polar_point(rho, &dir)?);
                weights.push(alpha / 2.0);
            }
        }
    }
    if let Some(d) = plan.distance {
        points.push(space.polar_point(d, &planar_direction(l, plan.direction))?);
        weights.push(1.0 - alpha);
    }
    let total: f64 = weights.iter().sum();
    let moved = points
        .iter()
        .map(|p| move_origin_to(space, &spec.center, p))
        .collect();
    DiscreteMeasure::new(*space, moved, weights.iter().map(|w| w / total).collect())
}

/// Sweeps adversarial placements of the mass outside `B̄(a, ρ)` and checks
/// that every median stays within the certified radius.
pub fn position_bound_experiment(
    space: &ModelSpace,
    spec: &ConcentrationSpec,
    adversary: &AdversaryGrid,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    space.check_len(spec.center.coords())?;
    if !bounds::assumption_check(space, spec) {
        return Err(Error::invalid(format!(
            "concentration assumption fails: 2αρ/(2α−1) = {} is not below r_* = {}",
            spec.basic_radius(),
            bounds::r_star(space)
        )));
    }
    if adversary.directions == 0 || adversary.distances == 0 || adversary.trials == 0 {
        return Err(Error::invalid("adversary grid needs directions, distances and trials"));
    }
    let report = bounds::refined_bound_radius(space, spec)?;
    let certified = report.certified_radius();
    let max_d = adversary
        .max_distance
        .unwrap_or_else(|| default_max_distance(space, spec));
    if !(max_d >= spec.rho) {
        return Err(Error::invalid(format!("max adversary distance {max_d} is below rho")));
    }

    let trials: Vec<Value> = (0..adversary.trials)
        .into_par_iter()
        .map(|idx| -> Result<Value> {
            let s = trial_seed(seed, idx as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let plan = position_trial_plan(adversary, spec.alpha, spec.rho, max_d, idx);
            let mu = position_measure(space, spec, &plan, &mut rng)?;
            let res = median_solve(&mu, &cfg.with_seed(s))?;
            let d = space.dist_coords(res.median.coords(), spec.center.coords());
            Ok(json!({
                "index": idx,
                "seed": s,
                "inside": plan.kind.name(),
                "direction": plan.direction,
                "adversary_distance": plan.distance,
                "dist_median_center": d,
                "cost": res.cost,
                "residual": res.residual,
                "converged": res.converged,
                "cluster_diameter": res.cluster_diameter,
            }))
        })
        .collect::<Result<_>>()?;

    let (max_dist, worst) = trials
        .iter()
        .map(|t| (t["dist_median_center"].as_f64().unwrap_or(f64::NAN), t["index"].clone()))
        .fold((f64::NEG_INFINITY, Value::Null), |acc, x| if x.0 > acc.0 { x } else { acc });
    let mut summary = json!({
        "max_dist_median_center": max_dist,
        "worst_trial": worst,
        "bound": report,
    });
    if let Some(refined) = report.refined_radius {
        summary["sharpness_ratio"] = json!(max_dist / refined);
        summary["sharpness_probe_ok"] = json!(max_dist >= SHARPNESS_RATIO * refined);
    }
    if report.case_tag == CaseTag::PositiveUnverified {
        // Observational only: no containment is certified beyond the basic radius.
        if let Ok(r) = bounds::position_radius(space.curvature(), spec.alpha, spec.rho) {
            summary["uncertified_refined_radius"] = json!(r);
            summary["uncertified_refined_contains"] = json!(max_dist <= r + CONTAINMENT_TOL);
        }
    }
    let params = json!({
        "space": space,
        "center": spec.center,
        "alpha": spec.alpha,
        "rho": spec.rho,
        "adversary": {
            "directions": adversary.directions,
            "distances": adversary.distances,
            "max_distance": max_d,
            "trials": adversary.trials,
        },
        "solver": cfg,
        "case_tag": report.case_tag,
        "certified_radius": certified,
        "bound_invariants_ok": report.invariant_violations().is_empty(),
    });
    ExperimentReport::new(
        POSITION_BOUND,
        seed,
        params,
        trials,
        summary,
        tolerances(&[("containment", CONTAINMENT_TOL)]),
    )
}

fn position_verdict(params: &Value, trials: &[Value], tol: &BTreeMap<String, f64>) -> Result<bool> {
    let radius = field_f64(params, "certified_radius")?;
    let slack = tolerance(tol, "containment")?;
    let mut pass = field_bool(params, "bound_invariants_ok")?;
    for t in trials {
        pass &= field_f64(t, "dist_median_center")? <= radius + slack;
        pass &= field_bool(t, "converged")?;
    }
    Ok(pass)
}

// ---------------------------------------------------------------------------
// Consistency
// ---------------------------------------------------------------------------

/// Empirical measure of `n` i.i.d. draws from `mu`, atoms with equal draws merged.
pub fn empirical_measure(mu: &DiscreteMeasure, n: usize, rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let dist = WeightedIndex::new(mu.weights()).map_err(|e| Error::invalid(e.to_string()))?;
    let mut counts = vec![0usize; mu.len()];
    for _ in 0..n {
        counts[dist.sample(rng)] += 1;
    }
    let (points, weights): (Vec<Point>, Vec<f64>) = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (mu.points()[i].clone(), c as f64 / n as f64))
        .unzip();
    DiscreteMeasure::new(*mu.space(), points, weights)
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Draws empirical measures of growing size from `mu` and tracks how far
/// their medians fall from the median of `mu`.
pub fn consistency_experiment(
    mu: &DiscreteMeasure,
    n_schedule: &[usize],
    trials: usize,
    seed: u64,
    cfg: &SolverConfig,
    eps_target: f64,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if n_schedule.is_empty() || trials == 0 {
        return Err(Error::invalid("consistency needs a non-empty schedule and trials > 0"));
    }
    if !(eps_target > 0.0) {
        return Err(Error::invalid("eps_target must be positive"));
    }
    let base = median_solve(mu, &cfg.with_seed(seed))?;
    if !base.unique_flag {
        return Err(Error::invalid(format!(
            "base measure has no unique median (cluster diameter {})",
            base.cluster_diameter
        )));
    }
    let m = base.median.clone();
    let jobs: Vec<(usize, usize)> = n_schedule
        .iter()
        .enumerate()
        .flat_map(|(k, _)| (0..trials).map(move |t| (k, t)))
        .collect();
    let records: Vec<Value> = jobs
        .par_iter()
        .map(|&(k, t)| -> Result<Value> {
            let n = n_schedule[k];
            let s = trial_seed(seed, (k * trials + t) as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let emp = empirical_measure(mu, n, &mut rng)?;
            let res = median_solve(&emp, &cfg.with_seed(s))?;
            Ok(json!({
                "n": n,
                "trial": t,
                "seed": s,
                "dist": mu.space().dist_coords(res.median.coords(), m.coords()),
                "unique": res.unique_flag,
            }))
        })
        .collect::<Result<_>>()?;

    let per_n = per_n_medians(n_schedule, &records)?;
    let summary = json!({
        "base_median": m,
        "base_cost": base.cost,
        "median_dist_by_n": per_n.iter().map(|(n, d)| json!({"n": n, "median_dist": d})).collect::<Vec<_>>(),
    });
    let params = json!({
        "space": mu.space(),
        "points": mu.points(),
        "weights": mu.weights(),
        "n_schedule": n_schedule,
        "trials": trials,
        "solver": cfg,
    });
    ExperimentReport::new(
        CONSISTENCY,
        seed,
        params,
        records,
        summary,
        tolerances(&[("monotone_slack", MONOTONE_SLACK), ("final_distance", eps_target)]),
    )
}

fn per_n_medians(schedule: &[usize], records: &[Value]) -> Result<Vec<(usize, f64)>> {
    schedule
        .iter()
        .map(|&n| {
            let mut d: Vec<f64> = records
                .iter()
                .filter(|r| r["n"].as_u64() == Some(n as u64))
                .map(|r| field_f64(r, "dist"))
                .collect::<Result<_>>()?;
            if d.is_empty() {
                return Err(Error::invalid(format!("no records for n = {n}")));
            }
            Ok((n, median_of(&mut d)))
        })
        .collect()
}

fn consistency_verdict(params: &Value, trials: &[Value], tol: &BTreeMap<String, f64>) -> Result<bool> {
    let schedule: Vec<usize> = params["n_schedule"]
        .as_array()
        .ok_or_else(|| Error::invalid("params lack n_schedule"))?
        .iter()
        .map(|v| v.as_u64().map(|x| x as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::invalid("n_schedule must hold integers"))?;
    let slack = tolerance(tol, "monotone_slack")?;
    let target = tolerance(tol, "final_distance")?;
    let per_n = per_n_medians(&schedule, trials)?;
    let monotone = per_n
        .windows(2)
        .all(|w| w[1].1 <= (1.0 + slack) * w[0].1 + f64::EPSILON);
    let last = per_n.last().expect("schedule is non-empty").1;
    Ok(monotone && last < target)
}

// ---------------------------------------------------------------------------
// Genericity
// ---------------------------------------------------------------------------

/// The points span at most a 2-dimensional linear subspace, i.e. lie on
/// one great circle.
pub fn on_common_great_circle(points: &[Point]) -> bool {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in points {
        let mut v = p.coords().to_vec();
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > DEGENERACY_TOL {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis.len() <= 2
}

/// Samples `n` uniform points per trial on a sphere and measures how often
/// the median is unique. One forced great-circle instance (excluded from the
/// fraction) and the equal two-point counterexample are appended.
pub fn genericity_experiment(
    space: &ModelSpace,
    n: usize,
    trials: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<ExperimentReport> {
    if space.geometry() != Geometry::Sphere {
        return Err(Error::invalid(
            "genericity of the median needs a compact space; only curvature > 0 is supported",
        ));
    }
    if n < 3 || trials == 0 {
        return Err(Error::invalid("genericity needs N >= 3 points and trials > 0"));
    }
    cfg.validate()?;
    let cfg = cfg.with_multistarts(cfg.multistarts.max(32));

    let mut records: Vec<Value> = (0..trials)
        .into_par_iter()
        .map(|idx| -> Result<Value> {
            let s = trial_seed(seed, idx as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let points: Vec<Point> = (0..n)
                .map(|_| sample_uniform(space, &mut rng, None))
                .collect::<Result<_>>()?;
            let degenerate = on_common_great_circle(&points);
            let mu = DiscreteMeasure::uniform(*space, points)?;
            let res = median_solve(&mu, &cfg.with_seed(s))?;
            Ok(json!({
                "index": idx,
                "seed": s,
                "kind": "random",
                "degenerate": degenerate,
                "cluster_diameter": res.cluster_diameter,
                "unique": res.unique_flag,
            }))
        })
        .collect::<Result<_>>()?;

    let l = space.dim();
    let r = 1.0 / space.curvature().sqrt();
    let circle = |angle: f64| space.polar_point(angle * r, &planar_direction(l, 0.0));
    let forced = vec![circle(0.0)?, circle(0.7)?, circle(1.9)?];
    let degenerate = on_common_great_circle(&forced);
    let res = median_solve(&DiscreteMeasure::uniform(*space, forced)?, &cfg.with_seed(seed))?;
    records.push(json!({
        "index": trials,
        "seed": seed,
        "kind": "forced_degenerate",
        "degenerate": degenerate,
        "cluster_diameter": res.cluster_diameter,
        "unique": res.unique_flag,
    }));

    let pair = vec![circle(0.0)?, circle(1.0)?];
    let res = median_solve(&DiscreteMeasure::uniform(*space, pair)?, &cfg.with_seed(seed))?;
    records.push(json!({
        "index": trials + 1,
        "seed": seed,
        "kind": "two_point_counterexample",
        "degenerate": false,
        "cluster_diameter": res.cluster_diameter,
        "unique": res.unique_flag,
    }));

    let counted: Vec<&Value> = records
        .iter()
        .filter(|r| r["kind"] == "random" && r["degenerate"] == false)
        .collect();
    let unique = counted.iter().filter(|r| r["unique"] == true).count();
    let summary = json!({
        "counted_trials": counted.len(),
        "unique_trials": unique,
        "unique_fraction": unique as f64 / counted.len().max(1) as f64,
        "excluded_degenerate": records.iter().filter(|r| r["degenerate"] == true).count(),
        "counterexample_cluster_diameter": res.cluster_diameter,
    });
    let params = json!({ "space": space, "n": n, "trials": trials, "solver": cfg });
    ExperimentReport::new(
        GENERICITY,
        seed,
        params,
        records,
        summary,
        tolerances(&[("min_unique_fraction", MIN_UNIQUE_FRACTION)]),
    )
}

fn genericity_verdict(trials: &[Value], tol: &BTreeMap<String, f64>) -> Result<bool> {
    let min_fraction = tolerance(tol, "min_unique_fraction")?;
    let mut counted = 0usize;
    let mut unique = 0usize;
    let mut counterexample_ok = true;
    for r in trials {
        match field_str(r, "kind")? {
            "random" if !field_bool(r, "degenerate")? => {
                counted += 1;
                unique += field_bool(r, "unique")? as usize;
            }
            "two_point_counterexample" => counterexample_ok &= !field_bool(r, "unique")?,
            _ => {}
        }
    }
    Ok(counted > 0 && unique as f64 >= min_fraction * counted as f64 && counterexample_ok)
}

// ---------------------------------------------------------------------------
// hmin verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HminGrid {
    pub instances_per_geometry: usize,
    /// θ-grid size of the brute-force oracle.
    pub resolution: usize,
    pub seed: u64,
}

impl Default for HminGrid {
    fn default() -> Self {
        HminGrid {
            instances_per_geometry: 500,
            resolution: 100_000,
            seed: 0,
        }
    }
}

pub struct HminRun {
    pub report: ExperimentReport,
    pub rows: Vec<HminComparison>,
}

/// Seeded `(ρ, t, u)` instances: `ρ ∈ [0.05, 1.5]`, `t ∈ [0, 1.5]`, `u ∈ [0, ρ+t)`,
/// rejected on the sphere until `ρ + t + u < π`.
pub fn sample_hmin_instances(geometry: Geometry, count: usize, seed: u64) -> Vec<HminInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let rho = rng.gen_range(0.05..=1.5);
        let t = rng.gen_range(0.0..=1.5);
        let u = rng.gen_range(0.0..1.0) * (rho + t);
        if let Ok(inst) = HminInstance::new(geometry, rho, t, u) {
            out.push(inst);
        }
    }
    out
}

/// Offset `u*` at which the branch condition holds with equality, if valid.
fn branch_boundary(geometry: Geometry, rho: f64, t: f64) -> Option<f64> {
    let u = match geometry {
        Geometry::Flat => (rho + t) * rho / (rho + 2.0 * t),
        Geometry::Sphere => {
            let rhs = 2.0 / rho.tan() - 1.0 / (rho + t).tan();
            1f64.atan2(rhs)
        }
        Geometry::Hyperbolic => {
            let rhs = 2.0 / rho.tanh() - 1.0 / (rho + t).tanh();
            if rhs <= 1.0 {
                return None;
            }
            (1.0 / rhs).atanh()
        }
    };
    (u > 0.0 && u < rho + t).then_some(u)
}

/// Closed form against oracle on every geometry, the worst-case ordering on
/// the sphere-valid triples, branch-boundary continuity, and the sphere's
/// argmin and sign lemmas at the oracle minimizer.
pub fn hmin_verification_run(grid: &HminGrid) -> Result<HminRun> {
    if grid.instances_per_geometry == 0 {
        return Err(Error::invalid("need at least one instance per geometry"));
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (gi, g) in Geometry::ALL.into_iter().enumerate() {
        let instances = sample_hmin_instances(g, grid.instances_per_geometry, trial_seed(grid.seed, gi as u64));
        let compared = hmin::compare_instances(&instances, grid.resolution)?;
        let extra: Vec<Value> = instances
            .par_iter()
            .map(|inst| -> Result<Value> {
                if g != Geometry::Sphere || inst.branch() != Branch::Second {
                    return Ok(Value::Null);
                }
                let min = hmin_bruteforce(inst, grid.resolution)?;
                match argmin_condition_check(inst, min.theta)? {
                    ArgminCheck::SineRatio {
                        identity_residual,
                        cos_theta_residual,
                        ..
                    } => Ok(json!({
                        "identity_residual": identity_residual.abs(),
                        "cos_theta_residual": cos_theta_residual.abs(),
                        "sign_ok": min.value > 0.0 && min.value < PI,
                    })),
                    ArgminCheck::EntryPoint => Ok(Value::Null),
                }
            })
            .collect::<Result<_>>()?;
        for (row, extra) in compared.iter().zip(extra) {
            let mut rec = json!({
                "kind": "comparison",
                "geometry": row.geometry,
                "rho": row.rho,
                "t": row.t,
                "u": row.u,
                "branch": row.branch,
                "closed_form": row.closed_form,
                "bruteforce": row.bruteforce,
                "abs_err": row.abs_err,
            });
            if let Value::Object(map) = extra {
                rec.as_object_mut().expect("object").extend(map);
            }
            records.push(rec);
        }
        if g == Geometry::Sphere {
            for inst in &instances {
                let c = hmin::worst_case_ordering(inst.rho(), inst.t(), inst.u())?;
                records.push(json!({
                    "kind": "ordering",
                    "rho": inst.rho(),
                    "t": inst.t(),
                    "u": inst.u(),
                    "sphere": c.sphere,
                    "flat": c.flat,
                    "hyperbolic": c.hyperbolic,
                    "holds": c.holds(),
                }));
            }
        }
        for inst in &instances {
            let Some(u) = branch_boundary(g, inst.rho(), inst.t()) else {
                continue;
            };
            let Ok(probe) = HminInstance::new(g, inst.rho(), inst.t(), u) else {
                continue;
            };
            let first = probe.t() - probe.rho() + u;
            let second = hmin::second_branch_value(&probe)?;
            records.push(json!({
                "kind": "continuity",
                "geometry": g,
                "rho": probe.rho(),
                "t": probe.t(),
                "u": u,
                "gap": (first - second).abs(),
            }));
        }
        rows.extend(compared);
    }

    let stat = |kind: &str, key: &str| {
        records
            .iter()
            .filter(|r| r["kind"] == kind)
            .filter_map(|r| r[key].as_f64())
            .fold(0.0, f64::max)
    };
    let summary = json!({
        "max_abs_err": stat("comparison", "abs_err"),
        "max_identity_residual": stat("comparison", "identity_residual"),
        "max_cos_theta_residual": stat("comparison", "cos_theta_residual"),
        "ordering_violations": records.iter().filter(|r| r["kind"] == "ordering" && r["holds"] == false).count(),
        "sign_violations": records.iter().filter(|r| r["sign_ok"] == false).count(),
        "max_branch_gap": stat("continuity", "gap"),
    });
    let params = json!({
        "instances_per_geometry": grid.instances_per_geometry,
        "resolution": grid.resolution,
    });
    let report = ExperimentReport::new(
        HMIN_VERIFICATION,
        grid.seed,
        params,
        records,
        summary,
        tolerances(&[
            ("closed_vs_oracle", HMIN_ORACLE_TOL),
            ("flat_branch_gap", FLAT_BRANCH_GAP_TOL),
            ("curved_branch_gap", CURVED_BRANCH_GAP_TOL),
            ("argmin_identity", hmin::ARGMIN_IDENTITY_TOL),
            ("argmin_cos_theta", hmin::ARGMIN_IDENTITY_TOL),
        ]),
    )?;
    Ok(HminRun { report, rows })
}

fn hmin_verdict(trials: &[Value], tol: &BTreeMap<String, f64>) -> Result<bool> {
    let oracle_tol = tolerance(tol, "closed_vs_oracle")?;
    let flat_gap = tolerance(tol, "flat_branch_gap")?;
    let curved_gap = tolerance(tol, "curved_branch_gap")?;
    let identity = tolerance(tol, "argmin_identity")?;
    let cos_theta = tolerance(tol, "argmin_cos_theta")?;
    let mut pass = true;
    for r in trials {
        match field_str(r, "kind")? {
            "comparison" => {
                pass &= field_f64(r, "abs_err")? < oracle_tol;
                if r.get("identity_residual").is_some() {
                    pass &= field_f64(r, "identity_residual")? <= identity;
                    pass &= field_f64(r, "cos_theta_residual")? <= cos_theta;
                    pass &= field_bool(r, "sign_ok")?;
                }
            }
            "ordering" => pass &= field_bool(r, "holds")?,
            "continuity" => {
                let limit = if field_str(r, "geometry")? == "flat" {
                    flat_gap
                } else {
                    curved_gap
                };
                pass &= field_f64(r, "gap")? < limit;
            }
            other => return Err(Error::invalid(format!("unknown hmin record kind `{other}`"))),
        }
    }
    Ok(pass)
}

/// Writes the comparison rows as CSV with round-trip float formatting.
pub fn write_hmin_csv<W: Write>(rows: &[HminComparison], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::invalid(format!("CSV write failed: {e}"));
    w.write_record(["geometry", "rho", "t", "u", "branch", "closed_form", "bruteforce", "abs_err"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.geometry.name().to_string(),
            r.rho.to_string(),
            r.t.to_string(),
            r.u.to_string(),
            r.branch.name().to_string(),
            r.closed_form.to_string(),
            r.bruteforce.to_string(),
            r.abs_err.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn great_circle_detection() {
        let s = ModelSpace::sphere(2).unwrap();
        let on: Vec<Point> = [0.0, 0.5, 2.0]
            .iter()
            .map(|a| s.polar_point(*a, &[1.0, 0.0]).unwrap())
            .collect();
        assert!(on_common_great_circle(&on));
        let off = vec![
            s.point(vec![1.0, 0.0, 0.0]).unwrap(),
            s.point(vec![0.0, 1.0, 0.0]).unwrap(),
            s.point(vec![0.0, 0.0, 1.0]).unwrap(),
        ];
        assert!(!on_common_great_circle(&off));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median_of(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_of(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn trial_plan_cycles_kinds() {
        let grid = AdversaryGrid::default();
        let a = position_trial_plan(&grid, 0.75, 1.0, 50.0, 0);
        assert_eq!(a.kind, InsideKind::Random);
        assert_eq!(a.distance, Some(1.0));
        let b = position_trial_plan(&grid, 0.75, 1.0, 50.0, 16 * 9);
        assert!((b.distance.unwrap() - 50.0).abs() < 1e-12);
        let c = position_trial_plan(&grid, 0.75, 1.0, 50.0, 16 * 10 * 2);
        assert_eq!(c.kind, InsideKind::Extremal);
        let d = position_trial_plan(&grid, 1.0, 1.0, 50.0, 16 * 10 * 2);
        assert_eq!(d.kind, InsideKind::Random);
        assert_eq!(d.distance, None);
    }

    #[test]
    fn branch_boundary_is_on_the_boundary() {
        let u = branch_boundary(Geometry::Flat, 1.0, 0.5).unwrap();
        assert!((u - 0.75).abs() < 1e-15);
        for g in Geometry::ALL {
            if let Some(u) = branch_boundary(g, 0.6, 0.4) {
                let inst = HminInstance::new(g, 0.6, 0.4, u).unwrap();
                let gap = (0.4 - 0.6 + u - hmin::second_branch_value(&inst).unwrap()).abs();
                assert!(gap < 1e-7, "{g:?}: {gap}");
            }
        }
    }
}
