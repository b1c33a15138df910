//! Fréchet medians of weighted point sets.
//!
//! [`median_solve`] runs a Riemannian Weiszfeld iteration from every data
//! point plus a number of seeded random starts, then merges the runs: the
//! lowest-cost output is the reported median and the spread of all runs
//! that reach that cost approximates the median set.

mod certificate;

pub use certificate::{
    evaluate_lipschitz_inequality, lipschitz_certificate, move_atoms_toward,
    move_toward_median_check, two_point_move_check, LipschitzCertificate, LipschitzTestFn,
    TwoPointMoveOutcome, LIPSCHITZ_SLACK, MOVE_COST_TOL, TWO_POINT_TOL,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Ball, Geometry, ModelSpace, Point, Radius};

/// An iterate within this distance of a data point is treated as that point.
pub const COINCIDENCE_TOL: f64 = 1e-8;
/// Multistart outputs closer than this are considered the same median.
pub const UNIQUENESS_TOL: f64 = 1e-6;
/// Runs whose cost is within this (relative) margin of the best one join the cluster.
pub const COST_CLUSTER_TOL: f64 = 1e-10;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const COST_ROUNDING: f64 = 1e-14;
const MAX_BACKTRACKS: usize = 60;

/// A probability measure with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    space: ModelSpace,
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Weights must be nonnegative and sum to 1 within `1e-12`.
    pub fn new(space: ModelSpace, points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a measure needs at least one atom"));
        }
        if points.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        for p in &points {
            space.point(p.coords().to_vec())?;
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure {
            space,
            points,
            weights,
        })
    }

    /// Equal weights `1/N`.
    pub fn uniform(space: ModelSpace, points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        let w = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        let mut weights = vec![w; n];
        // Put the rounding remainder on the last atom so the sum is exact enough.
        if n > 0 {
            let rest: f64 = weights[..n - 1].iter().sum();
            weights[n - 1] = 1.0 - rest;
        }
        Self::new(space, points, weights)
    }

    /// Dirac mass at `p`.
    pub fn point_mass(space: ModelSpace, p: Point) -> Result<Self> {
        Self::new(space, vec![p], vec![1.0])
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Copy with atom `k` replaced by `p`.
    pub fn with_point(&self, k: usize, p: Point) -> Result<Self> {
        if k >= self.len() {
            return Err(Error::invalid(format!("atom index {k} out of range")));
        }
        self.space.check_len(p.coords())?;
        let mut out = self.clone();
        out.points[k] = p;
        Ok(out)
    }

    /// Atoms sorted by (coordinates, weight); the solver works on this form so
    /// that its output does not depend on the input order.
    fn canonical(&self) -> DiscreteMeasure {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.points[a]
                .lex_cmp(&self.points[b])
                .then(self.weights[a].total_cmp(&self.weights[b]))
        });
        DiscreteMeasure {
            space: self.space,
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Riemannian Weiszfeld update with the Vardi–Zhang correction at data points.
    Weiszfeld,
    /// Normalized subgradient steps with diminishing length `s₀/√(k+1)`.
    FixedSubgradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub multistarts: usize,
    pub seed: u64,
    pub step_rule: StepRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iters: 10_000,
            multistarts: 16,
            seed: 0,
            step_rule: StepRule::Weiszfeld,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters < 1 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if self.multistarts < 1 {
            return Err(Error::invalid("multistarts must be at least 1"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_multistarts(mut self, multistarts: usize) -> Self {
        self.multistarts = multistarts;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub median: Point,
    /// `f_μ(median)`.
    pub cost: f64,
    /// First-order residual at `median`, see [`first_order_residual`].
    pub residual: f64,
    /// Iterations spent by the run that produced `median`.
    pub iterations: usize,
    /// Largest distance between multistart outputs that tie with the best cost.
    pub cluster_diameter: f64,
    pub unique_flag: bool,
    /// `residual < tol` was reached before `max_iters`.
    pub converged: bool,
}

/// `f_μ(x) = Σ w_k d(x, x_k)`.
pub fn frechet_cost(mu: &DiscreteMeasure, x: &Point) -> Result<f64> {
    mu.space.check_len(x.coords())?;
    Ok(cost_raw(mu, x.coords()))
}

fn cost_raw(mu: &DiscreteMeasure, x: &[f64]) -> f64 {
    mu.points
        .iter()
        .zip(&mu.weights)
        .map(|(p, w)| w * mu.space.dist_coords(x, p.coords()))
        .sum()
}

/// Pull of the data on a candidate point.
struct Pull {
    /// `Σ w_k u_k` over atoms not coinciding with the candidate.
    resultant: Vec<f64>,
    /// `Σ w_k / d_k` over the same atoms.
    inv_dist_weight: f64,
    /// Total weight of atoms coinciding with the candidate.
    coincident_weight: f64,
}

impl Pull {
    fn norm(&self, space: &ModelSpace, x: &[f64]) -> f64 {
        space.tangent_norm_at(x, &self.resultant)
    }

    fn residual(&self, space: &ModelSpace, x: &[f64]) -> f64 {
        (self.norm(space, x) - self.coincident_weight).max(0.0)
    }
}

fn pull_at(mu: &DiscreteMeasure, x: &[f64]) -> Result<Pull> {
    let space = &mu.space;
    let mut resultant = vec![0.0; x.len()];
    let mut inv_dist_weight = 0.0;
    let mut coincident_weight = 0.0;
    for (p, &w) in mu.points.iter().zip(&mu.weights) {
        let d = space.dist_coords(x, p.coords());
        if d <= COINCIDENCE_TOL {
            coincident_weight += w;
            continue;
        }
        if w == 0.0 {
            continue;
        }
        let v = geometry::log_raw(space, x, p.coords())?;
        for (r, c) in resultant.iter_mut().zip(&v) {
            *r += w * c / d;
        }
        inv_dist_weight += w / d;
    }
    Ok(Pull {
        resultant,
        inv_dist_weight,
        coincident_weight,
    })
}

/// First-order optimality residual of `m` for `f_μ`.
///
/// Away from the data this is `|Σ w_k u_k|` with `u_k` the unit initial
/// velocity towards `x_k`. When `m` coincides with data points (within
/// [`COINCIDENCE_TOL`]) it is `max(0, |Σ_{x_k ≠ m} w_k u_k| − Σ_{x_k = m} w_k)`.
/// Zero means the necessary condition for a median holds.
pub fn first_order_residual(mu: &DiscreteMeasure, m: &Point) -> Result<f64> {
    mu.space.check_len(m.coords())?;
    Ok(pull_at(mu, m.coords())?.residual(&mu.space, m.coords()))
}

struct Run {
    point: Point,
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn nearest_atom(mu: &DiscreteMeasure, x: &[f64]) -> (usize, f64) {
    mu.points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, mu.space.dist_coords(x, p.coords())))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("measure has atoms")
}

/// Caps a step so it stays well inside the injectivity domain.
fn cap_step(space: &ModelSpace, v: &mut [f64]) {
    if let Radius::Finite(cut) = space.cut_distance() {
        let n = space.inner(v, v).max(0.0).sqrt();
        let cap = 0.25 * cut;
        if n > cap {
            v.iter_mut().for_each(|c| *c *= cap / n);
        }
    }
}

/// If the nearest atom satisfies the data-point optimality test and is no
/// worse than `x`, return it.
fn try_snap(mu: &DiscreteMeasure, x: &[f64], cost: f64, tol: f64) -> Result<Option<Run>> {
    let (j, _) = nearest_atom(mu, x);
    let xj = mu.points[j].coords();
    let pull = pull_at(mu, xj)?;
    if pull.coincident_weight == 0.0 {
        return Ok(None);
    }
    let residual = pull.residual(&mu.space, xj);
    let cj = cost_raw(mu, xj);
    if residual < tol && cj <= cost {
        return Ok(Some(Run {
            point: mu.points[j].clone(),
            cost: cj,
            iterations: 0,
            converged: true,
        }));
    }
    Ok(None)
}

/// Orthonormal basis of `T_x M` in ambient coordinates.
fn tangent_basis(space: &ModelSpace, x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let xx = space.inner(x, x);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(space.dim());
    for i in 0..n {
        if basis.len() == space.dim() {
            break;
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        if space.geometry() != Geometry::Flat {
            let c = space.inner(&v, x) / xx;
            v.iter_mut().zip(x).for_each(|(a, b)| *a -= c * b);
        }
        for b in &basis {
            let c = space.inner(&v, b);
            v.iter_mut().zip(b).for_each(|(a, e)| *a -= c * e);
        }
        let norm = space.inner(&v, &v).max(0.0).sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    basis
}

/// Solves `A y = b` for symmetric positive-definite `A`; `None` otherwise.
#[allow(clippy::needless_range_loop)]
fn cholesky_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut v = a[i][j];
            for k in 0..j {
                v -= a[i][k] * a[j][k];
            }
            a[i][j] = v / d;
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] -= a[i][k] * b[k];
        }
        b[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] -= a[k][i] * b[k];
        }
        b[i] /= a[i][i];
    }
    Some(b)
}

/// Riemannian Newton step for `f_μ` at a point away from the atoms, or
/// `None` where the Hessian is not positive definite.
///
/// The Hessian of `d(·, q)` is `c(d)(g − ∇d ∇dᵀ)` with `c = 1/d` (flat),
/// `√κ cot(√κ d)` (sphere) or `√|κ| coth(√|κ| d)` (hyperbolic).
fn newton_step(mu: &DiscreteMeasure, x: &[f64], resultant: &[f64]) -> Result<Option<Vec<f64>>> {
    let space = &mu.space;
    let basis = tangent_basis(space, x);
    let l = basis.len();
    let s = space.curvature().abs().sqrt();
    let mut a = vec![vec![0.0; l]; l];
    for (p, &w) in mu.points.iter().zip(&mu.weights) {
        let d = space.dist_coords(x, p.coords());
        if w == 0.0 || d <= COINCIDENCE_TOL {
            continue;
        }
        let c = match space.geometry() {
            Geometry::Flat => 1.0 / d,
            Geometry::Sphere => s / (s * d).tan(),
            Geometry::Hyperbolic => s / (s * d).tanh(),
        };
        let v = geometry::log_raw(space, x, p.coords())?;
        let u: Vec<f64> = basis.iter().map(|e| space.inner(&v, e) / d).collect();
        for i in 0..l {
            for j in 0..l {
                let delta = if i == j { 1.0 } else { 0.0 };
                a[i][j] += w * c * (delta - u[i] * u[j]);
            }
        }
    }
    let b: Vec<f64> = basis.iter().map(|e| space.inner(resultant, e)).collect();
    let Some(y) = cholesky_solve(a, b) else {
        return Ok(None);
    };
    let mut step = vec![0.0; x.len()];
    for (yi, e) in y.iter().zip(&basis) {
        step.iter_mut().zip(e).for_each(|(st, ei)| *st += yi * ei);
    }
    if step.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    Ok(Some(step))
}

/// Scales `v` down to length at most `max_len`.
fn limit_step(space: &ModelSpace, x: &[f64], v: &mut [f64], max_len: f64) {
    let n = space.tangent_norm_at(x, v);
    if n > max_len {
        v.iter_mut().for_each(|c| *c *= max_len / n);
    }
}

/// Weiszfeld descent with a safeguarded Newton step tried first away from
/// the atoms; Newton restores fast convergence when the atoms are nearly
/// collinear and the Weiszfeld map contracts very slowly.
fn weiszfeld_run(mu: &DiscreteMeasure, start: Point, cfg: &SolverConfig) -> Result<Run> {
    let space = &mu.space;
    let mut x = start;
    let mut cost = cost_raw(mu, x.coords());
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..cfg.max_iters {
        iterations = iter + 1;
        let (j, dj) = nearest_atom(mu, x.coords());
        if dj <= COINCIDENCE_TOL && dj > 0.0 {
            x = mu.points[j].clone();
            cost = cost_raw(mu, x.coords());
        }
        let pull = pull_at(mu, x.coords())?;
        let r = pull.norm(space, x.coords());
        residual = pull.residual(space, x.coords());

        if pull.coincident_weight == 0.0 {
            if let Some(mut snapped) = try_snap(mu, x.coords(), cost, cfg.tol)? {
                snapped.iterations = iter;
                return Ok(snapped);
            }
        }

        // Vardi–Zhang: shrink the Weiszfeld step by the mass sitting at x.
        let shrink = if r > 0.0 {
            (1.0 - pull.coincident_weight / r).max(0.0)
        } else {
            0.0
        };
        let mut step: Vec<f64> = if pull.inv_dist_weight > 0.0 {
            pull.resultant
                .iter()
                .map(|c| shrink * c / pull.inv_dist_weight)
                .collect()
        } else {
            vec![0.0; x.len()]
        };
        cap_step(space, &mut step);
        let step_len = space.tangent_norm_at(x.coords(), &step);

        if residual < cfg.tol && (step_len < cfg.tol || pull.coincident_weight > 0.0) {
            return Ok(Run {
                point: x,
                cost,
                iterations: iter,
                converged: true,
            });
        }
        if step_len == 0.0 {
            break;
        }

        let slack = COST_ROUNDING * cost.max(1.0);
        if pull.coincident_weight == 0.0 {
            if let Some(mut newton) = newton_step(mu, x.coords(), &pull.resultant)? {
                cap_step(space, &mut newton);
                let reach = mu
                    .points
                    .iter()
                    .map(|p| space.dist_coords(x.coords(), p.coords()))
                    .fold(0.0, f64::max);
                limit_step(space, x.coords(), &mut newton, reach);
                let cand = geometry::exp_raw(space, &x, &newton);
                let c = cost_raw(mu, cand.coords());
                let cand_residual = pull_at(mu, cand.coords())?.residual(space, cand.coords());
                if c <= cost + slack && cand_residual < residual {
                    x = cand;
                    cost = c;
                    continue;
                }
            }
        }

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = geometry::exp_raw(space, &x, &step);
            let c = cost_raw(mu, cand.coords());
            // Near the optimum cost differences drop below rounding.
            if c <= cost + slack {
                accepted = Some((cand, c));
                break;
            }
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
        match accepted {
            Some((cand, c)) => {
                let moved = space.dist_coords(cand.coords(), x.coords());
                x = cand;
                cost = c;
                if moved == 0.0 {
                    break;
                }
            }
            None => break,
        }
    }
    let converged = residual < cfg.tol;
    Ok(Run {
        point: x,
        cost,
        iterations,
        converged,
    })
}

fn subgradient_run(mu: &DiscreteMeasure, start: Point, cfg: &SolverConfig) -> Result<Run> {
    let space = &mu.space;
    let spread = mu
        .points
        .iter()
        .map(|p| space.dist_coords(start.coords(), p.coords()))
        .fold(0.0, f64::max);
    let base_step = 0.5 * spread.max(1e-3);
    let mut x = start;
    let mut best = (x.clone(), cost_raw(mu, x.coords()));
    for iter in 0..cfg.max_iters {
        let pull = pull_at(mu, x.coords())?;
        let residual = pull.residual(space, x.coords());
        if residual < cfg.tol {
            let cost = cost_raw(mu, x.coords());
            if cost <= best.1 {
                best = (x.clone(), cost);
            }
            return Ok(Run {
                point: best.0,
                cost: best.1,
                iterations: iter,
                converged: true,
            });
        }
        let r = pull.norm(space, x.coords());
        let len = base_step / ((iter + 1) as f64).sqrt();
        let mut step: Vec<f64> = pull.resultant.iter().map(|c| c * len / r).collect();
        cap_step(space, &mut step);
        x = geometry::exp_raw(space, &x, &step);
        let c = cost_raw(mu, x.coords());
        if c < best.1 {
            best = (x.clone(), c);
        }
    }
    let final_residual = pull_at(mu, best.0.coords())?.residual(space, best.0.coords());
    Ok(Run {
        point: best.0,
        cost: best.1,
        iterations: cfg.max_iters,
        converged: final_residual < cfg.tol,
    })
}

/// Starting points: every atom, then `(multistarts − N)⁺` seeded random draws.
///
/// On the sphere the draws are uniform; otherwise they are uniform in the
/// ball around the cheapest atom that contains all atoms.
fn initial_points(mu: &DiscreteMeasure, cfg: &SolverConfig) -> Result<Vec<Point>> {
    let mut starts: Vec<Point> = mu.points.clone();
    let extra = cfg.multistarts.saturating_sub(mu.len());
    if extra == 0 {
        return Ok(starts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ball = match mu.space.geometry() {
        Geometry::Sphere => None,
        _ => {
            let center = mu
                .points
                .iter()
                .min_by(|a, b| cost_raw(mu, a.coords()).total_cmp(&cost_raw(mu, b.coords())))
                .expect("measure has atoms")
                .clone();
            let radius = mu
                .points
                .iter()
                .map(|p| mu.space.dist_coords(center.coords(), p.coords()))
                .fold(0.0, f64::max)
                .max(1e-6);
            Some(Ball { center, radius })
        }
    };
    for _ in 0..extra {
        starts.push(geometry::sample_uniform(&mu.space, &mut rng, ball.as_ref())?);
    }
    Ok(starts)
}

/// Global minimizer of `f_μ` by multistart Weiszfeld (or subgradient) descent.
///
/// Non-convergence is reported through [`SolverResult::converged`], not as
/// an error.
pub fn median_solve(mu: &DiscreteMeasure, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    let mu = mu.canonical();
    let starts = initial_points(&mu, cfg)?;
    let mut runs: Vec<Run> = starts
        .into_par_iter()
        .map(|s| match cfg.step_rule {
            StepRule::Weiszfeld => weiszfeld_run(&mu, s, cfg),
            StepRule::FixedSubgradient => subgradient_run(&mu, s, cfg),
        })
        .collect::<Result<_>>()?;
    runs.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.point.lex_cmp(&b.point)));

    let best_cost = runs[0].cost;
    let margin = COST_CLUSTER_TOL * best_cost.max(1.0);
    let cluster: Vec<&Run> = runs.iter().filter(|r| r.cost <= best_cost + margin).collect();
    let mut diameter: f64 = 0.0;
    for (i, a) in cluster.iter().enumerate() {
        for b in &cluster[i + 1..] {
            diameter = diameter.max(mu.space.dist_coords(a.point.coords(), b.point.coords()));
        }
    }
    let best = &runs[0];
    let residual = first_order_residual(&mu, &best.point)?;
    Ok(SolverResult {
        median: best.point.clone(),
        cost: best.cost,
        residual,
        iterations: best.iterations,
        cluster_diameter: diameter,
        unique_flag: diameter < UNIQUENESS_TOL,
        converged: best.converged || residual < cfg.tol,
    })
}
