//! Necessary-condition certificates for candidate medians.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{frechet_cost, median_solve, DiscreteMeasure, SolverConfig, SolverResult};
use crate::error::{Error, Result};
use crate::geometry::{self, Ball, Geometry, Point};

/// Slack allowed in the Lipschitz inequality.
pub const LIPSCHITZ_SLACK: f64 = 1e-8;
/// Cost tolerance for "the old median is still optimal".
pub const MOVE_COST_TOL: f64 = 1e-8;
/// Distance within which the two-point-move solve must recover the median.
pub const TWO_POINT_TOL: f64 = 1e-7;

/// `φ(x) = min_j (c_j + d(x, q_j))`, a 1-Lipschitz function.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzTestFn {
    pub anchors: Vec<Point>,
    pub offsets: Vec<f64>,
}

impl LipschitzTestFn {
    pub fn cone(anchor: Point, offset: f64) -> Self {
        LipschitzTestFn {
            anchors: vec![anchor],
            offsets: vec![offset],
        }
    }

    pub fn eval(&self, mu: &DiscreteMeasure, x: &Point) -> f64 {
        self.anchors
            .iter()
            .zip(&self.offsets)
            .map(|(q, c)| c + mu.space().dist_coords(x.coords(), q.coords()))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCertificate {
    pub passed: bool,
    /// Smallest `f* + Σ w_k φ(x_k) − φ(m)` over the sampled functions.
    pub min_slack: f64,
    pub trials: usize,
}

/// `f* + Σ w_k φ(x_k) − φ(m)`; nonnegative for every 1-Lipschitz `φ` when
/// `m` is a median and `f*` the minimum of `f_μ`.
pub fn evaluate_lipschitz_inequality(
    mu: &DiscreteMeasure,
    m: &Point,
    f_star: f64,
    phi: &LipschitzTestFn,
) -> Result<f64> {
    mu.space().check_len(m.coords())?;
    if phi.anchors.is_empty() || phi.anchors.len() != phi.offsets.len() {
        return Err(Error::invalid("test function needs matching anchors and offsets"));
    }
    let integral: f64 = mu
        .points()
        .iter()
        .zip(mu.weights())
        .map(|(p, w)| w * phi.eval(mu, p))
        .sum();
    Ok(f_star + integral - phi.eval(mu, m))
}

/// Samples `trials` random test functions and checks the Kantorovich–Rubinstein
/// necessary condition `φ(m) ≤ f* + ∫ φ dμ` for each.
///
/// Half of the anchors are data points, which is where violations by
/// non-medians concentrate; the rest are random.
pub fn lipschitz_certificate(
    mu: &DiscreteMeasure,
    m: &Point,
    f_star: f64,
    trials: usize,
    seed: u64,
) -> Result<LipschitzCertificate> {
    let space = mu.space();
    space.check_len(m.coords())?;
    let reach = mu
        .points()
        .iter()
        .map(|p| space.dist_coords(m.coords(), p.coords()))
        .fold(0.0, f64::max);
    let ball = match space.geometry() {
        Geometry::Sphere => None,
        _ => Some(Ball {
            center: m.clone(),
            radius: 2.0 * reach + 1.0,
        }),
    };
    let offset_scale = reach.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let count = rng.gen_range(1..=4);
        let mut anchors = Vec::with_capacity(count);
        let mut offsets = Vec::with_capacity(count);
        for _ in 0..count {
            let anchor = if rng.gen_bool(0.5) {
                mu.points()[rng.gen_range(0..mu.len())].clone()
            } else {
                geometry::sample_uniform(space, &mut rng, ball.as_ref())?
            };
            anchors.push(anchor);
            offsets.push(rng.gen::<f64>() * offset_scale);
        }
        let phi = LipschitzTestFn { anchors, offsets };
        let slack = evaluate_lipschitz_inequality(mu, m, f_star, &phi)?;
        min_slack = min_slack.min(slack);
    }
    Ok(LipschitzCertificate {
        passed: min_slack >= -LIPSCHITZ_SLACK,
        min_slack,
        trials,
    })
}

/// `μ` with atom `k` moved the fraction `t` of the way to `m` along the minimal geodesic.
pub fn move_atoms_toward(
    mu: &DiscreteMeasure,
    m: &Point,
    moves: &[(usize, f64)],
) -> Result<DiscreteMeasure> {
    let mut out = mu.clone();
    for &(k, t) in moves {
        if k >= mu.len() {
            return Err(Error::invalid(format!("atom index {k} out of range")));
        }
        let moved = geometry::geodesic_point(mu.space(), &mu.points()[k], m, t)?;
        out = out.with_point(k, moved)?;
    }
    Ok(out)
}

/// Moves atom `k` a fraction `t ∈ (0, 1)` towards the median `m` and checks
/// that `m` is still optimal for the moved measure.
pub fn move_toward_median_check(
    mu: &DiscreteMeasure,
    m: &Point,
    k: usize,
    t: f64,
    cfg: &SolverConfig,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("move fraction {t} outside [0, 1]")));
    }
    let moved = move_atoms_toward(mu, m, &[(k, t)])?;
    let solved = median_solve(&moved, cfg)?;
    Ok(frechet_cost(&moved, m)? <= solved.cost + MOVE_COST_TOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointMoveOutcome {
    pub result: SolverResult,
    /// `d(result.median, m)`.
    pub median_offset: f64,
    pub contains_m: bool,
}

impl TwoPointMoveOutcome {
    /// The moved measure has the single median `m`, up to [`TWO_POINT_TOL`].
    pub fn is_unique_at_m(&self) -> bool {
        self.contains_m && self.result.cluster_diameter < TWO_POINT_TOL
    }
}

/// Moves atoms `i` and `j` towards the common median `m` (fractions `t`, `s`)
/// and re-solves; generically the moved measure has `m` as its only median.
pub fn two_point_move_check(
    mu: &DiscreteMeasure,
    m: &Point,
    (i, t): (usize, f64),
    (j, s): (usize, f64),
    cfg: &SolverConfig,
) -> Result<TwoPointMoveOutcome> {
    if i == j {
        return Err(Error::invalid("two distinct atoms are needed"));
    }
    for f in [t, s] {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::invalid(format!("move fraction {f} outside (0, 1]")));
        }
    }
    let moved = move_atoms_toward(mu, m, &[(i, t), (j, s)])?;
    let result = median_solve(&moved, cfg)?;
    let median_offset = mu.space().dist_coords(result.median.coords(), m.coords());
    Ok(TwoPointMoveOutcome {
        contains_m: median_offset < TWO_POINT_TOL,
        median_offset,
        result,
    })
}
