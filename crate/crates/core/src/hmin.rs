//! Minimum over `B̄(a, ρ)` of the difference-of-distances function
//! `h_{x,z}(p) = d(x, p) − d(z, p)` in the unit model planes S², E², H².
//!
//! `x` sits at distance `ρ + t` from `a` and `z` at distance `u` from `a`
//! on the same ray. [`hmin_closed_form`] evaluates the two-branch formulas;
//! [`hmin_bruteforce`] is an independent oracle that searches the boundary
//! circle `p(θ)` (interior points are never minimizers).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{guarded_acos, guarded_acosh, log_raw, Geometry, ModelSpace, Point};

/// Minimal grid accepted by [`hmin_bruteforce`].
pub const MIN_GRID: usize = 1_000;
/// Tolerance for the sine-ratio identity at a second-branch minimizer.
pub const ARGMIN_IDENTITY_TOL: f64 = 1e-8;

const GOLDEN_ITERS: usize = 80;
const DERIVATIVE_BISECTIONS: usize = 80;
const DERIVATIVE_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HminInstance {
    geometry: Geometry,
    rho: f64,
    t: f64,
    u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Minimum at the entry point `y` of the ray into the ball: `t − ρ + u`.
    First,
    /// Minimum at a symmetric pair `±θ*` on the boundary circle.
    Second,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::First => "first",
            Branch::Second => "second",
        }
    }
}

impl HminInstance {
    /// Requires `ρ > 0`, `t, u ≥ 0`, `u < ρ + t`, and `ρ + t + u < π` on the sphere.
    pub fn new(geometry: Geometry, rho: f64, t: f64, u: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        if !(t >= 0.0) || !(u >= 0.0) || !t.is_finite() || !u.is_finite() {
            return Err(Error::invalid(format!("t and u must be nonnegative, got t={t}, u={u}")));
        }
        if !(u < rho + t) {
            return Err(Error::invalid(format!("need u < rho + t, got u={u}, rho+t={}", rho + t)));
        }
        if geometry == Geometry::Sphere && !(rho + t + u < PI) {
            return Err(Error::invalid(format!(
                "sphere instances need rho + t + u < pi, got {}",
                rho + t + u
            )));
        }
        Ok(HminInstance { geometry, rho, t, u })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    /// Which closed-form branch applies; `u = 0` always selects the first.
    pub fn branch(&self) -> Branch {
        let (rho, t, u) = (self.rho, self.t, self.u);
        if u == 0.0 {
            return Branch::First;
        }
        let first = match self.geometry {
            Geometry::Sphere => cot(u) >= 2.0 * cot(rho) - cot(rho + t),
            Geometry::Flat => u <= (rho + t) * rho / (rho + 2.0 * t),
            Geometry::Hyperbolic => coth(u) >= 2.0 * coth(rho) - coth(rho + t),
        };
        if first {
            Branch::First
        } else {
            Branch::Second
        }
    }

    fn space(&self) -> ModelSpace {
        ModelSpace::unit(self.geometry, 2).expect("dimension 2 is valid")
    }

    /// `(x, z)` in embedded coordinates, on the first axis.
    fn anchors(&self) -> (Point, Point) {
        let space = self.space();
        let x = space.polar_point(self.rho + self.t, &[1.0, 0.0]).expect("valid polar point");
        let z = space.polar_point(self.u, &[1.0, 0.0]).expect("valid polar point");
        (x, z)
    }
}

fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// The second-branch expression, evaluated regardless of which branch applies.
pub fn second_branch_value(inst: &HminInstance) -> Result<f64> {
    let (rho, t, u) = (inst.rho, inst.t, inst.u);
    let gap = rho + t - u;
    match inst.geometry {
        Geometry::Sphere => guarded_acos(
            gap.cos() + rho.sin().powi(2) * gap.sin().powi(2) / (2.0 * u.sin() * (rho + t).sin()),
        ),
        Geometry::Flat => {
            let inner = 1.0 - rho * rho / (u * (rho + t));
            if inner < -1e-12 {
                return Err(Error::invalid(format!("negative radicand {inner}")));
            }
            Ok(gap * inner.max(0.0).sqrt())
        }
        Geometry::Hyperbolic => guarded_acosh(
            gap.cosh()
                - rho.sinh().powi(2) * gap.sinh().powi(2) / (2.0 * u.sinh() * (rho + t).sinh()),
        ),
    }
}

/// Closed-form `min_{B̄(a,ρ)} h_{x,z}`.
pub fn hmin_closed_form(inst: &HminInstance) -> Result<f64> {
    match inst.branch() {
        Branch::First => Ok(inst.t - inst.rho + inst.u),
        Branch::Second => second_branch_value(inst),
    }
}

/// Closed form for curvature κ ≠ ±1 by rescaling lengths with `√|κ|`.
pub fn hmin_scaled(curvature: f64, rho: f64, t: f64, u: f64) -> Result<f64> {
    if curvature == 0.0 {
        return hmin_closed_form(&HminInstance::new(Geometry::Flat, rho, t, u)?);
    }
    let s = curvature.abs().sqrt();
    let geometry = if curvature > 0.0 {
        Geometry::Sphere
    } else {
        Geometry::Hyperbolic
    };
    Ok(hmin_closed_form(&HminInstance::new(geometry, s * rho, s * t, s * u)?)? / s)
}

/// Slack allowed in the sphere ≤ flat ≤ hyperbolic comparison.
pub const ORDERING_SLACK: f64 = 1e-10;

/// Closed-form values of one `(ρ, t, u)` triple in the three unit geometries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub sphere: f64,
    pub flat: f64,
    pub hyperbolic: f64,
}

impl OrderingCheck {
    /// The sphere is the worst case and the hyperbolic plane the best.
    pub fn holds(&self) -> bool {
        self.sphere <= self.flat + ORDERING_SLACK && self.flat <= self.hyperbolic + ORDERING_SLACK
    }
}

/// Evaluates the closed form in all three geometries; `(ρ, t, u)` must be
/// valid on the sphere.
pub fn worst_case_ordering(rho: f64, t: f64, u: f64) -> Result<OrderingCheck> {
    let value = |g| hmin_closed_form(&HminInstance::new(g, rho, t, u)?);
    Ok(OrderingCheck {
        sphere: value(Geometry::Sphere)?,
        flat: value(Geometry::Flat)?,
        hyperbolic: value(Geometry::Hyperbolic)?,
    })
}

/// Oracle minimizer on the boundary circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMin {
    pub value: f64,
    /// Angle of the minimizer from the `a → x` direction, in `[−π, π)`.
    pub theta: f64,
}

/// `h_{x,z}(p(θ))` evaluated with embedded points and the geometry kernel.
struct BoundaryProfile {
    space: ModelSpace,
    x: Point,
    z: Point,
    radial: f64,
    height: f64,
}

impl BoundaryProfile {
    fn new(inst: &HminInstance) -> Self {
        let (x, z) = inst.anchors();
        let rho = inst.rho;
        let (radial, height) = match inst.geometry {
            Geometry::Sphere => (rho.sin(), rho.cos()),
            Geometry::Flat => (rho, 0.0),
            Geometry::Hyperbolic => (rho.sinh(), rho.cosh()),
        };
        BoundaryProfile {
            space: inst.space(),
            x,
            z,
            radial,
            height,
        }
    }

    fn h(&self, theta: f64) -> f64 {
        let p = self.point(theta);
        self.space.dist_coords(self.x.coords(), &p) - self.space.dist_coords(self.z.coords(), &p)
    }

    fn golden(&self, mut lo: f64, mut hi: f64) -> (f64, f64) {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (self.h(c), self.h(d));
        for _ in 0..GOLDEN_ITERS {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = self.h(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = self.h(d);
            }
        }
        if fc < fd {
            (c, fc)
        } else {
            (d, fd)
        }
    }

    fn point(&self, theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        let mut p = vec![self.radial * c, self.radial * s];
        if self.space.geometry() != Geometry::Flat {
            p.push(self.height);
        }
        p
    }

    /// `h'(θ)` from the distance gradients `−log_p(q)/d(p, q)` of the
    /// geometry kernel; central difference when `p` hits `x` or `z`.
    fn slope(&self, theta: f64) -> f64 {
        let p = self.point(theta);
        let (s, c) = theta.sin_cos();
        let mut dp = vec![-self.radial * s, self.radial * c];
        if self.space.geometry() != Geometry::Flat {
            dp.push(0.0);
        }
        let pull = |q: &Point| -> Option<f64> {
            let d = self.space.dist_coords(&p, q.coords());
            if d < 1e-12 {
                return None;
            }
            let v = log_raw(&self.space, &p, q.coords()).ok()?;
            Some(-self.space.inner(&v, &dp) / d)
        };
        match (pull(&self.x), pull(&self.z)) {
            (Some(a), Some(b)) => a - b,
            _ => self.h(theta + DERIVATIVE_STEP) - self.h(theta - DERIVATIVE_STEP),
        }
    }

    /// Bisection on the sign of `h'`; resolves the minimizer well below
    /// the `√ε` limit of value comparisons.
    fn slope_bisect(&self, center: f64, half_width: f64) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (center - half_width, center + half_width);
        if !(self.slope(lo) < 0.0 && self.slope(hi) > 0.0) {
            return None;
        }
        for _ in 0..DERIVATIVE_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if self.slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let th = 0.5 * (lo + hi);
        Some((th, self.h(th)))
    }
}

/// Brute-force `min h_{x,z}` over the boundary circle: a `grid`-point scan
/// of `θ ∈ [−π, π)` followed by golden-section refinement of the three best
/// local minima.
pub fn hmin_bruteforce(inst: &HminInstance, grid: usize) -> Result<BoundaryMin> {
    if grid < MIN_GRID {
        return Err(Error::invalid(format!("grid must be at least {MIN_GRID}, got {grid}")));
    }
    let profile = BoundaryProfile::new(inst);
    let step = 2.0 * PI / grid as f64;
    let theta = |i: usize| -PI + step * i as f64;
    let values: Vec<f64> = (0..grid).map(|i| profile.h(theta(i))).collect();

    let mut minima: Vec<usize> = (0..grid)
        .filter(|&i| {
            let prev = values[(i + grid - 1) % grid];
            let next = values[(i + 1) % grid];
            values[i] <= prev && values[i] <= next
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    minima.truncate(3);

    let mut best = BoundaryMin {
        value: f64::INFINITY,
        theta: 0.0,
    };
    for &i in &minima {
        let center = theta(i);
        let (g_th, g_val) = profile.golden(center - step, center + step);
        // Values cannot separate points closer than ~√ε; the slope can.
        let (th, val) = profile
            .slope_bisect(g_th, step)
            .unwrap_or(if values[i] < g_val { (center, values[i]) } else { (g_th, g_val) });
        if val < best.value {
            best = BoundaryMin {
                value: val,
                theta: wrap_angle(th),
            };
        }
    }
    Ok(best)
}

fn wrap_angle(th: f64) -> f64 {
    let mut w = (th + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w -= 2.0 * PI;
    }
    w
}

/// Evaluates `h_{x,z}(p(θ))` directly (oracle path).
pub fn boundary_value(inst: &HminInstance, theta: f64) -> f64 {
    BoundaryProfile::new(inst).h(theta)
}

/// Outcome of checking the argmin characterization on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ArgminCheck {
    /// First branch: the minimizer is the entry point `θ = 0`.
    EntryPoint,
    /// Second branch at the supplied `θ`.
    SineRatio {
        holds: bool,
        /// `sin(ρ+t)/sin d(x,p) − sin u/sin d(z,p)`.
        identity_residual: f64,
        /// `cos θ − (tan ρ / 2)(cot u + cot(ρ+t))`.
        cos_theta_residual: f64,
    },
}

/// Checks the sine-ratio identity `sin(ρ+t)/sin d(x,p) = sin u / sin d(z,p)`
/// at the boundary point `p(θ)` of a sphere instance. Distances come from
/// the spherical law of cosines.
pub fn argmin_condition_check(inst: &HminInstance, theta: f64) -> Result<ArgminCheck> {
    if inst.geometry != Geometry::Sphere {
        return Err(Error::invalid("the argmin characterization is checked on the sphere"));
    }
    if inst.branch() == Branch::First {
        return Ok(ArgminCheck::EntryPoint);
    }
    let (rho, t, u) = (inst.rho, inst.t, inst.u);
    let cos_xp = (rho + t).sin() * rho.sin() * theta.cos() + (rho + t).cos() * rho.cos();
    let cos_zp = u.sin() * rho.sin() * theta.cos() + u.cos() * rho.cos();
    let d_xp = guarded_acos(cos_xp)?;
    let d_zp = guarded_acos(cos_zp)?;
    let identity_residual = (rho + t).sin() / d_xp.sin() - u.sin() / d_zp.sin();
    let cos_theta_residual = theta.cos() - rho.tan() / 2.0 * (cot(u) + cot(rho + t));
    Ok(ArgminCheck::SineRatio {
        holds: identity_residual.abs() <= ARGMIN_IDENTITY_TOL,
        identity_residual,
        cos_theta_residual,
    })
}

/// On a second-branch sphere instance, checks `0 < min h < π` with the oracle.
pub fn hmin_sign_check(inst: &HminInstance, grid: usize) -> Result<bool> {
    if inst.geometry != Geometry::Sphere || inst.branch() != Branch::Second {
        return Err(Error::invalid("sign check applies to second-branch sphere instances"));
    }
    let v = hmin_bruteforce(inst, grid)?.value;
    Ok(v > 0.0 && v < PI)
}

/// One row of a closed-form vs oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HminComparison {
    pub geometry: Geometry,
    pub rho: f64,
    pub t: f64,
    pub u: f64,
    pub branch: Branch,
    pub closed_form: f64,
    pub bruteforce: f64,
    pub abs_err: f64,
}

/// Runs closed form and oracle on every instance (in parallel).
pub fn compare_instances(instances: &[HminInstance], grid: usize) -> Result<Vec<HminComparison>> {
    instances
        .par_iter()
        .map(|inst| {
            let closed_form = hmin_closed_form(inst)?;
            let bruteforce = hmin_bruteforce(inst, grid)?.value;
            Ok(HminComparison {
                geometry: inst.geometry,
                rho: inst.rho,
                t: inst.t,
                u: inst.u,
                branch: inst.branch(),
                closed_form,
                bruteforce,
                abs_err: (closed_form - bruteforce).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn instance_validation() {
        assert!(HminInstance::new(Geometry::Flat, 0.0, 0.5, 0.1).is_err());
        assert!(HminInstance::new(Geometry::Flat, 1.0, 0.5, 1.5).is_err());
        assert!(HminInstance::new(Geometry::Flat, 1.0, -0.1, 0.0).is_err());
        assert!(HminInstance::new(Geometry::Sphere, 1.5, 1.0, 0.7).is_err());
        assert!(HminInstance::new(Geometry::Hyperbolic, 1.5, 1.0, 0.7).is_ok());
    }

    #[test]
    fn flat_examples() {
        let first = HminInstance::new(Geometry::Flat, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(first.branch(), Branch::First);
        assert_eq!(hmin_closed_form(&first).unwrap(), -0.5);

        let second = HminInstance::new(Geometry::Flat, 1.0, 0.5, 0.9).unwrap();
        assert_eq!(second.branch(), Branch::Second);
        let v = hmin_closed_form(&second).unwrap();
        assert_abs_diff_eq!(v, 0.6 * (1.0f64 - 1.0 / 1.35).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.3055051, epsilon = 1e-7);
    }

    #[test]
    fn sphere_first_branch_example() {
        let inst = HminInstance::new(Geometry::Sphere, 0.5, 0.3, 0.25).unwrap();
        assert_eq!(inst.branch(), Branch::First);
        assert_abs_diff_eq!(hmin_closed_form(&inst).unwrap(), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn flat_branch_boundary_is_continuous() {
        for (rho, t) in [(1.0, 0.5), (0.3, 2.0), (2.0, 0.01)] {
            let u: f64 = (rho + t) * rho / (rho + 2.0 * t);
            let inst = HminInstance::new(Geometry::Flat, rho, t, u).unwrap();
            let first = t - rho + u;
            let second = second_branch_value(&inst).unwrap();
            assert_abs_diff_eq!(first, second, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_offset_matches_entry_point() {
        for g in Geometry::ALL {
            let inst = HminInstance::new(g, 0.7, 0.4, 0.0).unwrap();
            let bf = hmin_bruteforce(&inst, 10_000).unwrap();
            assert_abs_diff_eq!(bf.value, 0.4 - 0.7, epsilon = 1e-9);
            assert_abs_diff_eq!(bf.theta, 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn bruteforce_rejects_small_grid() {
        let inst = HminInstance::new(Geometry::Flat, 1.0, 0.5, 0.2).unwrap();
        assert!(hmin_bruteforce(&inst, 999).is_err());
    }

    #[test]
    fn argmin_check_errors_and_first_branch() {
        let flat = HminInstance::new(Geometry::Flat, 1.0, 0.5, 0.9).unwrap();
        assert!(argmin_condition_check(&flat, 0.3).is_err());
        let first = HminInstance::new(Geometry::Sphere, 0.5, 0.3, 0.25).unwrap();
        assert_eq!(argmin_condition_check(&first, 0.0).unwrap(), ArgminCheck::EntryPoint);
        assert!(hmin_sign_check(&first, 10_000).is_err());
    }

    #[test]
    fn scaled_matches_unit_for_unit_curvature() {
        let a = hmin_scaled(1.0, 0.5, 0.3, 0.4).unwrap();
        let b = hmin_closed_form(&HminInstance::new(Geometry::Sphere, 0.5, 0.3, 0.4).unwrap()).unwrap();
        assert_eq!(a, b);
        // Curvature 4 halves lengths: h scales by 1/2 with doubled parameters.
        let c = hmin_scaled(4.0, 0.25, 0.15, 0.2).unwrap();
        assert_abs_diff_eq!(c, b / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn ordering_on_sample() {
        let c = worst_case_ordering(0.5, 0.4, 0.6).unwrap();
        assert!(c.holds(), "{c:?}");
        assert!(worst_case_ordering(1.5, 1.0, 0.7).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!(wrap_angle(PI) < PI);
    }
}
