//! Containment radii for the median set of a measure that puts mass
//! `α > 1/2` in a closed ball `B̄(a, ρ)`.
//!
//! * the basic radius `2αρ/(2α−1)` holds in any proper metric space;
//! * the refined radius depends on the curvature sign (`arcsin`, linear or
//!   `arcsinh` form) and, for κ > 0, needs one of two extra conditions
//!   before it is certified;
//! * `r_* = π/√κ` (κ > 0) or unbounded is the working radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{generalized_sine, Geometry, ModelSpace, Point, Radius};

/// Invariant tolerance for `refined ≥ ρ` (equality at α = 1).
pub const RADIUS_TOL: f64 = 1e-12;

const ROOT_MAX_ITERS: usize = 200;

/// Mass `alpha` inside `B̄(center, rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSpec {
    pub center: Point,
    pub rho: f64,
    pub alpha: f64,
}

impl ConcentrationSpec {
    pub fn new(center: Point, rho: f64, alpha: f64) -> Result<Self> {
        check_alpha_rho(alpha, rho)?;
        Ok(ConcentrationSpec { center, rho, alpha })
    }

    pub fn basic_radius(&self) -> f64 {
        2.0 * self.alpha * self.rho / (2.0 * self.alpha - 1.0)
    }
}

fn check_alpha_rho(alpha: f64, rho: f64) -> Result<()> {
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "concentration mass must lie in (1/2, 1], got {alpha}"
        )));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!(
            "concentration radius must be positive and finite, got {rho}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// κ > 0 and `2αρ/(2α−1) ≤ r_*/2`.
    PositiveA,
    /// κ > 0, condition a) fails and `F(r_*/2 − ρ) ≤ 0`.
    PositiveB,
    /// κ > 0 and neither condition holds: no refined radius is certified.
    PositiveUnverified,
    Flat,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub curvature: f64,
    pub alpha: f64,
    pub rho: f64,
    pub r_basic: f64,
    pub r_star: Radius,
    pub assumption_ok: bool,
    pub refined_radius: Option<f64>,
    pub case_tag: CaseTag,
    /// Root `t_κ` of `F_{α,ρ,κ}` (absent for α = 1).
    pub t_root: Option<f64>,
}

impl BoundReport {
    /// The radius a containment claim may rely on: refined when certified,
    /// basic otherwise.
    pub fn certified_radius(&self) -> f64 {
        self.refined_radius.unwrap_or(self.r_basic)
    }

    /// Violated report invariants, empty when all hold.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(r) = self.refined_radius {
            if r > self.r_basic {
                out.push(format!("refined radius {r} exceeds basic radius {}", self.r_basic));
            }
            if r < self.rho - RADIUS_TOL {
                out.push(format!("refined radius {r} below rho {}", self.rho));
            }
            let at_one = self.alpha == 1.0;
            if at_one != ((r - self.rho).abs() <= RADIUS_TOL) {
                out.push(format!(
                    "refined radius {r} vs rho {} equality does not match alpha = {}",
                    self.rho, self.alpha
                ));
            }
            if self.assumption_ok && !self.r_star.half().exceeds(r) {
                out.push(format!("refined radius {r} not below r_*/2"));
            }
        }
        out
    }
}

/// `2αρ/(2α−1)`.
pub fn basic_bound_radius(alpha: f64, rho: f64) -> Result<f64> {
    check_alpha_rho(alpha, rho)?;
    Ok(2.0 * alpha * rho / (2.0 * alpha - 1.0))
}

/// `r_* = min{π/√κ, inj}`: `π/√κ` for κ > 0, unbounded otherwise.
pub fn r_star(space: &ModelSpace) -> Radius {
    r_star_for(space.curvature())
}

fn r_star_for(curvature: f64) -> Radius {
    if curvature > 0.0 {
        Radius::Finite(std::f64::consts::PI / curvature.sqrt())
    } else {
        Radius::Unbounded
    }
}

/// `2αρ/(2α−1) < r_*`.
pub fn assumption_check(space: &ModelSpace, spec: &ConcentrationSpec) -> bool {
    r_star(space).exceeds(spec.basic_radius())
}

/// `S_κ(t)`: `sin(√κ t)`, `t`, or `sinh(√−κ t)`.
pub fn s_delta(space: &ModelSpace, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("S_delta needs t >= 0, got {t}")));
    }
    Ok(generalized_sine(space.curvature(), t))
}

/// The auxiliary function whose sign decides condition b).
///
/// κ > 0: `cot(√κ(2α−1)t) − cot(√κ t) − 2cot(√κ ρ)`;
/// κ = 0: `(1−α)ρ − (2α−1)t`;
/// κ < 0: the same with `coth`.
pub fn f_eval(alpha: f64, rho: f64, curvature: f64, t: f64) -> Result<f64> {
    check_alpha_rho(alpha, rho)?;
    let beta = 2.0 * alpha - 1.0;
    let upper = rho / beta;
    if !(t > 0.0 && t <= upper * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!("F argument {t} outside (0, {upper}]")));
    }
    if curvature > 0.0 {
        let s = curvature.sqrt();
        let args = [s * beta * t, s * t, s * rho];
        if args.iter().any(|a| !(*a > 0.0 && *a < std::f64::consts::PI)) {
            return Err(Error::invalid(format!(
                "cotangent arguments {args:?} leave (0, pi)"
            )));
        }
        Ok(cot(args[0]) - cot(args[1]) - 2.0 * cot(args[2]))
    } else if curvature < 0.0 {
        let s = (-curvature).sqrt();
        Ok(coth(s * beta * t) - coth(s * t) - 2.0 * coth(s * rho))
    } else {
        Ok((1.0 - alpha) * rho - beta * t)
    }
}

fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// The unique zero `t_κ ∈ (0, ρ/(2α−1))` of `F_{α,ρ,κ}` (bisection).
///
/// `F > 0` on `(0, t_κ)` and `F < 0` on `(t_κ, ρ/(2α−1)]`.
pub fn f_root(alpha: f64, rho: f64, curvature: f64) -> Result<f64> {
    check_alpha_rho(alpha, rho)?;
    if alpha >= 1.0 {
        return Err(Error::invalid("F has no root in the open interval when alpha = 1"));
    }
    if !r_star_for(curvature).exceeds(2.0 * alpha * rho / (2.0 * alpha - 1.0)) {
        return Err(Error::invalid(
            "F root needs 2*alpha*rho/(2*alpha-1) < pi/sqrt(kappa)",
        ));
    }
    let eps = 1e-12 * rho;
    let (mut lo, mut hi) = (eps, rho / (2.0 * alpha - 1.0) - eps);
    let f_lo = f_eval(alpha, rho, curvature, lo)?;
    let f_hi = f_eval(alpha, rho, curvature, hi)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::invalid(format!(
            "F does not change sign on the bracket: F({lo}) = {f_lo}, F({hi}) = {f_hi}"
        )));
    }
    for _ in 0..ROOT_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f_eval(alpha, rho, curvature, mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The curvature-dependent closed-form radius, without any certification logic.
///
/// κ > 0: `arcsin(α sin(√κρ)/√(2α−1))/√κ`; κ = 0: `αρ/√(2α−1)`;
/// κ < 0: `arcsinh(α sinh(√−κρ)/√(2α−1))/√−κ`.
pub fn position_radius(curvature: f64, alpha: f64, rho: f64) -> Result<f64> {
    check_alpha_rho(alpha, rho)?;
    if alpha == 1.0 {
        return Ok(rho);
    }
    let root = (2.0 * alpha - 1.0).sqrt();
    if curvature > 0.0 {
        let s = curvature.sqrt();
        let arg = alpha * (s * rho).sin() / root;
        if !(arg <= 1.0) {
            return Err(Error::invalid(format!("arcsin argument {arg} exceeds 1")));
        }
        Ok(arg.asin() / s)
    } else if curvature < 0.0 {
        let s = (-curvature).sqrt();
        Ok((alpha * (s * rho).sinh() / root).asinh() / s)
    } else {
        Ok(alpha * rho / root)
    }
}

/// Full bound report; errors when the concentration assumption fails.
pub fn refined_bound_radius(space: &ModelSpace, spec: &ConcentrationSpec) -> Result<BoundReport> {
    let (alpha, rho, k) = (spec.alpha, spec.rho, space.curvature());
    let r_basic = spec.basic_radius();
    let r_star = r_star(space);
    if !r_star.exceeds(r_basic) {
        return Err(Error::invalid(format!(
            "concentration assumption fails: basic radius {r_basic} is not below r_* = {}",
            r_star.as_f64()
        )));
    }
    let t_root = if alpha < 1.0 {
        Some(f_root(alpha, rho, k)?)
    } else {
        None
    };
    let formula = position_radius(k, alpha, rho)?;
    let (case_tag, refined_radius) = match space.geometry() {
        Geometry::Flat => (CaseTag::Flat, Some(formula)),
        Geometry::Hyperbolic => (CaseTag::Negative, Some(formula)),
        Geometry::Sphere => {
            let half = r_star.half().as_f64();
            if r_basic <= half {
                (CaseTag::PositiveA, Some(formula))
            } else if f_eval(alpha, rho, k, half - rho)? <= 0.0 {
                (CaseTag::PositiveB, Some(formula))
            } else {
                (CaseTag::PositiveUnverified, None)
            }
        }
    };
    Ok(BoundReport {
        curvature: k,
        alpha,
        rho,
        r_basic,
        r_star,
        assumption_ok: true,
        refined_radius,
        case_tag,
        t_root,
    })
}

/// `min h_{x,z} > (1−α)/α · d(x, z)`: when it holds, `x` is not a median.
pub fn exclusion_test(
    space: &ModelSpace,
    spec: &ConcentrationSpec,
    x: &Point,
    z: &Point,
    hmin_value: f64,
) -> Result<bool> {
    let d = crate::geometry::dist(space, x, z)?;
    Ok(hmin_value > (1.0 - spec.alpha) / spec.alpha * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn spec(space: &ModelSpace, alpha: f64, rho: f64) -> ConcentrationSpec {
        ConcentrationSpec::new(space.origin(), rho, alpha).unwrap()
    }

    fn remark_rho() -> f64 {
        0.99 * PI * (1.0 - 1.0 / 1.02)
    }

    #[test]
    fn basic_radius_examples() {
        assert_eq!(basic_bound_radius(1.0, 1.0).unwrap(), 2.0);
        assert_abs_diff_eq!(basic_bound_radius(0.75, 1.0).unwrap(), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(basic_bound_radius(0.51, 1.0).unwrap(), 51.0, epsilon = 1e-10);
        assert!(basic_bound_radius(0.5, 1.0).is_err());
        assert!(basic_bound_radius(0.4, 1.0).is_err());
        assert!(ConcentrationSpec::new(Point::from_raw(vec![0.0, 0.0]), 1.0, 0.5).is_err());
        assert!(ConcentrationSpec::new(Point::from_raw(vec![0.0, 0.0]), 0.0, 0.7).is_err());
    }

    #[test]
    fn r_star_examples() {
        assert_eq!(r_star(&ModelSpace::sphere(2).unwrap()), Radius::Finite(PI));
        assert_eq!(r_star(&ModelSpace::new(4.0, 2).unwrap()), Radius::Finite(PI / 2.0));
        assert_eq!(r_star(&ModelSpace::flat(2).unwrap()), Radius::Unbounded);
        assert_eq!(r_star(&ModelSpace::hyperbolic(3).unwrap()), Radius::Unbounded);
    }

    #[test]
    fn assumption_examples() {
        let s = ModelSpace::sphere(2).unwrap();
        let e = ModelSpace::flat(2).unwrap();
        assert!(assumption_check(&e, &spec(&e, 0.51, 100.0)));
        assert!(assumption_check(&s, &spec(&s, 0.75, 1.0)));
        assert!(!assumption_check(&s, &spec(&s, 0.6, 1.0)));
    }

    #[test]
    fn s_delta_examples() {
        assert_eq!(s_delta(&ModelSpace::flat(2).unwrap(), 2.0).unwrap(), 2.0);
        assert_abs_diff_eq!(
            s_delta(&ModelSpace::sphere(2).unwrap(), FRAC_PI_2).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            s_delta(&ModelSpace::hyperbolic(2).unwrap(), 1.0).unwrap(),
            1.1752012,
            epsilon = 1e-7
        );
        assert!(s_delta(&ModelSpace::flat(2).unwrap(), -1.0).is_err());
    }

    #[test]
    fn f_examples() {
        let rho = remark_rho();
        let v = f_eval(0.51, rho, 1.0, FRAC_PI_2 - rho).unwrap();
        assert_abs_diff_eq!(v, 0.2907, epsilon = 5e-4);
        for t in [0.1, 0.5, 1.0, 2.0] {
            assert_abs_diff_eq!(f_eval(1.0, 2.0, 0.0, t).unwrap(), -t, epsilon = 1e-15);
        }
        assert_eq!(f_eval(0.75, 1.0, 0.0, 0.5).unwrap(), 0.0);
        assert!(f_eval(0.75, 1.0, 0.0, 0.0).is_err());
        assert!(f_eval(0.75, 1.0, 0.0, 2.5).is_err());
        // √κ ρ = 4 > π
        assert!(f_eval(0.75, 4.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn f_root_examples() {
        assert_abs_diff_eq!(f_root(0.75, 1.0, 0.0).unwrap(), 0.5, epsilon = 1e-12);
        assert!(f_root(1.0, 1.0, 0.0).is_err());
        let rho = remark_rho();
        let t1 = f_root(0.51, rho, 1.0).unwrap();
        assert!(t1 > FRAC_PI_2 - rho);
        assert!(f_eval(0.51, rho, 1.0, t1).unwrap().abs() < 1e-6);
    }

    #[test]
    fn refined_examples() {
        let e = ModelSpace::flat(2).unwrap();
        let rep = refined_bound_radius(&e, &spec(&e, 0.75, 1.0)).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Flat);
        assert_abs_diff_eq!(rep.refined_radius.unwrap(), 1.0606602, epsilon = 1e-7);
        assert!(rep.invariant_violations().is_empty());

        let h = ModelSpace::hyperbolic(2).unwrap();
        let rep = refined_bound_radius(&h, &spec(&h, 0.6, 0.5)).unwrap();
        assert_eq!(rep.case_tag, CaseTag::Negative);
        assert_abs_diff_eq!(rep.refined_radius.unwrap(), 0.651_947_718_515_789_6, epsilon = 1e-12);

        let s = ModelSpace::sphere(2).unwrap();
        let rep = refined_bound_radius(&s, &spec(&s, 0.51, remark_rho())).unwrap();
        assert_eq!(rep.case_tag, CaseTag::PositiveUnverified);
        assert!(rep.refined_radius.is_none());
        assert_eq!(rep.certified_radius(), rep.r_basic);

        let rep = refined_bound_radius(&s, &spec(&s, 0.75, 0.3)).unwrap();
        assert_eq!(rep.case_tag, CaseTag::PositiveA);

        assert!(refined_bound_radius(&s, &spec(&s, 0.6, 1.0)).is_err());
    }

    #[test]
    fn alpha_one_gives_rho() {
        for space in [
            ModelSpace::sphere(2).unwrap(),
            ModelSpace::flat(2).unwrap(),
            ModelSpace::hyperbolic(2).unwrap(),
        ] {
            let rep = refined_bound_radius(&space, &spec(&space, 1.0, 0.4)).unwrap();
            assert_eq!(rep.refined_radius, Some(0.4));
            assert!(rep.t_root.is_none());
            assert!(rep.invariant_violations().is_empty());
        }
    }

    #[test]
    fn exclusion_examples() {
        let e = ModelSpace::flat(2).unwrap();
        let x = Point::from_raw(vec![5.0, 0.0]);
        let a = e.origin();
        let full = spec(&e, 1.0, 1.0);
        assert!(exclusion_test(&e, &full, &x, &a, 1e-9).unwrap());
        assert!(!exclusion_test(&e, &full, &x, &a, 0.0).unwrap());

        // z = a, hmin = D − 2ρ: excluded iff D > 2αρ/(2α−1) = 3.
        let s = spec(&e, 0.75, 1.0);
        for d in [2.5, 2.99, 3.01, 4.0] {
            let x = Point::from_raw(vec![d, 0.0]);
            let excluded = exclusion_test(&e, &s, &x, &a, d - 2.0).unwrap();
            assert_eq!(excluded, d > 3.0, "D = {d}");
        }
    }
}
