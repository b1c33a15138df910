//! Exact kernels for the constant-curvature model spaces `M^l_κ`.
//!
//! Points are stored in embedded coordinates of the unit model and the
//! curvature scale `1/√|κ|` is folded into every length:
//!
//! | κ     | embedding                                   | distance                         |
//! |-------|---------------------------------------------|----------------------------------|
//! | κ > 0 | unit sphere in `R^{l+1}`                    | `angle(x, y) / √κ`               |
//! | κ = 0 | `R^l`                                       | `|x - y|`                        |
//! | κ < 0 | upper sheet of `⟨x,x⟩ = -1` in `R^{l,1}`    | `arccosh(-⟨x,y⟩) / √-κ`          |
//!
//! The Minkowski time coordinate is the *last* coordinate, so the base point
//! of the hyperbolic model is `(0, …, 0, 1)`, matching the north pole
//! `(0, …, 0, 1)` of the sphere.
//!
//! Tangent vectors live in the ambient space. Their Riemannian length equals
//! their ambient (Euclidean or Minkowski) norm, so `exp_x(v)` lands at
//! distance `|v|` from `x` in every model.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance on `⟨x,x⟩ = ±1` for embedded points.
pub const POINT_TOL: f64 = 1e-12;
/// Tolerance on `⟨base, v⟩ = 0` for tangent vectors.
pub const TANGENT_TOL: f64 = 1e-10;
/// Two points closer than this (ambient coordinates) are considered equal.
pub const POINT_EQ_TOL: f64 = 1e-9;
/// Largest domain violation silently clamped for `arccos`/`arccosh` arguments.
pub const CLAMP_TOL: f64 = 1e-9;

/// Which of the three model geometries a curvature sign selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Sphere,
    Flat,
    Hyperbolic,
}

impl Geometry {
    pub const ALL: [Geometry; 3] = [Geometry::Sphere, Geometry::Flat, Geometry::Hyperbolic];

    /// Curvature of the unit-|κ| representative.
    pub fn unit_curvature(self) -> f64 {
        match self {
            Geometry::Sphere => 1.0,
            Geometry::Flat => 0.0,
            Geometry::Hyperbolic => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Sphere => "sphere",
            Geometry::Flat => "flat",
            Geometry::Hyperbolic => "hyperbolic",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" | "spherical" => Ok(Geometry::Sphere),
            "flat" | "euclidean" => Ok(Geometry::Flat),
            "hyperbolic" => Ok(Geometry::Hyperbolic),
            other => Err(Error::invalid(format!("unknown geometry `{other}`"))),
        }
    }
}

/// A length that may be unbounded (`π/√κ` for κ > 0, `+∞` otherwise).
///
/// Serialized as a number, or the string `"inf"` when unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius {
    Finite(f64),
    Unbounded,
}

impl Radius {
    pub fn is_finite(self) -> bool {
        matches!(self, Radius::Finite(_))
    }

    /// `x < self`; every finite `x` is below an unbounded radius.
    pub fn exceeds(self, x: f64) -> bool {
        match self {
            Radius::Finite(r) => x < r,
            Radius::Unbounded => x.is_finite(),
        }
    }

    pub fn half(self) -> Radius {
        self.scale(0.5)
    }

    pub fn scale(self, factor: f64) -> Radius {
        match self {
            Radius::Finite(r) => Radius::Finite(r * factor),
            Radius::Unbounded => Radius::Unbounded,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Radius::Finite(r) => r,
            Radius::Unbounded => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Radius::Finite(r) => Some(r),
            Radius::Unbounded => None,
        }
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Finite(r) => write!(f, "{r}"),
            Radius::Unbounded => f.write_str("inf"),
        }
    }
}

impl Serialize for Radius {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Radius::Finite(r) => serializer.serialize_f64(*r),
            Radius::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Radius {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(r) => Ok(Radius::Finite(r)),
            Repr::Str(s) if s == "inf" => Ok(Radius::Unbounded),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad radius `{s}`"))),
        }
    }
}

/// The simply connected model space of constant curvature `κ` and dimension `l ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    curvature: f64,
    dim: usize,
}

/// A point in embedded coordinates; see the module docs for the convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

/// An ambient vector orthogonal to its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: Point,
    vec: Vec<f64>,
}

/// Closed geodesic ball `B̄(center, radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Point {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Ambient Euclidean closeness, used to identify coincident points.
    pub fn approx_eq(&self, other: &Point, tol: f64) -> bool {
        self.coords.len() == other.coords.len()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Lexicographic order on coordinates (total, NaN-free points only).
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        for (a, b) in self.coords.iter().zip(&other.coords) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.coords.len().cmp(&other.coords.len())
    }
}

impl TangentVector {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    pub fn scaled(&self, factor: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            vec: self.vec.iter().map(|v| v * factor).collect(),
        }
    }
}

impl ModelSpace {
    pub fn new(curvature: f64, dim: usize) -> Result<Self> {
        if !curvature.is_finite() {
            return Err(Error::invalid(format!("curvature must be finite, got {curvature}")));
        }
        if dim < 2 {
            return Err(Error::invalid(format!("dimension must be at least 2, got {dim}")));
        }
        Ok(ModelSpace { curvature, dim })
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        Self::new(1.0, dim)
    }

    pub fn flat(dim: usize) -> Result<Self> {
        Self::new(0.0, dim)
    }

    pub fn hyperbolic(dim: usize) -> Result<Self> {
        Self::new(-1.0, dim)
    }

    /// The unit-|κ| space of the given geometry.
    pub fn unit(geometry: Geometry, dim: usize) -> Result<Self> {
        Self::new(geometry.unit_curvature(), dim)
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn geometry(&self) -> Geometry {
        if self.curvature > 0.0 {
            Geometry::Sphere
        } else if self.curvature < 0.0 {
            Geometry::Hyperbolic
        } else {
            Geometry::Flat
        }
    }

    /// Number of stored coordinates per point.
    pub fn ambient_dim(&self) -> usize {
        match self.geometry() {
            Geometry::Flat => self.dim,
            _ => self.dim + 1,
        }
    }

    /// `√|κ|`, or 1 for flat space where no rescaling happens.
    fn scale(&self) -> f64 {
        match self.geometry() {
            Geometry::Flat => 1.0,
            _ => self.curvature.abs().sqrt(),
        }
    }

    /// Distance to the cut point along any geodesic: `π/√κ` on the sphere,
    /// unbounded otherwise. Equals the injectivity radius of the model.
    pub fn cut_distance(&self) -> Radius {
        match self.geometry() {
            Geometry::Sphere => Radius::Finite(std::f64::consts::PI / self.scale()),
            _ => Radius::Unbounded,
        }
    }

    /// Ambient bilinear form: Euclidean, or Minkowski with the time axis last.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self.geometry() {
            Geometry::Hyperbolic => minkowski(a, b),
            _ => euclid(a, b),
        }
    }

    pub fn check_len(&self, coords: &[f64]) -> Result<()> {
        let expected = self.ambient_dim();
        if coords.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coordinates must be finite"));
        }
        Ok(())
    }

    /// Validates `coords` against the point invariants without modifying them.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        self.check_len(&coords)?;
        match self.geometry() {
            Geometry::Sphere => {
                let n2 = euclid(&coords, &coords);
                if (n2 - 1.0).abs() > POINT_TOL {
                    return Err(Error::invalid(format!(
                        "point is not on the unit sphere: |x|^2 = {n2}"
                    )));
                }
            }
            Geometry::Hyperbolic => {
                let q = minkowski(&coords, &coords);
                let time = coords[coords.len() - 1];
                // Relative to the squared time coordinate so far points remain
                // representable.
                if (q + 1.0).abs() > POINT_TOL * time.powi(2).max(1.0) || time <= 0.0 {
                    return Err(Error::invalid(format!(
                        "point is not on the upper hyperboloid: <x,x> = {q}, time = {time}"
                    )));
                }
            }
            Geometry::Flat => {}
        }
        Ok(Point { coords })
    }

    /// Pulls `coords` onto the manifold when it lies within `tol` of it.
    ///
    /// Sphere: radial normalization. Hyperboloid: the time coordinate is
    /// recomputed from the spatial part.
    pub fn project(&self, coords: Vec<f64>, tol: f64) -> Result<Point> {
        self.check_len(&coords)?;
        match self.geometry() {
            Geometry::Flat => Ok(Point { coords }),
            Geometry::Sphere => {
                let n = euclid(&coords, &coords).sqrt();
                if (n - 1.0).abs() > tol {
                    return Err(Error::invalid(format!(
                        "point has norm {n}, more than {tol} away from the unit sphere"
                    )));
                }
                Ok(Point {
                    coords: coords.into_iter().map(|c| c / n).collect(),
                })
            }
            Geometry::Hyperbolic => {
                let q = minkowski(&coords, &coords);
                let time = coords[coords.len() - 1];
                if (q + 1.0).abs() > tol * time.powi(2).max(1.0) || time <= 0.0 {
                    return Err(Error::invalid(format!(
                        "point with <x,x> = {q}, time = {time} is too far from the upper hyperboloid"
                    )));
                }
                Ok(Point::from_raw(lift_hyperboloid(coords)))
            }
        }
    }

    /// Re-normalizes a computed point (round-off cleanup, no tolerance check).
    pub(crate) fn renormalize(&self, coords: Vec<f64>) -> Point {
        match self.geometry() {
            Geometry::Flat => Point { coords },
            Geometry::Sphere => {
                let n = euclid(&coords, &coords).sqrt();
                Point {
                    coords: coords.into_iter().map(|c| c / n).collect(),
                }
            }
            Geometry::Hyperbolic => Point::from_raw(lift_hyperboloid(coords)),
        }
    }

    /// The base point `o`: north pole, hyperboloid vertex, or the origin.
    pub fn origin(&self) -> Point {
        let mut coords = vec![0.0; self.ambient_dim()];
        if self.geometry() != Geometry::Flat {
            let last = coords.len() - 1;
            coords[last] = 1.0;
        }
        Point { coords }
    }

    /// `exp_o(r · dir)` where `dir ∈ R^l` is a unit vector in the tangent
    /// space at the origin (spatial coordinates).
    pub fn polar_point(&self, r: f64, dir: &[f64]) -> Result<Point> {
        if dir.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: dir.len(),
            });
        }
        let norm = euclid(dir, dir).sqrt();
        if !(norm > 0.0) || !r.is_finite() {
            return Err(Error::invalid("polar direction must be a nonzero finite vector"));
        }
        let s = self.scale();
        let theta = s * r;
        let coords = match self.geometry() {
            Geometry::Flat => dir.iter().map(|d| r * d / norm).collect(),
            Geometry::Sphere => {
                let mut c: Vec<f64> = dir.iter().map(|d| theta.sin() * d / norm).collect();
                c.push(theta.cos());
                c
            }
            Geometry::Hyperbolic => {
                let mut c: Vec<f64> = dir.iter().map(|d| theta.sinh() * d / norm).collect();
                c.push(0.0);
                lift_hyperboloid(c)
            }
        };
        Ok(self.renormalize(coords))
    }

    /// Builds a tangent vector, checking orthogonality to the base point.
    pub fn tangent(&self, base: &Point, vec: Vec<f64>) -> Result<TangentVector> {
        self.check_len(base.coords())?;
        self.check_len(&vec)?;
        if self.geometry() != Geometry::Flat {
            let ip = self.inner(base.coords(), &vec);
            let scale = self.tangent_norm_raw(&vec).max(1.0);
            if ip.abs() > TANGENT_TOL * scale {
                return Err(Error::invalid(format!(
                    "vector is not tangent at the base point: <x,v> = {ip}"
                )));
            }
        }
        Ok(TangentVector {
            base: base.clone(),
            vec,
        })
    }

    /// Riemannian length of a tangent vector.
    pub fn tangent_norm(&self, v: &TangentVector) -> f64 {
        self.tangent_norm_at(v.base.coords(), &v.vec)
    }

    /// Norm of `v` tangent at `base`. Far out on the hyperboloid the
    /// Minkowski form cancels catastrophically, so the radial part is read
    /// off the time coordinate and the rest from the spatial complement.
    pub(crate) fn tangent_norm_at(&self, base: &[f64], v: &[f64]) -> f64 {
        if self.geometry() != Geometry::Hyperbolic {
            return self.tangent_norm_raw(v);
        }
        let n = base.len() - 1;
        let xs = &base[..n];
        let r2 = euclid(xs, xs);
        if r2 < 1.0 {
            return self.tangent_norm_raw(v);
        }
        let radial = v[n] / r2.sqrt();
        let c = euclid(xs, &v[..n]) / r2;
        let perp2: f64 = xs.iter().zip(&v[..n]).map(|(a, b)| (b - c * a).powi(2)).sum();
        (radial * radial + perp2).sqrt()
    }

    fn tangent_norm_raw(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Geodesic distance between raw coordinate slices of equal length.
    ///
    /// Uses half-chord forms (`2·atan2(|x−y|, |x+y|)` on the sphere,
    /// `2·asinh(|x−y|_M / 2)` on the hyperboloid near the diagonal) which
    /// stay accurate for nearby points where `arccos`/`arccosh` lose half
    /// their digits.
    pub fn dist_coords(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self.geometry() {
            Geometry::Flat => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Geometry::Sphere => {
                let (mut diff, mut sum) = (0.0, 0.0);
                for (a, b) in x.iter().zip(y) {
                    diff += (a - b) * (a - b);
                    sum += (a + b) * (a + b);
                }
                2.0 * diff.sqrt().atan2(sum.sqrt()) / self.scale()
            }
            Geometry::Hyperbolic => 2.0 * (chord2(x, y).sqrt() / 2.0).asinh() / self.scale(),
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let spatial: f64 = a[..n - 1].iter().zip(&b[..n - 1]).map(|(x, y)| x * y).sum();
    spatial - a[n - 1] * b[n - 1]
}

/// Squared Minkowski chord `|x − y|²` between hyperboloid points, `2(cosh d − 1)`.
///
/// Far from the vertex both `<x,y>` and the naive chord cancel badly. With
/// `δ = x_s − y_s`, `σ = x_s + y_s`, `S = x_t + y_t` and `a = δ·σ/|σ|` the
/// chord is `(|δ⊥|² + 4a²/S²) / (1 − a²/S²)`, free of large cancellations
/// unless the points are nearly opposite, where `<x,y>` is accurate instead.
fn chord2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() - 1;
    let (xs, ys) = (&x[..n], &y[..n]);
    let tt = x[n] * y[n];
    let ss = euclid(xs, ys);
    let q = tt - ss;
    if q > 2.0 && tt + ss.abs() < 1e3 * q {
        return 2.0 * (q - 1.0);
    }
    let delta: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a - b).collect();
    let sigma: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a + b).collect();
    let sn = euclid(&sigma, &sigma).sqrt();
    if sn == 0.0 {
        return euclid(&delta, &delta);
    }
    let a = euclid(&delta, &sigma) / sn;
    let perp2: f64 = delta.iter().zip(&sigma).map(|(d, s)| (d - a * s / sn).powi(2)).sum();
    let ratio = (a / (x[n] + y[n])).powi(2);
    ((perp2 + 4.0 * ratio) / (1.0 - ratio)).max(0.0)
}

/// Replaces the time coordinate by `sqrt(1 + |spatial|²)`.
fn lift_hyperboloid(mut coords: Vec<f64>) -> Vec<f64> {
    let n = coords.len();
    let s2: f64 = coords[..n - 1].iter().map(|c| c * c).sum();
    coords[n - 1] = (1.0 + s2).sqrt();
    coords
}

/// Three-branch generalized sine `S_κ(t)`: `sin(√κ t)`, `t`, or `sinh(√-κ t)`.
pub fn generalized_sine(curvature: f64, t: f64) -> f64 {
    if curvature > 0.0 {
        (curvature.sqrt() * t).sin()
    } else if curvature < 0.0 {
        ((-curvature).sqrt() * t).sinh()
    } else {
        t
    }
}

/// Clamps an `arccos` argument into `[-1, 1]`, rejecting drift beyond [`CLAMP_TOL`].
pub fn guarded_acos(arg: f64) -> Result<f64> {
    if !(arg.abs() <= 1.0 + CLAMP_TOL) {
        return Err(Error::invalid(format!("arccos argument {arg} outside [-1, 1]")));
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

/// Clamps an `arccosh` argument up to 1, rejecting drift beyond [`CLAMP_TOL`].
pub fn guarded_acosh(arg: f64) -> Result<f64> {
    if !(arg >= 1.0 - CLAMP_TOL) {
        return Err(Error::invalid(format!("arccosh argument {arg} below 1")));
    }
    Ok(arg.max(1.0).acosh())
}

fn check_pair(space: &ModelSpace, x: &Point, y: &Point) -> Result<()> {
    space.check_len(x.coords())?;
    space.check_len(y.coords())
}

/// Geodesic distance `d(x, y)`.
pub fn dist(space: &ModelSpace, x: &Point, y: &Point) -> Result<f64> {
    check_pair(space, x, y)?;
    Ok(space.dist_coords(x.coords(), y.coords()))
}

/// Exponential map `exp_{v.base}(v)`.
pub fn exp_map(space: &ModelSpace, v: &TangentVector) -> Result<Point> {
    space.check_len(v.base.coords())?;
    space.check_len(&v.vec)?;
    Ok(exp_raw(space, &v.base, &v.vec))
}

pub(crate) fn exp_raw(space: &ModelSpace, base: &Point, v: &[f64]) -> Point {
    let x = base.coords();
    let n = space.tangent_norm_at(x, v);
    if n == 0.0 {
        return base.clone();
    }
    let theta = space.scale() * n;
    let coords: Vec<f64> = match space.geometry() {
        Geometry::Flat => x.iter().zip(v).map(|(a, b)| a + b).collect(),
        Geometry::Sphere => {
            let (c, s) = (theta.cos(), theta.sin() / n);
            x.iter().zip(v).map(|(a, b)| c * a + s * b).collect()
        }
        Geometry::Hyperbolic => {
            let (c, s) = (theta.cosh(), theta.sinh() / n);
            x.iter().zip(v).map(|(a, b)| c * a + s * b).collect()
        }
    };
    space.renormalize(coords)
}

/// Logarithm map `log_x(y)`: the initial velocity of the minimal geodesic
/// from `x` to `y`, with length `d(x, y)`.
pub fn log_map(space: &ModelSpace, x: &Point, y: &Point) -> Result<TangentVector> {
    check_pair(space, x, y)?;
    let vec = log_raw(space, x.coords(), y.coords())?;
    Ok(TangentVector {
        base: x.clone(),
        vec,
    })
}

/// Unit-free log map on raw slices. Errors at the cut locus.
pub(crate) fn log_raw(space: &ModelSpace, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let d = space.dist_coords(x, y);
    let delta: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    if d == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    let w: Vec<f64> = match space.geometry() {
        Geometry::Flat => return Ok(delta),
        Geometry::Sphere => {
            if space.scale() * d > std::f64::consts::PI - CLAMP_TOL {
                return Err(Error::Singularity(
                    "logarithm undefined between antipodal points".into(),
                ));
            }
            // Tangential part of y - x; equals y - <x,y> x on the unit sphere.
            let ip = euclid(x, &delta);
            delta.iter().zip(x).map(|(dl, a)| dl - ip * a).collect()
        }
        Geometry::Hyperbolic => {
            // <x, y − x> = −|x − y|²/2
            let ip = -0.5 * chord2(x, y);
            delta.iter().zip(x).map(|(dl, a)| dl + ip * a).collect()
        }
    };
    let wn = space.tangent_norm_at(x, &w);
    if !(wn > 0.0) {
        return Err(Error::Singularity(format!(
            "degenerate direction between points at distance {d}"
        )));
    }
    Ok(w.into_iter().map(|c| c * d / wn).collect())
}

/// The point at fraction `t ∈ [0, 1]` along the minimal geodesic from `x` to `y`.
pub fn geodesic_point(space: &ModelSpace, x: &Point, y: &Point, t: f64) -> Result<Point> {
    check_pair(space, x, y)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("geodesic parameter {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    if t == 1.0 {
        return Ok(y.clone());
    }
    let v = log_raw(space, x.coords(), y.coords())?;
    let scaled: Vec<f64> = v.into_iter().map(|c| c * t).collect();
    Ok(exp_raw(space, x, &scaled))
}

/// Seeded draw from the Riemannian-uniform distribution on the space
/// (sphere only) or on a geodesic ball.
pub fn uniform_random_point(
    space: &ModelSpace,
    rng_seed: u64,
    constraint: Option<&Ball>,
) -> Result<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample_uniform(space, &mut rng, constraint)
}

/// [`uniform_random_point`] driven by a caller-owned generator.
pub fn sample_uniform<R: Rng + ?Sized>(
    space: &ModelSpace,
    rng: &mut R,
    constraint: Option<&Ball>,
) -> Result<Point> {
    let Some(ball) = constraint else {
        if space.geometry() != Geometry::Sphere {
            return Err(Error::invalid(
                "uniform sampling on an unbounded space needs a constraint ball",
            ));
        }
        let g: Vec<f64> = (0..space.ambient_dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = euclid(&g, &g).sqrt();
        return Ok(space.renormalize(g.into_iter().map(|c| c / n).collect()));
    };
    space.check_len(ball.center.coords())?;
    if !(ball.radius > 0.0) || !ball.radius.is_finite() {
        return Err(Error::invalid(format!(
            "constraint radius must be positive and finite, got {}",
            ball.radius
        )));
    }
    if let Radius::Finite(cut) = space.cut_distance() {
        if ball.radius >= cut {
            return Err(Error::invalid(format!(
                "constraint radius {} reaches the cut distance {cut}",
                ball.radius
            )));
        }
    }
    let dir: Vec<f64> = loop {
        let g: Vec<f64> = (0..space.dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = euclid(&g, &g).sqrt();
        if n > 1e-12 {
            break g.into_iter().map(|c| c / n).collect();
        }
    };
    let r = sample_radius(space, rng, ball.radius);
    let at_origin = space.polar_point(r, &dir)?;
    Ok(move_origin_to(space, &ball.center, &at_origin))
}

/// Draws `r ∈ [0, R]` with density proportional to `S_κ(r)^{l-1}` by rejection.
fn sample_radius<R: Rng + ?Sized>(space: &ModelSpace, rng: &mut R, radius: f64) -> f64 {
    let k = space.curvature();
    let exponent = (space.dim() - 1) as i32;
    let peak = match space.geometry() {
        Geometry::Sphere => radius.min(std::f64::consts::FRAC_PI_2 / k.sqrt()),
        _ => radius,
    };
    let envelope = generalized_sine(k, peak).powi(exponent);
    loop {
        let r = rng.gen::<f64>() * radius;
        let accept = generalized_sine(k, r).powi(exponent) / envelope;
        if rng.gen::<f64>() <= accept {
            return r;
        }
    }
}

/// Applies the isometry taking the origin to `center`: a translation, a
/// Householder reflection of the sphere, or a Lorentz boost.
pub fn move_origin_to(space: &ModelSpace, center: &Point, p: &Point) -> Point {
    let c = center.coords();
    let x = p.coords();
    let coords: Vec<f64> = match space.geometry() {
        Geometry::Flat => x.iter().zip(c).map(|(a, b)| a + b).collect(),
        Geometry::Sphere => {
            let n = c.len();
            // w = o - c; H = I - 2 w wᵀ / |w|²
            let mut w: Vec<f64> = c.iter().map(|v| -v).collect();
            w[n - 1] += 1.0;
            let w2 = euclid(&w, &w);
            if w2 < 1e-30 {
                x.to_vec()
            } else {
                let f = 2.0 * euclid(&w, x) / w2;
                x.iter().zip(&w).map(|(a, b)| a - f * b).collect()
            }
        }
        Geometry::Hyperbolic => {
            let n = c.len();
            let (cs, ct) = (&c[..n - 1], c[n - 1]);
            let (xs, xt) = (&x[..n - 1], x[n - 1]);
            let cs_xs: f64 = cs.iter().zip(xs).map(|(a, b)| a * b).sum();
            let mut out: Vec<f64> = cs
                .iter()
                .zip(xs)
                .map(|(ci, xi)| xi + ci * cs_xs / (1.0 + ct) + ci * xt)
                .collect();
            out.push(cs_xs + ct * xt);
            out
        }
    };
    space.renormalize(coords)
}
