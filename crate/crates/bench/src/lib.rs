//! Fixtures shared by the benchmarks.

use fml_core::harness::verify::random_instance;
use fml_core::{DiscreteMeasure, Geometry, ModelSpace, Point, Result};

pub const GEOMETRIES: [Geometry; 3] = [Geometry::Sphere, Geometry::Flat, Geometry::Hyperbolic];

/// A seeded measure of `n` atoms in the unit-curvature plane of `geometry`.
pub fn measure(geometry: Geometry, n: usize, seed: u64) -> Result<DiscreteMeasure> {
    random_instance(geometry, n, seed)
}

/// Two points at distance `r` in the unit-curvature plane of `geometry`.
pub fn point_pair(geometry: Geometry, r: f64) -> Result<(ModelSpace, Point, Point)> {
    let space = ModelSpace::unit(geometry, 2)?;
    let p = space.polar_point(0.3 * r, &[1.0, 0.0])?;
    let q = space.polar_point(0.7 * r, &[-0.6, 0.8])?;
    Ok((space, p, q))
}
