//! Brute-force global minimization of `f_μ` on two-dimensional model spaces.
//!
//! Independent of the Weiszfeld machinery: a dense grid (latitude/longitude
//! on the sphere, normal coordinates around the cheapest atom otherwise)
//! followed by compass search in exponential charts. Used to check
//! [`crate::solver::median_solve`] in tests and experiments.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{move_origin_to, Geometry, ModelSpace, Point};
use crate::solver::{frechet_cost, DiscreteMeasure};

/// Grid step on the sphere, in radians.
pub const SPHERE_GRID_STEP: f64 = 0.005;
/// Half-width of the normal-coordinate grid, in cells.
pub const CHART_GRID_CELLS: usize = 400;

const REFINE_CANDIDATES: usize = 8;
const COMPASS_DIRECTIONS: usize = 16;
const COMPASS_MIN_STEP: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleMedian {
    pub point: Point,
    pub cost: f64,
}

/// `exp_c` in the frame obtained by carrying the origin frame to `c`.
fn chart(space: &ModelSpace, c: &Point, v: &[f64]) -> Point {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r == 0.0 {
        return c.clone();
    }
    let local = space.polar_point(r, v).expect("nonzero direction");
    move_origin_to(space, c, &local)
}

fn grid_candidates(mu: &DiscreteMeasure) -> Result<(Vec<(Point, f64)>, f64)> {
    let space = *mu.space();
    match space.geometry() {
        Geometry::Sphere => {
            let s = space.curvature().sqrt();
            let n_lat = (PI / SPHERE_GRID_STEP).round() as usize;
            let n_lon = (2.0 * PI / SPHERE_GRID_STEP).round() as usize;
            let pts: Vec<(Point, f64)> = (0..=n_lat)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let lat = i as f64 * PI / n_lat as f64;
                    let lons = if i == 0 || i == n_lat { 1 } else { n_lon };
                    (0..lons).map(move |j| {
                        let lon = j as f64 * 2.0 * PI / n_lon as f64;
                        let coords = vec![lat.sin() * lon.cos(), lat.sin() * lon.sin(), lat.cos()];
                        let p = Point::from_raw(coords);
                        let c = frechet_cost(mu, &p).expect("dimension checked");
                        (p, c)
                    })
                })
                .collect();
            Ok((pts, SPHERE_GRID_STEP / s))
        }
        Geometry::Flat | Geometry::Hyperbolic => {
            let (anchor, _) = mu
                .points()
                .iter()
                .map(|p| (p, frechet_cost(mu, p).expect("dimension checked")))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("measure has atoms");
            let reach = mu
                .points()
                .iter()
                .map(|p| space.dist_coords(anchor.coords(), p.coords()))
                .fold(0.0, f64::max);
            let n = CHART_GRID_CELLS as i64;
            let step = reach.max(1e-9) / n as f64;
            let pts: Vec<(Point, f64)> = (-n..=n)
                .into_par_iter()
                .flat_map_iter(|i| {
                    (-n..=n).map(move |j| {
                        let v = [i as f64 * step, j as f64 * step];
                        let p = chart(&space, anchor, &v);
                        let c = frechet_cost(mu, &p).expect("dimension checked");
                        (p, c)
                    })
                })
                .collect();
            Ok((pts, step))
        }
    }
}

fn compass(mu: &DiscreteMeasure, start: Point, start_cost: f64, step0: f64) -> OracleMedian {
    let space = mu.space();
    let (mut p, mut cost) = (start, start_cost);
    let mut step = step0;
    let mut offset = 0.0;
    while step > COMPASS_MIN_STEP {
        let mut improved = false;
        for k in 0..COMPASS_DIRECTIONS {
            let a = offset + 2.0 * PI * k as f64 / COMPASS_DIRECTIONS as f64;
            let cand = chart(space, &p, &[step * a.cos(), step * a.sin()]);
            let c = frechet_cost(mu, &cand).expect("dimension checked");
            if c < cost {
                p = cand;
                cost = c;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
        // Rotate the stencil so narrow descent cones are eventually hit.
        offset += 0.618_033_988_749_895 * 2.0 * PI / COMPASS_DIRECTIONS as f64;
    }
    OracleMedian { point: p, cost }
}

/// Global minimizer of `f_μ` for `l = 2`, by grid search and compass refinement.
pub fn grid_median(mu: &DiscreteMeasure) -> Result<OracleMedian> {
    if mu.space().dim() != 2 {
        return Err(Error::invalid("the grid oracle supports dimension 2 only"));
    }
    let (mut grid, step) = grid_candidates(mu)?;
    grid.sort_by(|a, b| a.1.total_cmp(&b.1));
    let space = mu.space();
    let mut starts: Vec<(Point, f64)> = Vec::new();
    for (p, c) in grid {
        if starts.len() == REFINE_CANDIDATES {
            break;
        }
        if starts
            .iter()
            .all(|(q, _)| space.dist_coords(p.coords(), q.coords()) > 4.0 * step)
        {
            starts.push((p, c));
        }
    }
    for p in mu.points() {
        starts.push((p.clone(), frechet_cost(mu, p)?));
    }
    let best = starts
        .into_par_iter()
        .map(|(p, c)| compass(mu, p, c, 2.0 * step))
        .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.point.lex_cmp(&b.point)))
        .expect("at least one start");
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn corner_triangle_is_not_minimized_at_the_corner() {
        let e = ModelSpace::flat(2).unwrap();
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
            .iter()
            .map(|p| e.point(p.to_vec()).unwrap())
            .collect();
        let mu = DiscreteMeasure::uniform(e, pts).unwrap();
        let m = grid_median(&mu).unwrap();
        // Fermat point of the right isosceles triangle.
        let f = 0.5 * (2f64.sqrt() + 6f64.sqrt()) / 3.0;
        assert_abs_diff_eq!(m.cost, f, epsilon = 1e-10);
        assert!(m.cost < frechet_cost(&mu, &e.point(vec![0.0, 0.0]).unwrap()).unwrap());
    }

    #[test]
    fn sphere_point_mass() {
        let s = ModelSpace::sphere(2).unwrap();
        let p = s.point(vec![0.6, 0.0, 0.8]).unwrap();
        let mu = DiscreteMeasure::point_mass(s, p.clone()).unwrap();
        let m = grid_median(&mu).unwrap();
        assert!(m.cost < 1e-12);
    }

    #[test]
    fn rejects_higher_dimension() {
        let e = ModelSpace::flat(3).unwrap();
        let mu = DiscreteMeasure::point_mass(e, e.origin()).unwrap();
        assert!(grid_median(&mu).is_err());
    }
}
