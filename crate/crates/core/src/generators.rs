//! Reference spaces used by tests, benches and the CLI selftest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use std::f64::consts::PI;

use crate::cloud::{Geometry, PointCloud};
use crate::metric::FiniteMetricSpace;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points on the real line at the given positions (must be distinct).
pub fn line(xs: &[f64]) -> FiniteMetricSpace {
    let m = xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).collect()).collect();
    FiniteMetricSpace::validate(m).expect("distinct positions form a metric")
}

/// `n` uniform random points in the unit cube of `R^dim`, Euclidean metric.
pub fn random_euclidean(n: usize, dim: usize, seed: u64) -> FiniteMetricSpace {
    let mut r = rng(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random::<f64>()).collect()).collect();
    let cloud = PointCloud::new(pts, Geometry::Euclidean).expect("finite coordinates");
    FiniteMetricSpace::from_metric_validated(&cloud).expect("euclidean points form a metric")
}

/// Shortest-path metric of a complete graph with random weights in `[1, 2)`.
///
/// Weights in `[1, 2)` already satisfy the triangle inequality, so the
/// closure is only a safeguard; the space is non-Euclidean in general.
pub fn random_graph_metric(n: usize, seed: u64) -> FiniteMetricSpace {
    let mut r = rng(seed);
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = 1.0 + r.random::<f64>();
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    FiniteMetricSpace::validate(d).expect("shortest paths form a metric")
}

/// `n` equispaced points on a circle of the given circumference.
pub fn circle_equispaced(n: usize, circumference: f64) -> PointCloud {
    let pts = (0..n).map(|i| vec![circumference * i as f64 / n as f64]).collect();
    PointCloud::new(pts, Geometry::FlatTorus { periods: vec![circumference] }).expect("valid circle")
}

/// `n` uniform random points on a circle of the given circumference.
pub fn circle_random(n: usize, circumference: f64, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let pts = (0..n).map(|_| vec![circumference * r.random::<f64>()]).collect();
    PointCloud::new(pts, Geometry::FlatTorus { periods: vec![circumference] }).expect("valid circle")
}

/// `m x m` grid on the flat square torus of side `side`.
pub fn flat_torus_grid(m: usize, side: f64) -> PointCloud {
    let mut pts = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            pts.push(vec![side * i as f64 / m as f64, side * j as f64 / m as f64]);
        }
    }
    PointCloud::new(pts, Geometry::FlatTorus { periods: vec![side, side] }).expect("valid torus")
}

/// `n` uniform random points on the unit 2-sphere, great-circle metric.
pub fn sphere_random(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let pts = (0..n).map(|_| UnitSphere.sample(&mut r).to_vec()).collect();
    PointCloud::new(pts, Geometry::Sphere).expect("valid sphere")
}

/// Fibonacci lattice on the unit 2-sphere (deterministic, quasi-uniform).
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rad = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [rad * phi.cos(), rad * phi.sin(), z]
        })
        .collect()
}
