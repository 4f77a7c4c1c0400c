//! Point clouds carrying an analytic geodesic metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    /// Flat torus `R^d / (P_1 Z x ... x P_d Z)`; coordinates live in `[0, P_i)`.
    FlatTorus {
        periods: Vec<f64>,
    },
    /// Unit sphere in `R^d` with the great-circle metric.
    Sphere,
    Euclidean,
}

impl Geometry {
    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Geometry::FlatTorus { periods } => {
                let mut s = 0.0;
                for ((x, y), p) in a.iter().zip(b).zip(periods) {
                    let d = (x - y).abs();
                    let c = d.min(p - d);
                    s += c * c;
                }
                s.sqrt()
            }
            Geometry::Sphere => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                dot.clamp(-1.0, 1.0).acos()
            }
            Geometry::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        }
    }
}

/// Coordinates plus a geometry, scaled by a constant factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    geometry: Geometry,
    scale: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, geometry: Geometry) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if let Geometry::FlatTorus { periods } = &geometry {
            if periods.len() != dim || periods.iter().any(|p| !(*p > 0.0)) {
                return Err(Error::InvalidArgument(format!("torus needs {dim} positive periods, got {periods:?}")));
            }
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.into_iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidArgument(format!("point {i} has dimension {}, expected {dim}", p.len())));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::BadEntry { i, j: 0 });
            }
            coords.extend(p);
        }
        Ok(Self { dim, coords, geometry, scale: 1.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i).to_vec()).collect()
    }

    /// Same cloud with every distance multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { scale: self.scale * s, ..self.clone() }
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        Self { dim: self.dim, coords, geometry: self.geometry.clone(), scale: self.scale }
    }
}

impl Metric for PointCloud {
    fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let d = self.geometry.distance(self.point(i), self.point(j));
        if self.scale == 1.0 {
            d
        } else {
            d * self.scale
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_distance_wraps() {
        let g = Geometry::FlatTorus { periods: vec![1.0, 2.0] };
        let d = g.distance(&[0.05, 0.0], &[0.95, 1.5]);
        assert!((d - (0.1f64.powi(2) + 0.5f64.powi(2)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sphere_distance_is_angle() {
        let g = Geometry::Sphere;
        let d = g.distance(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_periods() {
        let r = PointCloud::new(vec![vec![0.0, 0.0]], Geometry::FlatTorus { periods: vec![1.0] });
        assert!(r.is_err());
    }

    #[test]
    fn scaling_multiplies_distances() {
        let c = PointCloud::new(vec![vec![0.0], vec![0.25]], Geometry::FlatTorus { periods: vec![1.0] }).unwrap();
        assert_eq!(c.scaled(4.0).dist(0, 1), 1.0);
    }
}
