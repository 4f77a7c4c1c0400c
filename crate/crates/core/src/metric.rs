//! Finite metric spaces, open balls and set distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed in the triangle inequality.
pub const TRIANGLE_TOL: f64 = 1e-9;

/// A finite metric: `len()` points addressed by index, `dist` symmetric.
///
/// Implementors are expected to be cheap to query; algorithms call `dist`
/// O(n^2) times and never cache a full matrix unless they need one.
pub trait Metric: Sync {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<M: Metric + ?Sized> Metric for &M {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn dist(&self, i: usize, j: usize) -> f64 {
        (**self).dist(i, j)
    }
}

/// Validated dense distance matrix with optional point labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

/// Wire form of a [`FiniteMetricSpace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSpaceRecord {
    pub n: usize,
    pub dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl FiniteMetricSpace {
    /// Checks every metric axiom and returns the first violation found.
    ///
    /// Order of checks: shape and finiteness, zero diagonal, symmetry,
    /// positivity off the diagonal, then the triangle inequality scanned
    /// in `(i, j, k)` lexicographic order.
    pub fn validate(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare { row, len: r.len(), expected: n });
            }
        }
        let dist: Vec<f64> = matrix.into_iter().flatten().collect();
        Self::validate_flat(n, dist)
    }

    pub fn validate_flat(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if dist.len() != n * n {
            return Err(Error::NotSquare { row: 0, len: dist.len(), expected: n * n });
        }
        for i in 0..n {
            for j in 0..n {
                let v = dist[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::BadEntry { i, j });
                }
            }
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::NonzeroDiagonal { i });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if dist[i * n + j] != dist[j * n + i] {
                    return Err(Error::Asymmetry { i, j });
                }
                if dist[i * n + j] == 0.0 {
                    return Err(Error::ZeroDistance { i, j });
                }
            }
        }
        // first violation per row i, then the smallest i overall
        let first = (0..n).into_par_iter().find_map_first(|i| triangle_violation_in_row(&dist, n, i));
        if let Some((i, j, k)) = first {
            return Err(Error::TriangleViolation { i, j, k });
        }
        Ok(Self { n, dist, labels: None })
    }

    /// Copies any metric into a dense matrix without re-validating it.
    pub fn from_metric<M: Metric>(m: &M) -> Self {
        let n = m.len();
        let dist: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (0..n).map(move |j| if i == j { 0.0 } else { m.dist(i, j) }))
            .collect();
        Self { n, dist, labels: None }
    }

    /// Materializes and validates any metric.
    pub fn from_metric_validated<M: Metric>(m: &M) -> Result<Self> {
        let dense = Self::from_metric(m);
        Self::validate_flat(dense.n, dense.dist)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidArgument(format!("{} labels for {} points", labels.len(), self.n)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Every distance multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, dist: self.dist.iter().map(|d| d * s).collect(), labels: self.labels.clone() }
    }

    /// Same space with points relabelled so that new index `i` is old `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = self.dist[perm[i] * n + perm[j]];
            }
        }
        Self { n, dist, labels: None }
    }

    pub fn to_record(&self) -> MetricSpaceRecord {
        MetricSpaceRecord { n: self.n, dist: self.to_rows(), labels: self.labels.clone() }
    }

    pub fn from_record(rec: MetricSpaceRecord) -> Result<Self> {
        if rec.dist.len() != rec.n {
            return Err(Error::Parse(format!("n = {} but {} rows", rec.n, rec.dist.len())));
        }
        let space = Self::validate(rec.dist)?;
        match rec.labels {
            Some(l) => space.with_labels(l),
            None => Ok(space),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("finite doubles serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: MetricSpaceRecord = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_record(rec)
    }

    /// Lower-triangular CSV: line `i` holds `d(i,0), ..., d(i,i)`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        for i in 0..self.n {
            let rec: Vec<String> = (0..=i).map(|j| format!("{:?}", self.dist[i * self.n + j])).collect();
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(s.as_bytes());
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != i + 1 {
                return Err(Error::Parse(format!("line {} has {} fields, expected {}", i, rec.len(), i + 1)));
            }
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {i}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        let mut full = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                full[i][j] = v;
                full[j][i] = v;
            }
            if row[i] != 0.0 {
                return Err(Error::NonzeroDiagonal { i });
            }
        }
        Self::validate(full)
    }
}

fn triangle_violation_in_row(dist: &[f64], n: usize, i: usize) -> Option<(usize, usize, usize)> {
    for j in 0..n {
        let dij = dist[i * n + j];
        for k in 0..n {
            let via = dist[i * n + k] + dist[k * n + j];
            if dij > via + TRIANGLE_TOL * dij.max(via) {
                return Some((i, j, k));
            }
        }
    }
    None
}

impl Metric for FiniteMetricSpace {
    fn len(&self) -> usize {
        self.n
    }
    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }
}

/// The restriction of a metric to a list of point indices.
#[derive(Debug, Clone)]
pub struct Restricted<'a, M: ?Sized> {
    inner: &'a M,
    idx: Vec<usize>,
}

impl<'a, M: Metric + ?Sized> Restricted<'a, M> {
    pub fn new(inner: &'a M, idx: Vec<usize>) -> Self {
        Self { inner, idx }
    }
    pub fn indices(&self) -> &[usize] {
        &self.idx
    }
}

impl<M: Metric + ?Sized> Metric for Restricted<'_, M> {
    fn len(&self) -> usize {
        self.idx.len()
    }
    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.inner.dist(self.idx[i], self.idx[j])
    }
}

/// A metric with every distance multiplied by a fixed factor.
#[derive(Debug, Clone)]
pub struct Scaled<M> {
    pub inner: M,
    pub factor: f64,
}

impl<M: Metric> Metric for Scaled<M> {
    fn len(&self) -> usize {
        self.inner.len()
    }
    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.inner.dist(i, j) * self.factor
    }
}

fn check_index<M: Metric + ?Sized>(m: &M, i: usize) -> Result<()> {
    if i >= m.len() {
        Err(Error::IndexOutOfRange { index: i, len: m.len() })
    } else {
        Ok(())
    }
}

/// Open ball `{ j : d(center, j) < eta }`, in index order.
pub fn ball<M: Metric + ?Sized>(m: &M, center: usize, eta: f64) -> Result<Vec<usize>> {
    check_index(m, center)?;
    if !(eta > 0.0) || eta.is_nan() {
        return Err(Error::BadRadius(eta));
    }
    Ok((0..m.len()).filter(|&j| j == center || m.dist(center, j) < eta).collect())
}

pub fn diameter<M: Metric + ?Sized>(m: &M) -> f64 {
    let n = m.len();
    (0..n).into_par_iter().map(|i| ((i + 1)..n).map(|j| m.dist(i, j)).fold(0.0, f64::max)).reduce(|| 0.0, f64::max)
}

/// `max_i max_j d(i, j)` over `j`, i.e. the eccentricity of `i`.
pub fn eccentricity<M: Metric + ?Sized>(m: &M, i: usize) -> f64 {
    (0..m.len()).map(|j| m.dist(i, j)).fold(0.0, f64::max)
}

/// Distance from point `x` to the set `s`.
pub fn point_set_distance<M: Metric + ?Sized>(m: &M, x: usize, s: &[usize]) -> f64 {
    s.iter().map(|&y| m.dist(x, y)).fold(f64::INFINITY, f64::min)
}

/// Largest nearest-neighbour distance over the sample.
///
/// This is the sample's own density scale; results at radii below twice
/// this value are below the resolution floor.
pub fn fill_radius<M: Metric + ?Sized>(m: &M) -> f64 {
    let n = m.len();
    if n < 2 {
        return 0.0;
    }
    (0..n)
        .into_par_iter()
        .map(|i| (0..n).filter(|&j| j != i).map(|j| m.dist(i, j)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}

pub fn resolution_floor<M: Metric + ?Sized>(m: &M) -> f64 {
    2.0 * fill_radius(m)
}

/// Hausdorff distance between two nonempty subsets of one space.
pub fn hausdorff_distance<M: Metric + ?Sized>(m: &M, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySubset);
    }
    for &i in a.iter().chain(b) {
        check_index(m, i)?;
    }
    let ab = a.iter().map(|&x| point_set_distance(m, x, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|&y| point_set_distance(m, y, a)).fold(0.0, f64::max);
    Ok(ab.max(ba))
}
