//! Sampled compact foliations, their leaf spaces, and the class checks
//! used by the separation pipeline.
//!
//! Two analytic models are provided: the flat torus `T^n` foliated by
//! cosets of a coordinate subtorus `T^p`, and the Hopf fibration of `S^3`
//! by great circles. Both have totally geodesic leaves and are Riemannian
//! foliations, so the chain-infimum leaf metric and the leafwise Hausdorff
//! distance should agree up to sampling resolution. User-supplied clouds
//! use the `product` model with a dense metric and leafwise restriction.

use std::f64::consts::PI;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bishop::{bishop_fit, BishopFitParams, EmpiricalMeasure};
use crate::cloud::{Geometry, PointCloud};
use crate::error::{Error, Result};
use crate::generators::{fibonacci_sphere, rng};
use crate::metric::{diameter, fill_radius, FiniteMetricSpace, Metric, Restricted};
use crate::nets::{best_packing, packing_upper_bound};

/// Samples carry their dense matrix in JSON only up to this many points.
pub const DIST_EMBED_LIMIT: usize = 2048;
/// Per-leaf statistics use at most this many leaves (seeded subsample).
pub const LEAF_SAMPLE_CAP: usize = 64;
/// Relative slack for comparisons between two analytic formulas.
pub const FORMULA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    TorusFibration,
    Hopf,
    /// User-supplied cloud; the leafwise metric is the restriction of the
    /// ambient one.
    Product,
}

/// Ambient metric of a sample: analytic or dense.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleMetric {
    Cloud(PointCloud),
    Dense(FiniteMetricSpace),
}

impl Metric for SampleMetric {
    fn len(&self) -> usize {
        match self {
            SampleMetric::Cloud(c) => c.len(),
            SampleMetric::Dense(d) => d.len(),
        }
    }
    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        match self {
            SampleMetric::Cloud(c) => c.dist(i, j),
            SampleMetric::Dense(d) => d.dist(i, j),
        }
    }
}

impl SampleMetric {
    fn scaled(&self, s: f64) -> Self {
        match self {
            SampleMetric::Cloud(c) => SampleMetric::Cloud(c.scaled(s)),
            SampleMetric::Dense(d) => SampleMetric::Dense(d.scaled(s)),
        }
    }
}

/// Metric on the points of one leaf.
#[derive(Debug, Clone)]
pub enum LeafMetric<'a> {
    Intrinsic(PointCloud),
    Restricted(Restricted<'a, SampleMetric>),
}

impl Metric for LeafMetric<'_> {
    fn len(&self) -> usize {
        match self {
            LeafMetric::Intrinsic(c) => c.len(),
            LeafMetric::Restricted(r) => r.len(),
        }
    }
    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        match self {
            LeafMetric::Intrinsic(c) => c.dist(i, j),
            LeafMetric::Restricted(r) => r.dist(i, j),
        }
    }
}

/// A point sample of a foliated manifold with exact leaf assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct FoliatedSample {
    metric: SampleMetric,
    ambient: Vec<Vec<f64>>,
    leaf_id: Vec<usize>,
    members: Vec<Vec<usize>>,
    /// Intrinsic leaf coordinates and their geometry, for analytic models.
    leaf_coords: Option<(Vec<Vec<f64>>, Geometry)>,
    leaf_dim: usize,
    manifold_dim: usize,
    model: Model,
    scales: Vec<f64>,
    distance_scale: f64,
    /// Unscaled volume of each leaf and the nominal points per leaf.
    leaf_volume: Option<(f64, usize)>,
}

fn group_members(leaf_id: &[usize]) -> Result<Vec<Vec<usize>>> {
    let count = leaf_id.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); count];
    for (i, &l) in leaf_id.iter().enumerate() {
        members[l].push(i);
    }
    if let Some(l) = members.iter().position(Vec::is_empty) {
        return Err(Error::InvalidArgument(format!("leaf {l} has no points")));
    }
    Ok(members)
}

impl FoliatedSample {
    /// A user-supplied sample: dense metric plus leaf labels.
    pub fn from_dense(
        space: FiniteMetricSpace,
        leaf_id: Vec<usize>,
        leaf_dim: usize,
        manifold_dim: usize,
        ambient: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if leaf_id.len() != space.len() {
            return Err(Error::InvalidArgument(format!("{} leaf ids for {} points", leaf_id.len(), space.len())));
        }
        if leaf_dim >= manifold_dim {
            return Err(Error::InvalidArgument(format!(
                "leaf dimension {leaf_dim} ≥ manifold dimension {manifold_dim}"
            )));
        }
        let members = group_members(&leaf_id)?;
        Ok(Self {
            metric: SampleMetric::Dense(space),
            ambient,
            leaf_id,
            members,
            leaf_coords: None,
            leaf_dim,
            manifold_dim,
            model: Model::Product,
            scales: Vec::new(),
            distance_scale: 1.0,
            leaf_volume: None,
        })
    }

    pub fn metric(&self) -> &SampleMetric {
        &self.metric
    }
    pub fn len(&self) -> usize {
        self.metric.len()
    }
    pub fn is_empty(&self) -> bool {
        self.metric.is_empty()
    }
    pub fn ambient(&self) -> &[Vec<f64>] {
        &self.ambient
    }
    pub fn leaf_id(&self) -> &[usize] {
        &self.leaf_id
    }
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }
    pub fn num_leaves(&self) -> usize {
        self.members.len()
    }
    pub fn leaf_dim(&self) -> usize {
        self.leaf_dim
    }
    pub fn manifold_dim(&self) -> usize {
        self.manifold_dim
    }
    pub fn model(&self) -> Model {
        self.model
    }
    pub fn distance_scale(&self) -> f64 {
        self.distance_scale
    }
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Leafwise metric of one leaf, indexed like `members()[leaf]`.
    pub fn leaf_metric(&self, leaf: usize) -> LeafMetric<'_> {
        let idx = self.members[leaf].clone();
        match &self.leaf_coords {
            Some((coords, geom)) => {
                let pts = idx.iter().map(|&i| coords[i].clone()).collect();
                let cloud = PointCloud::new(pts, geom.clone()).expect("leaf coordinates are valid");
                LeafMetric::Intrinsic(cloud.scaled(self.distance_scale))
            }
            None => LeafMetric::Restricted(Restricted::new(&self.metric, idx)),
        }
    }

    /// Same sample with every distance multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { metric: self.metric.scaled(s), distance_scale: self.distance_scale * s, ..self.clone() }
    }

    /// Rescaled to diameter 1; also returns the factor applied.
    pub fn normalized(&self) -> (Self, f64) {
        let d = diameter(&self.metric);
        let s = if d > 0.0 { 1.0 / d } else { 1.0 };
        (self.scaled(s), s)
    }

    /// Volume of one leaf estimated from its point count and the sampler's
    /// density; `None` for user-supplied clouds.
    pub fn leaf_volume_estimate(&self, leaf: usize) -> Option<f64> {
        self.leaf_volume.map(|(vol, nominal)| {
            let per_point = vol / nominal as f64;
            self.members[leaf].len() as f64 * per_point * self.distance_scale.powi(self.leaf_dim as i32)
        })
    }

    /// Larger of the ambient fill radius and the largest leafwise one.
    pub fn fill_radius(&self) -> f64 {
        let leafwise =
            (0..self.num_leaves()).into_par_iter().map(|l| fill_radius(&self.leaf_metric(l))).reduce(|| 0.0, f64::max);
        fill_radius(&self.metric).max(leafwise)
    }

    /// Seeded subsample of at most [`LEAF_SAMPLE_CAP`] leaves (all of them
    /// when there are few enough), sorted.
    pub fn sampled_leaves(&self, seed: u64) -> Vec<usize> {
        let n = self.num_leaves();
        if n <= LEAF_SAMPLE_CAP {
            (0..n).collect()
        } else {
            let mut v = sample(&mut rng(seed), n, LEAF_SAMPLE_CAP).into_vec();
            v.sort_unstable();
            v
        }
    }

    /// Checks the structural invariants: nonempty leaves, `p < n`, valid
    /// leafwise metrics dominating the ambient one. Dense validation is
    /// cubic, so only leaves up to 200 points are validated as metrics.
    pub fn check_invariants(&self) -> Result<()> {
        if self.leaf_dim >= self.manifold_dim {
            return Err(Error::Precondition("leaf dimension must be below manifold dimension".into()));
        }
        for (l, idx) in self.members.iter().enumerate() {
            if idx.is_empty() {
                return Err(Error::InvalidArgument(format!("leaf {l} has no points")));
            }
            let lm = self.leaf_metric(l);
            if idx.len() <= 200 {
                FiniteMetricSpace::from_metric_validated(&lm)?;
            }
            for a in 0..idx.len() {
                for b in (a + 1)..idx.len() {
                    let (dl, dm) = (lm.dist(a, b), self.metric.dist(idx[a], idx[b]));
                    if dl < dm * (1.0 - FORMULA_TOL) {
                        return Err(Error::Inconsistent(format!(
                            "leafwise distance {dl} below ambient {dm} at points ({}, {})",
                            idx[a], idx[b]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    /// Manifold dimension.
    pub n: usize,
    /// Leaf dimension.
    pub p: usize,
    pub leaves: usize,
    pub per_leaf: usize,
    /// Circumference of each coordinate circle; the first `n − p` are the
    /// base, the last `p` the leaf.
    pub scales: Vec<f64>,
    pub seed: u64,
}

/// Flat torus `T^n` foliated by cosets of the last `p` coordinates.
///
/// Leaves sit on a regular grid of the base `T^{n−p}` (so `leaves` must be
/// a perfect `(n−p)`-th power) and carry `per_leaf` uniform random points.
pub fn sample_torus_fibration(params: &TorusParams) -> Result<FoliatedSample> {
    let TorusParams { n, p, leaves, per_leaf, ref scales, seed } = *params;
    if !(1 <= p && p < n) {
        return Err(Error::InvalidArgument(format!("need 1 ≤ p < n, got p = {p}, n = {n}")));
    }
    if leaves < 2 || per_leaf < 2 {
        return Err(Error::InvalidArgument("leaf and per-leaf counts must be at least 2".into()));
    }
    if scales.len() != n || scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("need {n} positive scales, got {scales:?}")));
    }
    let base_dim = n - p;
    let side = (leaves as f64).powf(1.0 / base_dim as f64).round() as usize;
    if side.pow(base_dim as u32) != leaves {
        return Err(Error::InvalidArgument(format!(
            "{leaves} leaves is not a perfect power of the base dimension {base_dim}"
        )));
    }
    let mut r = rng(seed);
    let mut ambient = Vec::with_capacity(leaves * per_leaf);
    let mut leaf_id = Vec::with_capacity(leaves * per_leaf);
    let mut leaf_coords = Vec::with_capacity(leaves * per_leaf);
    for leaf in 0..leaves {
        let mut rest = leaf;
        let mut base = Vec::with_capacity(base_dim);
        for &s in &scales[..base_dim] {
            let k = rest % side;
            rest /= side;
            base.push(s * k as f64 / side as f64);
        }
        for _ in 0..per_leaf {
            let lc: Vec<f64> = (0..p).map(|a| scales[base_dim + a] * r.random::<f64>()).collect();
            let mut point = base.clone();
            point.extend_from_slice(&lc);
            ambient.push(point);
            leaf_coords.push(lc);
            leaf_id.push(leaf);
        }
    }
    let cloud = PointCloud::new(ambient.clone(), Geometry::FlatTorus { periods: scales.clone() })?;
    let leaf_geometry = Geometry::FlatTorus { periods: scales[base_dim..].to_vec() };
    let leaf_volume: f64 = scales[base_dim..].iter().product();
    Ok(FoliatedSample {
        metric: SampleMetric::Cloud(cloud),
        ambient,
        members: group_members(&leaf_id)?,
        leaf_id,
        leaf_coords: Some((leaf_coords, leaf_geometry)),
        leaf_dim: p,
        manifold_dim: n,
        model: Model::TorusFibration,
        scales: scales.clone(),
        distance_scale: 1.0,
        leaf_volume: Some((leaf_volume, per_leaf)),
    })
}

/// The point of `S^3 ⊂ C^2` over base `b ∈ S^2` at fiber phase `t`.
///
/// With polar angle θ and azimuth φ of `b`, the fiber is
/// `(cos(θ/2) e^{i(φ+t)}, sin(θ/2) e^{it})`, a great circle of length 2π.
pub fn hopf_point(base: [f64; 3], t: f64) -> [f64; 4] {
    let theta = base[2].clamp(-1.0, 1.0).acos();
    let phi = base[1].atan2(base[0]);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [c * (phi + t).cos(), c * (phi + t).sin(), s * t.cos(), s * t.sin()]
}

/// Base points of [`sample_hopf`] (Fibonacci lattice on the unit sphere).
pub fn hopf_base_points(fibers: usize) -> Vec<[f64; 3]> {
    fibonacci_sphere(fibers)
}

/// Hopf fibration of the unit `S^3` (`n = 3`, `p = 1`): fibers over a
/// Fibonacci lattice of `S^2`, each sampled at `per_fiber` equispaced
/// phases with a seeded random offset per fiber.
pub fn sample_hopf(fibers: usize, per_fiber: usize, seed: u64) -> Result<FoliatedSample> {
    if fibers < 4 || per_fiber < 4 {
        return Err(Error::InvalidArgument("fiber and per-fiber counts must be at least 4".into()));
    }
    let mut r = rng(seed);
    let step = 2.0 * PI / per_fiber as f64;
    let mut ambient = Vec::with_capacity(fibers * per_fiber);
    let mut leaf_id = Vec::with_capacity(fibers * per_fiber);
    let mut leaf_coords = Vec::with_capacity(fibers * per_fiber);
    for (f, base) in hopf_base_points(fibers).into_iter().enumerate() {
        let offset = step * r.random::<f64>();
        for j in 0..per_fiber {
            let t = offset + step * j as f64;
            ambient.push(hopf_point(base, t).to_vec());
            leaf_coords.push(vec![t]);
            leaf_id.push(f);
        }
    }
    let cloud = PointCloud::new(ambient.clone(), Geometry::Sphere)?;
    Ok(FoliatedSample {
        metric: SampleMetric::Cloud(cloud),
        ambient,
        members: group_members(&leaf_id)?,
        leaf_id,
        leaf_coords: Some((leaf_coords, Geometry::FlatTorus { periods: vec![2.0 * PI] })),
        leaf_dim: 1,
        manifold_dim: 3,
        model: Model::Hopf,
        scales: Vec::new(),
        distance_scale: 1.0,
        leaf_volume: Some((2.0 * PI, per_fiber)),
    })
}

/// Geodesic distances of a Euclidean point cloud through its `radius`
/// neighbourhood graph (edges of length `≤ radius`).
pub fn geodesic_graph_metric(points: &[Vec<f64>], radius: f64) -> Result<FiniteMetricSpace> {
    if points.is_empty() {
        return Err(Error::EmptySpace);
    }
    let cloud = PointCloud::new(points.to_vec(), Geometry::Euclidean)?;
    let n = cloud.len();
    let mut g: UnGraph<(), f64> = UnGraph::with_capacity(n, 0);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cloud.dist(i, j);
            if d <= radius {
                g.add_edge(nodes[i], nodes[j], d);
            }
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let reach = dijkstra(&g, nodes[i], None, |e| *e.weight());
            (0..n).map(|j| reach.get(&nodes[j]).copied().unwrap_or(f64::INFINITY)).collect()
        })
        .collect();
    if let Some(j) = rows[0].iter().position(|d| d.is_infinite()) {
        return Err(Error::Disconnected(j));
    }
    // symmetrize the two directions of each shortest path
    let mut sym = rows.clone();
    for i in 0..n {
        for j in 0..n {
            sym[i][j] = rows[i][j].min(rows[j][i]);
        }
    }
    FiniteMetricSpace::validate(sym)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafSpaceMode {
    /// Shortest chains of consecutive leaf set-distances.
    #[serde(rename = "chain")]
    ChainInfimum,
    /// Hausdorff distance between leaves, no closure.
    #[serde(rename = "hausdorff")]
    LeafwiseHausdorff,
}

/// The leaf space as a finite metric space over leaf indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafSpace {
    pub space: FiniteMetricSpace,
    pub leaf_sizes: Vec<usize>,
    pub mode: LeafSpaceMode,
}

impl Metric for LeafSpace {
    fn len(&self) -> usize {
        self.space.len()
    }
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.space.dist(i, j)
    }
}

pub fn leaf_space(sample: &FoliatedSample, mode: LeafSpaceMode) -> Result<LeafSpace> {
    leaf_space_of(sample.metric(), sample.members(), mode)
}

/// Leaf space of any metric partitioned into `members`.
///
/// Chain mode closes the matrix of leaf set-distances under shortest paths
/// over the complete leaf graph; Hausdorff mode keeps the leafwise
/// Hausdorff distances as they are. Both are validated as metrics.
pub fn leaf_space_of<M: Metric + ?Sized>(m: &M, members: &[Vec<usize>], mode: LeafSpaceMode) -> Result<LeafSpace> {
    let k = members.len();
    if k == 0 {
        return Err(Error::EmptySpace);
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| ((a + 1)..k).map(move |b| (a, b))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (la, lb) = (&members[a], &members[b]);
            match mode {
                LeafSpaceMode::ChainInfimum => {
                    let mut best = f64::INFINITY;
                    for &i in la {
                        for &j in lb {
                            best = best.min(m.dist(i, j));
                        }
                    }
                    best
                }
                LeafSpaceMode::LeafwiseHausdorff => {
                    let mut col_min = vec![f64::INFINITY; lb.len()];
                    let mut ab = 0.0f64;
                    for &i in la {
                        let mut row_min = f64::INFINITY;
                        for (c, &j) in lb.iter().enumerate() {
                            let d = m.dist(i, j);
                            row_min = row_min.min(d);
                            col_min[c] = col_min[c].min(d);
                        }
                        ab = ab.max(row_min);
                    }
                    ab.max(col_min.into_iter().fold(0.0, f64::max))
                }
            }
        })
        .collect();
    let mut d = vec![0.0; k * k];
    for (&(a, b), &v) in pairs.iter().zip(&values) {
        d[a * k + b] = v;
        d[b * k + a] = v;
    }
    if mode == LeafSpaceMode::ChainInfimum {
        for via in 0..k {
            for a in 0..k {
                let dav = d[a * k + via];
                for b in 0..k {
                    let alt = dav + d[via * k + b];
                    if alt < d[a * k + b] {
                        d[a * k + b] = alt;
                    }
                }
            }
        }
    }
    let space = FiniteMetricSpace::validate_flat(k, d)
        .map_err(|e| Error::Inconsistent(format!("leaf space is not a metric: {e}")))?;
    Ok(LeafSpace { space, leaf_sizes: members.iter().map(Vec::len).collect(), mode })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroaderRow {
    pub delta: f64,
    pub cap_a_lower: usize,
    pub cap_a_upper: usize,
    pub cap_b_lower: usize,
    pub cap_b_upper: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroaderReport {
    pub verdict: Verdict,
    pub rows: Vec<BroaderRow>,
}

impl BroaderReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

fn same_metric<A: Metric + ?Sized, B: Metric + ?Sized>(a: &A, b: &B) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| a.dist(i, j).to_bits() == b.dist(i, j).to_bits()))
}

/// Whether `b` is broader than `a`: `Cap(δ, b) ≥ Cap(δ, a)` at every δ.
///
/// Holds at δ only when a certified lower bound for `b` reaches a
/// certified upper bound for `a`; fails only when an upper bound for `b`
/// is below a lower bound for `a`; otherwise inconclusive. Identical
/// metrics are broader than each other by definition.
pub fn check_broader<A: Metric + ?Sized, B: Metric + ?Sized>(a: &A, b: &B, deltas: &[f64]) -> Result<BroaderReport> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("empty δ grid".into()));
    }
    if deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidArgument("δ grid must be positive".into()));
    }
    let reflexive = same_metric(a, b);
    let rows = deltas
        .par_iter()
        .map(|&delta| {
            let a_lo = best_packing(a, delta)?.count;
            let a_hi = packing_upper_bound(a, delta)?;
            let b_lo = best_packing(b, delta)?.count;
            let b_hi = packing_upper_bound(b, delta)?;
            let verdict = if reflexive || b_lo >= a_hi {
                Verdict::Holds
            } else if b_hi < a_lo {
                Verdict::Fails
            } else {
                Verdict::Inconclusive
            };
            Ok(BroaderRow {
                delta,
                cap_a_lower: a_lo,
                cap_a_upper: a_hi,
                cap_b_lower: b_lo,
                cap_b_upper: b_hi,
                verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = if rows.iter().any(|r| r.verdict == Verdict::Fails) {
        Verdict::Fails
    } else if rows.iter().all(|r| r.verdict == Verdict::Holds) {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    Ok(BroaderReport { verdict, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessTransfer {
    /// Leafwise-disjoint balls stay disjoint in M for every ε below this;
    /// `None` when no pair ever violates it.
    pub eps_max: Option<f64>,
    pub holds_at_d: bool,
    pub pairs_checked: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafFitSummary {
    pub leaf: usize,
    pub p_hat: Option<f64>,
    pub c: Option<f64>,
    pub theta: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BishopConstants {
    pub leaves: Vec<LeafFitSummary>,
    pub max_c_leaf: Option<f64>,
    pub min_theta_leaf: Option<f64>,
    pub c_manifold: Option<f64>,
    pub theta_manifold: Option<f64>,
    pub p_manifold: Option<f64>,
    pub manifold_error: Option<String>,
    pub c_ok: bool,
    /// `min θ_L ≤ C` and `θ_M ≤ C`, as the class definition is written.
    pub theta_upper_ok: bool,
    /// `min θ_L ≥ 1/C` and `θ_M ≥ 1/C`, the direction the estimates use.
    pub theta_lower_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeBounds {
    pub checkable: bool,
    pub volumes: Vec<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub d: f64,
    pub c: f64,
    pub sampled_leaves: Vec<usize>,
    pub disjointness: DisjointnessTransfer,
    pub bishop: BishopConstants,
    pub volume: VolumeBounds,
}

/// Leaf-ball disjointness transfer, Bishop constants and leaf volume
/// bounds for class membership at constants `(d, C)`.
pub fn check_class_conditions(sample: &FoliatedSample, d: f64, c: f64, seed: u64) -> Result<ClassReport> {
    if sample.num_leaves() < 2 {
        return Err(Error::Precondition("need at least two leaves".into()));
    }
    if !(c >= 1.0) || !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("need d > 0 and C ≥ 1, got d = {d}, C = {c}")));
    }
    let leaves = sample.sampled_leaves(seed);

    // (1) leafwise separation 2ε must survive in M: a pair fails exactly
    // for ε in (d_M/2, d_L/2]
    let per_leaf: Vec<(Option<f64>, u64)> = leaves
        .par_iter()
        .map(|&l| {
            let lm = sample.leaf_metric(l);
            let idx = &sample.members()[l];
            let mut worst: Option<f64> = None;
            let mut count = 0u64;
            for a in 0..idx.len() {
                for b in (a + 1)..idx.len() {
                    count += 1;
                    let (dl, dm) = (lm.dist(a, b), sample.metric().dist(idx[a], idx[b]));
                    if dl > dm * (1.0 + FORMULA_TOL) {
                        let e = dm / 2.0;
                        worst = Some(worst.map_or(e, |w: f64| w.min(e)));
                    }
                }
            }
            (worst, count)
        })
        .collect();
    let eps_max = per_leaf.iter().filter_map(|x| x.0).reduce(f64::min);
    let pairs_checked = per_leaf.iter().map(|x| x.1).sum();
    let disjointness = DisjointnessTransfer { eps_max, holds_at_d: eps_max.is_none_or(|e| d <= e), pairs_checked };

    // (2) Bishop constants per leaf and on M
    let fits: Vec<LeafFitSummary> = leaves
        .par_iter()
        .map(|&l| {
            let lm = sample.leaf_metric(l);
            let mu = EmpiricalMeasure::uniform(lm.len());
            match bishop_fit(&lm, &mu, BishopFitParams::for_space(&lm, seed)) {
                Ok(f) => LeafFitSummary {
                    leaf: l,
                    p_hat: Some(f.p_hat),
                    c: Some(f.c_derived),
                    theta: Some(f.theta_derived),
                    error: None,
                },
                Err(e) => LeafFitSummary { leaf: l, p_hat: None, c: None, theta: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let max_c_leaf = fits.iter().filter_map(|f| f.c).reduce(f64::max);
    let min_theta_leaf = fits.iter().filter_map(|f| f.theta).reduce(f64::min);
    let mu = EmpiricalMeasure::uniform(sample.len());
    let m_fit = bishop_fit(sample.metric(), &mu, BishopFitParams::for_space(sample.metric(), seed));
    let (c_manifold, theta_manifold, p_manifold, manifold_error) = match &m_fit {
        Ok(f) => (Some(f.c_derived), Some(f.theta_derived), Some(f.p_hat), None),
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    let all_fitted = fits.iter().all(|f| f.error.is_none()) && manifold_error.is_none();
    let c_ok = all_fitted && max_c_leaf.is_some_and(|x| x <= c) && c_manifold.is_some_and(|x| x <= c);
    let theta_upper_ok = all_fitted && min_theta_leaf.is_some_and(|t| t <= c) && theta_manifold.is_some_and(|t| t <= c);
    let theta_lower_ok =
        all_fitted && min_theta_leaf.is_some_and(|t| t >= 1.0 / c) && theta_manifold.is_some_and(|t| t >= 1.0 / c);
    let bishop = BishopConstants {
        leaves: fits,
        max_c_leaf,
        min_theta_leaf,
        c_manifold,
        theta_manifold,
        p_manifold,
        manifold_error,
        c_ok,
        theta_upper_ok,
        theta_lower_ok,
    };

    // (3) leaf volumes in [1/C, C]
    let volume = if sample.leaf_volume.is_some() {
        let volumes: Vec<f64> =
            (0..sample.num_leaves()).map(|l| sample.leaf_volume_estimate(l).expect("checkable")).collect();
        let min = volumes.iter().copied().reduce(f64::min);
        let max = volumes.iter().copied().reduce(f64::max);
        let ok = Some(min.is_some_and(|v| v >= 1.0 / c) && max.is_some_and(|v| v <= c));
        VolumeBounds { checkable: true, volumes, min, max, ok }
    } else {
        VolumeBounds { checkable: false, volumes: Vec::new(), min: None, max: None, ok: None }
    };

    Ok(ClassReport { d, c, sampled_leaves: leaves, disjointness, bishop, volume })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityReport {
    pub c: f64,
    pub pointwise_min_ratio: f64,
    pub pointwise_max_ratio: f64,
    pub leaf_min_ratio: f64,
    pub leaf_max_ratio: f64,
    pub passes: bool,
}

fn ratio_range<A: Metric + ?Sized, B: Metric + ?Sized>(a: &A, b: &B) -> (f64, f64) {
    let n = a.len();
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for j in (i + 1)..n {
                let r = b.dist(i, j) / a.dist(i, j);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            (lo, hi)
        })
        .collect();
    let lo = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    (lo, hi)
}

fn first_incomparable<A: Metric + ?Sized, B: Metric + ?Sized>(a: &A, b: &B, c: f64) -> Option<(usize, usize, f64)> {
    let n = a.len();
    let (lo, hi) = (1.0 / c * (1.0 - FORMULA_TOL), c * (1.0 + FORMULA_TOL));
    (0..n).find_map(|i| {
        ((i + 1)..n).find_map(|j| {
            let r = b.dist(i, j) / a.dist(i, j);
            (r < lo || r > hi).then_some((i, j, r))
        })
    })
}

/// Checks `(1/C)d ≤ d′ ≤ Cd` pointwise, then the same comparability for
/// the chain-infimum leaf metrics built from `d` and `d′`.
pub fn metric_comparability<M: Metric + ?Sized>(
    sample: &FoliatedSample,
    alt: &M,
    c: f64,
) -> Result<ComparabilityReport> {
    if alt.len() != sample.len() {
        return Err(Error::InvalidArgument(format!(
            "alternative metric has {} points, sample has {}",
            alt.len(),
            sample.len()
        )));
    }
    if !(c >= 1.0) {
        return Err(Error::InvalidArgument(format!("need C ≥ 1, got {c}")));
    }
    if let Some((i, j, ratio)) = first_incomparable(sample.metric(), alt, c) {
        return Err(Error::Incomparable { i, j, ratio });
    }
    let (pointwise_min_ratio, pointwise_max_ratio) = ratio_range(sample.metric(), alt);
    let rho = leaf_space_of(sample.metric(), sample.members(), LeafSpaceMode::ChainInfimum)?;
    let rho_alt = leaf_space_of(alt, sample.members(), LeafSpaceMode::ChainInfimum)?;
    let (leaf_min_ratio, leaf_max_ratio) = if rho.len() < 2 { (1.0, 1.0) } else { ratio_range(&rho, &rho_alt) };
    let passes = leaf_min_ratio >= 1.0 / c * (1.0 - FORMULA_TOL) && leaf_max_ratio <= c * (1.0 + FORMULA_TOL);
    Ok(ComparabilityReport { c, pointwise_min_ratio, pointwise_max_ratio, leaf_min_ratio, leaf_max_ratio, passes })
}

/// Wire form of a [`FoliatedSample`]: the metric-space record fields plus
/// leaf data. `n` is the point count; the manifold dimension is `dim`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoliatedSampleRecord {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    pub leaf_id: Vec<usize>,
    pub ambient: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_coords: Option<Vec<Vec<f64>>>,
    pub p: usize,
    pub dim: usize,
    pub model: Model,
    #[serde(default)]
    pub scales: Vec<f64>,
    pub distance_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_leaf: Option<usize>,
}

impl FoliatedSample {
    pub fn to_record(&self) -> FoliatedSampleRecord {
        let dist = match &self.metric {
            SampleMetric::Dense(d) => Some(d.to_rows()),
            SampleMetric::Cloud(c) if c.len() <= DIST_EMBED_LIMIT => Some(FiniteMetricSpace::from_metric(c).to_rows()),
            SampleMetric::Cloud(_) => None,
        };
        FoliatedSampleRecord {
            n: self.len(),
            dist,
            leaf_id: self.leaf_id.clone(),
            ambient: self.ambient.clone(),
            leaf_coords: self.leaf_coords.as_ref().map(|(c, _)| c.clone()),
            p: self.leaf_dim,
            dim: self.manifold_dim,
            model: self.model,
            scales: self.scales.clone(),
            distance_scale: self.distance_scale,
            per_leaf: self.leaf_volume.map(|v| v.1),
        }
    }

    /// Rebuilds a sample; analytic models recompute their metric from the
    /// coordinates, `product` samples require the dense matrix.
    pub fn from_record(rec: FoliatedSampleRecord) -> Result<Self> {
        let members = group_members(&rec.leaf_id)?;
        if rec.leaf_id.len() != rec.n || rec.ambient.len() != rec.n {
            return Err(Error::Parse(format!(
                "n = {} but {} leaf ids and {} ambient points",
                rec.n,
                rec.leaf_id.len(),
                rec.ambient.len()
            )));
        }
        let s = rec.distance_scale;
        let analytic = |geometry: Geometry, leaf_geometry: Geometry, volume: f64| -> Result<FoliatedSample> {
            let coords = rec.leaf_coords.clone().ok_or_else(|| Error::Parse("missing leaf_coords".into()))?;
            if coords.len() != rec.n {
                return Err(Error::Parse("leaf_coords length mismatch".into()));
            }
            let cloud = PointCloud::new(rec.ambient.clone(), geometry)?.scaled(s);
            let per_leaf = rec.per_leaf.ok_or_else(|| Error::Parse("missing per_leaf".into()))?;
            Ok(FoliatedSample {
                metric: SampleMetric::Cloud(cloud),
                ambient: rec.ambient.clone(),
                leaf_id: rec.leaf_id.clone(),
                members: members.clone(),
                leaf_coords: Some((coords, leaf_geometry)),
                leaf_dim: rec.p,
                manifold_dim: rec.dim,
                model: rec.model,
                scales: rec.scales.clone(),
                distance_scale: s,
                leaf_volume: Some((volume, per_leaf)),
            })
        };
        let out = match rec.model {
            Model::TorusFibration => {
                if rec.scales.len() != rec.dim || rec.p >= rec.dim {
                    return Err(Error::Parse("torus sample needs dim scales and p < dim".into()));
                }
                let leaf_periods = rec.scales[rec.dim - rec.p..].to_vec();
                let vol = leaf_periods.iter().product();
                analytic(
                    Geometry::FlatTorus { periods: rec.scales.clone() },
                    Geometry::FlatTorus { periods: leaf_periods },
                    vol,
                )?
            }
            Model::Hopf => analytic(Geometry::Sphere, Geometry::FlatTorus { periods: vec![2.0 * PI] }, 2.0 * PI)?,
            Model::Product => {
                let dist = rec.dist.clone().ok_or_else(|| Error::Parse("product sample needs dist".into()))?;
                let mut out = FoliatedSample::from_dense(
                    FiniteMetricSpace::validate(dist)?,
                    rec.leaf_id.clone(),
                    rec.p,
                    rec.dim,
                    rec.ambient.clone(),
                )?;
                out.distance_scale = s;
                out
            }
        };
        if out.leaf_dim >= out.manifold_dim {
            return Err(Error::Parse("leaf dimension must be below manifold dimension".into()));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("finite doubles serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: FoliatedSampleRecord = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_record(rec)
    }
}
