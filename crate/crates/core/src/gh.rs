//! Bounds on the Gromov-Hausdorff distance between finite metric spaces.
//!
//! Upper bounds come from matched equal-size nets (value `3·max(r_X, r_Y,
//! distortion)`), lower bounds from a covering/packing gap (`Cov(ε, X) <
//! Cap(3ε, Y)` implies `d_GH > ε`) or from an exhaustive refutation of
//! low-distortion images of an ε-net. The exact oracle enumerates
//! correspondences and is only meant for tiny instances.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{open_net_radius, tuple_distortion, BoundKind, Evidence, GhBoundCertificate};
use crate::error::{Error, Result};
use crate::generators::rng;
use crate::metric::{diameter, eccentricity, Metric};
use crate::nets::{
    best_covering, best_packing, covering_number, farthest_point_order, greedy_net, SolveMode, EXACT_COVER_LIMIT,
};

/// Largest `|X|·|Y|` accepted by [`gh_oracle_exact`].
pub const ORACLE_CELL_LIMIT: usize = 16;
/// Largest cardinality accepted by [`gh_bijection_upper`].
pub const BIJECTION_LIMIT: usize = 7;
/// Exhaustive tuple search below this many ordered tuples.
pub const EXHAUSTIVE_TUPLE_LIMIT: u64 = 1_000_000;
/// Budget on `|Y|^k` for the net-distortion refutation.
pub const NET_DISTORTION_TUPLE_LIMIT: u64 = 10_000_000;
/// Largest net size the net-distortion refutation accepts.
pub const NET_DISTORTION_MAX_K: usize = 5;
/// Full-size nets are added to scan schedules up to this size.
pub const FULL_NET_CAP: usize = 256;

/// A relation between X and Y given by index pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub pairs: Vec<(usize, usize)>,
    pub distortion: f64,
}

impl Correspondence {
    pub fn new<X: Metric + ?Sized, Y: Metric + ?Sized>(x: &X, y: &Y, pairs: Vec<(usize, usize)>) -> Self {
        let distortion = relation_distortion(x, y, &pairs);
        Self { pairs, distortion }
    }

    /// Whether every point of both spaces appears in some pair.
    pub fn is_surjective<X: Metric + ?Sized, Y: Metric + ?Sized>(&self, x: &X, y: &Y) -> bool {
        (0..x.len()).all(|i| self.pairs.iter().any(|p| p.0 == i))
            && (0..y.len()).all(|j| self.pairs.iter().any(|p| p.1 == j))
    }
}

pub fn relation_distortion<X: Metric + ?Sized, Y: Metric + ?Sized>(x: &X, y: &Y, pairs: &[(usize, usize)]) -> f64 {
    let mut worst = 0.0f64;
    for (a, &(xi, yi)) in pairs.iter().enumerate() {
        for &(xj, yj) in &pairs[a + 1..] {
            worst = worst.max((x.dist(xi, xj) - y.dist(yi, yj)).abs());
        }
    }
    worst
}

/// Exact `d_GH = ½ · min_R dis(R)` over all correspondences `R ⊆ X × Y`.
///
/// Branch and bound over the `|X|·|Y|` cells in row-major order; a row is
/// closed only if its point is matched, and branches whose running
/// distortion reaches the incumbent are cut.
pub fn gh_oracle_exact<X: Metric + ?Sized, Y: Metric + ?Sized>(x: &X, y: &Y) -> Result<f64> {
    let (nx, ny) = (x.len(), y.len());
    if nx == 0 || ny == 0 {
        return Err(Error::EmptySpace);
    }
    if nx * ny > ORACLE_CELL_LIMIT {
        return Err(Error::TooLarge { what: "|X|·|Y|", size: nx * ny, limit: ORACLE_CELL_LIMIT });
    }
    let cells: Vec<(usize, usize)> = (0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).collect();
    let mut search = OracleSearch { x, y, cells: &cells, ny, best: f64::INFINITY, chosen: Vec::new() };
    search.rec(0, 0.0, 0u32);
    Ok(0.5 * search.best)
}

struct OracleSearch<'a, X: ?Sized, Y: ?Sized> {
    x: &'a X,
    y: &'a Y,
    cells: &'a [(usize, usize)],
    ny: usize,
    best: f64,
    chosen: Vec<(usize, usize)>,
}

impl<X: Metric + ?Sized, Y: Metric + ?Sized> OracleSearch<'_, X, Y> {
    fn rec(&mut self, idx: usize, dis: f64, y_cover: u32) {
        if dis >= self.best {
            return;
        }
        if idx == self.cells.len() {
            if y_cover == (1u32 << self.ny) - 1 {
                self.best = dis;
            }
            return;
        }
        let (xi, yi) = self.cells[idx];
        let row_end = yi + 1 == self.ny;
        let row_matched = self.chosen.last().is_some_and(|&(a, _)| a == xi);
        // include the cell
        let mut added = dis;
        for &(xa, ya) in &self.chosen {
            added = added.max((self.x.dist(xa, xi) - self.y.dist(ya, yi)).abs());
        }
        if added < self.best {
            self.chosen.push((xi, yi));
            self.rec(idx + 1, added, y_cover | 1 << yi);
            self.chosen.pop();
        }
        // exclude it, unless that leaves x_i unmatched
        if !(row_end && !row_matched) {
            self.rec(idx + 1, dis, y_cover);
        }
    }
}

/// Bijection-only search for equal cardinalities `≤ 7`.
///
/// Bijections are a subset of correspondences, so this is an UPPER bound
/// on `d_GH` only.
pub fn gh_bijection_upper<X: Metric + ?Sized, Y: Metric + ?Sized>(x: &X, y: &Y) -> Result<f64> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidArgument(format!("bijection needs equal sizes, got {} and {}", n, y.len())));
    }
    if n > BIJECTION_LIMIT {
        return Err(Error::TooLarge { what: "bijection cardinality", size: n, limit: BIJECTION_LIMIT });
    }
    let xs: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    for_each_tuple(y.len(), n, false, &mut |t| {
        best = best.min(tuple_distortion(x, &xs, y, t));
        true
    });
    Ok(0.5 * best)
}

/// Calls `f` on every length-`k` tuple over `0..n` (distinct entries unless
/// `repeat`), in lexicographic order, until `f` returns false.
fn for_each_tuple(n: usize, k: usize, repeat: bool, f: &mut dyn FnMut(&[usize]) -> bool) {
    fn rec(
        n: usize,
        k: usize,
        repeat: bool,
        cur: &mut Vec<usize>,
        used: &mut [bool],
        f: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for v in 0..n {
            if !repeat && used[v] {
                continue;
            }
            cur.push(v);
            used[v] = true;
            let go = rec(n, k, repeat, cur, used, f);
            used[v] = false;
            cur.pop();
            if !go {
                return false;
            }
        }
        true
    }
    let mut used = vec![false; n];
    rec(n, k, repeat, &mut Vec::with_capacity(k), &mut used, f);
}

fn falling_factorial(n: usize, k: usize) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u64);
    }
    acc
}

/// Searches Y for a tuple (repetition allowed) whose pairwise distances
/// match those of `xs` within `tol`. Depth-first with pruning.
pub fn find_matching_tuple<X: Metric + ?Sized, Y: Metric + ?Sized>(
    x: &X,
    xs: &[usize],
    y: &Y,
    tol: f64,
) -> Option<Vec<usize>> {
    fn rec<X: Metric + ?Sized, Y: Metric + ?Sized>(x: &X, xs: &[usize], y: &Y, tol: f64, cur: &mut Vec<usize>) -> bool {
        let pos = cur.len();
        if pos == xs.len() {
            return true;
        }
        for v in 0..y.len() {
            let ok = (0..pos).all(|i| (x.dist(xs[i], xs[pos]) - y.dist(cur[i], v)).abs() <= tol);
            if ok {
                cur.push(v);
                if rec(x, xs, y, tol, cur) {
                    return true;
                }
                cur.pop();
            }
        }
        false
    }
    let mut cur = Vec::with_capacity(xs.len());
    if rec(x, xs, y, tol, &mut cur) {
        Some(cur)
    } else {
        None
    }
}

/// Search effort for [`upper_bound_via_nets`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Maximum number of full tuple evaluations in local search.
    pub evaluations: u64,
    pub restarts: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { evaluations: 20_000, restarts: 8 }
    }
}

struct TupleObjective<'a, X: ?Sized, Y: ?Sized> {
    x: &'a X,
    y: &'a Y,
    x_net: &'a [usize],
    evaluations: u64,
}

impl<X: Metric + ?Sized, Y: Metric + ?Sized> TupleObjective<'_, X, Y> {
    fn score(&mut self, t: &[usize]) -> (f64, f64, f64) {
        self.evaluations += 1;
        let d = tuple_distortion(self.x, self.x_net, self.y, t);
        let r = open_net_radius(self.y, t);
        (d.max(r), r, d)
    }

    /// Sequential construction: each next entry minimizes the distortion
    /// against the entries already placed (lowest index on ties).
    fn grow(&self, first: usize) -> Vec<usize> {
        let k = self.x_net.len();
        let mut t = vec![first];
        let mut used = vec![false; self.y.len()];
        used[first] = true;
        while t.len() < k {
            let pos = t.len();
            let mut best = (f64::INFINITY, usize::MAX);
            for v in (0..self.y.len()).filter(|&v| !used[v]) {
                let mut d = 0.0f64;
                for i in 0..pos {
                    d = d.max((self.x.dist(self.x_net[i], self.x_net[pos]) - self.y.dist(t[i], v)).abs());
                    if d >= best.0 {
                        break;
                    }
                }
                if d < best.0 {
                    best = (d, v);
                }
            }
            used[best.1] = true;
            t.push(best.1);
        }
        t
    }
}

/// Upper bound from matched `k`-point nets.
///
/// The X side is the farthest-point `k`-net; the Y side is the ordered
/// `k`-tuple minimizing `max(r_Y, distortion)`, found exhaustively when
/// there are at most 10^6 ordered tuples and by seeded restart/swap local
/// search otherwise. Any tuple yields a valid certificate.
pub fn upper_bound_via_nets<X: Metric + ?Sized, Y: Metric + ?Sized>(
    x: &X,
    y: &Y,
    k: usize,
    budget: SearchBudget,
    seed: u64,
) -> Result<GhBoundCertificate> {
    if k == 0 || k > x.len().min(y.len()) {
        return Err(Error::InvalidArgument(format!("net size {k} outside 1..={}", x.len().min(y.len()))));
    }
    let x_net: Vec<usize> = farthest_point_order(x, k).into_iter().map(|(i, _)| i).collect();
    let r_x = open_net_radius(x, &x_net);
    let mut obj = TupleObjective { x, y, x_net: &x_net, evaluations: 0 };

    let mut best_t: Vec<usize>;
    let mut best_s: (f64, f64, f64);
    if falling_factorial(y.len(), k) <= EXHAUSTIVE_TUPLE_LIMIT {
        best_t = Vec::new();
        best_s = (f64::INFINITY, 0.0, 0.0);
        for_each_tuple(y.len(), k, false, &mut |t| {
            let d = tuple_distortion(x, &x_net, y, t);
            if d < best_s.0 {
                let r = open_net_radius(y, t);
                let s = d.max(r);
                if s < best_s.0 {
                    best_s = (s, r, d);
                    best_t = t.to_vec();
                }
            }
            true
        });
    } else {
        let mut r = rng(seed);
        let ecc_x = eccentricity(x, x_net[0]);
        let mut starts: Vec<usize> = (0..y.len()).collect();
        starts.sort_by(|&a, &b| {
            let da = (eccentricity(y, a) - ecc_x).abs();
            let db = (eccentricity(y, b) - ecc_x).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        });
        let first = starts[0];
        starts[1..].shuffle(&mut r);
        best_t = obj.grow(first);
        best_s = obj.score(&best_t);
        for restart in 0..budget.restarts.max(1) {
            if obj.evaluations >= budget.evaluations {
                break;
            }
            let mut t = if restart == 0 { best_t.clone() } else { obj.grow(starts[restart % starts.len()]) };
            let mut s = obj.score(&t);
            // first-improvement swaps: replace one entry by an unused point
            let mut improved = true;
            while improved && obj.evaluations < budget.evaluations {
                improved = false;
                'sweep: for pos in 0..k {
                    let offset = r.random_range(0..y.len());
                    for step in 0..y.len() {
                        let v = (offset + step) % y.len();
                        if t.contains(&v) {
                            continue;
                        }
                        let old = t[pos];
                        t[pos] = v;
                        let cand = obj.score(&t);
                        if cand.0 < s.0 {
                            s = cand;
                            improved = true;
                            break 'sweep;
                        }
                        t[pos] = old;
                        if obj.evaluations >= budget.evaluations {
                            break 'sweep;
                        }
                    }
                }
            }
            if s.0 < best_s.0 {
                best_s = s;
                best_t = t;
            }
        }
    }

    let (_, r_y, distortion) = best_s;
    let value = 3.0 * r_x.max(r_y).max(distortion);
    Ok(GhBoundCertificate {
        kind: BoundKind::Upper,
        value,
        evidence: Evidence::MatchedNets { x_net, y_net: best_t, r_x, r_y, distortion },
    })
}

/// Fires `d_GH(X, Y) > ε` when a cover of X at ε is smaller than a
/// packing of Y at 3ε. Exact solvers are used where the instance is small
/// enough; otherwise greedy cover (upper bound) and greedy packing (lower
/// bound). Either way the gap is certified.
pub fn lower_bound_capcov<X: Metric + ?Sized, Y: Metric + ?Sized>(
    x: &X,
    y: &Y,
    eps: f64,
) -> Result<Option<GhBoundCertificate>> {
    let cov = best_covering(x, eps)?;
    let cap = best_packing(y, 3.0 * eps)?;
    Ok(capcov_certificate(eps, cov.centers.centers, cap.centers))
}

/// Same as [`lower_bound_capcov`] but with greedy bounds only.
pub fn lower_bound_capcov_greedy<X: Metric + ?Sized, Y: Metric + ?Sized>(
    x: &X,
    y: &Y,
    eps: f64,
) -> Result<Option<GhBoundCertificate>> {
    let cover = crate::nets::greedy_cover(x, eps)?;
    let pack = crate::nets::greedy_packing(y, 3.0 * eps)?;
    Ok(capcov_certificate(eps, cover, pack))
}

pub(crate) fn capcov_certificate(eps: f64, cover_x: Vec<usize>, packing_y: Vec<usize>) -> Option<GhBoundCertificate> {
    if cover_x.len() < packing_y.len() {
        Some(GhBoundCertificate {
            kind: BoundKind::Lower,
            value: eps,
            evidence: Evidence::CapCov {
                epsilon: eps,
                cov_upper: cover_x.len(),
                cap_lower: packing_y.len(),
                cover_x,
                packing_y,
            },
        })
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum NetDistortionOutcome {
    Certified {
        certificate: GhBoundCertificate,
    },
    /// A tuple of Y within distortion 2ε exists, so no bound follows.
    NotFired {
        x_net: Vec<usize>,
        witness: Vec<usize>,
    },
    Inconclusive {
        reason: String,
    },
}

/// Exhaustive refutation: if `d_GH ≤ ε`, every ε-net `x_1..x_k` of X has
/// images `y_1..y_k` in Y with `|d_X(x_i,x_j) − d_Y(y_i,y_j)| ≤ 2ε`.
/// When no k-tuple of Y (repetition allowed) achieves that, `d_GH > ε`.
pub fn lower_bound_net_distortion<X: Metric + ?Sized, Y: Metric + ?Sized>(
    x: &X,
    y: &Y,
    eps: f64,
    k_max: usize,
) -> Result<NetDistortionOutcome> {
    if k_max > NET_DISTORTION_MAX_K {
        return Err(Error::InvalidArgument(format!("k_max {k_max} exceeds {NET_DISTORTION_MAX_K}")));
    }
    let net = if x.len() <= EXACT_COVER_LIMIT {
        covering_number(x, eps, SolveMode::Exact)?.centers.centers
    } else {
        greedy_net(x, eps)?.centers
    };
    let k = net.len();
    if k > k_max {
        return Ok(NetDistortionOutcome::Inconclusive { reason: format!("net size {k} exceeds k_max {k_max}") });
    }
    if y.len() < k {
        return Ok(NetDistortionOutcome::Inconclusive { reason: format!("|Y| = {} < k = {k}", y.len()) });
    }
    let tuples = (y.len() as u64).saturating_pow(k as u32);
    if tuples > NET_DISTORTION_TUPLE_LIMIT {
        return Ok(NetDistortionOutcome::Inconclusive {
            reason: format!("{tuples} tuples exceed the enumeration budget"),
        });
    }
    Ok(match find_matching_tuple(x, &net, y, 2.0 * eps) {
        Some(witness) => NetDistortionOutcome::NotFired { x_net: net, witness },
        None => NetDistortionOutcome::Certified {
            certificate: GhBoundCertificate {
                kind: BoundKind::Lower,
                value: eps,
                evidence: Evidence::NetDistortion { epsilon: eps, x_net: net, tuples_checked: tuples },
            },
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub epsilon: f64,
    pub cov_upper: usize,
    pub cap_lower: usize,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhScan {
    pub lower: Option<GhBoundCertificate>,
    pub upper: Option<GhBoundCertificate>,
    pub rows: Vec<ScanRow>,
    pub uppers: Vec<GhBoundCertificate>,
    pub diameters: (f64, f64),
}

/// Runs the cover/pack gap over `grid` and matched nets over `net_sizes`
/// (plus the full size `min(|X|,|Y|)` when at most 256), keeping the
/// largest firing ε and the smallest upper value.
pub fn gh_scan<X: Metric + ?Sized, Y: Metric + ?Sized>(
    x: &X,
    y: &Y,
    grid: &[f64],
    net_sizes: &[usize],
    budget: SearchBudget,
    seed: u64,
) -> Result<GhScan> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty ε grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || !(grid[0] > 0.0) {
        return Err(Error::InvalidArgument("ε grid must be positive and increasing".into()));
    }
    let lowers: Vec<(ScanRow, Option<GhBoundCertificate>)> = grid
        .par_iter()
        .map(|&eps| {
            let cov = best_covering(x, eps)?;
            let cap = best_packing(y, 3.0 * eps)?;
            let row =
                ScanRow { epsilon: eps, cov_upper: cov.count, cap_lower: cap.count, fired: cov.count < cap.count };
            Ok((row, capcov_certificate(eps, cov.centers.centers, cap.centers)))
        })
        .collect::<Result<_>>()?;
    let full = x.len().min(y.len());
    let mut sizes: Vec<usize> = net_sizes.iter().copied().filter(|&k| k >= 1 && k <= full).collect();
    if full <= FULL_NET_CAP {
        sizes.push(full);
    }
    sizes.sort_unstable();
    sizes.dedup();
    let uppers: Vec<GhBoundCertificate> =
        sizes.par_iter().map(|&k| upper_bound_via_nets(x, y, k, budget, seed)).collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(lowers.len());
    let mut lower: Option<GhBoundCertificate> = None;
    for (row, cert) in lowers {
        rows.push(row);
        if let Some(c) = cert {
            if lower.as_ref().is_none_or(|l| c.value > l.value) {
                lower = Some(c);
            }
        }
    }
    let upper = uppers.iter().min_by(|a, b| a.value.total_cmp(&b.value)).cloned();
    if let (Some(l), Some(u)) = (&lower, &upper) {
        if !(l.value < u.value) {
            return Err(Error::Inconsistent(format!("lower bound {} ≥ upper bound {}", l.value, u.value)));
        }
    }
    Ok(GhScan { lower, upper, rows, uppers, diameters: (diameter(x), diameter(y)) })
}
