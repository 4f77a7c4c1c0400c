//! ε-nets, covering numbers `Cov(ε, X)` and packing numbers `Cap(ε, X)`.
//!
//! Covers use open balls: a center set covers at radius ε when every point
//! is at distance `< ε` from some center. Packings are encoded by pairwise
//! separation: a center set packs at radius ε when all pairwise distances
//! are `≥ 2ε`. Every center set of a cover at ε contains at most one
//! packing point per ball, so `Cap ≤ Cov` holds for any finite space and
//! greedy answers are certified one-sided bounds.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{point_set_distance, Metric};
use crate::solver::{max_independent_set, min_set_cover, BitSet};

/// Largest instance the exact set-cover solver accepts.
pub const EXACT_COVER_LIMIT: usize = 24;
/// Largest instance the exact independent-set solver accepts.
pub const EXACT_PACK_LIMIT: usize = 40;

/// Centers whose open balls of `radius` cover the host space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub centers: Vec<usize>,
    pub radius: f64,
}

impl Net {
    pub fn covers<M: Metric + ?Sized>(&self, m: &M) -> bool {
        covers(m, &self.centers, self.radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMode {
    Exact,
    GreedyUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PackMode {
    Exact,
    GreedyLower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringResult {
    pub epsilon: f64,
    pub count: usize,
    pub centers: Net,
    pub mode: CoverMode,
    /// Branch-and-bound nodes visited; the completed search is the proof
    /// that no smaller cover exists.
    pub search_nodes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    pub epsilon: f64,
    pub count: usize,
    pub centers: Vec<usize>,
    pub mode: PackMode,
    pub search_nodes: Option<u64>,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::BadRadius(eps))
    }
}

/// Whether the open `radius`-balls around `centers` cover every point.
pub fn covers<M: Metric + ?Sized>(m: &M, centers: &[usize], radius: f64) -> bool {
    if centers.is_empty() {
        return m.is_empty();
    }
    (0..m.len()).all(|x| centers.contains(&x) || point_set_distance(m, x, centers) < radius)
}

/// Whether `centers` are pairwise at distance `≥ 2·eps`.
pub fn is_packing<M: Metric + ?Sized>(m: &M, centers: &[usize], eps: f64) -> bool {
    let sep = 2.0 * eps;
    centers.iter().enumerate().all(|(a, &i)| centers[a + 1..].iter().all(|&j| i != j && m.dist(i, j) >= sep))
}

/// `max_x d(x, centers)`: the covering radius of a center set, closed form.
pub fn covering_radius<M: Metric + ?Sized>(m: &M, centers: &[usize]) -> f64 {
    (0..m.len()).into_par_iter().map(|x| point_set_distance(m, x, centers)).reduce(|| 0.0, f64::max)
}

/// Farthest-point ordering: index 0 first, then repeatedly the point
/// farthest from the chosen set (lowest index on ties). Returns the first
/// `k` points together with the distance at which each was inserted.
pub fn farthest_point_order<M: Metric + ?Sized>(m: &M, k: usize) -> Vec<(usize, f64)> {
    let n = m.len();
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let mut out = vec![(0, f64::INFINITY)];
    let mut mind: Vec<f64> = (0..n).map(|j| m.dist(0, j)).collect();
    while out.len() < k.min(n) {
        let (j, d) = argmax_lowest(&mind);
        if d <= 0.0 {
            break;
        }
        out.push((j, d));
        for (x, md) in mind.iter_mut().enumerate() {
            let dx = m.dist(j, x);
            if dx < *md {
                *md = dx;
            }
        }
    }
    out
}

fn argmax_lowest(v: &[f64]) -> (usize, f64) {
    let mut best = (0, v[0]);
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

/// Farthest-point ε-net, starting from index 0.
pub fn greedy_net<M: Metric + ?Sized>(m: &M, eps: f64) -> Result<Net> {
    check_eps(eps)?;
    if m.is_empty() {
        return Err(Error::EmptySpace);
    }
    let n = m.len();
    let mut centers = vec![0];
    let mut mind: Vec<f64> = (0..n).map(|j| m.dist(0, j)).collect();
    loop {
        let (j, d) = argmax_lowest(&mind);
        if d < eps {
            break;
        }
        centers.push(j);
        for (x, md) in mind.iter_mut().enumerate() {
            let dx = m.dist(j, x);
            if dx < *md {
                *md = dx;
            }
        }
    }
    Ok(Net { centers, radius: eps })
}

fn ball_bitsets<M: Metric + ?Sized>(m: &M, eps: f64) -> Vec<BitSet> {
    let n = m.len();
    (0..n)
        .into_par_iter()
        .map(|c| {
            let mut b = BitSet::new(n);
            for x in 0..n {
                if x == c || m.dist(c, x) < eps {
                    b.insert(x);
                }
            }
            b
        })
        .collect()
}

/// Greedy set cover over the open ε-balls: always the ball covering the
/// most uncovered points, lowest center index on ties.
pub fn greedy_cover<M: Metric + ?Sized>(m: &M, eps: f64) -> Result<Vec<usize>> {
    check_eps(eps)?;
    let n = m.len();
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    let balls = ball_bitsets(m, eps);
    let mut uncovered = BitSet::full(n);
    let mut heap: BinaryHeap<(u32, Reverse<usize>)> =
        balls.iter().enumerate().map(|(c, b)| (b.intersection_count(&uncovered), Reverse(c))).collect();
    let mut centers = Vec::new();
    while !uncovered.is_empty() {
        let (stored, Reverse(c)) = heap.pop().expect("some ball covers every uncovered point");
        let fresh = balls[c].intersection_count(&uncovered);
        if fresh == stored {
            centers.push(c);
            uncovered.difference_with(&balls[c]);
        } else if fresh > 0 {
            heap.push((fresh, Reverse(c)));
        }
    }
    Ok(centers)
}

/// Index-order scan accepting every point at distance `≥ 2ε` from all
/// accepted points. The result is a maximal packing.
pub fn greedy_packing<M: Metric + ?Sized>(m: &M, eps: f64) -> Result<Vec<usize>> {
    check_eps(eps)?;
    if m.is_empty() {
        return Err(Error::EmptySpace);
    }
    let sep = 2.0 * eps;
    let mut centers: Vec<usize> = Vec::new();
    for x in 0..m.len() {
        if centers.iter().all(|&c| m.dist(c, x) >= sep) {
            centers.push(x);
        }
    }
    Ok(centers)
}

/// `Cov(ε, X)`: exact by branch and bound (`n ≤ 24`) or a greedy upper bound.
pub fn covering_number<M: Metric + ?Sized>(m: &M, eps: f64, mode: SolveMode) -> Result<CoveringResult> {
    check_eps(eps)?;
    let n = m.len();
    let greedy = greedy_cover(m, eps)?;
    match mode {
        SolveMode::Greedy => Ok(CoveringResult {
            epsilon: eps,
            count: greedy.len(),
            centers: Net { centers: greedy, radius: eps },
            mode: CoverMode::GreedyUpper,
            search_nodes: None,
        }),
        SolveMode::Exact => {
            if n > EXACT_COVER_LIMIT {
                return Err(Error::TooLarge { what: "exact cover point count", size: n, limit: EXACT_COVER_LIMIT });
            }
            let sets: Vec<u32> = (0..n)
                .map(|c| (0..n).filter(|&x| x == c || m.dist(c, x) < eps).fold(0u32, |acc, x| acc | 1 << x))
                .collect();
            let universe = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
            let (centers, nodes) = min_set_cover(&sets, universe, greedy);
            Ok(CoveringResult {
                epsilon: eps,
                count: centers.len(),
                centers: Net { centers, radius: eps },
                mode: CoverMode::Exact,
                search_nodes: Some(nodes),
            })
        }
    }
}

/// `Cap(ε, X)`: exact maximum independent set on the conflict graph
/// (edge iff distance `< 2ε`, `n ≤ 40`) or a greedy lower bound.
pub fn packing_number<M: Metric + ?Sized>(m: &M, eps: f64, mode: SolveMode) -> Result<PackingResult> {
    check_eps(eps)?;
    let n = m.len();
    let greedy = greedy_packing(m, eps)?;
    match mode {
        SolveMode::Greedy => Ok(PackingResult {
            epsilon: eps,
            count: greedy.len(),
            centers: greedy,
            mode: PackMode::GreedyLower,
            search_nodes: None,
        }),
        SolveMode::Exact => {
            if n > EXACT_PACK_LIMIT {
                return Err(Error::TooLarge { what: "exact packing point count", size: n, limit: EXACT_PACK_LIMIT });
            }
            let sep = 2.0 * eps;
            let adj: Vec<u64> = (0..n)
                .map(|i| (0..n).filter(|&j| j != i && m.dist(i, j) < sep).fold(0u64, |acc, j| acc | 1 << j))
                .collect();
            let initial = greedy.iter().fold(0u64, |acc, &c| acc | 1 << c);
            let (centers, nodes) = max_independent_set(&adj, initial);
            Ok(PackingResult {
                epsilon: eps,
                count: centers.len(),
                centers,
                mode: PackMode::Exact,
                search_nodes: Some(nodes),
            })
        }
    }
}

/// Exact when the instance is small enough, greedy upper bound otherwise.
pub fn best_covering<M: Metric + ?Sized>(m: &M, eps: f64) -> Result<CoveringResult> {
    let mode = if m.len() <= EXACT_COVER_LIMIT { SolveMode::Exact } else { SolveMode::Greedy };
    covering_number(m, eps, mode)
}

/// Exact when the instance is small enough, greedy lower bound otherwise.
pub fn best_packing<M: Metric + ?Sized>(m: &M, eps: f64) -> Result<PackingResult> {
    let mode = if m.len() <= EXACT_PACK_LIMIT { SolveMode::Exact } else { SolveMode::Greedy };
    packing_number(m, eps, mode)
}

/// Certified upper bound on `Cap(ε, X)`: exact packing when small, else
/// a greedy cover count (`Cap ≤ Cov ≤ CovUB`).
pub fn packing_upper_bound<M: Metric + ?Sized>(m: &M, eps: f64) -> Result<usize> {
    if m.len() <= EXACT_PACK_LIMIT {
        Ok(packing_number(m, eps, SolveMode::Exact)?.count)
    } else {
        Ok(greedy_cover(m, eps)?.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::line;

    #[test]
    fn greedy_net_examples() {
        let l3 = line(&[0.0, 1.0, 2.0]);
        assert_eq!(greedy_net(&l3, 1.5).unwrap().centers, vec![0, 2]);
        assert_eq!(greedy_net(&l3, 5.0).unwrap().centers, vec![0]);
        let mut all = greedy_net(&l3, 1e-9).unwrap().centers;
        all.sort();
        assert_eq!(all, vec![0, 1, 2]);
        assert!(greedy_net(&l3, 0.0).is_err());
    }

    #[test]
    fn covering_examples() {
        let one = line(&[0.0]);
        assert_eq!(covering_number(&one, 0.3, SolveMode::Exact).unwrap().count, 1);
        let l4 = line(&[0.0, 1.0, 2.0, 3.0]);
        let c = covering_number(&l4, 1.1, SolveMode::Exact).unwrap();
        assert_eq!(c.count, 2);
        assert!(c.centers.covers(&l4));
        assert_eq!(covering_number(&l4, 3.5, SolveMode::Exact).unwrap().count, 1);
        let g = covering_number(&l4, 1.1, SolveMode::Greedy).unwrap();
        assert!(g.count >= 2 && g.centers.covers(&l4));
        assert_eq!(g.mode, CoverMode::GreedyUpper);
    }

    #[test]
    fn packing_examples() {
        let l4 = line(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(packing_number(&l4, 0.5, SolveMode::Exact).unwrap().count, 4);
        let p = packing_number(&l4, 1.01, SolveMode::Exact).unwrap();
        assert_eq!(p.count, 2);
        assert!(is_packing(&l4, &p.centers, 1.01));
        assert_eq!(packing_number(&l4, 1.6, SolveMode::Exact).unwrap().count, 1);
    }

    #[test]
    fn exact_limits_enforced() {
        let big = crate::generators::random_euclidean(25, 2, 1);
        assert!(matches!(covering_number(&big, 0.1, SolveMode::Exact), Err(Error::TooLarge { .. })));
        let huge = crate::generators::random_euclidean(41, 2, 1);
        assert!(matches!(packing_number(&huge, 0.1, SolveMode::Exact), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn greedy_cover_prefers_lowest_index_on_ties() {
        // on a 4-cycle with eps just over 1 every ball covers three points
        let c = crate::generators::circle_equispaced(4, 4.0);
        assert_eq!(greedy_cover(&c, 1.01).unwrap(), vec![0, 1]);
    }

    #[test]
    fn maximal_packing_doubles_into_cover() {
        let s = crate::generators::random_euclidean(30, 2, 3);
        for eps in [0.05, 0.1, 0.2] {
            let p = greedy_packing(&s, eps).unwrap();
            assert!(covers(&s, &p, 2.0 * eps));
        }
    }
}
