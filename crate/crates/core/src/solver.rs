//! Exact branch-and-bound solvers over bitmask instances.

/// Minimum set cover of `universe` by `sets`, seeded with a known cover.
///
/// Branches on the uncovered element contained in the fewest sets; prunes
/// with `|chosen| + ceil(|uncovered| / max gain)`. Returns the chosen set
/// indices (sorted) and the number of search nodes visited.
pub(crate) fn min_set_cover(sets: &[u32], universe: u32, initial: Vec<usize>) -> (Vec<usize>, u64) {
    let n_elems = 32 - universe.leading_zeros() as usize;
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); n_elems];
    for (s, &mask) in sets.iter().enumerate() {
        for (e, list) in containing.iter_mut().enumerate() {
            if mask >> e & 1 == 1 {
                list.push(s);
            }
        }
    }
    let mut search = CoverSearch { sets, containing, best: initial, nodes: 0 };
    let mut chosen = Vec::new();
    search.rec(universe, &mut chosen);
    let mut best = search.best;
    best.sort_unstable();
    (best, search.nodes)
}

struct CoverSearch<'a> {
    sets: &'a [u32],
    containing: Vec<Vec<usize>>,
    best: Vec<usize>,
    nodes: u64,
}

impl CoverSearch<'_> {
    fn rec(&mut self, uncovered: u32, chosen: &mut Vec<usize>) {
        self.nodes += 1;
        if uncovered == 0 {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return;
        }
        let max_gain = self.sets.iter().map(|s| (s & uncovered).count_ones()).max().unwrap_or(0);
        if max_gain == 0 {
            return;
        }
        let lb = chosen.len() + uncovered.count_ones().div_ceil(max_gain) as usize;
        if lb >= self.best.len() {
            return;
        }
        let mut pick = None;
        let mut pick_count = usize::MAX;
        let mut rest = uncovered;
        while rest != 0 {
            let e = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let c = self.containing[e].len();
            if c < pick_count {
                pick_count = c;
                pick = Some(e);
            }
        }
        let e = pick.expect("uncovered is nonempty");
        let mut cands: Vec<(u32, usize)> =
            self.containing[e].iter().map(|&s| ((self.sets[s] & uncovered).count_ones(), s)).collect();
        cands.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, s) in cands {
            chosen.push(s);
            self.rec(uncovered & !self.sets[s], chosen);
            chosen.pop();
        }
    }
}

/// Maximum independent set of a graph on at most 64 vertices.
///
/// `adj[v]` is the neighbour mask of `v` (no self loops). Seeded with a
/// known independent set; bound is a greedy clique partition of the
/// candidate set.
pub(crate) fn max_independent_set(adj: &[u64], initial: u64) -> (Vec<usize>, u64) {
    let n = adj.len();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut search = MisSearch { adj, best: initial, nodes: 0 };
    search.rec(all, 0);
    let best = search.best;
    ((0..n).filter(|&v| best >> v & 1 == 1).collect(), search.nodes)
}

struct MisSearch<'a> {
    adj: &'a [u64],
    best: u64,
    nodes: u64,
}

impl MisSearch<'_> {
    fn clique_cover_bound(&self, cand: u64) -> u32 {
        let mut remaining = cand;
        let mut count = 0;
        while remaining != 0 {
            let v = remaining.trailing_zeros() as usize;
            let mut clique = 1u64 << v;
            let mut possible = remaining & self.adj[v];
            while possible != 0 {
                let u = possible.trailing_zeros() as usize;
                clique |= 1u64 << u;
                possible &= self.adj[u] & !(1u64 << u);
            }
            remaining &= !clique;
            count += 1;
        }
        count
    }

    fn rec(&mut self, cand: u64, cur: u64) {
        self.nodes += 1;
        if cand == 0 {
            if cur.count_ones() > self.best.count_ones() {
                self.best = cur;
            }
            return;
        }
        if cur.count_ones() + self.clique_cover_bound(cand) <= self.best.count_ones() {
            return;
        }
        let mut pick = 0usize;
        let mut pick_deg = 0u32;
        let mut rest = cand;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let deg = (self.adj[v] & cand).count_ones();
            if deg > pick_deg {
                pick_deg = deg;
                pick = v;
            }
        }
        if pick_deg == 0 {
            let cur = cur | cand;
            if cur.count_ones() > self.best.count_ones() {
                self.best = cur;
            }
            return;
        }
        let bit = 1u64 << pick;
        self.rec(cand & !self.adj[pick] & !bit, cur | bit);
        self.rec(cand & !bit, cur);
    }
}

/// Fixed-size bitset used by the greedy cover.
#[derive(Clone, Debug)]
pub(crate) struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub(crate) fn new(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)] }
    }

    pub(crate) fn full(len: usize) -> Self {
        let mut s = Self::new(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    #[inline]
    pub(crate) fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub(crate) fn intersection_count(&self, other: &BitSet) -> u32 {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum()
    }

    pub(crate) fn difference_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }
}
