use ghcert_core::generators::{random_euclidean, random_graph_metric};
use ghcert_core::metric::{ball, diameter, hausdorff_distance, Restricted};
use ghcert_core::nets::{
    best_covering, best_packing, covering_number, covers, greedy_cover, greedy_net, greedy_packing, is_packing,
    packing_number, packing_upper_bound,
};
use ghcert_core::{Error, FiniteMetricSpace, Metric, SolveMode};
use proptest::prelude::*;

fn space(seed: u64, n: usize) -> FiniteMetricSpace {
    if seed.is_multiple_of(2) {
        random_euclidean(n, 1 + (seed as usize / 2) % 3, seed)
    } else {
        random_graph_metric(n, seed)
    }
}

/// Cycle graph `C_n` with unit edges.
fn cycle(n: usize) -> FiniteMetricSpace {
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = i.abs_diff(j);
                    d.min(n - d) as f64
                })
                .collect()
        })
        .collect();
    FiniteMetricSpace::validate(rows).unwrap()
}

fn subsets(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n)
        .filter(move |m| m.count_ones() as usize == k)
        .map(move |m| (0..n).filter(|i| m >> i & 1 == 1).collect())
}

fn brute_cover(m: &FiniteMetricSpace, eps: f64) -> usize {
    let n = m.len();
    (1..=n).find(|&k| subsets(n, k).any(|s| (0..n).all(|x| s.iter().any(|&c| m.dist(x, c) < eps)))).unwrap()
}

fn brute_pack(m: &FiniteMetricSpace, eps: f64) -> usize {
    let n = m.len();
    (1..=n)
        .rev()
        .find(|&k| subsets(n, k).any(|s| s.iter().all(|&a| s.iter().all(|&b| a == b || m.dist(a, b) >= 2.0 * eps))))
        .unwrap()
}

#[test]
fn validation_reports_each_violation() {
    let ok = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    assert!(FiniteMetricSpace::validate(ok).is_ok());
    type Case = (Vec<Vec<f64>>, fn(&Error) -> bool);
    let cases: Vec<Case> = vec![
        (vec![vec![0.0, 1.0]], |e| matches!(e, Error::NotSquare { .. })),
        (vec![vec![0.0, -1.0], vec![-1.0, 0.0]], |e| matches!(e, Error::BadEntry { .. })),
        (vec![vec![0.0, f64::NAN], vec![f64::NAN, 0.0]], |e| matches!(e, Error::BadEntry { .. })),
        (vec![vec![1.0, 1.0], vec![1.0, 0.0]], |e| matches!(e, Error::NonzeroDiagonal { .. })),
        (vec![vec![0.0, 1.0], vec![2.0, 0.0]], |e| matches!(e, Error::Asymmetry { .. })),
        (vec![vec![0.0, 0.0], vec![0.0, 0.0]], |e| matches!(e, Error::ZeroDistance { .. })),
        (vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]], |e| {
            matches!(e, Error::TriangleViolation { .. })
        }),
        (vec![], |e| matches!(e, Error::EmptySpace)),
    ];
    for (rows, want) in cases {
        let err = FiniteMetricSpace::validate(rows.clone()).unwrap_err();
        assert!(want(&err), "{rows:?}: {err}");
    }
}

#[test]
fn cycle_numbers_match_closed_form() {
    for n in [5usize, 6, 9, 12, 17] {
        let m = cycle(n);
        for eps in [0.5f64, 1.0, 1.5, 2.0, 2.5, 3.0] {
            // an open ball of radius ε holds 2⌈ε⌉ − 1 consecutive vertices
            let width = (2 * eps.ceil() as usize - 1).min(n);
            let cov = n.div_ceil(width);
            let gap = (2.0 * eps).ceil() as usize;
            let cap = if gap > n / 2 { 1 } else { n / gap };
            assert_eq!(covering_number(&m, eps, SolveMode::Exact).unwrap().count, cov, "Cov(C_{n}, {eps})");
            assert_eq!(packing_number(&m, eps, SolveMode::Exact).unwrap().count, cap, "Cap(C_{n}, {eps})");
        }
    }
}

#[test]
fn bad_radius_and_oversized_exact_requests_error() {
    let m = space(0, 8);
    assert!(matches!(greedy_net(&m, 0.0), Err(Error::BadRadius(_))));
    assert!(matches!(covering_number(&m, f64::INFINITY, SolveMode::Greedy), Err(Error::BadRadius(_))));
    let big = space(1, 50);
    assert!(matches!(covering_number(&big, 0.1, SolveMode::Exact), Err(Error::TooLarge { .. })));
    assert!(matches!(packing_number(&big, 0.1, SolveMode::Exact), Err(Error::TooLarge { .. })));
    assert!(matches!(hausdorff_distance(&m, &[], &[1]), Err(Error::EmptySubset)));
    assert!(matches!(hausdorff_distance(&m, &[0], &[99]), Err(Error::IndexOutOfRange { .. })));
}

#[test]
fn json_and_csv_round_trip() {
    let m = space(3, 9).with_labels((0..9).map(|i| format!("p{i}")).collect()).unwrap();
    let back = FiniteMetricSpace::from_json(&m.to_json()).unwrap();
    assert_eq!(back, m);
    let m = space(4, 9);
    assert_eq!(FiniteMetricSpace::from_csv(&m.to_csv()).unwrap(), m);
    assert!(FiniteMetricSpace::from_csv("0\n1,0,7\n").is_err());
    assert!(FiniteMetricSpace::from_json("{\"n\": 2, \"dist\": [[0, 1]]}").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generated_spaces_validate(seed in 0u64..10_000, n in 2usize..20) {
        let m = space(seed, n);
        prop_assert!(FiniteMetricSpace::validate(m.to_rows()).is_ok());
    }

    #[test]
    fn hausdorff_is_a_metric_on_subsets(seed in 0u64..10_000, n in 4usize..16, masks in prop::array::uniform3(1u32..u32::MAX)) {
        let m = space(seed, n);
        let set = |mask: u32| -> Vec<usize> {
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if s.is_empty() { vec![mask as usize % n] } else { s }
        };
        let (a, b, c) = (set(masks[0]), set(masks[1]), set(masks[2]));
        let ab = hausdorff_distance(&m, &a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff_distance(&m, &b, &a).unwrap());
        prop_assert_eq!(hausdorff_distance(&m, &a, &a).unwrap(), 0.0);
        let via = hausdorff_distance(&m, &a, &c).unwrap() + hausdorff_distance(&m, &c, &b).unwrap();
        prop_assert!(ab <= via * (1.0 + 1e-12));
    }

    #[test]
    fn exact_solvers_match_brute_force(seed in 0u64..10_000, n in 2usize..11, frac in 0.02f64..0.6) {
        let m = space(seed, n);
        let eps = diameter(&m) * frac;
        let cov = covering_number(&m, eps, SolveMode::Exact).unwrap();
        let cap = packing_number(&m, eps, SolveMode::Exact).unwrap();
        prop_assert_eq!(cov.count, brute_cover(&m, eps));
        prop_assert_eq!(cap.count, brute_pack(&m, eps));
        prop_assert!(covers(&m, &cov.centers.centers, eps));
        prop_assert!(is_packing(&m, &cap.centers, eps));
    }

    #[test]
    fn cap_cov_chain_and_greedy_sides(seed in 0u64..10_000, n in 2usize..22, frac in 0.02f64..0.5) {
        let m = space(seed, n);
        let eps = diameter(&m) * frac;
        let cap = packing_number(&m, eps, SolveMode::Exact).unwrap().count;
        let cov = covering_number(&m, eps, SolveMode::Exact).unwrap().count;
        let cov2 = covering_number(&m, 2.0 * eps, SolveMode::Exact).unwrap().count;
        prop_assert!(cov2 <= cap && cap <= cov);
        let gc = greedy_cover(&m, eps).unwrap();
        let gp = greedy_packing(&m, eps).unwrap();
        prop_assert!(covers(&m, &gc, eps) && gc.len() >= cov);
        prop_assert!(is_packing(&m, &gp, eps) && gp.len() <= cap);
        // a maximal ε-packing is a 2ε-cover
        prop_assert!(covers(&m, &gp, 2.0 * eps));
        prop_assert!(packing_upper_bound(&m, eps).unwrap() >= cap);
        let net = greedy_net(&m, eps).unwrap();
        prop_assert!(net.covers(&m));
    }

    #[test]
    fn numbers_are_scale_and_permutation_invariant(seed in 0u64..10_000, n in 2usize..14, frac in 0.05f64..0.5, s in 0.1f64..10.0, rot in 0usize..14) {
        let m = space(seed, n);
        let eps = diameter(&m) * frac;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(rot % n);
        let p = m.permuted(&perm);
        let sc = m.scaled(s);
        let cap = best_packing(&m, eps).unwrap().count;
        let cov = best_covering(&m, eps).unwrap().count;
        prop_assert_eq!(best_packing(&p, eps).unwrap().count, cap);
        prop_assert_eq!(best_covering(&p, eps).unwrap().count, cov);
        // scaling moves distances and radii together up to rounding, so
        // compare away from the ties
        let all: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m.dist(i, j) / eps).collect();
        prop_assume!(all.iter().all(|r| (r - 1.0).abs() > 1e-9 && (r - 2.0).abs() > 1e-9));
        prop_assert_eq!(best_packing(&sc, s * eps).unwrap().count, cap);
        prop_assert_eq!(best_covering(&sc, s * eps).unwrap().count, cov);
    }

    #[test]
    fn balls_are_open_and_restriction_agrees(seed in 0u64..10_000, n in 3usize..16, frac in 0.05f64..1.0) {
        let m = space(seed, n);
        let eta = diameter(&m) * frac;
        let b = ball(&m, 0, eta).unwrap();
        prop_assert!((0..n).all(|j| b.contains(&j) == (m.dist(0, j) < eta)));
        let idx: Vec<usize> = (0..n).step_by(2).collect();
        let r = Restricted::new(&m, idx.clone());
        prop_assert_eq!(r.len(), idx.len());
        for a in 0..idx.len() {
            for c in 0..idx.len() {
                prop_assert_eq!(r.dist(a, c), m.dist(idx[a], idx[c]));
            }
        }
    }
}
