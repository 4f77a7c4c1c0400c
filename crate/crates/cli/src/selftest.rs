//! Small invariant corpus run by `ghcert selftest`.

use anyhow::{bail, Result};
use ghcert_core::bishop::{bishop_fit, BishopFitParams, EmpiricalMeasure};
use ghcert_core::foliation::{leaf_space, sample_hopf, sample_torus_fibration, TorusParams};
use ghcert_core::generators::{circle_equispaced, random_euclidean, random_graph_metric};
use ghcert_core::gh::{gh_oracle_exact, lower_bound_capcov, upper_bound_via_nets, SearchBudget};
use ghcert_core::metric::{diameter, hausdorff_distance};
use ghcert_core::nets::{covering_number, covers, greedy_packing, packing_number};
use ghcert_core::{FiniteMetricSpace, FoliatedSample, LeafSpaceMode, Metric, SolveMode};
use serde::Serialize;

use crate::commands::Failed;
use crate::io::{emit_report, envelope};
use crate::SelftestArgs;

#[derive(Serialize)]
struct Check {
    name: &'static str,
    cases: usize,
    failures: usize,
}

fn check(name: &'static str, cases: usize, mut case: impl FnMut(u64) -> Result<bool>) -> Result<Check> {
    let mut failures = 0;
    for i in 0..cases {
        if !case(i as u64)? {
            failures += 1;
        }
    }
    Ok(Check { name, cases, failures })
}

fn random_space(seed: u64, n: usize) -> FiniteMetricSpace {
    if seed.is_multiple_of(2) {
        random_euclidean(n, 2, seed)
    } else {
        random_graph_metric(n, seed)
    }
}

pub fn run(a: SelftestArgs) -> Result<()> {
    let base = a.seed.wrapping_mul(1_000);
    let checks = vec![
        check("triangle-violation-rejected", 1, |_| {
            Ok(FiniteMetricSpace::validate(vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]])
                .is_err())
        })?,
        check("hausdorff-symmetry-triangle", 20, |i| {
            let m = random_space(base + i, 12);
            let (a, b, c) = (vec![0, 1, 2], vec![3, 4, 5, 6], vec![7, 8, 9, 10, 11]);
            let ab = hausdorff_distance(&m, &a, &b)?;
            let ba = hausdorff_distance(&m, &b, &a)?;
            let ac = hausdorff_distance(&m, &a, &c)?;
            let cb = hausdorff_distance(&m, &c, &b)?;
            Ok(ab == ba && ab <= ac + cb + 1e-12)
        })?,
        check("cap-cov-chain", 20, |i| {
            let m = random_space(base + i, 10);
            let eps = diameter(&m) * (0.05 + 0.1 * (i % 4) as f64);
            let cap = packing_number(&m, eps, SolveMode::Exact)?.count;
            let cov = covering_number(&m, eps, SolveMode::Exact)?.count;
            let cov2 = covering_number(&m, 2.0 * eps, SolveMode::Exact)?.count;
            let pack = greedy_packing(&m, eps)?;
            Ok(cap <= cov && cov2 <= cap && covers(&m, &pack, 2.0 * eps))
        })?,
        check("gh-sandwich-vs-oracle", 30, |i| {
            let x = random_space(base + 2 * i, 2 + (i % 3) as usize);
            let y = random_space(base + 2 * i + 1, 2 + ((i / 3) % 3) as usize);
            let exact = gh_oracle_exact(&x, &y)?;
            let k = x.len().min(y.len());
            let up = upper_bound_via_nets(&x, &y, k, SearchBudget::default(), i)?;
            let mut ok = up.value >= exact && up.replay(&x, &y).is_ok();
            for j in 1..=8 {
                let eps = exact * j as f64 / 4.0 + 1e-9;
                if let Some(c) = lower_bound_capcov(&x, &y, eps)? {
                    ok &= c.value < exact && c.replay(&x, &y).is_ok();
                }
            }
            Ok(ok)
        })?,
        check("isometric-pair", 10, |i| {
            let x = random_space(base + i, 5);
            let up = upper_bound_via_nets(&x, &x, 5, SearchBudget::default(), i)?;
            let fired = (1..=10).any(|j| matches!(lower_bound_capcov(&x, &x, 0.1 * j as f64), Ok(Some(_))));
            Ok(up.value <= 1e-9 && !fired)
        })?,
        check("sample-round-trip", 2, |i| {
            let t = sample_torus_fibration(&TorusParams {
                n: 2,
                p: 1,
                leaves: 4,
                per_leaf: 8,
                scales: vec![1.0, 1.0],
                seed: base + i,
            })?;
            let h = sample_hopf(6, 6, base + i)?;
            let ok = [t, h].iter().all(|s| {
                FoliatedSample::from_json(&s.to_json()).is_ok_and(|back| &back == s && back.check_invariants().is_ok())
            });
            Ok(ok)
        })?,
        check("leaf-space-is-metric", 2, |i| {
            let t = sample_torus_fibration(&TorusParams {
                n: 2,
                p: 1,
                leaves: 9,
                per_leaf: 10,
                scales: vec![1.0, 1.0],
                seed: base + i,
            })?;
            Ok(leaf_space(&t, LeafSpaceMode::ChainInfimum).is_ok()
                && leaf_space(&t, LeafSpaceMode::LeafwiseHausdorff).is_ok())
        })?,
        check("circle-dimension", 1, |_| {
            let c = circle_equispaced(400, std::f64::consts::TAU);
            let fit = bishop_fit(&c, &EmpiricalMeasure::uniform(400), BishopFitParams::for_space(&c, base))?;
            Ok((0.85..=1.15).contains(&fit.p_hat))
        })?,
    ];
    let passed = checks.iter().all(|c| c.failures == 0);
    let result = serde_json::json!({ "passed": passed, "checks": checks });
    emit_report(a.out.as_deref(), &envelope("selftest", &a, &result)?)?;
    if !passed {
        bail!(Failed("selftest failures".into()));
    }
    Ok(())
}
