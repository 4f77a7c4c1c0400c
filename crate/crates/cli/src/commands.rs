use std::fmt;

use anyhow::{bail, Result};
use ghcert_core::bishop::{bishop_fit, cap_bounds_check, geometric_grid, BishopFitParams, EmpiricalMeasure};
use ghcert_core::foliation::{
    self, check_broader, check_class_conditions, leaf_space, metric_comparability, sample_torus_fibration, TorusParams,
};
use ghcert_core::gh::{gh_scan, SearchBudget};
use ghcert_core::metric::diameter;
use ghcert_core::nets::{best_covering, best_packing, covering_number, greedy_net, packing_number};
use ghcert_core::separation::{separation_certificate, separation_scan, SeparationParams};
use ghcert_core::{GhBoundCertificate, LeafSpaceMode, Metric, SolveMode};
use serde_json::json;

use crate::io::{self, canonical, emit, emit_report, envelope, load_sample, load_space, parse_grid, parse_list, Space};
use crate::{
    BishopArgs, BroaderArgs, ClasscheckArgs, CompareArgs, EpsArgs, GhArgs, HopfArgs, LeafspaceArgs, ModeChoice,
    SeparateArgs, SolveArgs, SolveChoice, TorusArgs, ValidateArgs,
};

/// A check that ran to completion and did not pass.
#[derive(Debug)]
pub struct Failed(pub String);

impl fmt::Display for Failed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn replay_status<X: Metric + ?Sized, Y: Metric + ?Sized>(cert: &GhBoundCertificate, x: &X, y: &Y) -> Result<()> {
    cert.replay(x, y).map_err(|e| Failed(format!("certificate replay failed: {e}")).into())
}

pub fn validate(a: ValidateArgs) -> Result<()> {
    let space = load_space(&a.input)?;
    let mut result =
        json!({ "kind": space.kind(), "points": space.len(), "valid": true, "diameter": diameter(&space) });
    if let Space::Foliated(f) = &space {
        f.check_invariants()?;
        result["leaves"] = json!(f.num_leaves());
        result["p"] = json!(f.leaf_dim());
        result["dim"] = json!(f.manifold_dim());
        result["model"] = json!(f.model());
    }
    emit_report(a.out.as_deref(), &envelope("validate", &a, &result)?)
}

pub fn sample_torus(a: TorusArgs) -> Result<()> {
    let scales = parse_list::<f64>(&a.scale)?;
    let sample = sample_torus_fibration(&TorusParams {
        n: a.n,
        p: a.p,
        leaves: a.leaves,
        per_leaf: a.per_leaf,
        scales,
        seed: a.seed,
    })?;
    emit(a.out.as_deref(), &canonical(&sample.to_record())?)
}

pub fn sample_hopf(a: HopfArgs) -> Result<()> {
    let sample = foliation::sample_hopf(a.fibers, a.per_fiber, a.seed)?;
    emit(a.out.as_deref(), &canonical(&sample.to_record())?)
}

pub fn net(a: EpsArgs) -> Result<()> {
    let space = load_space(&a.input)?;
    let net = greedy_net(&space, a.eps)?;
    let result = json!({ "count": net.centers.len(), "net": net });
    emit_report(a.out.as_deref(), &envelope("net", &a, &result)?)
}

pub fn pack(a: SolveArgs) -> Result<()> {
    let space = load_space(&a.input)?;
    let result = match a.mode {
        SolveChoice::Auto => best_packing(&space, a.eps)?,
        SolveChoice::Exact => packing_number(&space, a.eps, SolveMode::Exact)?,
        SolveChoice::Greedy => packing_number(&space, a.eps, SolveMode::Greedy)?,
    };
    emit_report(a.out.as_deref(), &envelope("pack", &a, &result)?)
}

pub fn cover(a: SolveArgs) -> Result<()> {
    let space = load_space(&a.input)?;
    let result = match a.mode {
        SolveChoice::Auto => best_covering(&space, a.eps)?,
        SolveChoice::Exact => covering_number(&space, a.eps, SolveMode::Exact)?,
        SolveChoice::Greedy => covering_number(&space, a.eps, SolveMode::Greedy)?,
    };
    emit_report(a.out.as_deref(), &envelope("cover", &a, &result)?)
}

pub fn gh(a: GhArgs) -> Result<()> {
    let x = load_space(&a.x)?;
    let y = load_space(&a.y)?;
    let grid = match &a.eps_grid {
        Some(g) => parse_grid(g)?,
        None => {
            let d = diameter(&x).max(diameter(&y));
            if d > 0.0 {
                geometric_grid(d * 1e-3, d, 24)
            } else {
                vec![1.0]
            }
        }
    };
    let sizes = parse_list::<usize>(&a.net_sizes)?;
    let budget = SearchBudget { evaluations: a.budget, restarts: a.restarts };
    let scan = gh_scan(&x, &y, &grid, &sizes, budget, a.seed)?;
    for cert in scan.lower.iter().chain(&scan.uppers) {
        replay_status(cert, &x, &y)?;
    }
    if let Some(path) = &a.csv {
        let mut csv = String::from("epsilon,cov,cap\n");
        for row in &scan.rows {
            csv.push_str(&format!("{:?},{},{}\n", row.epsilon, row.cov_upper, row.cap_lower));
        }
        emit(Some(path), &csv)?;
    }
    let result = json!({
        "eps_grid": grid,
        "lower": scan.lower.as_ref().map(|c| c.value),
        "upper": scan.upper.as_ref().map(|c| c.value),
        "scan": scan,
        "replayed": true,
    });
    emit_report(a.out.as_deref(), &envelope("gh", &a, &result)?)
}

pub fn bishop(a: BishopArgs) -> Result<()> {
    let space = load_space(&a.input)?;
    let measure = EmpiricalMeasure::uniform(space.len());
    let mut params = BishopFitParams::for_space(&space, a.seed);
    params.eta_min = a.eta_min.unwrap_or(params.eta_min);
    params.eta_max = a.eta_max.unwrap_or(params.eta_max);
    params.steps = a.steps;
    params.centers = a.centers;
    let fit = bishop_fit(&space, &measure, params)?;
    if !fit.replay(&space, &measure)? {
        bail!(Failed("Bishop fit does not replay".into()));
    }
    let cap_check = match &a.r_grid {
        Some(g) => Some(cap_bounds_check(&space, &fit, &measure, &parse_grid(g)?)?),
        None => None,
    };
    if let Some(path) = &a.csv {
        let mut csv = String::from("center,eta,mu\n");
        for (c, row) in fit.profile.centers.iter().zip(&fit.profile.masses) {
            for (eta, mu) in fit.profile.etas.iter().zip(row) {
                csv.push_str(&format!("{c},{eta:?},{mu:?}\n"));
            }
        }
        emit(Some(path), &csv)?;
    }
    let result = json!({
        "params": params,
        "fit": fit,
        "replayed": true,
        "cap_check_passed": cap_check.as_ref().map(|c| c.passed()),
        "cap_check": cap_check,
    });
    emit_report(a.out.as_deref(), &envelope("bishop", &a, &result)?)
}

pub fn leafspace(a: LeafspaceArgs) -> Result<()> {
    let sample = load_sample(&a.input)?;
    let mode = match a.mode {
        ModeChoice::Chain => LeafSpaceMode::ChainInfimum,
        ModeChoice::Hausdorff => LeafSpaceMode::LeafwiseHausdorff,
    };
    let ls = leaf_space(&sample, mode)?;
    if let Some(path) = &a.space_out {
        emit(Some(path), &canonical(&ls.space.to_record())?)?;
    }
    let result = json!({ "mode": ls.mode, "leaf_sizes": ls.leaf_sizes, "space": ls.space.to_record() });
    emit_report(a.out.as_deref(), &envelope("leafspace", &a, &result)?)
}

pub fn broader(a: BroaderArgs) -> Result<()> {
    let sa = load_space(&a.a)?.into_leaf_space()?;
    let sb = load_space(&a.b)?.into_leaf_space()?;
    let report = check_broader(&sa, &sb, &parse_grid(&a.delta_grid)?)?;
    emit_report(a.out.as_deref(), &envelope("broader", &a, &report)?)
}

pub fn classcheck(a: ClasscheckArgs) -> Result<()> {
    let sample = load_sample(&a.input)?;
    let report = check_class_conditions(&sample, a.d, a.c, a.seed)?;
    emit_report(a.out.as_deref(), &envelope("classcheck", &a, &report)?)
}

pub fn compare_metrics(a: CompareArgs) -> Result<()> {
    let sample = load_sample(&a.input)?;
    let alt = load_space(&a.alt)?;
    let report = metric_comparability(&sample, &alt, a.c)?;
    emit_report(a.out.as_deref(), &envelope("compare-metrics", &a, &report)?)
}

pub fn separate(a: SeparateArgs) -> Result<()> {
    let m = load_sample(&a.m)?;
    let mp = load_sample(&a.mprime)?;
    let params = SeparationParams {
        r_grid: io::parse_grid(&a.r_grid)?,
        c: a.c,
        d: a.d,
        normalize: !a.no_normalize,
        allow_unbroader: a.allow_unbroader,
        seed: a.seed,
    };
    let mut report = separation_scan(&m, &mp, &params)?;
    let cert = separation_certificate(&mut report, &m, &mp)?;
    if let Some(c) = &cert {
        let (mn, mpn) = report.prepare(&m, &mp);
        replay_status(c, mn.metric(), mpn.metric())?;
    }
    if let Some(path) = &a.csv {
        emit(Some(path), &report.to_csv())?;
    }
    let result = json!({
        "fitted_exponent": report.fitted_exponent,
        "ratio_increasing": report.ratio_strictly_increasing_as_r_decreases(),
        "table_replays_ok": report.replays_ok(),
        "certificate_value": cert.as_ref().map(|c| c.value),
        "certificate_replayed": cert.is_some(),
        "report": report,
    });
    emit_report(a.out.as_deref(), &envelope("separate", &a, &result)?)
}
