//! Acceptance suite: one pass/fail line per criterion, then a single
//! assertion over all of them. Run with `--nocapture` to see the lines.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicBool, Ordering};

use ghcert_core::bishop::{
    bishop_fit, cap_bounds_check, geometric_grid, BishopFit, BishopFitParams, CapBoundsReport, EmpiricalMeasure,
};
use ghcert_core::foliation::{
    hopf_base_points, leaf_space, sample_hopf, sample_torus_fibration, FoliatedSample, TorusParams,
};
use ghcert_core::generators::{
    circle_equispaced, circle_random, flat_torus_grid, random_euclidean, random_graph_metric, rng, sphere_random,
};
use ghcert_core::gh::{
    gh_oracle_exact, gh_scan, lower_bound_capcov, lower_bound_net_distortion, upper_bound_via_nets,
    NetDistortionOutcome, SearchBudget,
};
use ghcert_core::metric::{diameter, hausdorff_distance, TRIANGLE_TOL};
use ghcert_core::nets::{covering_number, covers, greedy_packing, is_packing, packing_number};
use ghcert_core::separation::{separation_certificate, separation_scan, SeparationParams, SeparationReport};
use ghcert_core::{FiniteMetricSpace, GhBoundCertificate, LeafSpaceMode, Metric, SolveMode};
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

struct Outcome {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

/// Writes past the test harness's output capture, so the criteria lines
/// show up in a plain `cargo test` run.
fn line(text: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").and_then(|_| out.flush()).expect("stdout");
}

/// Set while criterion 8 reruns earlier criteria, so each line prints once.
static QUIET: AtomicBool = AtomicBool::new(false);

fn report(id: usize, name: &'static str, passed: bool, detail: String) -> Outcome {
    if !QUIET.load(Ordering::Relaxed) {
        line(&format!("[{}] {id}. {name}: {detail}", if passed { "PASS" } else { "FAIL" }));
    }
    Outcome { id, name, passed, detail }
}

/// Certificates with the spaces they refer to, replayed in criterion 7.
#[derive(Default)]
struct Ledger {
    dense: Vec<(GhBoundCertificate, FiniteMetricSpace, FiniteMetricSpace)>,
    separation: Vec<(GhBoundCertificate, FoliatedSample, FoliatedSample)>,
    bishop: Vec<(BishopFit, ghcert_core::PointCloud)>,
}

fn random_space(seed: u64, n: usize) -> FiniteMetricSpace {
    match seed % 3 {
        0 => random_euclidean(n, 2, seed),
        1 => random_euclidean(n, 1 + (seed as usize / 3) % 4, seed),
        _ => random_graph_metric(n, seed),
    }
}

fn pick<R: Rng>(r: &mut R, n: usize) -> Vec<usize> {
    let k = r.random_range(1..=n);
    sample(r, n, k).into_vec()
}

fn canonical<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(&serde_json::to_value(v).unwrap()).unwrap()
}

fn criterion_1() -> Outcome {
    let mut violations = 0;
    let mut triples = 0;
    for s in 0..100u64 {
        let n = 3 + (s as usize % 18);
        let m = random_space(1_000 + s, n);
        if FiniteMetricSpace::validate(m.to_rows()).is_err() {
            violations += 1;
        }
        let scale = diameter(&m);
        let mut r = rng(s);
        for _ in 0..5 {
            let (a, b, c) = (pick(&mut r, n), pick(&mut r, n), pick(&mut r, n));
            let ab = hausdorff_distance(&m, &a, &b).unwrap();
            let ba = hausdorff_distance(&m, &b, &a).unwrap();
            let ac = hausdorff_distance(&m, &a, &c).unwrap();
            let cb = hausdorff_distance(&m, &c, &b).unwrap();
            triples += 1;
            if ab != ba || ab > ac + cb + TRIANGLE_TOL * scale {
                violations += 1;
            }
        }
    }
    report(
        1,
        "metric axioms & Hausdorff",
        violations == 0,
        format!("100 spaces, {triples} subset triples, {violations} violations"),
    )
}

fn criterion_2() -> Outcome {
    let mut violations = 0;
    let mut cases = 0;
    for s in 0..100u64 {
        let n = 4 + (s as usize % 17);
        let m = random_space(2_000 + s, n);
        let d = diameter(&m);
        for frac in [0.05, 0.1, 0.2, 0.3, 0.5] {
            let eps = frac * d;
            cases += 1;
            let cap = packing_number(&m, eps, SolveMode::Exact).unwrap();
            let cov = covering_number(&m, eps, SolveMode::Exact).unwrap();
            let cov2 = covering_number(&m, 2.0 * eps, SolveMode::Exact).unwrap();
            let greedy = greedy_packing(&m, eps).unwrap();
            let ok = cap.count <= cov.count
                && cov2.count <= cap.count
                && is_packing(&m, &cap.centers, eps)
                && covers(&m, &cov.centers.centers, eps)
                && covers(&m, &cap.centers, 2.0 * eps)
                && covers(&m, &greedy, 2.0 * eps);
            if !ok {
                violations += 1;
            }
        }
    }
    report(
        2,
        "packing/covering chain",
        violations == 0,
        format!("{cases} (space, radius) cases, {violations} violations"),
    )
}

fn criterion_3(ledger: &mut Ledger) -> Outcome {
    let mut violations = 0;
    let (mut lowers, mut uppers) = (0, 0);
    let pairs = 600u64;
    for s in 0..pairs {
        let x = random_space(3_000 + 2 * s, 1 + (s as usize % 4));
        let y = random_space(3_001 + 2 * s, 1 + (s as usize / 4 % 4));
        let exact = gh_oracle_exact(&x, &y).unwrap();
        let top = diameter(&x).max(diameter(&y)).max(1e-3);
        for eps in geometric_grid(top * 1e-3, top, 16) {
            if let Some(c) = lower_bound_capcov(&x, &y, eps).unwrap() {
                lowers += 1;
                violations += usize::from(!(c.value < exact));
                ledger.dense.push((c, x.clone(), y.clone()));
            }
            if let NetDistortionOutcome::Certified { certificate } = lower_bound_net_distortion(&x, &y, eps, 4).unwrap()
            {
                lowers += 1;
                violations += usize::from(!(certificate.value < exact));
                ledger.dense.push((certificate, x.clone(), y.clone()));
            }
        }
        for k in 1..=x.len().min(y.len()) {
            let up = upper_bound_via_nets(&x, &y, k, SearchBudget::default(), s).unwrap();
            uppers += 1;
            violations += usize::from(!(exact <= up.value));
            ledger.dense.push((up, x.clone(), y.clone()));
        }
    }
    let mut iso_bad = 0;
    for s in 0..60u64 {
        let n = 2 + (s as usize % 5);
        let x = random_space(4_000 + s, n);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(s as usize % n);
        let y = x.permuted(&perm);
        let up = upper_bound_via_nets(&x, &y, n, SearchBudget::default(), s).unwrap();
        let mut bad = up.value > 1e-9;
        for eps in geometric_grid(diameter(&x) * 1e-3, diameter(&x), 16) {
            bad |= lower_bound_capcov(&x, &y, eps).unwrap().is_some();
            bad |=
                matches!(lower_bound_net_distortion(&x, &y, eps, 5).unwrap(), NetDistortionOutcome::Certified { .. });
        }
        ledger.dense.push((up, x, y));
        iso_bad += usize::from(bad);
    }
    report(
        3,
        "GH sandwich soundness",
        violations == 0 && iso_bad == 0,
        format!("{pairs} pairs, {lowers} lower and {uppers} upper certificates, {violations} violations; 60 isometric pairs, {iso_bad} failures"),
    )
}

fn cap_check(space: &ghcert_core::PointCloud, fit: &BishopFit) -> CapBoundsReport {
    let grid = geometric_grid(fit.resolution_floor * 1.1, fit.theta_derived / 1.1, 6);
    cap_bounds_check(space, fit, &EmpiricalMeasure::uniform(space.len()), &grid).unwrap()
}

fn alphas_exercised(rep: &CapBoundsReport) -> bool {
    [0.5, 2.0].iter().all(|a| rep.rows.iter().any(|r| r.scaling.iter().any(|s| s.alpha == *a)))
}

fn criterion_4(ledger: &mut Ledger) -> (Outcome, String) {
    let circle = circle_equispaced(2000, TAU);
    let torus = flat_torus_grid(80, 1.0);
    let fc = bishop_fit(&circle, &EmpiricalMeasure::uniform(2000), BishopFitParams::for_space(&circle, 0)).unwrap();
    let ft = bishop_fit(&torus, &EmpiricalMeasure::uniform(6400), BishopFitParams::for_space(&torus, 0)).unwrap();
    let rc = cap_check(&circle, &fc);
    let rt = cap_check(&torus, &ft);
    let passed = (0.85..=1.15).contains(&fc.p_hat)
        && (1.8..=2.2).contains(&ft.p_hat)
        && rc.passed()
        && rt.passed()
        && alphas_exercised(&rc)
        && alphas_exercised(&rt);
    let fingerprint = canonical(&(&fc, &ft, &rc, &rt));
    ledger.bishop.push((fc.clone(), circle));
    ledger.bishop.push((ft.clone(), torus));
    let out = report(
        4,
        "Bishop dimension",
        passed,
        format!(
            "circle p = {:.4} (C = {:.3}), torus p = {:.4} (C = {:.3}); cap checks {} / {} radii passed, α ∈ {{1/2, 2}} exercised",
            fc.p_hat,
            fc.c_derived,
            ft.p_hat,
            ft.c_derived,
            rc.rows.iter().filter(|r| r.passed()).count() + rt.rows.iter().filter(|r| r.passed()).count(),
            rc.rows.len() + rt.rows.len()
        ),
    );
    (out, fingerprint)
}

fn circ(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

fn criterion_5() -> (Outcome, String) {
    let mut worst_torus = 0.0f64;
    let mut ok = true;
    let mut fingerprints = Vec::new();
    let cases = [
        TorusParams { n: 2, p: 1, leaves: 10, per_leaf: 30, scales: vec![1.0, 1.0], seed: 7 },
        TorusParams { n: 3, p: 1, leaves: 16, per_leaf: 40, scales: vec![1.0, 2.0, 1.5], seed: 8 },
        TorusParams { n: 3, p: 2, leaves: 12, per_leaf: 60, scales: vec![2.0, 1.0, 1.0], seed: 9 },
    ];
    for params in &cases {
        let s = sample_torus_fibration(params).unwrap();
        let tol = 2.0 * s.fill_radius();
        let chain = leaf_space(&s, LeafSpaceMode::ChainInfimum).unwrap();
        let haus = leaf_space(&s, LeafSpaceMode::LeafwiseHausdorff).unwrap();
        let base_dim = params.n - params.p;
        for a in 0..s.num_leaves() {
            for b in 0..s.num_leaves() {
                let (pa, pb) = (&s.ambient()[s.members()[a][0]], &s.ambient()[s.members()[b][0]]);
                let analytic = (0..base_dim).map(|k| circ(pa[k], pb[k], params.scales[k]).powi(2)).sum::<f64>().sqrt();
                let err = (chain.dist(a, b) - analytic).abs();
                worst_torus = worst_torus.max(err / tol);
                ok &= err <= tol && (chain.dist(a, b) - haus.dist(a, b)).abs() <= tol;
            }
        }
        fingerprints.push(canonical(&chain.space.to_record()));
    }

    let hopf = sample_hopf(500, 40, 1).unwrap();
    let tol = 2.0 * hopf.fill_radius();
    let chain = leaf_space(&hopf, LeafSpaceMode::ChainInfimum).unwrap();
    let haus = leaf_space(&hopf, LeafSpaceMode::LeafwiseHausdorff).unwrap();
    let bases = hopf_base_points(500);
    let mut ratios = Vec::new();
    let mut worst_modes = 0.0f64;
    for a in 0..500 {
        for b in (a + 1)..500 {
            let dot: f64 = (0..3).map(|k| bases[a][k] * bases[b][k]).sum();
            ratios.push(chain.dist(a, b) / dot.clamp(-1.0, 1.0).acos());
            worst_modes = worst_modes.max((chain.dist(a, b) - haus.dist(a, b)).abs());
        }
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    ok &= (0.45..=0.55).contains(&median) && worst_modes <= tol;
    fingerprints.push(canonical(&chain.space.to_record()));
    let out = report(
        5,
        "leaf-space geometry",
        ok,
        format!(
            "torus ρ error ≤ {:.3} of 2·fill; Hopf median ρ/angle = {median:.4}, chain vs Hausdorff gap {worst_modes:.4} ≤ {tol:.4}",
            worst_torus
        ),
    );
    (out, fingerprints.concat())
}

fn separation_pair() -> (FoliatedSample, FoliatedSample) {
    let m = sample_torus_fibration(&TorusParams {
        n: 2,
        p: 1,
        leaves: 4,
        per_leaf: 512,
        scales: vec![1.0, 2f64.sqrt()],
        seed: 0,
    })
    .unwrap();
    let mp =
        sample_torus_fibration(&TorusParams { n: 3, p: 2, leaves: 4, per_leaf: 4096, scales: vec![1.0; 3], seed: 100 })
            .unwrap();
    (m, mp)
}

fn run_separation() -> (SeparationReport, Option<GhBoundCertificate>) {
    let (m, mp) = separation_pair();
    let mut rep = separation_scan(&m, &mp, &SeparationParams::new(geometric_grid(0.07, 0.28, 6), 2.0)).unwrap();
    let cert = separation_certificate(&mut rep, &m, &mp).unwrap();
    (rep, cert)
}

fn criterion_6(ledger: &mut Ledger) -> (Outcome, String) {
    let (m, mp) = separation_pair();
    let (rep, cert) = run_separation();
    let exponent = rep.fitted_exponent.unwrap_or(f64::NAN);
    let increasing = rep.ratio_strictly_increasing_as_r_decreases();
    let (mn, mpn) = rep.prepare(&m, &mp);
    let replay = cert.as_ref().map(|c| c.replay(mn.metric(), mpn.metric()));
    let passed = (-1.3..=-0.7).contains(&exponent)
        && increasing
        && rep.replays_ok()
        && m.len() >= 2000
        && mp.len() >= 2000
        && cert.as_ref().is_some_and(|c| c.value > 0.0)
        && matches!(replay, Some(Ok(())));
    let ratios: Vec<String> = rep.rows.iter().map(|r| format!("{:.3}", r.ratio)).collect();
    let out = report(
        6,
        "separation engine",
        passed,
        format!(
            "|M| = {}, |M′| = {}, exponent {exponent:.4}, A/B = [{}] increasing = {increasing}, witness/cover replays {}, certificate ε = {:?}",
            m.len(),
            mp.len(),
            ratios.join(", "),
            rep.replays_ok(),
            cert.as_ref().map(|c| c.value)
        ),
    );
    let fingerprint = canonical(&(&rep, &cert));
    if let Some(c) = cert {
        ledger.separation.push((c, mn, mpn));
    }
    (out, fingerprint)
}

fn gh_example(ledger: &mut Ledger) -> String {
    let c = FiniteMetricSpace::from_metric(&circle_random(200, TAU, 5));
    let s = FiniteMetricSpace::from_metric(&sphere_random(400, 6));
    let grid = geometric_grid(0.01, PI, 24);
    let scan = gh_scan(&c, &s, &grid, &[4, 8, 16], SearchBudget::default(), 0).unwrap();
    for cert in scan.lower.iter().chain(&scan.uppers) {
        ledger.dense.push((cert.clone(), c.clone(), s.clone()));
    }
    canonical(&scan)
}

fn criterion_7(ledger: &Ledger) -> Outcome {
    let mut failures = 0;
    for (cert, x, y) in &ledger.dense {
        failures += usize::from(cert.replay(x, y).is_err());
    }
    for (cert, x, y) in &ledger.separation {
        failures += usize::from(cert.replay(x.metric(), y.metric()).is_err());
    }
    for (fit, space) in &ledger.bishop {
        failures += usize::from(!fit.replay(space, &EmpiricalMeasure::uniform(space.len())).unwrap());
    }
    let total = ledger.dense.len() + ledger.separation.len() + ledger.bishop.len();
    let passed = failures == 0 && !ledger.separation.is_empty();
    report(
        7,
        "certificate replay",
        passed,
        format!("{total} certificates and fits replayed ({} separation), {failures} failures", ledger.separation.len()),
    )
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn ghcert(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_ghcert")).current_dir(dir).args(args).output().unwrap();
    assert!(out.status.success(), "ghcert {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_8(fingerprints: &[(&str, String)]) -> Outcome {
    let mut mismatches = Vec::new();
    // in-process: the same computations at 1 and 8 worker threads
    type Rerun = Box<dyn Fn() -> String + Send + Sync>;
    let reruns: Vec<(&str, Rerun)> = vec![
        ("bishop", Box::new(|| criterion_4(&mut Ledger::default()).1)),
        ("leaf spaces", Box::new(|| criterion_5().1)),
        ("separation", Box::new(|| canonical(&run_separation()))),
        ("gh scan", Box::new(|| gh_example(&mut Ledger::default()))),
    ];
    QUIET.store(true, Ordering::Relaxed);
    for (name, f) in &reruns {
        let first = fingerprints.iter().find(|(n, _)| n == name).map(|(_, s)| s.clone());
        let one = in_pool(1, f);
        let eight = in_pool(8, f);
        if first.is_some_and(|s| s != one) || one != eight {
            mismatches.push(name.to_string());
        }
    }
    QUIET.store(false, Ordering::Relaxed);
    // end to end through the binary
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ghcert(
        p,
        &[
            "sample",
            "torus",
            "--n",
            "2",
            "--p",
            "1",
            "--leaves",
            "4",
            "--per-leaf",
            "256",
            "--scale",
            "1,1.4142135623730951",
            "--seed",
            "3",
            "--out",
            "m.json",
        ],
    );
    ghcert(
        p,
        &[
            "sample",
            "torus",
            "--n",
            "3",
            "--p",
            "2",
            "--leaves",
            "4",
            "--per-leaf",
            "1024",
            "--scale",
            "1,1,1",
            "--seed",
            "4",
            "--out",
            "mp.json",
        ],
    );
    ghcert(p, &["sample", "hopf", "--fibers", "60", "--per-fiber", "20", "--seed", "1", "--out", "h.json"]);
    let commands: Vec<Vec<&str>> = vec![
        vec!["sample", "hopf", "--fibers", "60", "--per-fiber", "20", "--seed", "1"],
        vec!["validate", "--in", "h.json"],
        vec!["leafspace", "--in", "h.json", "--mode", "chain"],
        vec!["leafspace", "--in", "h.json", "--mode", "hausdorff"],
        vec!["bishop", "--in", "m.json", "--seed", "2"],
        vec!["classcheck", "--in", "h.json", "--d", "0.1", "--c", "8"],
        vec!["gh", "--x", "h.json", "--y", "m.json", "--eps-grid", "0.02:0.02:0.6", "--seed", "5"],
        vec!["separate", "--m", "m.json", "--mprime", "mp.json", "--r-grid", "0.14,0.17,0.2,0.24,0.28", "--c", "2.0"],
        vec!["selftest"],
    ];
    let mut cli_runs = 0;
    for cmd in &commands {
        let base = ghcert(p, cmd);
        let again = ghcert(p, cmd);
        let mut t1 = vec!["--threads", "1"];
        t1.extend(cmd);
        let mut t8 = vec!["--threads", "8"];
        t8.extend(cmd);
        cli_runs += 4;
        if base != again || base != ghcert(p, &t1) || base != ghcert(p, &t8) {
            mismatches.push(cmd.join(" "));
        }
    }
    report(
        8,
        "determinism",
        mismatches.is_empty(),
        format!(
            "{} in-process reruns at 1 and 8 threads, {cli_runs} CLI runs; mismatches: {mismatches:?}",
            reruns.len()
        ),
    )
}

#[test]
fn acceptance() {
    let mut ledger = Ledger::default();
    let mut outcomes = vec![criterion_1(), criterion_2(), criterion_3(&mut ledger)];
    let (o4, f4) = criterion_4(&mut ledger);
    let (o5, f5) = criterion_5();
    let (o6, f6) = criterion_6(&mut ledger);
    let fgh = gh_example(&mut ledger);
    outcomes.extend([o4, o5, o6]);
    outcomes.push(criterion_7(&ledger));
    outcomes.push(criterion_8(&[("bishop", f4), ("leaf spaces", f5), ("separation", f6), ("gh scan", fgh)]));

    let failed: Vec<String> =
        outcomes.iter().filter(|o| !o.passed).map(|o| format!("{}. {} ({})", o.id, o.name, o.detail)).collect();
    line(&format!("{} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len()));
    assert!(failed.is_empty(), "failed criteria: {failed:#?}");
}
