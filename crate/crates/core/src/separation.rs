//! Packing/covering separation of two foliated samples whose leaves have
//! different dimensions.
//!
//! For each radius `r` the scan packs the leaf space of `M` at `r/2`
//! (`k` leaves), packs leaves of `M′` at `r/2` (`l′` = smallest count)
//! and leaves of `M` at `r/2` (`l` = largest count over the `k` packed
//! leaves). `A = k·l′` is a witnessed lower bound for `Cap(r/2, M′)`;
//! `B = k·l` bounds a replayed cover of `M` at radius `C·r`. Their ratio
//! grows like `r^{p−p′}` as `r → 0`.
//!
//! The GH certificate itself is produced separately by comparing a cover
//! of `M` with a packing of `M′` directly, so its soundness never depends
//! on the table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::GhBoundCertificate;
use crate::error::{Error, Result};
use crate::foliation::{check_broader, leaf_space, BroaderReport, FoliatedSample, LeafSpace, LeafSpaceMode, Verdict};
use crate::gh::capcov_certificate;
use crate::metric::FiniteMetricSpace;
use crate::nets::{best_packing, covers, greedy_cover, greedy_packing, is_packing};
use crate::regression::fit_line;

/// Number of halvings of `ε₀` by `√2` tried below the largest grid radius.
pub const EPS0_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationParams {
    pub r_grid: Vec<f64>,
    pub c: f64,
    /// Disjointness-transfer constant of the class; only reported.
    pub d: Option<f64>,
    pub normalize: bool,
    /// Run the scan even when the broader relation is not established.
    pub allow_unbroader: bool,
    pub seed: u64,
}

impl SeparationParams {
    pub fn new(r_grid: Vec<f64>, c: f64) -> Self {
        Self { r_grid, c, d: None, normalize: true, allow_unbroader: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationConstants {
    pub c: f64,
    pub d: Option<f64>,
    pub p: usize,
    pub n: usize,
    pub p_prime: usize,
    pub n_prime: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub r: f64,
    pub k: usize,
    pub l_prime: usize,
    pub l: usize,
    pub a: f64,
    pub b: f64,
    pub ratio: f64,
    /// Leaves of `M` packed at `r/2` in its leaf space.
    pub base_leaves: Vec<usize>,
    /// Leaves of `M′` packed at `r/2` in its leaf space (first `k`).
    pub base_leaves_prime: Vec<usize>,
    /// `k·l′` points of `M′`, pairwise at least `r` apart when `witness_ok`.
    pub witness: Vec<usize>,
    pub witness_ok: bool,
    /// Cover of `M` built from per-leaf packings; `|cover| ≤ B`.
    pub cover: Vec<usize>,
    pub cover_ok: bool,
    /// `k·2^{p′}/(C²·r^{p′})`, the lower form `A` must dominate.
    pub a_lower_form: f64,
    /// `k·2^p·C^{p+2}/r^p`, the analytic `B(r)`.
    pub b_analytic: f64,
    /// `k·2^{p′}/((6C)^{n′}·C⁴·r^{p′})`, the analytic `A(r)`.
    pub a_analytic: f64,
    pub a_above_lower_form: bool,
    pub b_below_analytic: bool,
    /// `r < min(d, C)/(3C)`; `None` when `d` is unknown.
    pub in_proof_window: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eps0Row {
    pub eps0: f64,
    pub cov_upper: usize,
    pub cap_lower: usize,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub constants: SeparationConstants,
    pub normalized: bool,
    pub scale_m: f64,
    pub scale_m_prime: f64,
    pub floor_m: f64,
    pub floor_m_prime: f64,
    pub broader: BroaderReport,
    pub rows: Vec<SeparationRow>,
    pub fitted_exponent: Option<f64>,
    pub fit_residual: Option<f64>,
    pub sampled_leaves_prime: Vec<usize>,
    pub eps0_scan: Vec<Eps0Row>,
    pub certificate: Option<GhBoundCertificate>,
    pub caveats: Vec<String>,
}

impl SeparationReport {
    pub fn r_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r).collect()
    }
    pub fn a_per_r(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.a).collect()
    }
    pub fn b_per_r(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.b).collect()
    }
    pub fn ratio(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ratio).collect()
    }

    /// `A/B` strictly increases as `r` decreases along the grid.
    pub fn ratio_strictly_increasing_as_r_decreases(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].ratio > w[1].ratio)
    }

    pub fn replays_ok(&self) -> bool {
        self.rows.iter().all(|r| r.witness_ok && r.cover_ok)
    }

    /// Applies the normalization recorded in the report to a pair of
    /// samples, giving the spaces the certificate refers to.
    pub fn prepare(&self, m: &FoliatedSample, m_prime: &FoliatedSample) -> (FoliatedSample, FoliatedSample) {
        (m.scaled(self.scale_m), m_prime.scaled(self.scale_m_prime))
    }

    /// The `(r, A, B, A/B)` table as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,A,B,A/B\n");
        for row in &self.rows {
            out.push_str(&format!("{:?},{:?},{:?},{:?}\n", row.r, row.a, row.b, row.ratio));
        }
        out
    }
}

fn leaf_packing(sample: &FoliatedSample, leaf: usize, eps: f64) -> Result<Vec<usize>> {
    let lm = sample.leaf_metric(leaf);
    let local = best_packing(&lm, eps)?.centers;
    Ok(local.into_iter().map(|i| sample.members()[leaf][i]).collect())
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty r grid".into()));
    }
    if grid.iter().any(|r| !(*r > 0.0) || !r.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("r grid must be positive and increasing".into()));
    }
    Ok(())
}

fn row_at(
    r: f64,
    m: &FoliatedSample,
    mp: &FoliatedSample,
    ls: &LeafSpace,
    lsp: &LeafSpace,
    sampled_prime: &[usize],
    k_consts: &SeparationConstants,
) -> Result<SeparationRow> {
    let SeparationConstants { c, d, p, p_prime, n_prime, .. } = *k_consts;
    let half = r / 2.0;
    let base_leaves = best_packing(ls, half)?.centers;
    let k = base_leaves.len();
    let mut base_leaves_prime = best_packing(lsp, half)?.centers;
    if base_leaves_prime.len() < k {
        return Err(Error::Precondition(format!(
            "leaf space of M′ packs {} leaves at r/2 = {half} but M needs {k}",
            base_leaves_prime.len()
        )));
    }
    base_leaves_prime.truncate(k);

    let l_prime = sampled_prime
        .iter()
        .map(|&leaf| Ok(best_packing(&mp.leaf_metric(leaf), half)?.count))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min()
        .unwrap_or(0);
    let mut witness = Vec::with_capacity(k * l_prime);
    for &leaf in &base_leaves_prime {
        let pack = leaf_packing(mp, leaf, half)?;
        witness.extend(pack.into_iter().take(l_prime));
    }
    let witness_ok = witness.len() == k * l_prime && is_packing(mp.metric(), &witness, half);

    let mut cover = Vec::new();
    let mut l = 0;
    for &leaf in &base_leaves {
        let pack = leaf_packing(m, leaf, half)?;
        l = l.max(pack.len());
        cover.extend(pack);
    }
    let cover_ok = cover.len() <= k * l && covers(m.metric(), &cover, c * r);

    let (a, b) = ((k * l_prime) as f64, (k * l) as f64);
    let kf = k as f64;
    let a_lower_form = kf * 2f64.powi(p_prime as i32) / (c * c * r.powi(p_prime as i32));
    let a_analytic =
        kf * 2f64.powi(p_prime as i32) / ((6.0 * c).powi(n_prime as i32) * c.powi(4) * r.powi(p_prime as i32));
    let b_analytic = kf * 2f64.powi(p as i32) * c.powi(p as i32 + 2) / r.powi(p as i32);
    Ok(SeparationRow {
        r,
        k,
        l_prime,
        l,
        a,
        b,
        ratio: if b > 0.0 { a / b } else { f64::NAN },
        base_leaves,
        base_leaves_prime,
        witness,
        witness_ok,
        cover,
        cover_ok,
        a_lower_form,
        b_analytic,
        a_analytic,
        a_above_lower_form: a >= a_lower_form,
        b_below_analytic: b <= b_analytic,
        in_proof_window: d.map(|d| r < d.min(c) / (3.0 * c)),
    })
}

/// Runs the `A(r)`, `B(r)` table for `M` (leaf dimension `p`) against `M′`
/// (leaf dimension `p′ > p`) and fits the exponent of `A/B` in `r`.
///
/// Errors when `p ≥ p′`, `n > n′`, the grid is not above both resolution
/// floors, or the leaf space of `M′` is not broader than that of `M` at
/// the scales `r/2` (unless `allow_unbroader`). The certificate field is
/// left empty; see [`separation_certificate`].
pub fn separation_scan(
    m: &FoliatedSample,
    m_prime: &FoliatedSample,
    params: &SeparationParams,
) -> Result<SeparationReport> {
    let constants = SeparationConstants {
        c: params.c,
        d: params.d,
        p: m.leaf_dim(),
        n: m.manifold_dim(),
        p_prime: m_prime.leaf_dim(),
        n_prime: m_prime.manifold_dim(),
    };
    if constants.p >= constants.p_prime {
        return Err(Error::Precondition(format!(
            "leaf dimension of M ({}) must be below that of M′ ({})",
            constants.p, constants.p_prime
        )));
    }
    if constants.n > constants.n_prime {
        return Err(Error::Precondition(format!(
            "dimension of M ({}) exceeds that of M′ ({})",
            constants.n, constants.n_prime
        )));
    }
    if !(params.c >= 1.0) {
        return Err(Error::InvalidArgument(format!("need C ≥ 1, got {}", params.c)));
    }
    validate_grid(&params.r_grid)?;

    let (mut scale_m, mut scale_m_prime) = (1.0, 1.0);
    let (m, mp) = if params.normalize {
        let (a, sa) = m.normalized();
        let (b, sb) = m_prime.normalized();
        scale_m = sa;
        scale_m_prime = sb;
        (a, b)
    } else {
        (m.clone(), m_prime.clone())
    };
    let floor_m = 2.0 * m.fill_radius();
    let floor_m_prime = 2.0 * mp.fill_radius();
    let floor = floor_m.max(floor_m_prime);
    if params.r_grid[0] <= floor {
        return Err(Error::OutsideWindow(format!(
            "smallest radius {} is not above the resolution floor {floor}",
            params.r_grid[0]
        )));
    }

    let ls = leaf_space(&m, LeafSpaceMode::ChainInfimum)?;
    let lsp = leaf_space(&mp, LeafSpaceMode::ChainInfimum)?;
    let deltas: Vec<f64> = params.r_grid.iter().map(|r| r / 2.0).collect();
    let broader = check_broader(&ls, &lsp, &deltas)?;
    let mut caveats = Vec::new();
    if broader.verdict != Verdict::Holds {
        if !params.allow_unbroader {
            return Err(Error::Precondition(format!(
                "leaf space of M′ is not broader than that of M ({:?})",
                broader.verdict
            )));
        }
        caveats.push(format!("broader relation {:?}; scan forced", broader.verdict));
    }
    let sampled_prime = mp.sampled_leaves(params.seed);
    if sampled_prime.len() < mp.num_leaves() {
        caveats.push(format!("l′ minimized over {} of {} leaves of M′", sampled_prime.len(), mp.num_leaves()));
    }

    let rows = params
        .r_grid
        .par_iter()
        .map(|&r| row_at(r, &m, &mp, &ls, &lsp, &sampled_prime, &constants))
        .collect::<Result<Vec<_>>>()?;

    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.a > 0.0 && r.b > 0.0).map(|r| (r.r.ln(), r.ratio.ln())).unzip();
    let fit = fit_line(&xs, &ys);

    Ok(SeparationReport {
        constants,
        normalized: params.normalize,
        scale_m,
        scale_m_prime,
        floor_m,
        floor_m_prime,
        broader,
        rows,
        fitted_exponent: fit.map(|f| f.slope),
        fit_residual: fit.map(|f| f.max_residual),
        sampled_leaves_prime: sampled_prime,
        eps0_scan: Vec::new(),
        certificate: None,
        caveats,
    })
}

/// Searches `ε₀` downward from the largest grid radius (by factors of
/// `√2`, at most [`EPS0_STEPS`] values) for `CovUB(Cε₀, M) < CapLB(3Cε₀, M′)`
/// on the samples as normalized in `report`, returning the first (largest)
/// firing certificate `d_GH > Cε₀`. Stores the scanned rows in the report.
pub fn separation_certificate(
    report: &mut SeparationReport,
    m: &FoliatedSample,
    m_prime: &FoliatedSample,
) -> Result<Option<GhBoundCertificate>> {
    let (m, mp) = report.prepare(m, m_prime);
    let c = report.constants.c;
    let top = report.rows.last().map(|r| r.r).ok_or_else(|| Error::InvalidArgument("report has no rows".into()))?;
    report.eps0_scan.clear();
    report.certificate = None;
    let mut eps0 = top;
    for _ in 0..EPS0_STEPS {
        let eps = c * eps0;
        let cover = greedy_cover(m.metric(), eps)?;
        let cap_upper_possible = mp.len();
        if cover.len() >= cap_upper_possible {
            report.eps0_scan.push(Eps0Row { eps0, cov_upper: cover.len(), cap_lower: 0, fired: false });
            if cover.len() == m.len() {
                break;
            }
            eps0 /= std::f64::consts::SQRT_2;
            continue;
        }
        let pack = greedy_packing(mp.metric(), 3.0 * eps)?;
        let fired = cover.len() < pack.len();
        report.eps0_scan.push(Eps0Row { eps0, cov_upper: cover.len(), cap_lower: pack.len(), fired });
        if fired {
            let cert = capcov_certificate(eps, cover, pack);
            report.certificate = cert.clone();
            return Ok(cert);
        }
        eps0 /= std::f64::consts::SQRT_2;
    }
    Ok(None)
}

/// Dense copies of the two prepared samples, for oracle checks on tiny
/// instances.
pub fn dense_pair(
    report: &SeparationReport,
    m: &FoliatedSample,
    m_prime: &FoliatedSample,
) -> (FiniteMetricSpace, FiniteMetricSpace) {
    let (a, b) = report.prepare(m, m_prime);
    (FiniteMetricSpace::from_metric(a.metric()), FiniteMetricSpace::from_metric(b.metric()))
}
