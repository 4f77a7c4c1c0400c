//! Empirical Bishop measures: ball-mass profiles, power-law fits and the
//! packing-number estimates they imply.
//!
//! A measure μ is p-dimensional Bishop with constants `β ≥ 1`, `η₀ > 0`
//! when `β⁻¹ηᵖ ≤ μ(B(x,η)) ≤ βηᵖ` for every `x` and `η < η₀`. The fit
//! estimates p by least squares on log-log ball masses and takes the
//! smallest β that makes the sandwich hold on every sampled pair, so the
//! fitted constants replay exactly. From them, `C = β·2ᵖ` and `θ = η₀/2`
//! bound packing numbers: `μ(X)/(C rᵖ) ≤ Cap(r) ≤ C μ(X)/rᵖ` for `r < θ`.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::rng;
use crate::metric::{diameter, fill_radius, Metric};
use crate::nets::{best_packing, packing_upper_bound};
use crate::regression::fit_line;

pub const MIN_FIT_CENTERS: usize = 20;
pub const MAX_FIT_CENTERS: usize = 200;

/// Nonnegative point weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    weights: Vec<f64>,
    total: f64,
}

impl EmpiricalMeasure {
    /// Weight `1/n` on every point.
    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n], total: if n == 0 { 0.0 } else { 1.0 } }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!("weight {i} is negative or non-finite")));
        }
        let total = weights.iter().sum();
        Ok(Self { weights, total })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    fn check_len<M: Metric + ?Sized>(&self, m: &M) -> Result<()> {
        if self.weights.len() != m.len() {
            return Err(Error::InvalidArgument(format!("{} weights for {} points", self.weights.len(), m.len())));
        }
        Ok(())
    }

    /// `μ(B(center, η))` for the open ball.
    pub fn ball_mass<M: Metric + ?Sized>(&self, m: &M, center: usize, eta: f64) -> f64 {
        (0..m.len()).filter(|&j| j == center || m.dist(center, j) < eta).map(|j| self.weights[j]).sum()
    }
}

/// `masses[c][e] = μ(B(centers[c], etas[e]))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassProfile {
    pub centers: Vec<usize>,
    pub etas: Vec<f64>,
    pub masses: Vec<Vec<f64>>,
}

pub fn ball_mass_profile<M: Metric + ?Sized>(
    m: &M,
    measure: &EmpiricalMeasure,
    centers: &[usize],
    etas: &[f64],
) -> Result<MassProfile> {
    measure.check_len(m)?;
    if etas.is_empty() || etas.windows(2).any(|w| !(w[0] < w[1])) || !(etas[0] > 0.0) {
        return Err(Error::InvalidArgument("radius grid must be positive and increasing".into()));
    }
    if let Some(&c) = centers.iter().find(|&&c| c >= m.len()) {
        return Err(Error::IndexOutOfRange { index: c, len: m.len() });
    }
    let masses = centers
        .par_iter()
        .map(|&c| {
            let mut ds: Vec<(f64, f64)> =
                (0..m.len()).map(|j| (if j == c { 0.0 } else { m.dist(c, j) }, measure.weights[j])).collect();
            ds.sort_by(|a, b| a.0.total_cmp(&b.0));
            // cumulative masses in sorted order, summed sequentially
            let mut out = Vec::with_capacity(etas.len());
            let mut acc = 0.0;
            let mut idx = 0;
            for &eta in etas {
                while idx < ds.len() && (ds[idx].0 < eta || (idx == 0 && ds[idx].0 == 0.0)) {
                    acc += ds[idx].1;
                    idx += 1;
                }
                out.push(acc);
            }
            out
        })
        .collect();
    Ok(MassProfile { centers: centers.to_vec(), etas: etas.to_vec(), masses })
}

/// Geometric grid of `steps` radii from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (steps - 1) as f64;
    let mut g: Vec<f64> = (0..steps).map(|i| lo * (ratio * i as f64).exp()).collect();
    g[steps - 1] = hi;
    g
}

/// Default radius window `[2·fill radius, diameter/4]`.
pub fn default_window<M: Metric + ?Sized>(m: &M) -> (f64, f64) {
    (2.0 * fill_radius(m), diameter(m) / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BishopFitParams {
    pub eta_min: f64,
    pub eta_max: f64,
    pub steps: usize,
    pub centers: usize,
    pub seed: u64,
}

impl BishopFitParams {
    /// Default window, 12 radii, 200 centers.
    pub fn for_space<M: Metric + ?Sized>(m: &M, seed: u64) -> Self {
        let (eta_min, eta_max) = default_window(m);
        Self { eta_min, eta_max, steps: 12, centers: MAX_FIT_CENTERS, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BishopFit {
    pub p_hat: f64,
    pub beta_hat: f64,
    pub eta0: f64,
    pub c_derived: f64,
    pub theta_derived: f64,
    /// Largest absolute residual of `log μ` from the fitted regression line.
    pub residual: f64,
    pub resolution_floor: f64,
    pub profile: MassProfile,
}

fn sandwich_holds(p: f64, beta: f64, profile: &MassProfile) -> bool {
    profile.masses.iter().all(|row| {
        row.iter().zip(&profile.etas).all(|(&mu, &eta)| {
            let law = eta.powf(p);
            law / beta <= mu && mu <= beta * law
        })
    })
}

/// Least-squares dimension fit over a seeded sample of centers.
pub fn bishop_fit<M: Metric + ?Sized>(m: &M, measure: &EmpiricalMeasure, params: BishopFitParams) -> Result<BishopFit> {
    measure.check_len(m)?;
    let n = m.len();
    if n < 2 {
        return Err(Error::Degenerate("fewer than two points".into()));
    }
    if params.steps < 2 {
        return Err(Error::Degenerate("need at least two radii".into()));
    }
    let floor = 2.0 * fill_radius(m);
    let diam = diameter(m);
    let (lo, hi) = (params.eta_min, params.eta_max);
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Degenerate(format!("radius range [{lo}, {hi}] is empty")));
    }
    if lo < floor || hi > diam / 2.0 {
        return Err(Error::OutsideWindow(format!("range [{lo}, {hi}] not within [{floor}, {}]", diam / 2.0)));
    }
    let etas = geometric_grid(lo, hi, params.steps);
    let count = params.centers.clamp(MIN_FIT_CENTERS, MAX_FIT_CENTERS).min(n);
    let mut centers = sample(&mut rng(params.seed), n, count).into_vec();
    centers.sort_unstable();
    let profile = ball_mass_profile(m, measure, &centers, &etas)?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &profile.masses {
        for (&mu, &eta) in row.iter().zip(&etas) {
            xs.push(eta.ln());
            ys.push(mu.ln());
        }
    }
    let mut distinct = ys.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Degenerate("fewer than two distinct ball masses (dimension 0?)".into()));
    }
    let line = fit_line(&xs, &ys).ok_or_else(|| Error::Degenerate("radii are not distinct".into()))?;
    let p_hat = line.slope;
    let max_dev = xs.iter().zip(&ys).map(|(x, y)| (y - p_hat * x).abs()).fold(0.0, f64::max);
    let mut beta_hat = max_dev.exp().max(1.0);
    // exp/ln round trips can miss by an ulp; step up until the sandwich replays
    while !sandwich_holds(p_hat, beta_hat, &profile) {
        beta_hat = beta_hat.next_up();
    }
    let eta0 = hi;
    Ok(BishopFit {
        p_hat,
        beta_hat,
        eta0,
        c_derived: beta_hat * 2f64.powf(p_hat),
        theta_derived: eta0 / 2.0,
        residual: line.max_residual,
        resolution_floor: floor,
        profile,
    })
}

impl BishopFit {
    /// Re-verifies `β⁻¹ηᵖ ≤ μ(B(x,η)) ≤ βηᵖ` on every stored (center, η).
    pub fn replay<M: Metric + ?Sized>(&self, m: &M, measure: &EmpiricalMeasure) -> Result<bool> {
        let fresh = ball_mass_profile(m, measure, &self.profile.centers, &self.profile.etas)?;
        Ok(fresh == self.profile && sandwich_holds(self.p_hat, self.beta_hat, &fresh))
    }
}

/// Two-sided scaling check `Cap(αr)` against `Cap(r)` for one α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub alpha: f64,
    pub cap_lower_scaled: usize,
    pub cap_upper_scaled: usize,
    /// `α^{-p}C^{-2}·CapUB(r) ≤ CapLB(αr)`.
    pub lower_ok: bool,
    /// `CapUB(αr) ≤ α^{-p}C²·CapLB(r)`.
    pub upper_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapBoundsRow {
    pub r: f64,
    pub cap_lower: usize,
    pub cap_upper: usize,
    /// `μ(X)/(C rᵖ)`.
    pub predicted_lower: f64,
    /// `C μ(X)/rᵖ`.
    pub predicted_upper: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// One entry per α whose scaled radius stays inside the window.
    pub scaling: Vec<ScalingCheck>,
}

impl CapBoundsRow {
    pub fn passed(&self) -> bool {
        self.lower_ok && self.upper_ok && self.scaling.iter().all(|s| s.lower_ok && s.upper_ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapBoundsReport {
    pub c: f64,
    pub p: f64,
    pub theta: f64,
    pub floor: f64,
    pub rows: Vec<CapBoundsRow>,
}

impl CapBoundsReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(CapBoundsRow::passed)
    }
}

/// Certified `(lower, upper)` bounds on `Cap(r, X)`.
fn cap_bounds<M: Metric + ?Sized>(m: &M, r: f64) -> Result<(usize, usize)> {
    Ok((best_packing(m, r)?.count, packing_upper_bound(m, r)?))
}

/// Checks the two packing-number inequalities implied by a Bishop fit at
/// every `r` in the grid, plus the scaling sandwich for `α ∈ {1/2, 2}`.
///
/// Lower inequalities use certified lower bounds on Cap and upper
/// inequalities certified upper bounds, so every pass is a proof.
pub fn cap_bounds_check<M: Metric + ?Sized>(
    m: &M,
    fit: &BishopFit,
    measure: &EmpiricalMeasure,
    r_grid: &[f64],
) -> Result<CapBoundsReport> {
    measure.check_len(m)?;
    if !(fit.p_hat > 0.0) {
        return Err(Error::Precondition(format!("packing estimates need p > 0, fitted p = {}", fit.p_hat)));
    }
    let floor = fit.resolution_floor;
    let theta = fit.theta_derived;
    let in_window = |r: f64| r > floor && r < theta;
    if r_grid.is_empty() {
        return Err(Error::InvalidArgument("empty radius grid".into()));
    }
    if let Some(&r) = r_grid.iter().find(|&&r| !in_window(r)) {
        return Err(Error::OutsideWindow(format!("r = {r} not in ({floor}, {theta})")));
    }
    let (c, p, mass) = (fit.c_derived, fit.p_hat, measure.total());
    let rows = r_grid
        .par_iter()
        .map(|&r| {
            let (lo, hi) = cap_bounds(m, r)?;
            let predicted_lower = mass / (c * r.powf(p));
            let predicted_upper = c * mass / r.powf(p);
            let mut scaling = Vec::new();
            for alpha in [0.5, 2.0] {
                let ar = alpha * r;
                if !in_window(ar) {
                    continue;
                }
                let (alo, ahi) = cap_bounds(m, ar)?;
                let factor = alpha.powf(-p);
                scaling.push(ScalingCheck {
                    alpha,
                    cap_lower_scaled: alo,
                    cap_upper_scaled: ahi,
                    lower_ok: factor / (c * c) * hi as f64 <= alo as f64,
                    upper_ok: ahi as f64 <= factor * c * c * lo as f64,
                });
            }
            Ok(CapBoundsRow {
                r,
                cap_lower: lo,
                cap_upper: hi,
                predicted_lower,
                predicted_upper,
                lower_ok: predicted_lower <= lo as f64,
                upper_ok: hi as f64 <= predicted_upper,
                scaling,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CapBoundsReport { c, p, theta, floor, rows })
}
