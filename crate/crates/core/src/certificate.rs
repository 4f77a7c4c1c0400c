//! Replayable certificates for bounds on the Gromov-Hausdorff distance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::Metric;
use crate::nets::{covering_radius, covers, is_packing};

/// Relative bump applied to a closed covering radius so the open-ball net
/// condition `d(x, net) < r` holds strictly.
pub const OPEN_RADIUS_BUMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Evidence {
    /// Equal-size nets `x_net[i] <-> y_net[i]` with radii and distortion;
    /// proves `d_GH ≤ 3·max(r_x, r_y, distortion)`.
    MatchedNets { x_net: Vec<usize>, y_net: Vec<usize>, r_x: f64, r_y: f64, distortion: f64 },
    /// An open ε-cover of X smaller than a 3ε-packing of Y; proves `d_GH > ε`.
    CapCov { epsilon: f64, cov_upper: usize, cap_lower: usize, cover_x: Vec<usize>, packing_y: Vec<usize> },
    /// An ε-net of X no k-tuple of Y matches within distortion 2ε; proves
    /// `d_GH > ε`. Replay reruns the exhaustive tuple refutation.
    NetDistortion { epsilon: f64, x_net: Vec<usize>, tuples_checked: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhBoundCertificate {
    pub kind: BoundKind,
    pub value: f64,
    pub evidence: Evidence,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("evidence kind does not match bound kind")]
    KindMismatch,
    #[error("index {0} out of range")]
    BadIndex(usize),
    #[error("nets have different sizes ({0} vs {1})")]
    NetSizeMismatch(usize, usize),
    #[error("stored {what} = {stored} but replay gives {replayed}")]
    ValueMismatch { what: &'static str, stored: f64, replayed: f64 },
    #[error("stored count {what} = {stored} but evidence has {replayed}")]
    CountMismatch { what: &'static str, stored: usize, replayed: usize },
    #[error("cover of X at radius {0} does not cover")]
    NotACover(f64),
    #[error("packing of Y at radius {0} has a pair closer than twice the radius")]
    NotAPacking(f64),
    #[error("cover is not smaller than packing ({0} >= {1})")]
    NoGap(usize, usize),
    #[error("a tuple of Y matches the net within distortion {0}")]
    TupleFound(f64),
}

/// Closed covering radius bumped by a relative `1e-12` so that the open
/// balls of that radius cover.
pub fn open_net_radius<M: Metric + ?Sized>(m: &M, centers: &[usize]) -> f64 {
    let r = covering_radius(m, centers);
    r + r * OPEN_RADIUS_BUMP
}

/// `max_{i<j} |d_X(xs_i, xs_j) - d_Y(ys_i, ys_j)|`.
pub fn tuple_distortion<X: Metric + ?Sized, Y: Metric + ?Sized>(x: &X, xs: &[usize], y: &Y, ys: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let d = (x.dist(xs[i], xs[j]) - y.dist(ys[i], ys[j])).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

fn check_indices<M: Metric + ?Sized>(m: &M, idx: &[usize]) -> Result<(), ReplayError> {
    match idx.iter().find(|&&i| i >= m.len()) {
        Some(&i) => Err(ReplayError::BadIndex(i)),
        None => Ok(()),
    }
}

fn same(what: &'static str, stored: f64, replayed: f64) -> Result<(), ReplayError> {
    if stored.to_bits() == replayed.to_bits() {
        Ok(())
    } else {
        Err(ReplayError::ValueMismatch { what, stored, replayed })
    }
}

impl GhBoundCertificate {
    /// Re-verifies the bound from its evidence and the two spaces alone.
    pub fn replay<X: Metric + ?Sized, Y: Metric + ?Sized>(&self, x: &X, y: &Y) -> Result<(), ReplayError> {
        match (&self.kind, &self.evidence) {
            (BoundKind::Upper, Evidence::MatchedNets { x_net, y_net, r_x, r_y, distortion }) => {
                check_indices(x, x_net)?;
                check_indices(y, y_net)?;
                if x_net.len() != y_net.len() {
                    return Err(ReplayError::NetSizeMismatch(x_net.len(), y_net.len()));
                }
                same("r_x", *r_x, open_net_radius(x, x_net))?;
                same("r_y", *r_y, open_net_radius(y, y_net))?;
                same("distortion", *distortion, tuple_distortion(x, x_net, y, y_net))?;
                same("value", self.value, 3.0 * r_x.max(*r_y).max(*distortion))
            }
            (BoundKind::Lower, Evidence::CapCov { epsilon, cov_upper, cap_lower, cover_x, packing_y }) => {
                check_indices(x, cover_x)?;
                check_indices(y, packing_y)?;
                same("value", self.value, *epsilon)?;
                if *cov_upper != cover_x.len() {
                    return Err(ReplayError::CountMismatch {
                        what: "cov_upper",
                        stored: *cov_upper,
                        replayed: cover_x.len(),
                    });
                }
                if *cap_lower != packing_y.len() {
                    return Err(ReplayError::CountMismatch {
                        what: "cap_lower",
                        stored: *cap_lower,
                        replayed: packing_y.len(),
                    });
                }
                if !covers(x, cover_x, *epsilon) {
                    return Err(ReplayError::NotACover(*epsilon));
                }
                if !is_packing(y, packing_y, 3.0 * epsilon) {
                    return Err(ReplayError::NotAPacking(3.0 * epsilon));
                }
                if cover_x.len() >= packing_y.len() {
                    return Err(ReplayError::NoGap(cover_x.len(), packing_y.len()));
                }
                Ok(())
            }
            (BoundKind::Lower, Evidence::NetDistortion { epsilon, x_net, .. }) => {
                check_indices(x, x_net)?;
                same("value", self.value, *epsilon)?;
                if !covers(x, x_net, *epsilon) {
                    return Err(ReplayError::NotACover(*epsilon));
                }
                match crate::gh::find_matching_tuple(x, x_net, y, 2.0 * epsilon) {
                    None => Ok(()),
                    Some(_) => Err(ReplayError::TupleFound(2.0 * epsilon)),
                }
            }
            _ => Err(ReplayError::KindMismatch),
        }
    }
}
