//! Computational metric geometry on finite samples.
//!
//! The crate computes one-sided, replayable bounds on Gromov-Hausdorff
//! distances between finite metric spaces, packing and covering numbers
//! with exact small-instance solvers, empirical Bishop-measure fits, and
//! the leaf-space machinery needed to separate sampled compact foliations
//! of different leaf dimensions.
//!
//! Everything is built on the [`Metric`] trait: dense validated matrices
//! ([`FiniteMetricSpace`]) and analytic point clouds ([`PointCloud`]) both
//! implement it, so samples with tens of thousands of points never need a
//! materialized distance matrix.

pub mod bishop;
pub mod certificate;
pub mod cloud;
pub mod error;
pub mod foliation;
pub mod generators;
pub mod gh;
pub mod metric;
pub mod nets;
pub mod regression;
pub mod separation;
mod solver;

pub use certificate::{BoundKind, Evidence, GhBoundCertificate, ReplayError};
pub use cloud::{Geometry, PointCloud};
pub use error::{Error, Result};
pub use foliation::{FoliatedSample, LeafSpace, LeafSpaceMode, Model};
pub use metric::{FiniteMetricSpace, Metric};
pub use nets::{CoverMode, CoveringResult, Net, PackMode, PackingResult, SolveMode};
pub use separation::SeparationReport;
