//! Snapshot-based modal identification and damage indexing for beam
//! structures.
//!
//! The library covers the full desk-scale workflow:
//!
//! - [`beam`]: analytic Euler-Bernoulli cantilever synthesis with a
//!   parametric damage model, doubling as the ground-truth oracle.
//! - [`snapshots`]: CSV / PGM-frame ingestion, Hankel delay embedding,
//!   train/test splitting, and SVD cumulative-energy curves.
//! - [`dmd`]: rank-truncated dynamic mode decomposition with spectrum,
//!   prediction, and eigenvalue-geometry metrics.
//! - [`features`]: realified mode-shape profiles and the MS / MSS / MSC /
//!   MSCS spatial feature families, plus baseline-to-current mode matching.
//! - [`damage`]: variance-weighted baseline references and the
//!   Mahalanobis-type damage index Q.

pub mod beam;
pub mod damage;
pub mod dmd;
pub mod error;
pub mod features;
pub mod linalg;
pub mod snapshots;

pub use error::{Error, Result};
