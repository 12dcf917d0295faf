//! Scalar differential invariants for four-dimensional metrics with two
//! commuting, orthogonally transitive Killing vector fields, and a
//! signature-based decision procedure for local isometric equivalence.
//!
//! The pipeline evaluates metric coefficients as jets (truncated Taylor
//! expansions), builds the invariant forms and frame of the orbit surface,
//! derives first- and second-order scalar invariants, and compares two
//! metrics by sampling the remaining invariants over a chart made of two
//! functionally independent ones.

// Indexed loops over tensor components read better than iterator chains
// throughout the geometry kernels.
#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod equivalence;
pub mod error;
pub mod expr;
pub mod genericity;
pub mod highprec;
pub mod identities;
pub mod invariants;
pub mod jets;
pub mod jsonfmt;
pub mod metric;
pub mod oracle;
pub mod surface;
pub mod vacuum;
pub mod wlp;

pub use error::{Error, Result};
