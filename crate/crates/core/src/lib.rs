//! Equivariant U(1)-bundles over finite-dimensional parameter spaces.
//!
//! Bundles live in a reference trivialization: a group action, a cocycle
//! α with values in R/Z and a connection 1-form ρ. On top of that the crate
//! computes equivariant holonomy, Cartan-model equivariant curvature, and
//! searches for certificates that an anomaly cancels, both for arbitrary
//! sections and for sections given by local functionals on a lattice.

pub mod bundle;
pub mod cli;
pub mod dsl;
pub mod error;
pub mod geometry;
pub mod holonomy;
pub mod linalg;
pub mod locality;
pub mod probes;
pub mod report;
pub mod scenario;
pub mod selftest;
pub mod solvers;

pub use error::{Error, Result};
