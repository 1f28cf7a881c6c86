//! Certificate searches for the triviality criteria and the verdict pipeline.
//!
//! Every search is a linear least-squares problem over a finite ansatz,
//! with integer unknowns where a condition only holds mod 1. A certificate
//! is accepted when the fit residual (RMS) is below `tol_fit` and the
//! residual on held-out probes (max) is below `tol_holdout`. A missing
//! certificate only says the ansatz was too small.

mod ansatz;
mod coboundary;
mod fit;
mod fixed;
mod kmember;
mod outcome;
mod pipeline;
mod primitive;

pub use ansatz::{
    multi_indices, polynomial_labels, FormAnsatz, FormItem, ScalarAnsatz, ScalarItem, CONDITION_LIMIT, PRUNE_TOL,
};
pub use coboundary::{solve_group_coboundary, solve_lie_coboundary};
pub use fit::{solve_mixed, MixedSolution};
pub use fixed::{find_zeros, fixed_point_obstruction, FixedPointWitness};
pub use kmember::{k_matrix, k_membership, KMembership, MEMBERSHIP_TOL, PERIOD_ZERO};
pub use outcome::{Certificate, NoCertificate, Outcome, Term};
pub use pipeline::{
    induced_section, validate_beta, verdict, FinalBeta, StageRecord, StageStatus, ValidationReport, Verdict, VerdictInputs,
    VerdictReport,
};
pub use primitive::{bent_path_to_image, path_to_image, sigma_obstruction, solve_equivariant_primitive, InvarianceScope, PrimitiveOptions, SigmaResult};

use serde::{Deserialize, Serialize};

/// Resolved solver settings, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub seed: u64,
    pub probes: usize,
    pub holdout: usize,
    pub tol_fit: f64,
    pub tol_holdout: f64,
    pub max_word_len: usize,
    pub quad_samples: usize,
    pub max_integer: i64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 7,
            probes: 256,
            holdout: 256,
            tol_fit: 1e-6,
            tol_holdout: 1e-5,
            max_word_len: 3,
            quad_samples: 512,
            max_integer: 16,
        }
    }
}

#[cfg(test)]
mod tests;
