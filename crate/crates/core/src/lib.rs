//! Kaczmarz solvers for consistent linear systems `Ax = b`, with random
//! reshuffling (RRK), shuffle-once (SOK), incremental (IK) and
//! with-replacement (RK) row selection, plus tools that build each epoch's
//! iteration matrix and check the resulting contraction bounds on live runs.
//!
//! ```
//! use kaczlab::{solve, generate_synthetic, SolverConfig, Variant};
//!
//! let inst = generate_synthetic(20, 8, 8, 1).unwrap();
//! let cfg = SolverConfig::new(Variant::Rrk).with_seed(7).with_max_epochs(50);
//! let report = solve(&inst.matrix, &inst.rhs, &[0.0; 8], &cfg).unwrap();
//! assert_eq!(report.traces.len(), report.epochs_run);
//! assert!(report.final_rse < 1.0);
//! ```

pub mod analysis;
pub mod error;
pub mod io;
pub mod linalg;
pub mod permutation;
pub mod rng;
pub mod solver;

pub use analysis::{
    contraction_factor, epoch_operator, iteration_matrix, least_norm_solution, projected_start,
    rho_rk, rho_rrk, rho_rrk_sampled, rse, verify_trace_bounds, EpochCheck, EpochOperator,
    RateAnalyzer, RateEntry, RateTable, SpectralSummary, DEFAULT_ENUMERATION_LIMIT,
};
pub use error::{Error, Result};
pub use io::{generate_synthetic, ProblemInstance};
pub use linalg::DenseMatrix;
pub use permutation::{identity_permutation, random_permutation, weighted_row_index, Permutation};
pub use rng::Rng;
pub use solver::{
    project_row, rr_sgd_epoch, run_epoch, solve, EpochTrace, RowSchedule, SolveReport,
    SolverConfig, StopReason, Variant,
};
