//! Property suites and convergence studies, each reported as named checks
//! with a measured value, a tolerance and a runtime.

mod report;
mod studies;
mod suite;

pub use report::{Bound, Check, Status, VerifyReport};
pub use studies::{
    continuity_probe, deviation, dt_refinement_study, holder_quotient, mu_sweep, ContinuityTable, DtStudy, MuSweep,
    ProbeRow,
};
pub use suite::{run_invariant_suite, ALGEBRAIC_TOL, ENERGY_RESIDUAL_CONSTANT};
