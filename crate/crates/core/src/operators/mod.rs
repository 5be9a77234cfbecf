//! Stokes operator and its multipliers, the trilinear form `b`, the
//! bilinear operator `B`, and a direct-convolution oracle for `B`.

mod nonlinear;
mod oracle;
mod stokes;

pub use nonlinear::{
    advective_product, antisymmetry_residual, bound_hypotheses_hold, bound_ratio, nonlinear_B, pair_b, trilinear_b,
    vanishing_residual,
};
pub use oracle::{convolution_B_oracle, ORACLE_MAX_N};
pub use stokes::{integrating_factor, stokes_apply, StokesMultiplier};
