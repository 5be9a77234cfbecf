//! Pseudo-spectral solver for the incompressible Navier–Stokes equations on
//! the periodic cube with a constant delay in the convective term, plus the
//! verification harness that exercises its analytical properties.
//!
//! The layers, bottom up:
//!
//! * [`spectral`]: lattice, Fourier fields, norms, Leray projection, transforms
//! * [`operators`]: Stokes multipliers, the trilinear form and `B(u, v)`
//! * [`linearized`]: integrating-factor Heun stepper for `u' + νAu + B(ψ, u) = f`
//! * [`delay`]: method-of-steps solver, history segments, the semigroup
//! * [`reference`]: undelayed solver and the μ→0 splitting diagnostics
//! * [`verify`]: property suites and convergence studies
//! * [`io`]: configuration, checkpoints, diagnostics, CLI plumbing

pub mod delay;
pub mod error;
pub mod io;
pub mod linearized;
pub mod operators;
pub mod reference;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
