//! Fourier representation of periodic, mean-zero, divergence-free vector
//! fields on the cube of side `L`, and their Sobolev-scale norms.

mod field;
mod lattice;
mod random;
mod transform;

pub use field::{divergence_max, galerkin_truncate, leray_project, sobolev_norm, SpectralField};
pub(crate) use field::weight;
pub use lattice::{Controls, Lattice};
pub use random::{random_band_limited_field, random_solenoidal_field, unit_shell_field};
pub use transform::{from_physical, to_physical, PhysicalField};
