use crate::error::{Error, Result};
use crate::spectral::{weight, Lattice, SpectralField};

/// A real, even, per-mode multiplier: a power of the Stokes operator or an
/// integrating factor `e^{-ντ|ζ|²}`.
#[derive(Clone, Debug)]
pub struct StokesMultiplier {
    lattice: Lattice,
    values: Vec<f64>,
}

impl StokesMultiplier {
    /// `A^s`: the multiplier `|ζ|^{2s}`, zero on the mean mode.
    pub fn power(lattice: &Lattice, s: f64) -> Self {
        let zsq = lattice.zeta_sq();
        let values = (0..lattice.len()).map(|idx| if idx == 0 { 0.0 } else { weight(zsq[idx], s) }).collect();
        StokesMultiplier { lattice: lattice.clone(), values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        assert!(self.lattice.same_as(u.lattice()), "multiplier and field live on different lattices");
        u.scale_modes(|idx| self.values[idx])
    }

    /// Pointwise product of two multipliers.
    pub fn then(&self, other: &StokesMultiplier) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        StokesMultiplier { lattice: self.lattice.clone(), values }
    }
}

/// Exact solution operator of `u' + νAu = 0` over a time `tau`.
pub fn integrating_factor(lattice: &Lattice, nu: f64, tau: f64) -> Result<StokesMultiplier> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Study(format!("viscosity must be positive, got {nu}")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Study(format!("integrating-factor time must be non-negative, got {tau}")));
    }
    let values = lattice.zeta_sq().iter().map(|z| (-nu * tau * z).exp()).collect();
    Ok(StokesMultiplier { lattice: lattice.clone(), values })
}

/// `A^s u`, i.e. `û(ζ) ↦ |ζ|^{2s} û(ζ)`.
pub fn stokes_apply(u: &SpectralField, s: f64) -> SpectralField {
    StokesMultiplier::power(u.lattice(), s).apply(u)
}
