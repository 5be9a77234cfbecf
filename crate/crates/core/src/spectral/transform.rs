//! Three-dimensional FFT on the cubic grid and the physical/spectral
//! transform pair.
//!
//! Normalization follows the Fourier-coefficient convention
//! `ψ̂(ζ) = L⁻³ ∫ e^{-i(y,ζ)} ψ(y) dy`: the forward transform divides by
//! `N³`, the inverse transform is the plain Fourier sum.
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::spectral::{Lattice, SpectralField};

pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized forward transform in place.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, self.forward.as_ref());
    }

    /// Unnormalized inverse transform in place (the Fourier sum).
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, self.inverse.as_ref());
    }

    fn run(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n * n);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // innermost axis is contiguous
        fft.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::default(); n];
        for stride in [n, n * n] {
            for outer in 0..(n * n * n) / (n * stride) {
                for inner in 0..stride {
                    let start = outer * n * stride + inner;
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = data[start + t * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (t, v) in line.iter().enumerate() {
                        data[start + t * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Point values of a vector field on the uniform `N³` grid
/// `x = L·(a, b, c)/N`.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    pub lattice: Lattice,
    pub values: [Vec<f64>; 3],
}

impl PhysicalField {
    pub fn new(lattice: &Lattice, values: [Vec<f64>; 3]) -> Result<Self> {
        for v in &values {
            if v.len() != lattice.len() {
                return Err(Error::GridSize { expected: lattice.len(), got: v.len() });
            }
        }
        Ok(PhysicalField { lattice: lattice.clone(), values })
    }

    /// Grid mean of `|u(x)|²`.
    pub fn mean_square(&self) -> f64 {
        let n = self.values[0].len() as f64;
        self.values.iter().flat_map(|c| c.iter()).map(|v| v * v).sum::<f64>() / n
    }
}

/// Evaluates the Fourier series on the physical grid.
pub fn to_physical(u: &SpectralField) -> PhysicalField {
    let lattice = u.lattice().clone();
    let values = std::array::from_fn(|c| {
        let mut buf = u.component(c).to_vec();
        lattice.fft().inverse(&mut buf);
        buf.iter().map(|z| z.re).collect()
    });
    PhysicalField { lattice, values }
}

/// Fourier coefficients of grid data. The mean is discarded and the
/// reality condition is enforced on the result.
pub fn from_physical(grid: &PhysicalField) -> Result<SpectralField> {
    let lattice = &grid.lattice;
    for v in &grid.values {
        if v.len() != lattice.len() {
            return Err(Error::GridSize { expected: lattice.len(), got: v.len() });
        }
    }
    let scale = 1.0 / lattice.len() as f64;
    let coeffs = std::array::from_fn(|c| {
        let mut buf: Vec<Complex64> = grid.values[c].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        lattice.fft().forward(&mut buf);
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    });
    Ok(SpectralField::from_raw(lattice, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_solenoidal_field;
    use std::f64::consts::TAU;

    #[test]
    fn round_trip_on_random_field() {
        let lat = Lattice::new(TAU, 16).unwrap();
        let u = random_solenoidal_field(&lat, -1.0, 1.0, 3);
        let back = from_physical(&to_physical(&u)).unwrap();
        let err = back.sub(&u).norm(0.0) / u.norm(0.0);
        assert!(err <= 1e-13, "relative round-trip error {err:e}");
    }

    #[test]
    fn constant_grid_maps_to_zero_field() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let grid = PhysicalField::new(&lat, std::array::from_fn(|_| vec![1.0; lat.len()])).unwrap();
        let u = from_physical(&grid).unwrap();
        assert_eq!(u.norm(0.0), 0.0);
    }

    #[test]
    fn cosine_wave_has_half_amplitude_coefficients() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let a = 0.75;
        let n = lat.n();
        let mut first = vec![0.0; lat.len()];
        for ia in 0..n {
            for ib in 0..n {
                for ic in 0..n {
                    // ζ0 = (0, 1, 0): a wave along y, first component
                    let y = TAU * ib as f64 / n as f64;
                    first[lat.index(ia, ib, ic)] = 2.0 * a * y.cos();
                }
            }
        }
        let grid = PhysicalField::new(&lat, [first, vec![0.0; lat.len()], vec![0.0; lat.len()]]).unwrap();
        let u = from_physical(&grid).unwrap();
        let plus = lat.index_of([0, 1, 0]).unwrap();
        let minus = lat.index_of([0, -1, 0]).unwrap();
        assert!((u.component(0)[plus] - Complex64::new(a, 0.0)).norm() < 1e-14);
        assert!((u.component(0)[minus] - Complex64::new(a, 0.0)).norm() < 1e-14);
        assert!((u.norm(0.0) - a * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn grid_size_mismatch_is_rejected() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let err = PhysicalField::new(&lat, std::array::from_fn(|_| vec![0.0; 10])).unwrap_err();
        assert!(matches!(err, Error::GridSize { .. }));
        let bad = PhysicalField { lattice: lat, values: std::array::from_fn(|_| vec![0.0; 3]) };
        assert!(from_physical(&bad).is_err());
    }

    #[test]
    fn parseval_matches_grid_mean() {
        let lat = Lattice::new(TAU, 16).unwrap();
        let u = random_solenoidal_field(&lat, -2.0, 1.0, 11);
        let phys = to_physical(&u);
        let lhs = u.norm(0.0).powi(2);
        let rhs = phys.mean_square();
        assert!(((lhs - rhs) / lhs).abs() <= 1e-12);
    }
}
