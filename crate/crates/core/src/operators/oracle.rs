use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Largest `N` the quadratic-cost oracle accepts.
pub const ORACLE_MAX_N: usize = 16;

/// Direct convolution evaluation of `B(adv, v)`.
///
/// Sums `Σ_j â_j(ζ) (iη_j) v̂_i(η)` over all pairs of retained modes and
/// accumulates into `ζ + η` when that mode is retained; no FFT is involved.
/// The result is Leray-projected.
#[allow(non_snake_case)]
pub fn convolution_B_oracle(adv: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let lat = adv.lattice().clone();
    if !lat.same_as(v.lattice()) {
        return Err(Error::LatticeMismatch);
    }
    if lat.n() > ORACLE_MAX_N {
        return Err(Error::CostGuard(lat.n()));
    }
    let mask = lat.retained();
    let support: Vec<usize> = (1..lat.len()).filter(|&idx| mask[idx]).collect();
    let adv_modes: Vec<(usize, [Complex64; 3])> =
        support.iter().map(|&idx| (idx, adv.mode(idx))).filter(|(_, m)| m.iter().any(|z| z.norm_sqr() > 0.0)).collect();
    let v_modes: Vec<(usize, [Complex64; 3])> =
        support.iter().map(|&idx| (idx, v.mode(idx))).filter(|(_, m)| m.iter().any(|z| z.norm_sqr() > 0.0)).collect();

    let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); lat.len()]);
    for &(ia, a) in &adv_modes {
        let ka = lat.signed(ia);
        for &(iv, vm) in &v_modes {
            let kv = lat.signed(iv);
            let target = match lat.index_of([ka[0] + kv[0], ka[1] + kv[1], ka[2] + kv[2]]) {
                Some(t) if mask[t] => t,
                _ => continue,
            };
            let eta = lat.zeta(iv);
            // (â·iη)
            let a_dot_eta = Complex64::new(0.0, 1.0) * (a[0] * eta[0] + a[1] * eta[1] + a[2] * eta[2]);
            for c in 0..3 {
                out[c][target] += a_dot_eta * vm[c];
            }
        }
    }
    Ok(SpectralField::from_raw(&lat, out).leray_project())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::nonlinear_B;
    use crate::spectral::{random_solenoidal_field, Lattice};
    use std::f64::consts::TAU;

    #[test]
    fn zero_advector() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let v = random_solenoidal_field(&lat, -1.0, 1.0, 3);
        assert_eq!(convolution_B_oracle(&SpectralField::zeros(&lat), &v).unwrap().norm(0.0), 0.0);
    }

    #[test]
    fn agrees_with_pseudo_spectral_product() {
        let lat = Lattice::new(TAU, 8).unwrap();
        for seed in 0..20u64 {
            let adv = random_solenoidal_field(&lat, -1.0, 1.0, 2 * seed);
            let v = random_solenoidal_field(&lat, -1.0, 1.0, 2 * seed + 1);
            let fast = nonlinear_B(&adv, &v).unwrap();
            let slow = convolution_B_oracle(&adv, &v).unwrap();
            let err = fast.sub(&slow).norm(0.0) / slow.norm(0.0);
            assert!(err <= 1e-12, "seed {seed}: {err:e}");
        }
    }

    #[test]
    fn output_vanishes_outside_mask() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let adv = random_solenoidal_field(&lat, 0.0, 1.0, 1);
        let v = random_solenoidal_field(&lat, 0.0, 1.0, 2);
        let out = convolution_B_oracle(&adv, &v).unwrap();
        for idx in 0..lat.len() {
            if !lat.retained()[idx] {
                assert!(out.mode(idx).iter().all(|z| *z == Complex64::default()));
            }
        }
    }

    #[test]
    fn refuses_large_lattices() {
        let lat = Lattice::new(TAU, 18).unwrap();
        let u = SpectralField::zeros(&lat);
        assert!(matches!(convolution_B_oracle(&u, &u), Err(Error::CostGuard(18))));
    }
}
