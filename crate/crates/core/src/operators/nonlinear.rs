use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Pseudo-spectral `(adv·∇)v` before projection.
///
/// Derivatives are taken spectrally (`∂_j ↦ iζ_j`), products on the grid.
/// With dealiasing on, inputs and output are masked by the 2/3 rule, which
/// makes the result equal to the truncated convolution sum.
pub fn advective_product(adv: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let lat = adv.lattice().clone();
    if !lat.same_as(v.lattice()) {
        return Err(Error::LatticeMismatch);
    }
    let dealias = lat.controls().dealias;
    let (adv, v) = if dealias { (adv.dealiased(), v.dealiased()) } else { (adv.clone(), v.clone()) };
    let fft = lat.fft();
    let len = lat.len();

    let adv_phys: Vec<Vec<f64>> = (0..3)
        .map(|j| {
            let mut buf = adv.component(j).to_vec();
            fft.inverse(&mut buf);
            buf.iter().map(|z| z.re).collect()
        })
        .collect();

    let axis = lat.axis_zeta();
    let n = lat.n();
    let zeta_j = |idx: usize, j: usize| {
        let k = match j {
            0 => idx / (n * n),
            1 => (idx / n) % n,
            _ => idx % n,
        };
        axis[k]
    };

    let scale = 1.0 / len as f64;
    let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| Vec::new());
    let mut deriv = vec![Complex64::default(); len];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = vec![0.0f64; len];
        let vi = v.component(i);
        for (j, aj) in adv_phys.iter().enumerate() {
            for (idx, d) in deriv.iter_mut().enumerate() {
                *d = vi[idx] * Complex64::new(0.0, zeta_j(idx, j));
            }
            fft.inverse(&mut deriv);
            for ((a, &x), d) in acc.iter_mut().zip(aj).zip(&deriv) {
                *a += x * d.re;
            }
        }
        let mut buf: Vec<Complex64> = acc.into_iter().map(|x| Complex64::new(x * scale, 0.0)).collect();
        fft.forward(&mut buf);
        *slot = buf;
    }
    let product = SpectralField::from_raw(&lat, out);
    Ok(if dealias { product.dealiased() } else { product })
}

/// `B(adv, v)`: the Leray projection of `(adv·∇)v`.
#[allow(non_snake_case)]
pub fn nonlinear_B(adv: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let product = advective_product(adv, v)?;
    Ok(if adv.lattice().controls().leray { product.leray_project() } else { product })
}

/// `b(u, v, w) = Σ_{i,j} ∫ u_j ∂_j v_i w_i dx`, including the volume
/// factor `L³` of the coefficient convention.
pub fn trilinear_b(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64> {
    if !u.lattice().same_as(w.lattice()) {
        return Err(Error::LatticeMismatch);
    }
    let product = advective_product(u, v)?;
    let volume = u.lattice().period().powi(3);
    Ok(volume * product.inner(w))
}

/// Whether `(s1, s2, s3)` satisfies the hypotheses of the trilinear bound:
/// pairwise sums `≥ 0` with total `> 3/2`, or pairwise sums `> 0` with
/// total `≥ 3/2`.
pub fn bound_hypotheses_hold(s1: f64, s2: f64, s3: f64) -> bool {
    let pairs = [s1 + s2, s1 + s3, s2 + s3];
    let total = s1 + s2 + s3;
    (pairs.iter().all(|&p| p >= 0.0) && total > 1.5) || (pairs.iter().all(|&p| p > 0.0) && total >= 1.5)
}

/// `|b(u,v,w)| / (‖u‖_{s1} ‖v‖_{s2+1} ‖w‖_{s3})`.
pub fn bound_ratio(u: &SpectralField, v: &SpectralField, w: &SpectralField, s1: f64, s2: f64, s3: f64) -> Result<f64> {
    if !bound_hypotheses_hold(s1, s2, s3) {
        return Err(Error::Hypothesis(s1, s2, s3));
    }
    let denom = u.norm(s1) * v.norm(s2 + 1.0) * w.norm(s3);
    if denom == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(trilinear_b(u, v, w)?.abs() / denom)
}

/// Bilinear form evaluated with the coefficient pairing: `⟨B(adv, v), w⟩`
/// without the volume factor, consistent with the norms of this crate.
pub fn pair_b(adv: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64> {
    Ok(nonlinear_B(adv, v)?.inner(w))
}

/// Helper for the trilinear-form checks: relative size of `b(u,v,v)`.
pub fn vanishing_residual(u: &SpectralField, v: &SpectralField) -> Result<f64> {
    let b = trilinear_b(u, v, v)?;
    let scale = u.norm(1.0) * v.norm(1.0).powi(2);
    Ok(if scale == 0.0 { b.abs() } else { b.abs() / scale })
}

/// Relative antisymmetry defect `|b(u,v,w) + b(u,w,v)| / (|b(u,v,w)| + |b(u,w,v)|)`,
/// scaled against the norm product when both values are tiny.
pub fn antisymmetry_residual(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64> {
    let a = trilinear_b(u, v, w)?;
    let b = trilinear_b(u, w, v)?;
    let scale = (a.abs() + b.abs()).max(u.norm(1.0) * v.norm(1.0) * w.norm(1.0) * f64::EPSILON);
    Ok(if scale == 0.0 { 0.0 } else { (a + b).abs() / scale })
}
