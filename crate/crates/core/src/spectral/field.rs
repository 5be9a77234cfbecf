use std::collections::HashSet;

use num_complex::Complex64;

use crate::spectral::Lattice;

/// Modes whose divergence is below this multiple of `ε·|ζ|·|û|` count as
/// solenoidal already; the projector leaves them untouched so that it is
/// idempotent bit for bit.
const SOLENOIDAL_SLACK: f64 = 64.0 * f64::EPSILON;

/// A real, mean-zero vector field stored as Fourier coefficients on a lattice.
///
/// Every constructor enforces `û(0) = 0` and `û(-ζ) = conj(û(ζ))`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    lattice: Lattice,
    coeffs: [Vec<Complex64>; 3],
}

impl SpectralField {
    pub fn zeros(lattice: &Lattice) -> Self {
        SpectralField {
            lattice: lattice.clone(),
            coeffs: std::array::from_fn(|_| vec![Complex64::default(); lattice.len()]),
        }
    }

    /// Wraps raw coefficients, enforcing the mean-zero and reality conditions.
    ///
    /// # Panics
    /// If a component does not have `N³` entries.
    pub fn from_raw(lattice: &Lattice, coeffs: [Vec<Complex64>; 3]) -> Self {
        for c in &coeffs {
            assert_eq!(c.len(), lattice.len(), "component length does not match lattice");
        }
        let mut f = SpectralField { lattice: lattice.clone(), coeffs };
        f.symmetrize();
        f
    }

    /// Single conjugate pair `û_c(±k̃) = amplitude` (a cosine wave of
    /// peak `2·amplitude` in component `c`), not projected.
    pub fn single_mode(lattice: &Lattice, k: [i64; 3], component: usize, amplitude: f64) -> Option<Self> {
        let idx = lattice.index_of(k)?;
        let mut f = SpectralField::zeros(lattice);
        let p = lattice.partner(idx);
        f.coeffs[component][idx] = Complex64::new(amplitude, 0.0);
        f.coeffs[component][p] = Complex64::new(amplitude, 0.0);
        f.symmetrize();
        Some(f)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.coeffs[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.coeffs
    }

    /// Mode vector `û(ζ)` at a storage index.
    pub fn mode(&self, idx: usize) -> [Complex64; 3] {
        [self.coeffs[0][idx], self.coeffs[1][idx], self.coeffs[2][idx]]
    }

    /// Wraps coefficients as they are; callers check the reality condition.
    pub(crate) fn from_parts(lattice: &Lattice, coeffs: [Vec<Complex64>; 3]) -> Self {
        SpectralField { lattice: lattice.clone(), coeffs }
    }

    /// Restores `û(0) = 0` and exact Hermitian symmetry.
    pub(crate) fn symmetrize(&mut self) {
        let lat = self.lattice.clone();
        for comp in self.coeffs.iter_mut() {
            comp[0] = Complex64::default();
            for idx in 1..comp.len() {
                let p = lat.partner(idx);
                if p == idx {
                    comp[idx].im = 0.0;
                } else if idx < p {
                    let avg = (comp[idx] + comp[p].conj()) * 0.5;
                    comp[idx] = avg;
                    comp[p] = avg.conj();
                }
            }
        }
    }

    fn map_modes(&self, mut f: impl FnMut(usize, [Complex64; 3]) -> [Complex64; 3]) -> Self {
        let mut out = SpectralField::zeros(&self.lattice);
        for idx in 0..self.lattice.len() {
            let v = f(idx, self.mode(idx));
            for c in 0..3 {
                out.coeffs[c][idx] = v[c];
            }
        }
        out
    }

    /// Multiplies every mode by a real even multiplier.
    pub fn scale_modes(&self, multiplier: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for comp in out.coeffs.iter_mut() {
            for (idx, z) in comp.iter_mut().enumerate() {
                *z *= multiplier(idx);
            }
        }
        out
    }

    /// Zeroes every mode outside the 2/3-rule mask.
    pub fn dealiased(&self) -> Self {
        let mask = self.lattice.retained();
        self.scale_modes(|idx| if mask[idx] { 1.0 } else { 0.0 })
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().flat_map(|c| c.iter_mut()).for_each(|z| *z *= factor);
        out
    }

    /// `self + factor·other`.
    pub fn axpy(&self, factor: f64, other: &SpectralField) -> Self {
        self.zip(other, |a, b| a + b * factor)
    }

    fn zip(&self, other: &SpectralField, op: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert!(self.lattice.same_as(&other.lattice), "fields live on different lattices");
        let coeffs = std::array::from_fn(|c| {
            self.coeffs[c].iter().zip(&other.coeffs[c]).map(|(&a, &b)| op(a, b)).collect()
        });
        SpectralField { lattice: self.lattice.clone(), coeffs }
    }

    /// Dot-space Sobolev norm `(Σ_{ζ≠0} |ζ|^{2s} |û(ζ)|²)^{1/2}`.
    pub fn norm(&self, s: f64) -> f64 {
        self.norm_sq(s).sqrt()
    }

    pub fn norm_sq(&self, s: f64) -> f64 {
        let zsq = self.lattice.zeta_sq();
        let mut acc = 0.0;
        for idx in 1..self.lattice.len() {
            let w = self.mode(idx).iter().map(|z| z.norm_sqr()).sum::<f64>();
            if w != 0.0 {
                acc += weight(zsq[idx], s) * w;
            }
        }
        acc
    }

    /// Coefficient inner product `Re Σ û·conj(v̂)`, the pairing under
    /// which `‖u‖₀² = ⟨u, u⟩`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        assert!(self.lattice.same_as(&other.lattice), "fields live on different lattices");
        let mut acc = 0.0;
        for c in 0..3 {
            for (a, b) in self.coeffs[c].iter().zip(&other.coeffs[c]) {
                acc += a.re * b.re + a.im * b.im;
            }
        }
        acc
    }

    /// Weighted pairing `Re Σ |ζ|^{2s} û·conj(v̂)` (the `V^s` inner product).
    pub fn inner_s(&self, other: &SpectralField, s: f64) -> f64 {
        assert!(self.lattice.same_as(&other.lattice), "fields live on different lattices");
        let zsq = self.lattice.zeta_sq();
        let mut acc = 0.0;
        for idx in 1..self.lattice.len() {
            let mut m = 0.0;
            for c in 0..3 {
                let (a, b) = (self.coeffs[c][idx], other.coeffs[c][idx]);
                m += a.re * b.re + a.im * b.im;
            }
            if m != 0.0 {
                acc += weight(zsq[idx], s) * m;
            }
        }
        acc
    }

    /// `max_ζ |ζ·û(ζ)|`.
    pub fn divergence_max(&self) -> f64 {
        let mut worst = 0.0f64;
        for idx in 1..self.lattice.len() {
            let z = self.lattice.zeta(idx);
            let u = self.mode(idx);
            let d = u[0] * z[0] + u[1] * z[1] + u[2] * z[2];
            worst = worst.max(d.norm());
        }
        worst
    }

    /// Leray (Helmholtz) projection `û ↦ û − ζ(ζ·û)/|ζ|²`.
    pub fn leray_project(&self) -> Self {
        let lat = self.lattice.clone();
        let zsq = lat.zeta_sq();
        self.map_modes(|idx, u| {
            if idx == 0 {
                return [Complex64::default(); 3];
            }
            let z = lat.zeta(idx);
            let div = u[0] * z[0] + u[1] * z[1] + u[2] * z[2];
            let size = (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt();
            if div.norm() <= SOLENOIDAL_SLACK * zsq[idx].sqrt() * size {
                return u;
            }
            let c = div / zsq[idx];
            [u[0] - c * z[0], u[1] - c * z[1], u[2] - c * z[2]]
        })
    }

    /// Projection onto the first `m` Stokes eigenmodes.
    ///
    /// Eigenmodes are counted by conjugate pair `{k̃, −k̃}` so that the
    /// result stays real: pairs are ranked by `|k̃|²`, ties broken by the
    /// lexicographic order of the larger representative of the pair.
    pub fn galerkin_truncate(&self, m: usize) -> Self {
        let lat = &self.lattice;
        let key = |idx: usize| {
            let a = lat.signed(idx);
            let b = lat.signed(lat.partner(idx));
            let norm: i64 = a.iter().map(|k| k * k).sum();
            (norm, a.max(b))
        };
        let mut keys: Vec<_> = (1..lat.len()).map(key).collect();
        keys.sort_unstable();
        keys.dedup();
        let kept: HashSet<_> = keys.into_iter().take(m).collect();
        self.scale_modes(|idx| if idx != 0 && kept.contains(&key(idx)) { 1.0 } else { 0.0 })
    }

    /// Whether every coefficient is (signed) zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flat_map(|c| c.iter()).all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Rejects NaN or infinite coefficients.
    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().flat_map(|c| c.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Equality of every coefficient bit pattern.
    pub fn bitwise_eq(&self, other: &SpectralField) -> bool {
        self.lattice.same_as(&other.lattice)
            && self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| {
                a.iter().zip(b).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
            })
    }

    /// Largest deviation from the reality condition (zero for every field
    /// this crate hands out).
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for comp in &self.coeffs {
            worst = worst.max(comp[0].norm());
            for idx in 0..comp.len() {
                let p = self.lattice.partner(idx);
                worst = worst.max((comp[idx] - comp[p].conj()).norm());
            }
        }
        worst
    }
}

/// `|ζ|^{2s}` given `|ζ|²`, with exact shortcuts for the common exponents.
pub(crate) fn weight(zeta_sq: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if s == 1.0 {
        zeta_sq
    } else if s == 2.0 {
        zeta_sq * zeta_sq
    } else if s == -1.0 {
        1.0 / zeta_sq
    } else {
        zeta_sq.powf(s)
    }
}

/// Dot-space Sobolev norm of `u` with exponent `s`.
pub fn sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    u.norm(s)
}

pub fn leray_project(u: &SpectralField) -> SpectralField {
    u.leray_project()
}

pub fn galerkin_truncate(u: &SpectralField, m: usize) -> SpectralField {
    u.galerkin_truncate(m)
}

pub fn divergence_max(u: &SpectralField) -> f64 {
    u.divergence_max()
}
