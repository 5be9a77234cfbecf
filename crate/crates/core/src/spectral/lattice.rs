use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::transform::Fft3;

/// Switches for the two safeguards of the nonlinear term.
///
/// Both are on in every production path; turning one off exists so the
/// verification suite can run negative controls against itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Controls {
    /// Apply the 2/3-rule mask before and after every quadratic product.
    pub dealias: bool,
    /// Leray-project the nonlinear term and the stepped state.
    pub leray: bool,
}

impl Default for Controls {
    fn default() -> Self {
        Controls { dealias: true, leray: true }
    }
}

/// Truncated wavenumber lattice of the periodic cube of side `L` with `N`
/// modes per direction.
///
/// Storage index `k` in `0..N` maps to the signed wavenumber
/// `k̃ ∈ {-N/2+1, .., N/2}` and the frequency `ζ = 2π k̃ / L`. Modes are
/// stored row-major: `idx = (kx * N + ky) * N + kz`.
#[derive(Clone)]
pub struct Lattice(Arc<Inner>);

struct Inner {
    period: f64,
    n: usize,
    controls: Controls,
    signed: Vec<i64>,
    axis_zeta: Vec<f64>,
    zeta_sq: Vec<f64>,
    retained: Vec<bool>,
    partner: Vec<usize>,
    fft: Fft3,
}

impl Lattice {
    /// Builds the lattice for period `period` and `n` modes per axis.
    pub fn new(period: f64, n: usize) -> Result<Self> {
        Self::with_controls(period, n, Controls::default())
    }

    pub fn with_controls(period: f64, n: usize, controls: Controls) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidLattice(format!("period L = {period} must be positive")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidLattice(format!("N = {n} must be even and at least 4")));
        }
        let half = (n / 2) as i64;
        let signed: Vec<i64> = (0..n as i64).map(|k| if k <= half { k } else { k - n as i64 }).collect();
        let axis_zeta: Vec<f64> = signed.iter().map(|&k| 2.0 * PI * k as f64 / period).collect();
        let cutoff = (n / 3) as i64;

        let total = n * n * n;
        let mut zeta_sq = Vec::with_capacity(total);
        let mut retained = Vec::with_capacity(total);
        let mut partner = Vec::with_capacity(total);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let z = axis_zeta[a] * axis_zeta[a] + axis_zeta[b] * axis_zeta[b] + axis_zeta[c] * axis_zeta[c];
                    zeta_sq.push(z);
                    let inside = [a, b, c].iter().all(|&k| signed[k].abs() <= cutoff);
                    retained.push(!controls.dealias || inside);
                    let (pa, pb, pc) = ((n - a) % n, (n - b) % n, (n - c) % n);
                    partner.push((pa * n + pb) * n + pc);
                }
            }
        }

        Ok(Lattice(Arc::new(Inner {
            period,
            n,
            controls,
            signed,
            axis_zeta,
            zeta_sq,
            retained,
            partner,
            fft: Fft3::new(n),
        })))
    }

    pub fn period(&self) -> f64 {
        self.0.period
    }

    /// Modes per axis.
    pub fn n(&self) -> usize {
        self.0.n
    }

    /// Total number of stored modes, `N³`.
    pub fn len(&self) -> usize {
        self.0.zeta_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn controls(&self) -> Controls {
        self.0.controls
    }

    /// Largest `|k̃_i|` kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.0.n / 3
    }

    pub fn index(&self, ka: usize, kb: usize, kc: usize) -> usize {
        let n = self.0.n;
        (ka * n + kb) * n + kc
    }

    /// Storage index of a signed wavenumber; `None` when it is not representable.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.0.n as i64;
        let half = n / 2;
        let mut out = [0usize; 3];
        for (o, &ki) in out.iter_mut().zip(k.iter()) {
            if ki <= -half || ki > half {
                return None;
            }
            *o = ki.rem_euclid(n) as usize;
        }
        Some(self.index(out[0], out[1], out[2]))
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let n = self.0.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Signed wavenumber `k̃` of a storage index.
    pub fn signed(&self, idx: usize) -> [i64; 3] {
        let [a, b, c] = self.unindex(idx);
        [self.0.signed[a], self.0.signed[b], self.0.signed[c]]
    }

    /// Frequency vector `ζ = 2π k̃ / L`.
    pub fn zeta(&self, idx: usize) -> [f64; 3] {
        let [a, b, c] = self.unindex(idx);
        [self.0.axis_zeta[a], self.0.axis_zeta[b], self.0.axis_zeta[c]]
    }

    pub fn axis_zeta(&self) -> &[f64] {
        &self.0.axis_zeta
    }

    /// `|ζ|²` per mode.
    pub fn zeta_sq(&self) -> &[f64] {
        &self.0.zeta_sq
    }

    /// Dealiasing mask: true for modes that survive the 2/3 rule
    /// (every mode when dealiasing is switched off).
    pub fn retained(&self) -> &[bool] {
        &self.0.retained
    }

    /// Index of the mode holding the conjugate partner `-k̃`.
    pub fn partner(&self, idx: usize) -> usize {
        self.0.partner[idx]
    }

    pub(crate) fn fft(&self) -> &Fft3 {
        &self.0.fft
    }

    /// Smallest nonzero `|ζ|`.
    pub fn min_zeta(&self) -> f64 {
        2.0 * PI / self.0.period
    }

    /// Two lattices are compatible when they describe the same discretization.
    pub fn same_as(&self, other: &Lattice) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.n == other.0.n
                && self.0.period.to_bits() == other.0.period.to_bits()
                && self.0.controls == other.0.controls)
    }
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("period", &self.0.period)
            .field("n", &self.0.n)
            .field("controls", &self.0.controls)
            .finish()
    }
}
