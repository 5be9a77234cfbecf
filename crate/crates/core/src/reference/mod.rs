//! Undelayed Navier–Stokes reference (`B(u,u)`) on the same stepper kernel,
//! and the four-term splitting of the delayed-vs-undelayed nonlinearity.

use crate::error::{Error, Result};
use crate::linearized::{grid_steps, run_self_advected, RunOptions, Stepper, Trajectory};
use crate::delay::HistorySegment;
use crate::operators::pair_b;
use crate::spectral::SpectralField;

/// Solves `u' + νAu + B(u,u) = f` on `[0, T]`; both Heun stages advect with
/// the current stage value.
pub fn solve_nse(u0: &SpectralField, f: &SpectralField, nu: f64, dt: f64, t_end: f64) -> Result<Trajectory> {
    solve_nse_with(u0, f, nu, dt, t_end, RunOptions::default())
}

pub fn solve_nse_with(
    u0: &SpectralField,
    f: &SpectralField,
    nu: f64,
    dt: f64,
    t_end: f64,
    opts: RunOptions,
) -> Result<Trajectory> {
    if !u0.lattice().same_as(f.lattice()) {
        return Err(Error::LatticeMismatch);
    }
    let nsteps = grid_steps(t_end, dt)?;
    let stepper = Stepper::new(u0.lattice(), nu, dt)?;
    run_self_advected(&stepper, u0, f, nsteps, opts)
}

/// The integrals `I₁ … I₄` and the unsplit integral they add up to.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SplittingTerms {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    /// `∫₀ᵀ ⟨B(u^μ(r−μ), u^μ(r)) − B(u(r),u(r)), v⟩ φ(r) dr`.
    pub unsplit: f64,
}

impl SplittingTerms {
    pub fn sum(&self) -> f64 {
        self.i1 + self.i2 + self.i3 + self.i4
    }

    pub fn max_abs(&self) -> f64 {
        [self.i1, self.i2, self.i3, self.i4].iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `|ΣIᵢ − unsplit|`, relative to the size of the terms involved.
    pub fn sum_defect(&self) -> f64 {
        let scale = self.max_abs().max(self.unsplit.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.sum() - self.unsplit).abs() / scale
        }
    }
}

/// `sin²(πt/T)` on the grid `t_k = kΔt`, vanishing at both ends.
pub fn bump_test_function(dt: f64, nsteps: usize) -> Vec<f64> {
    let t_end = nsteps as f64 * dt;
    (0..=nsteps).map(|k| (std::f64::consts::PI * k as f64 * dt / t_end).sin().powi(2)).collect()
}

/// Trapezoid evaluation of
///
/// * `I₁ = ∫₀ᵀ ⟨B(u^μ(r−μ), u^μ(r) − u(r)), v⟩φ`
/// * `I₂ = ∫_μᵀ ⟨B(u^μ(r−μ) − u(r−μ), u(r)), v⟩φ`
/// * `I₃ = ∫_μᵀ ⟨B(u(r−μ) − u(r), u(r)), v⟩φ`
/// * `I₄ = ∫₀^μ ⟨B(u^μ(r−μ) − u(r), u(r)), v⟩φ`, with `u^μ(r−μ) = φ_hist` there.
///
/// Both trajectories must be stored at full resolution on the same grid and
/// `phi_test` must hold one weight per grid time.
pub fn splitting_terms(
    u_delay: &Trajectory,
    u_ref: &Trajectory,
    mu: f64,
    v: &SpectralField,
    phi_test: &[f64],
    phi_hist: &HistorySegment,
) -> Result<SplittingTerms> {
    let dt = u_delay.dt;
    let grid_ok = u_delay.is_full_resolution()
        && u_ref.is_full_resolution()
        && u_delay.len() == u_ref.len()
        && (u_ref.dt - dt).abs() <= 1e-12 * dt
        && phi_test.len() == u_delay.len()
        && (phi_hist.dt() - dt).abs() <= 1e-12 * dt;
    if !grid_ok {
        return Err(Error::Study("splitting needs full-resolution trajectories on one grid".into()));
    }
    let m = grid_steps(mu, dt)?;
    if m != phi_hist.slots() || m == 0 {
        return Err(Error::DelayNotMultiple { mu, dt });
    }
    let k_end = u_delay.len() - 1;
    let weight = |n: usize, lo: usize, hi: usize| -> f64 {
        if n < lo || n > hi || lo == hi {
            0.0
        } else if n == lo || n == hi {
            0.5 * dt
        } else {
            dt
        }
    };

    let mut terms = SplittingTerms::default();
    for n in 0..=k_end {
        let w = phi_test[n];
        if w == 0.0 {
            continue;
        }
        let ud = &u_delay.states[n];
        let u = &u_ref.states[n];
        let ud_lag = if n < m { &phi_hist.samples()[n] } else { &u_delay.states[n - m] };

        terms.i1 += weight(n, 0, k_end) * w * pair_b(ud_lag, &ud.sub(u), v)?;
        terms.unsplit += weight(n, 0, k_end) * w * (pair_b(ud_lag, ud, v)? - pair_b(u, u, v)?);
        if n >= m {
            let u_lag = &u_ref.states[n - m];
            terms.i2 += weight(n, m, k_end) * w * pair_b(&ud_lag.sub(u_lag), u, v)?;
            terms.i3 += weight(n, m, k_end) * w * pair_b(&u_lag.sub(u), u, v)?;
        }
        if n <= m {
            terms.i4 += weight(n, 0, m.min(k_end)) * w * pair_b(&ud_lag.sub(u), u, v)?;
        }
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::solve_delay;
    use crate::linearized::{solve_linearized, AdvectionSeries, Advector};
    use crate::operators::{nonlinear_B, stokes_apply};
    use crate::spectral::{random_solenoidal_field, Lattice};
    use std::f64::consts::TAU;

    fn lattice() -> Lattice {
        Lattice::new(TAU, 16).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let lat = lattice();
        let zero = SpectralField::zeros(&lat);
        let traj = solve_nse(&zero, &zero, 1.0, 1e-2, 0.1).unwrap();
        assert!(traj.states.iter().all(|s| s.is_zero()));
    }

    #[test]
    fn manufactured_fixed_point() {
        let lat = lattice();
        let ustar = random_solenoidal_field(&lat, 0.0, 1.0, 5).galerkin_truncate(3);
        let f = stokes_apply(&ustar, 1.0).add(&nonlinear_B(&ustar, &ustar).unwrap());
        let traj = solve_nse_with(&ustar, &f, 1.0, 1e-3, 1.0, RunOptions { store_every: 50, ..Default::default() }).unwrap();
        let worst = traj.states.iter().map(|s| s.sub(&ustar).norm(0.0)).fold(0.0, f64::max);
        assert!(worst <= 1e-6 * ustar.norm(0.0), "{worst:e}");
    }

    #[test]
    fn unforced_energy_decays() {
        let lat = lattice();
        let u0 = random_solenoidal_field(&lat, -1.5, 2.0, 3);
        let zero = SpectralField::zeros(&lat);
        let traj = solve_nse(&u0, &zero, 1.0, 1e-3, 0.1).unwrap();
        let norms: Vec<f64> = traj.states.iter().map(|s| s.norm(0.0)).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-8));
        for s in &traj.states {
            assert!(s.divergence_max() <= 1e-12 * s.norm(0.0));
        }
    }

    #[test]
    fn shares_the_linearized_kernel() {
        let lat = lattice();
        let u = random_solenoidal_field(&lat, -2.0, 1.0, 8);
        let f = random_solenoidal_field(&lat, -2.0, 1.0, 9);
        let dt = 1e-3;
        let stepper = Stepper::new(&lat, 1.0, dt).unwrap();
        let own = stepper.advance(&u, Advector::SelfAdvect, &f, 0.0).unwrap();
        // the self-advected predictor, fed back as a prescribed series
        let decay = crate::operators::integrating_factor(&lat, 1.0, dt).unwrap();
        let predicted = decay.apply(&u.axpy(dt, &f.sub(&nonlinear_B(&u, &u).unwrap())));
        let replay = stepper.step(&u, &u, &predicted, &f).unwrap();
        assert!(own.bitwise_eq(&replay));
    }

    #[test]
    fn linearized_around_own_output_is_close() {
        let lat = lattice();
        let u0 = random_solenoidal_field(&lat, -2.0, 1.0, 8);
        let f = random_solenoidal_field(&lat, -2.0, 1.0, 9);
        let dt = 1e-3;
        let nse = solve_nse(&u0, &f, 1.0, dt, 0.05).unwrap();
        let psi = AdvectionSeries::new(dt, nse.states.clone()).unwrap();
        let lin = solve_linearized(&u0, &psi, &f, 1.0, dt, 50).unwrap();
        let gap = lin.last().sub(nse.last()).norm(0.0);
        assert!(gap <= 1e-6 * u0.norm(0.0), "{gap:e}");
    }

    fn sweep_setup(mu: f64, dt: f64, t_end: f64) -> (Trajectory, Trajectory, HistorySegment, SpectralField) {
        let lat = lattice();
        let u0 = random_solenoidal_field(&lat, -2.0, 1.0, 31);
        let f = random_solenoidal_field(&lat, -2.0, 1.0, 32);
        let hist = HistorySegment::constant(&u0, mu, dt).unwrap();
        let ud = solve_delay(&hist, &u0, &f, 1.0, t_end).unwrap();
        let ur = solve_nse(&u0, &f, 1.0, dt, t_end).unwrap();
        (ud, ur, hist, random_solenoidal_field(&lat, -3.0, 1.0, 33))
    }

    #[test]
    fn split_adds_up_to_unsplit() {
        let dt = 1e-3;
        let (ud, ur, hist, v) = sweep_setup(4.0 * dt, dt, 0.05);
        let phi = bump_test_function(dt, 50);
        let terms = splitting_terms(&ud, &ur, 4.0 * dt, &v, &phi, &hist).unwrap();
        assert!(terms.unsplit != 0.0);
        assert!(terms.sum_defect() <= 1e-10, "{terms:?}");
    }

    #[test]
    fn identical_trajectories_kill_first_two_terms() {
        let dt = 1e-3;
        let (_, ur, _, v) = sweep_setup(dt, dt, 0.02);
        let hist = HistorySegment::new(dt, dt, vec![ur.states[0].clone()]).unwrap();
        let phi = bump_test_function(dt, 20);
        let terms = splitting_terms(&ur, &ur, dt, &v, &phi, &hist).unwrap();
        assert_eq!(terms.i1, 0.0);
        assert_eq!(terms.i2, 0.0);
        assert!(terms.i3 != 0.0);
    }

    #[test]
    fn zero_trajectories_split_to_zero() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let zero = SpectralField::zeros(&lat);
        let hist = HistorySegment::zeros(&lat, 2e-3, 1e-3).unwrap();
        let ud = solve_delay(&hist, &zero, &zero, 1.0, 0.01).unwrap();
        let ur = solve_nse(&zero, &zero, 1.0, 1e-3, 0.01).unwrap();
        let terms = splitting_terms(&ud, &ur, 2e-3, &zero, &bump_test_function(1e-3, 10), &hist).unwrap();
        assert_eq!(terms, SplittingTerms::default());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let dt = 1e-3;
        let (ud, ur, hist, v) = sweep_setup(2.0 * dt, dt, 0.01);
        let short = bump_test_function(dt, 5);
        assert!(splitting_terms(&ud, &ur, 2.0 * dt, &v, &short, &hist).is_err());
    }
}
