//! Integrating-factor Heun integration of `u' + νAu + B(ψ(t), u) = f` with a
//! prescribed advecting series `ψ`, and the energy ledger of the run.

mod trajectory;

pub use trajectory::{
    apriori_margin, energy_residual, grid_steps, state_energy_residual, EnergyLedger, LedgerEntry, Trajectory,
    BLOW_UP_FACTOR,
};
pub(crate) use trajectory::Recorder;

use crate::error::{Error, Result};
use crate::operators::{integrating_factor, nonlinear_B, StokesMultiplier};
use crate::spectral::{Lattice, SpectralField};

/// Samples `ψ(t_k)` at `t_k = k·Δt`, `k = 0..n`.
#[derive(Clone, Debug)]
pub struct AdvectionSeries {
    dt: f64,
    samples: Vec<SpectralField>,
}

impl AdvectionSeries {
    pub fn new(dt: f64, samples: Vec<SpectralField>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Study(format!("time step must be positive, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(Error::SampleCount { needed: 2, got: samples.len() });
        }
        let lat = samples[0].lattice();
        if samples.iter().any(|s| !s.lattice().same_as(lat)) {
            return Err(Error::LatticeMismatch);
        }
        Ok(AdvectionSeries { dt, samples })
    }

    /// The same field at every one of `nsteps + 1` grid times.
    pub fn constant(field: &SpectralField, dt: f64, nsteps: usize) -> Result<Self> {
        Self::new(dt, vec![field.clone(); nsteps.max(1) + 1])
    }

    /// Samples `ψ(k·Δt)` from a closure.
    pub fn from_fn(dt: f64, nsteps: usize, psi: impl Fn(f64) -> SpectralField) -> Result<Self> {
        Self::new(dt, (0..=nsteps.max(1)).map(|k| psi(k as f64 * dt)).collect())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[SpectralField] {
        &self.samples
    }

    pub fn lattice(&self) -> &Lattice {
        self.samples[0].lattice()
    }

    /// Number of steps the series spans.
    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }
}

/// What advects `u` at the two stages of a step.
#[derive(Clone, Copy)]
pub(crate) enum Advector<'a> {
    /// A prescribed series: `ψ(t)` at the predictor, `ψ(t+Δt)` at the corrector.
    Series(&'a SpectralField, &'a SpectralField),
    /// The state itself: `B(u, u)` then `B(ũ, ũ)`.
    SelfAdvect,
}

/// Step kernel with the integrating factor precomputed.
#[derive(Clone, Debug)]
pub struct Stepper {
    nu: f64,
    dt: f64,
    decay: StokesMultiplier,
}

impl Stepper {
    pub fn new(lattice: &Lattice, nu: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Study(format!("time step must be positive, got {dt}")));
        }
        Ok(Stepper { nu, dt, decay: integrating_factor(lattice, nu, dt)? })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn rhs(f: &SpectralField, adv: &SpectralField, u: &SpectralField) -> Result<SpectralField> {
        if adv.is_zero() {
            return Ok(f.clone());
        }
        Ok(f.sub(&nonlinear_B(adv, u)?))
    }

    pub(crate) fn advance(&self, u: &SpectralField, adv: Advector<'_>, f: &SpectralField, t: f64) -> Result<SpectralField> {
        let lat = u.lattice();
        if !lat.same_as(f.lattice()) {
            return Err(Error::LatticeMismatch);
        }
        let first = match adv {
            Advector::Series(now, _) => now,
            Advector::SelfAdvect => u,
        };
        let n1 = Self::rhs(f, first, u)?;
        let predicted = self.decay.apply(&u.axpy(self.dt, &n1));
        let second = match adv {
            Advector::Series(_, next) => next,
            Advector::SelfAdvect => &predicted,
        };
        let n2 = Self::rhs(f, second, &predicted)?;
        let out = self.decay.apply(u).axpy(0.5 * self.dt, &self.decay.apply(&n1).add(&n2));
        let out = if lat.controls().leray { out.leray_project() } else { out };
        if !out.is_finite() {
            return Err(Error::NonFinite { t: t + self.dt });
        }
        Ok(out)
    }

    /// One step of the linearized equation.
    pub fn step(&self, u: &SpectralField, psi_now: &SpectralField, psi_next: &SpectralField, f: &SpectralField) -> Result<SpectralField> {
        self.advance(u, Advector::Series(psi_now, psi_next), f, 0.0)
    }
}

/// One IF-Heun step: with `E = e^{−νΔt|ζ|²}` and `N(t,u) = f − B(ψ(t),u)`,
/// `ũ = E(u + ΔtN(t,u))`, `u⁺ = Eu + Δt/2·(E·N(t,u) + N(t+Δt,ũ))`.
pub fn step_linearized(
    u: &SpectralField,
    psi_now: &SpectralField,
    psi_next: &SpectralField,
    f: &SpectralField,
    nu: f64,
    dt: f64,
) -> Result<SpectralField> {
    Stepper::new(u.lattice(), nu, dt)?.step(u, psi_now, psi_next, f)
}

/// Options shared by the trajectory solvers.
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Exponent of the `∫‖u‖²_{1+α}` ledger column.
    pub alpha: f64,
    /// Store every `store_every`-th state (first and last always kept).
    pub store_every: usize,
    /// Time of the initial state.
    pub t0: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { alpha: 1.0, store_every: 1, t0: 0.0 }
    }
}

pub(crate) fn warn_if_fast(psi: &[SpectralField], alpha: f64, dt: f64) {
    let peak = psi.iter().map(|p| p.norm(1.0 + alpha)).fold(0.0, f64::max);
    if dt * peak > 1.0 {
        log::warn!("Δt·‖ψ‖_(1+α) = {:.3e} exceeds 1; explicit advection may be inaccurate", dt * peak);
    }
}

fn check_step(series_dt: f64, dt: f64) -> Result<()> {
    if (series_dt - dt).abs() > 1e-12 * dt {
        return Err(Error::StepMismatch(series_dt, dt));
    }
    Ok(())
}

/// Integrates over `nsteps` steps with full-resolution storage.
pub fn solve_linearized(
    u0: &SpectralField,
    psi: &AdvectionSeries,
    f: &SpectralField,
    nu: f64,
    dt: f64,
    nsteps: usize,
) -> Result<Trajectory> {
    solve_linearized_with(u0, psi, f, nu, dt, nsteps, RunOptions::default())
}

pub fn solve_linearized_with(
    u0: &SpectralField,
    psi: &AdvectionSeries,
    f: &SpectralField,
    nu: f64,
    dt: f64,
    nsteps: usize,
    opts: RunOptions,
) -> Result<Trajectory> {
    check_step(psi.dt(), dt)?;
    if psi.samples().len() < nsteps + 1 {
        return Err(Error::SampleCount { needed: nsteps + 1, got: psi.samples().len() });
    }
    if !psi.lattice().same_as(u0.lattice()) {
        return Err(Error::LatticeMismatch);
    }
    let stepper = Stepper::new(u0.lattice(), nu, dt)?;
    run_series(&stepper, u0, &psi.samples()[..=nsteps], f, opts)
}

/// Steps through `psi.len() − 1` intervals of a prescribed series.
pub(crate) fn run_series(
    stepper: &Stepper,
    u0: &SpectralField,
    psi: &[SpectralField],
    f: &SpectralField,
    opts: RunOptions,
) -> Result<Trajectory> {
    warn_if_fast(psi, opts.alpha, stepper.dt());
    let mut rec = Recorder::new(u0, f, stepper.nu(), stepper.dt(), opts.alpha, opts.t0, opts.store_every);
    let mut u = u0.clone();
    for (k, pair) in psi.windows(2).enumerate() {
        let t = opts.t0 + k as f64 * stepper.dt();
        u = stepper.advance(&u, Advector::Series(&pair[0], &pair[1]), f, t)?;
        rec.push(u.clone())?;
    }
    Ok(rec.finish())
}

/// Steps the self-advected equation `u' + νAu + B(u,u) = f`.
pub(crate) fn run_self_advected(
    stepper: &Stepper,
    u0: &SpectralField,
    f: &SpectralField,
    nsteps: usize,
    opts: RunOptions,
) -> Result<Trajectory> {
    let mut rec = Recorder::new(u0, f, stepper.nu(), stepper.dt(), opts.alpha, opts.t0, opts.store_every);
    let mut u = u0.clone();
    for k in 0..nsteps {
        let t = opts.t0 + k as f64 * stepper.dt();
        u = stepper.advance(&u, Advector::SelfAdvect, f, t)?;
        if k == 0 {
            warn_if_fast(std::slice::from_ref(&u), opts.alpha, stepper.dt());
        }
        rec.push(u.clone())?;
    }
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::stokes_apply;
    use crate::spectral::random_solenoidal_field;
    use std::f64::consts::TAU;

    fn lattice(n: usize) -> Lattice {
        Lattice::new(TAU, n).unwrap()
    }

    fn unit_mode(lat: &Lattice, amp: f64) -> SpectralField {
        SpectralField::single_mode(lat, [1, 0, 0], 1, amp).unwrap()
    }

    #[test]
    fn heat_step_is_exact() {
        let lat = lattice(8);
        let u = unit_mode(&lat, 0.3);
        let zero = SpectralField::zeros(&lat);
        let dt = 0.01;
        let out = step_linearized(&u, &zero, &zero, &zero, 1.0, dt).unwrap();
        let expected = u.scale_modes(|idx| (-dt * lat.zeta_sq()[idx]).exp());
        // equal as numbers; zero coefficients may differ in sign bit
        assert!((0..3).all(|c| out.component(c) == expected.component(c)));
    }

    #[test]
    fn forced_first_step_matches_formula() {
        let lat = lattice(8);
        let f = SpectralField::single_mode(&lat, [0, 2, 1], 0, 0.5).unwrap().leray_project();
        let zero = SpectralField::zeros(&lat);
        let dt = 0.02;
        let out = step_linearized(&zero, &zero, &zero, &f, 1.0, dt).unwrap();
        let expected = f.scale_modes(|idx| 0.5 * dt * ((-dt * lat.zeta_sq()[idx]).exp() + 1.0));
        assert!(out.sub(&expected).norm(0.0) <= 1e-15 * expected.norm(0.0));
    }

    #[test]
    fn steady_state_truncation() {
        let lat = lattice(16);
        let nu = 1.0;
        let dt = 1e-3;
        // bias per step is ~ (ν|ζ|²Δt)³/12, so stay on the unit shell
        let ustar = random_solenoidal_field(&lat, 0.0, 1.0, 3).galerkin_truncate(3);
        let psi = random_solenoidal_field(&lat, 0.0, 0.5, 4).galerkin_truncate(3);
        let f = stokes_apply(&ustar, 1.0).scale(nu).add(&nonlinear_B(&psi, &ustar).unwrap());
        let out = step_linearized(&ustar, &psi, &psi, &f, nu, dt).unwrap();
        let dev = out.sub(&ustar).norm(0.0);
        assert!(dev <= 1e-3 * dt * dt * ustar.norm(0.0), "{dev:e}");
    }

    #[test]
    fn exact_decay_over_unit_time() {
        let lat = lattice(8);
        let u0 = unit_mode(&lat, 0.7);
        let zero = SpectralField::zeros(&lat);
        let dt = 0.01;
        let psi = AdvectionSeries::constant(&zero, dt, 100).unwrap();
        let traj = solve_linearized(&u0, &psi, &zero, 1.0, dt, 100).unwrap();
        let idx = lat.index_of([1, 0, 0]).unwrap();
        let amp = traj.last().component(1)[idx].re;
        assert!(((amp - 0.7 * (-1.0f64).exp()) / amp).abs() <= 1e-13);
        // trapezoid error of ∫e^{-2r}
        let r = energy_residual(&traj, 1.0);
        assert!(r > 0.0 && r < 1e-3, "{r:e}");
        assert!(apriori_margin(&traj, &zero, 1.0) >= -1e-8);
    }

    #[test]
    fn forced_heat_equilibrium() {
        let lat = lattice(8);
        let f = unit_mode(&lat, 0.4);
        let zero = SpectralField::zeros(&lat);
        let dt = 0.01;
        let psi = AdvectionSeries::constant(&zero, dt, 1000).unwrap();
        let traj = solve_linearized_with(&zero, &psi, &f, 1.0, dt, 1000, RunOptions { store_every: 100, ..Default::default() }).unwrap();
        let idx = lat.index_of([1, 0, 0]).unwrap();
        let amp = traj.last().component(1)[idx];
        let target = f.component(1)[idx];
        assert!((amp - target).norm() <= ((-10.0f64).exp() + 1e-4) * target.norm());
        assert_eq!(traj.len(), 11);
    }

    #[test]
    fn zero_data_gives_zero_everything() {
        let lat = lattice(8);
        let zero = SpectralField::zeros(&lat);
        let psi = AdvectionSeries::constant(&zero, 0.01, 10).unwrap();
        let traj = solve_linearized(&zero, &psi, &zero, 1.0, 0.01, 10).unwrap();
        assert_eq!(energy_residual(&traj, 1.0), 0.0);
        assert_eq!(apriori_margin(&traj, &zero, 1.0), 0.0);
    }

    fn random_run(dt: f64, t_end: f64) -> (Trajectory, SpectralField) {
        let lat = lattice(16);
        let u0 = random_solenoidal_field(&lat, -2.0, 1.0, 1);
        let f = random_solenoidal_field(&lat, -2.0, 1.0, 2);
        let phi = random_solenoidal_field(&lat, -2.0, 1.0, 3);
        let n = (t_end / dt).round() as usize;
        let psi = AdvectionSeries::from_fn(dt, n, |t| phi.scale(1.0 + 0.5 * (TAU * t / t_end).sin())).unwrap();
        (solve_linearized(&u0, &psi, &f, 1.0, dt, n).unwrap(), f)
    }

    #[test]
    fn energy_residual_is_second_order() {
        let r: Vec<f64> = [4e-3, 2e-3].iter().map(|&dt| energy_residual(&random_run(dt, 0.2).0, 1.0)).collect();
        let ratio = r[0] / r[1];
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, residuals {r:?}");
    }

    #[test]
    fn divergence_and_margin_on_random_run() {
        let (traj, f) = random_run(2e-3, 0.2);
        for s in &traj.states {
            assert!(s.divergence_max() <= 1e-12 * s.norm(0.0));
        }
        assert!(apriori_margin(&traj, &f, 1.0) >= -1e-6 * traj.initial().norm_sq(0.0));
        let e = &traj.ledger.entries;
        assert!(e.windows(2).all(|w| w[1].enstrophy >= w[0].enstrophy && w[1].alpha_dissipation >= w[0].alpha_dissipation));
    }

    #[test]
    fn difference_of_runs_contracts() {
        let lat = lattice(16);
        let dt = 2e-3;
        let n = 50;
        let f = random_solenoidal_field(&lat, -2.0, 1.0, 7);
        let phi = random_solenoidal_field(&lat, -2.0, 1.0, 8);
        let psi = AdvectionSeries::constant(&phi, dt, n).unwrap();
        let a = random_solenoidal_field(&lat, -2.0, 1.0, 9);
        let b = a.axpy(1e-2, &random_solenoidal_field(&lat, -2.0, 1.0, 10));
        let ta = solve_linearized(&a, &psi, &f, 1.0, dt, n).unwrap();
        let tb = solve_linearized(&b, &psi, &f, 1.0, dt, n).unwrap();
        let d0 = a.sub(&b).norm(0.0);
        for (k, (x, y)) in ta.states.iter().zip(&tb.states).enumerate() {
            let t = k as f64 * dt;
            assert!(x.sub(y).norm(0.0) <= d0 * (1.0 + 1e-3 * dt * dt * t) + 1e-14);
        }
    }

    #[test]
    fn alpha_norm_decays_without_forcing() {
        let lat = lattice(16);
        let u0 = random_solenoidal_field(&lat, -1.0, 1.0, 12);
        let zero = SpectralField::zeros(&lat);
        let psi = AdvectionSeries::constant(&zero, 1e-2, 20).unwrap();
        let traj = solve_linearized(&u0, &psi, &zero, 1.0, 1e-2, 20).unwrap();
        let norms: Vec<f64> = traj.states.iter().map(|s| s.norm(1.0)).collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn stride_keeps_endpoints_and_ledger() {
        let lat = lattice(8);
        let u0 = random_solenoidal_field(&lat, -1.0, 1.0, 1);
        let zero = SpectralField::zeros(&lat);
        let psi = AdvectionSeries::constant(&u0, 1e-2, 25).unwrap();
        let full = solve_linearized(&u0, &psi, &zero, 1.0, 1e-2, 25).unwrap();
        let sparse = solve_linearized_with(&u0, &psi, &zero, 1.0, 1e-2, 25, RunOptions { store_every: 10, ..Default::default() }).unwrap();
        assert_eq!(sparse.steps, vec![0, 10, 20, 25]);
        assert!(sparse.last().bitwise_eq(full.last()));
        assert_eq!(sparse.ledger.totals, full.ledger.totals);
        assert_eq!(sparse.ledger.entries[1], full.ledger.entries[10]);
    }

    #[test]
    fn sample_count_and_step_checks() {
        let lat = lattice(8);
        let zero = SpectralField::zeros(&lat);
        let psi = AdvectionSeries::constant(&zero, 0.01, 5).unwrap();
        assert!(matches!(solve_linearized(&zero, &psi, &zero, 1.0, 0.01, 6), Err(Error::SampleCount { .. })));
        assert!(matches!(solve_linearized(&zero, &psi, &zero, 1.0, 0.02, 2), Err(Error::StepMismatch(..))));
        assert!(AdvectionSeries::new(0.01, vec![zero]).is_err());
    }

    #[test]
    fn blow_up_sentinel_trips() {
        // an enormous advector with a huge step drives the explicit part unstable
        let lat = lattice(16);
        let u0 = random_solenoidal_field(&lat, 0.0, 1.0, 1);
        let psi_field = random_solenoidal_field(&lat, 0.0, 1e4, 2);
        let zero = SpectralField::zeros(&lat);
        let psi = AdvectionSeries::constant(&psi_field, 0.1, 200).unwrap();
        let err = solve_linearized(&u0, &psi, &zero, 1e-3, 0.1, 200).unwrap_err();
        assert!(err.is_blow_up(), "{err}");
    }
}
