//! The delayed system `u' + νAu + B(u(t−μ), u) = f` by the method of steps,
//! history segments, the solution semigroup and the one-interval map `U`.
//!
//! The history lives on the grid `−μ, −μ+Δt, …, −Δt`; the value at `t = 0`
//! is carried separately, so a state is always the pair (segment, head).

use crate::error::{Error, Result};
use crate::linearized::{grid_steps, run_series, AdvectionSeries, Recorder, RunOptions, Stepper, Trajectory};
use crate::spectral::{Lattice, SpectralField};

/// Samples of `u` on `[−μ, 0)`, one per grid point.
#[derive(Clone, Debug)]
pub struct HistorySegment {
    mu: f64,
    dt: f64,
    samples: Vec<SpectralField>,
}

/// Slots `μ/Δt`, rejecting delays off the step grid.
pub fn delay_slots(mu: f64, dt: f64) -> Result<usize> {
    let ratio = mu / dt;
    let m = ratio.round();
    if !(m >= 1.0) || (ratio - m).abs() > 1e-9 * m {
        return Err(Error::DelayNotMultiple { mu, dt });
    }
    Ok(m as usize)
}

impl HistorySegment {
    pub fn new(mu: f64, dt: f64, samples: Vec<SpectralField>) -> Result<Self> {
        let m = delay_slots(mu, dt)?;
        if samples.len() != m {
            return Err(Error::SampleCount { needed: m, got: samples.len() });
        }
        let lat = samples[0].lattice();
        if samples.iter().any(|s| !s.lattice().same_as(lat)) {
            return Err(Error::LatticeMismatch);
        }
        Ok(HistorySegment { mu, dt, samples })
    }

    /// `φ(τ)` sampled at `τ = −μ + jΔt`.
    pub fn from_fn(mu: f64, dt: f64, phi: impl Fn(f64) -> SpectralField) -> Result<Self> {
        let m = delay_slots(mu, dt)?;
        Self::new(mu, dt, (0..m).map(|j| phi(-((m - j) as f64) * dt)).collect())
    }

    pub fn constant(field: &SpectralField, mu: f64, dt: f64) -> Result<Self> {
        Self::from_fn(mu, dt, |_| field.clone())
    }

    pub fn zeros(lattice: &Lattice, mu: f64, dt: f64) -> Result<Self> {
        Self::constant(&SpectralField::zeros(lattice), mu, dt)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of slots `m = μ/Δt`.
    pub fn slots(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[SpectralField] {
        &self.samples
    }

    pub fn lattice(&self) -> &Lattice {
        self.samples[0].lattice()
    }

    pub fn bitwise_eq(&self, other: &HistorySegment) -> bool {
        self.samples.len() == other.samples.len()
            && self.mu.to_bits() == other.mu.to_bits()
            && self.dt.to_bits() == other.dt.to_bits()
            && self.samples.iter().zip(&other.samples).all(|(a, b)| a.bitwise_eq(b))
    }
}

/// `(u_t, u(t))`: the history slice and the current value.
#[derive(Clone, Debug)]
pub struct SemigroupState {
    pub segment: HistorySegment,
    pub head: SpectralField,
}

impl SemigroupState {
    pub fn new(segment: HistorySegment, head: SpectralField) -> Result<Self> {
        if !segment.lattice().same_as(head.lattice()) {
            return Err(Error::LatticeMismatch);
        }
        Ok(SemigroupState { segment, head })
    }

    pub fn bitwise_eq(&self, other: &SemigroupState) -> bool {
        self.segment.bitwise_eq(&other.segment) && self.head.bitwise_eq(&other.head)
    }

    /// The `m + 1` values `u(t−μ), …, u(t)` that drive the next interval.
    fn window(&self) -> Vec<SpectralField> {
        let mut w = self.segment.samples.clone();
        w.push(self.head.clone());
        w
    }
}

/// Input of the one-interval map: an advecting series on `[0, μ]` and `u₀`.
#[derive(Clone, Debug)]
pub struct UMapInput {
    pub psi: AdvectionSeries,
    pub u0: SpectralField,
}

impl UMapInput {
    /// `ψ(t) = φ(t − μ)` on `[0, μ)`, closed at `t = μ` by `u₀`.
    pub fn from_history(phi: &HistorySegment, u0: &SpectralField) -> Result<Self> {
        let mut samples = phi.samples.clone();
        samples.push(u0.clone());
        Ok(UMapInput { psi: AdvectionSeries::new(phi.dt, samples)?, u0: u0.clone() })
    }
}

/// Trajectory plus the last `m + 1` full-resolution states of a delayed run.
struct DelayRun {
    traj: Trajectory,
    window: Vec<SpectralField>,
}

/// Method of steps over `nsteps` steps.
///
/// Interval `i` solves the linearized equation with `ψ` equal to the
/// previous interval's solution (the history on interval 0), so the step at
/// grid index `n` is always advected by the samples `u_{n−m}, u_{n−m+1}`.
/// A final partial interval is simply stepped fewer times.
fn run_delay(state: &SemigroupState, f: &SpectralField, nu: f64, nsteps: usize, opts: RunOptions) -> Result<DelayRun> {
    let seg = &state.segment;
    let m = seg.slots();
    let u0 = &state.head;
    if !u0.lattice().same_as(f.lattice()) {
        return Err(Error::LatticeMismatch);
    }
    let stepper = Stepper::new(u0.lattice(), nu, seg.dt())?;
    let mut rec = Recorder::new(u0, f, nu, seg.dt(), opts.alpha, opts.t0, opts.store_every);
    let mut window = state.window();
    let mut u = u0.clone();
    let mut done = 0;
    while done < nsteps {
        let len = m.min(nsteps - done);
        crate::linearized::warn_if_fast(&window[..=len], opts.alpha, seg.dt());
        let mut next = Vec::with_capacity(m + 1);
        next.push(u.clone());
        for j in 0..len {
            let t = opts.t0 + (done + j) as f64 * seg.dt();
            u = stepper.advance(&u, crate::linearized::Advector::Series(&window[j], &window[j + 1]), f, t)?;
            rec.push(u.clone())?;
            next.push(u.clone());
        }
        if len == m {
            window = next;
        } else {
            // partial interval: slide by `len`
            window.drain(..len);
            window.extend(next.into_iter().skip(1));
        }
        done += len;
    }
    Ok(DelayRun { traj: rec.finish(), window })
}

fn steps_for(t: f64, dt: f64) -> Result<usize> {
    grid_steps(t, dt)
}

/// Solves the delayed system on `[0, T]` from history `φ` and `u(0) = u₀`.
pub fn solve_delay(phi: &HistorySegment, u0: &SpectralField, f: &SpectralField, nu: f64, t_end: f64) -> Result<Trajectory> {
    solve_delay_with(phi, u0, f, nu, t_end, RunOptions::default())
}

pub fn solve_delay_with(
    phi: &HistorySegment,
    u0: &SpectralField,
    f: &SpectralField,
    nu: f64,
    t_end: f64,
    opts: RunOptions,
) -> Result<Trajectory> {
    let nsteps = steps_for(t_end, phi.dt())?;
    if nsteps % phi.slots() != 0 {
        log::info!("T = {t_end} is not a multiple of μ = {}; the last interval is partial", phi.mu());
    }
    let state = SemigroupState::new(phi.clone(), u0.clone())?;
    Ok(run_delay(&state, f, nu, nsteps, opts)?.traj)
}

/// `u_t`: the samples of `u` at `t−μ, …, t−Δt`, taken from `φ` before 0.
///
/// `traj` must store every step it is asked for (full resolution suffices).
pub fn segment_at(traj: &Trajectory, phi: &HistorySegment, t: f64) -> Result<HistorySegment> {
    let n = traj.step_of(t)?;
    if n > traj.total_steps() {
        return Err(Error::OffGrid { t, dt: traj.dt });
    }
    let m = phi.slots();
    let samples = (0..m)
        .map(|j| {
            let step = n as i64 - m as i64 + j as i64;
            if step < 0 {
                Ok(phi.samples[(m as i64 + step) as usize].clone())
            } else {
                traj.at_step(step as usize).cloned().ok_or(Error::MissingSamples(traj.t0 + step as f64 * traj.dt))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    HistorySegment::new(phi.mu(), phi.dt(), samples)
}

/// `S(t)`: advances a state by a grid-aligned time `t ≥ 0`.
pub fn semigroup_apply(state: &SemigroupState, f: &SpectralField, nu: f64, t: f64) -> Result<SemigroupState> {
    let nsteps = steps_for(t, state.segment.dt())?;
    if nsteps == 0 {
        return Ok(state.clone());
    }
    let opts = RunOptions { store_every: usize::MAX, ..RunOptions::default() };
    let mut window = run_delay(state, f, nu, nsteps, opts)?.window;
    let head = window.pop().expect("window holds m + 1 states");
    let segment = HistorySegment { mu: state.segment.mu, dt: state.segment.dt, samples: window };
    Ok(SemigroupState { segment, head })
}

/// `U(ψ, u₀) = (u, u(μ))`: one linearized solve across the series.
#[allow(non_snake_case)]
pub fn map_U(input: &UMapInput, f: &SpectralField, nu: f64) -> Result<(Trajectory, SpectralField)> {
    let psi = &input.psi;
    if !psi.lattice().same_as(input.u0.lattice()) {
        return Err(Error::LatticeMismatch);
    }
    let stepper = Stepper::new(input.u0.lattice(), nu, psi.dt())?;
    let traj = run_series(&stepper, &input.u0, psi.samples(), f, RunOptions::default())?;
    let last = traj.last().clone();
    Ok((traj, last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{nonlinear_B, stokes_apply};
    use crate::spectral::random_solenoidal_field;
    use std::f64::consts::TAU;

    const MU: f64 = 0.05;
    const DT: f64 = 1e-3;

    fn lattice() -> Lattice {
        Lattice::new(TAU, 16).unwrap()
    }

    fn seeded_state(lat: &Lattice) -> (SemigroupState, SpectralField) {
        let base = random_solenoidal_field(lat, -2.0, 1.0, 21);
        let phi = HistorySegment::from_fn(MU, DT, |tau| base.scale(1.0 + tau)).unwrap();
        let u0 = random_solenoidal_field(lat, -2.0, 1.0, 22);
        let f = random_solenoidal_field(lat, -2.0, 0.5, 23);
        (SemigroupState::new(phi, u0).unwrap(), f)
    }

    #[test]
    fn delay_must_sit_on_the_grid() {
        assert_eq!(delay_slots(0.05, 1e-3).unwrap(), 50);
        assert!(matches!(delay_slots(0.05, 0.003), Err(Error::DelayNotMultiple { .. })));
        assert!(delay_slots(0.0, 1e-3).is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let lat = lattice();
        let zero = SpectralField::zeros(&lat);
        let phi = HistorySegment::zeros(&lat, MU, DT).unwrap();
        let traj = solve_delay(&phi, &zero, &zero, 1.0, 0.1).unwrap();
        assert!(traj.states.iter().all(|s| s.is_zero()));
    }

    #[test]
    fn first_interval_is_pure_heat_decay() {
        let lat = lattice();
        let zero = SpectralField::zeros(&lat);
        let phi = HistorySegment::zeros(&lat, MU, DT).unwrap();
        let u0 = SpectralField::single_mode(&lat, [0, 1, 0], 0, 0.9).unwrap();
        let traj = solve_delay(&phi, &u0, &zero, 1.0, MU).unwrap();
        let idx = lat.index_of([0, 1, 0]).unwrap();
        for k in 0..traj.len() {
            let exact = 0.9 * (-traj.time(k)).exp();
            let got = traj.states[k].component(0)[idx].re;
            assert!((got - exact).abs() <= 1e-14, "{k}: {got} vs {exact}");
        }
    }

    #[test]
    fn manufactured_steady_state_is_kept() {
        let lat = lattice();
        let nu = 1.0;
        let ustar = random_solenoidal_field(&lat, 0.0, 1.0, 5).galerkin_truncate(3);
        let f = stokes_apply(&ustar, 1.0).scale(nu).add(&nonlinear_B(&ustar, &ustar).unwrap());
        let phi = HistorySegment::constant(&ustar, MU, DT).unwrap();
        let traj = solve_delay(&phi, &ustar, &f, nu, 4.0 * MU).unwrap();
        let worst = traj.states.iter().map(|s| s.sub(&ustar).norm(0.0)).fold(0.0, f64::max);
        assert!(worst <= 1e-6 * ustar.norm(0.0), "{worst:e}");
    }

    #[test]
    fn segments_reproduce_history_and_trajectory() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let base = random_solenoidal_field(&lat, -1.0, 1.0, 2);
        let (mu, dt) = (0.01, 1e-3);
        let phi = HistorySegment::from_fn(mu, dt, |tau| base.scale(tau)).unwrap();
        let u0 = base.clone();
        let traj = solve_delay(&phi, &u0, &SpectralField::zeros(&lat), 1.0, 0.03).unwrap();
        assert!(segment_at(&traj, &phi, 0.0).unwrap().bitwise_eq(&phi));
        let at_mu = segment_at(&traj, &phi, mu).unwrap();
        for (j, s) in at_mu.samples().iter().enumerate() {
            assert!(s.bitwise_eq(&traj.states[j]));
        }
        let mixed = segment_at(&traj, &phi, 0.004).unwrap();
        assert!(mixed.samples()[0].bitwise_eq(&phi.samples()[4]));
        assert!(mixed.samples()[9].bitwise_eq(&traj.states[3]));
        assert!(matches!(segment_at(&traj, &phi, 0.0045), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn semigroup_identity_and_law() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let (state, f) = seeded_state(&lat);
        assert!(semigroup_apply(&state, &f, 1.0, 0.0).unwrap().bitwise_eq(&state));
        let joint = semigroup_apply(&state, &f, 1.0, 0.07).unwrap();
        let first = semigroup_apply(&state, &f, 1.0, 0.03).unwrap();
        let split = semigroup_apply(&first, &f, 1.0, 0.04).unwrap();
        assert!(joint.bitwise_eq(&split));
    }

    #[test]
    fn semigroup_agrees_with_stored_trajectory() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let (state, f) = seeded_state(&lat);
        let traj = solve_delay(&state.segment, &state.head, &f, 1.0, 0.08).unwrap();
        let s = semigroup_apply(&state, &f, 1.0, 0.08).unwrap();
        assert!(s.head.bitwise_eq(traj.last()));
        assert!(s.segment.bitwise_eq(&segment_at(&traj, &state.segment, 0.08).unwrap()));
    }

    #[test]
    fn map_u_matches_one_delay_interval() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let (state, f) = seeded_state(&lat);
        let input = UMapInput::from_history(&state.segment, &state.head).unwrap();
        let (traj, end) = map_U(&input, &f, 1.0).unwrap();
        let s = semigroup_apply(&state, &f, 1.0, MU).unwrap();
        assert!(end.bitwise_eq(&s.head));
        for (a, b) in traj.states.iter().zip(s.segment.samples()) {
            assert!(a.bitwise_eq(b));
        }
        let zero = SpectralField::zeros(&lat);
        let zero_input = UMapInput::from_history(&HistorySegment::zeros(&lat, MU, DT).unwrap(), &zero).unwrap();
        assert!(map_U(&zero_input, &zero, 1.0).unwrap().1.is_zero());
    }

    #[test]
    fn partial_last_interval_matches_truncated_run() {
        let lat = Lattice::new(TAU, 8).unwrap();
        let (state, f) = seeded_state(&lat);
        let long = solve_delay(&state.segment, &state.head, &f, 1.0, 0.1).unwrap();
        let short = solve_delay(&state.segment, &state.head, &f, 1.0, 0.073).unwrap();
        assert!(short.last().bitwise_eq(long.at_step(73).unwrap()));
        assert_eq!(short.ledger.entries.last(), long.ledger.entries.get(73));
    }
}
