use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// One row of the running energy integrals, aligned with a stored state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LedgerEntry {
    /// `∫‖u‖₁² dr` up to this state.
    pub enstrophy: f64,
    /// `∫⟨f, u⟩ dr` up to this state.
    pub forcing: f64,
    /// `∫‖u‖²_{1+α} dr` up to this state.
    pub alpha_dissipation: f64,
}

/// Trapezoidal accumulations of the energy-equality integrals.
///
/// The totals are updated on every time step, independently of how many
/// states the trajectory keeps.
#[derive(Clone, Debug, Default)]
pub struct EnergyLedger {
    pub alpha: f64,
    /// `‖u₀‖₀²`.
    pub initial_energy: f64,
    pub totals: LedgerEntry,
    /// One entry per stored state of the owning trajectory.
    pub entries: Vec<LedgerEntry>,
}

/// Time-stamped states plus the energy ledger of a run.
///
/// States are stored every `store_every` steps; the first and last state of
/// a run are always kept.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub steps: Vec<usize>,
    pub states: Vec<SpectralField>,
    pub ledger: EnergyLedger,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.steps[k] as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|k| self.time(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> &SpectralField {
        &self.states[0]
    }

    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Number of time steps covered.
    pub fn total_steps(&self) -> usize {
        *self.steps.last().unwrap_or(&0)
    }

    /// Whether every step is stored.
    pub fn is_full_resolution(&self) -> bool {
        self.steps.iter().enumerate().all(|(k, &s)| k == s)
    }

    /// State after `step` steps, if it was stored.
    pub fn at_step(&self, step: usize) -> Option<&SpectralField> {
        self.steps.binary_search(&step).ok().map(|k| &self.states[k])
    }

    /// Step index of a grid-aligned time `t` (measured from `t0`).
    pub fn step_of(&self, t: f64) -> Result<usize> {
        grid_steps(t - self.t0, self.dt)
    }

    /// Keeps every `stride`-th stored state plus the last one.
    pub fn thinned(&self, stride: usize) -> Trajectory {
        let stride = stride.max(1);
        let last = self.states.len() - 1;
        let keep: Vec<usize> = (0..self.states.len()).filter(|&k| k % stride == 0 || k == last).collect();
        Trajectory {
            t0: self.t0,
            dt: self.dt,
            steps: keep.iter().map(|&k| self.steps[k]).collect(),
            states: keep.iter().map(|&k| self.states[k].clone()).collect(),
            ledger: EnergyLedger {
                entries: keep.iter().map(|&k| self.ledger.entries[k]).collect(),
                ..self.ledger.clone()
            },
        }
    }

    /// `|‖u(t)‖₀² + 2ν∫‖u‖₁² − ‖u₀‖₀² − 2∫⟨f,u⟩|` at stored state `k`.
    pub fn residual_at(&self, k: usize, nu: f64) -> f64 {
        let e = &self.ledger.entries[k];
        (self.states[k].norm_sq(0.0) + 2.0 * nu * e.enstrophy - self.ledger.initial_energy - 2.0 * e.forcing).abs()
    }
}

/// Number of steps of size `dt` in `t`, rejecting times off the grid.
pub fn grid_steps(t: f64, dt: f64) -> Result<usize> {
    let ratio = t / dt;
    let n = ratio.round();
    if !(n >= 0.0) || (ratio - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::OffGrid { t, dt });
    }
    Ok(n as usize)
}

/// Energy-equality residual at the end of the run.
pub fn energy_residual(traj: &Trajectory, nu: f64) -> f64 {
    traj.residual_at(traj.len() - 1, nu)
}

/// Minimum over stored times of
/// `‖u₀‖₀² + (t/ν)‖f‖²₋₁ − ‖u(t)‖₀² − ν∫₀ᵗ‖u‖₁²`.
pub fn apriori_margin(traj: &Trajectory, f: &SpectralField, nu: f64) -> f64 {
    let f_sq = f.norm_sq(-1.0);
    (0..traj.len())
        .map(|k| {
            let t = traj.steps[k] as f64 * traj.dt;
            let rhs = traj.ledger.initial_energy + t / nu * f_sq;
            let lhs = traj.states[k].norm_sq(0.0) + nu * traj.ledger.entries[k].enstrophy;
            rhs - lhs
        })
        .fold(f64::INFINITY, f64::min)
}

/// Energy residual computed directly from full-resolution states, for
/// trajectories assembled outside a solver (differences of runs).
pub fn state_energy_residual(states: &[SpectralField], dt: f64, nu: f64, f: Option<&SpectralField>) -> f64 {
    let mut enstrophy = 0.0;
    let mut forcing = 0.0;
    for pair in states.windows(2) {
        enstrophy += 0.5 * dt * (pair[0].norm_sq(1.0) + pair[1].norm_sq(1.0));
        if let Some(f) = f {
            forcing += 0.5 * dt * (f.inner(&pair[0]) + f.inner(&pair[1]));
        }
    }
    let last = states.last().map(|s| s.norm_sq(0.0)).unwrap_or(0.0);
    let first = states.first().map(|s| s.norm_sq(0.0)).unwrap_or(0.0);
    (last + 2.0 * nu * enstrophy - first - 2.0 * forcing).abs()
}

/// Builds a trajectory step by step: fills the ledger on every step, stores
/// states on the stride, and trips the blow-up sentinel.
pub(crate) struct Recorder<'a> {
    f: &'a SpectralField,
    store_every: usize,
    limit: f64,
    prev: LedgerSample,
    step: usize,
    pending: Option<SpectralField>,
    traj: Trajectory,
}

#[derive(Clone, Copy)]
struct LedgerSample {
    enstrophy: f64,
    forcing: f64,
    alpha: f64,
}

/// Growth factor of `‖u‖₀` over its natural scale that counts as blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

impl<'a> Recorder<'a> {
    pub(crate) fn new(u0: &SpectralField, f: &'a SpectralField, nu: f64, dt: f64, alpha: f64, t0: f64, store_every: usize) -> Self {
        let zmin = u0.lattice().min_zeta();
        let scale = u0.norm(0.0) + f.norm(0.0) / (nu * zmin * zmin);
        let prev = Self::sample(u0, f, alpha);
        Recorder {
            f,
            store_every: store_every.max(1),
            limit: BLOW_UP_FACTOR * scale,
            prev,
            step: 0,
            pending: None,
            traj: Trajectory {
                t0,
                dt,
                steps: vec![0],
                states: vec![u0.clone()],
                ledger: EnergyLedger {
                    alpha,
                    initial_energy: u0.norm_sq(0.0),
                    totals: LedgerEntry::default(),
                    entries: vec![LedgerEntry::default()],
                },
            },
        }
    }

    fn sample(u: &SpectralField, f: &SpectralField, alpha: f64) -> LedgerSample {
        LedgerSample { enstrophy: u.norm_sq(1.0), forcing: f.inner(u), alpha: u.norm_sq(1.0 + alpha) }
    }

    pub(crate) fn push(&mut self, u: SpectralField) -> Result<()> {
        self.step += 1;
        let t = self.traj.t0 + self.step as f64 * self.traj.dt;
        if !u.is_finite() {
            return Err(Error::NonFinite { t });
        }
        let norm = u.norm(0.0);
        if norm > self.limit {
            return Err(Error::BlowUp { t, norm, limit: self.limit });
        }
        let next = Self::sample(&u, self.f, self.traj.ledger.alpha);
        let half = 0.5 * self.traj.dt;
        let totals = &mut self.traj.ledger.totals;
        totals.enstrophy += half * (self.prev.enstrophy + next.enstrophy);
        totals.forcing += half * (self.prev.forcing + next.forcing);
        totals.alpha_dissipation += half * (self.prev.alpha + next.alpha);
        self.prev = next;
        if self.step % self.store_every == 0 {
            self.store(u);
            self.pending = None;
        } else {
            self.pending = Some(u);
        }
        Ok(())
    }

    fn store(&mut self, u: SpectralField) {
        self.traj.steps.push(self.step);
        self.traj.states.push(u);
        self.traj.ledger.entries.push(self.traj.ledger.totals);
    }

    pub(crate) fn finish(mut self) -> Trajectory {
        if let Some(u) = self.pending.take() {
            self.store(u);
        }
        self.traj
    }
}
