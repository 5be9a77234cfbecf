use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::delay::{semigroup_apply, solve_delay, HistorySegment, SemigroupState, UMapInput, map_U};
use crate::error::{Error, Result};
use crate::io::SimConfig;
use crate::linearized::{
    apriori_margin, energy_residual, grid_steps, solve_linearized, AdvectionSeries, Trajectory,
};
use crate::reference::{bump_test_function, solve_nse, splitting_terms, SplittingTerms};
use crate::spectral::{random_solenoidal_field, SpectralField};

/// Common ratio of a geometric sequence, if it is one.
fn geometric_ratio(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let r = xs[0] / xs[1];
    xs.windows(2).all(|w| ((w[0] / w[1]) / r - 1.0).abs() <= 1e-9).then_some(r)
}

/// `log(a/b) / log(r)`, or `None` when either value is at round-off.
fn order(a: f64, b: f64, r: f64, floor: f64) -> Option<f64> {
    (a > floor && b > floor).then(|| (a / b).ln() / r.ln())
}

/// Results of a time-step refinement.
#[derive(Clone, Debug)]
pub struct DtStudy {
    pub dts: Vec<f64>,
    /// `‖u_{h_i}(T) − u_{h_{i+1}}(T)‖₀`.
    pub differences: Vec<f64>,
    /// Orders from consecutive differences; `None` means round-off ("exact").
    pub solution_orders: Vec<Option<f64>>,
    pub residuals: Vec<f64>,
    /// `R(h_i) / R(h_{i+1})`.
    pub residual_factors: Vec<f64>,
    pub residual_orders: Vec<Option<f64>>,
}

fn fmt_order(o: &Option<f64>) -> String {
    o.map(|p| format!("{p:.4}")).unwrap_or_else(|| "exact".into())
}

impl DtStudy {
    pub fn to_table(&self) -> String {
        let mut out = String::from("dt,energy_residual,final_difference,solution_order,residual_factor,residual_order\n");
        // row i holds quantities comparing dts[i] with the coarser runs
        for (i, dt) in self.dts.iter().enumerate() {
            let diff = if i >= 1 { format!("{:.6e}", self.differences[i - 1]) } else { String::new() };
            let so = if i >= 2 { fmt_order(&self.solution_orders[i - 2]) } else { String::new() };
            let rf = if i >= 1 { format!("{:.4}", self.residual_factors[i - 1]) } else { String::new() };
            let ro = if i >= 1 { fmt_order(&self.residual_orders[i - 1]) } else { String::new() };
            let _ = writeln!(out, "{dt:e},{:.6e},{diff},{so},{rf},{ro}", self.residuals[i]);
        }
        out
    }
}

/// Refines the linearized problem with `ψ(t) = (1 + ½ sin(2πt/T))·Φ`, `Φ`
/// the configured history profile, over `[0, T]` for each step size.
pub fn dt_refinement_study(config: &SimConfig, dts: &[f64]) -> Result<DtStudy> {
    if dts.len() < 3 {
        return Err(Error::Study(format!("refinement needs at least 3 step sizes, got {}", dts.len())));
    }
    let ratio = geometric_ratio(dts).filter(|&r| r > 1.0).ok_or_else(|| {
        Error::Study(format!("step sizes {dts:?} are not a decreasing geometric sequence"))
    })?;
    let t_end = config.t_end;
    let steps = dts
        .iter()
        .map(|&dt| grid_steps(t_end, dt).map_err(|_| Error::Study(format!("T = {t_end} is not a multiple of dt = {dt}"))))
        .collect::<Result<Vec<_>>>()?;
    let data = config.build()?;
    let profile = &data.phi_profile;

    let mut finals = Vec::new();
    let mut residuals = Vec::new();
    for (&dt, &n) in dts.iter().zip(&steps) {
        let psi = AdvectionSeries::from_fn(dt, n, |t| profile.scale(1.0 + 0.5 * (TAU * t / t_end).sin()))?;
        let traj = solve_linearized(&data.u0, &psi, &data.f, config.nu, dt, n)?;
        residuals.push(energy_residual(&traj, config.nu));
        finals.push(traj.last().clone());
    }
    let scale = finals.iter().map(|u| u.norm(0.0)).fold(0.0, f64::max);
    let floor = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let differences: Vec<f64> = finals.windows(2).map(|w| w[0].sub(&w[1]).norm(0.0)).collect();
    let solution_orders = differences.windows(2).map(|w| order(w[0], w[1], ratio, floor)).collect();
    let energy_scale = data.u0.norm_sq(0.0) + data.f.norm_sq(-1.0) * t_end / config.nu;
    let rfloor = 1e-14 * energy_scale.max(f64::MIN_POSITIVE);
    let residual_factors = residuals.windows(2).map(|w| if w[1] > 0.0 { w[0] / w[1] } else { f64::NAN }).collect();
    let residual_orders = residuals.windows(2).map(|w| order(w[0], w[1], ratio, rfloor)).collect();
    Ok(DtStudy { dts: dts.to_vec(), differences, solution_orders, residuals, residual_factors, residual_orders })
}

/// `max ‖u(t) − u(τ)‖_{−s} / |t − τ|^γ` over stored pairs, on at most
/// 10⁴ pairs (an evenly strided subset of states, endpoints included).
pub fn holder_quotient(traj: &Trajectory, gamma: f64, s: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&gamma) {
        return Err(Error::Study(format!("Hölder exponent must lie in [0, 1/2], got {gamma}")));
    }
    if !(s > 1.5) {
        return Err(Error::Study(format!("negative-norm exponent must exceed 3/2, got {s}")));
    }
    const MAX_POINTS: usize = 141; // 141·140/2 < 10⁴
    let n = traj.len();
    let picks: Vec<usize> = if n <= MAX_POINTS {
        (0..n).collect()
    } else {
        let mut p: Vec<usize> = (0..MAX_POINTS).map(|i| i * (n - 1) / (MAX_POINTS - 1)).collect();
        p.dedup();
        p
    };
    let mut worst = 0.0f64;
    for (a, &i) in picks.iter().enumerate() {
        for &j in &picks[a + 1..] {
            let gap = (traj.time(j) - traj.time(i)).abs();
            let q = traj.states[i].sub(&traj.states[j]).norm(-s) / gap.powf(gamma);
            worst = worst.max(q);
        }
    }
    Ok(worst)
}

/// Errors of delayed runs against the undelayed reference.
#[derive(Clone, Debug)]
pub struct MuSweep {
    pub mus: Vec<f64>,
    /// `‖u^μ − u‖_{L₂(0,T;V⁰)}`.
    pub e2: Vec<f64>,
    /// `max_t ‖u^μ(t) − u(t)‖_{−s}`.
    pub einf: Vec<f64>,
    pub e2_rates: Vec<f64>,
    pub einf_rates: Vec<f64>,
    pub splitting: Vec<SplittingTerms>,
    /// Hölder quotients at `γ = 1/4` and `γ = 1/2`.
    pub holder: Vec<(f64, f64)>,
    /// `max_t ‖u(t)‖₀² + ν∫₀ᵀ‖u‖₁²`.
    pub energy_bound: Vec<f64>,
    pub margins: Vec<f64>,
}

impl MuSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "mu,E2,Einf,E2_rate,Einf_rate,I1,I2,I3,I4,unsplit,split_defect,holder_quarter,holder_half,energy_bound,apriori_margin\n",
        );
        for i in 0..self.mus.len() {
            let rate = |r: &[f64]| if i > 0 { format!("{:.4}", r[i - 1]) } else { String::new() };
            let s = &self.splitting[i];
            let _ = writeln!(
                out,
                "{:e},{:.6e},{:.6e},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.3e},{:.6e},{:.6e},{:.6e},{:.6e}",
                self.mus[i],
                self.e2[i],
                self.einf[i],
                rate(&self.e2_rates),
                rate(&self.einf_rates),
                s.i1,
                s.i2,
                s.i3,
                s.i4,
                s.unsplit,
                s.sum_defect(),
                self.holder[i].0,
                self.holder[i].1,
                self.energy_bound[i],
                self.margins[i]
            );
        }
        out
    }

    pub fn e2_strictly_decreasing(&self) -> bool {
        self.e2.windows(2).all(|w| w[1] < w[0])
    }

    pub fn worst_split_defect(&self) -> f64 {
        self.splitting.iter().map(SplittingTerms::sum_defect).fold(0.0, f64::max)
    }
}

/// Delayed runs for each `μ` against `solve_nse` on `[0, T]`, all with the
/// same `u₀`, `f` and history profile.
pub fn mu_sweep(config: &SimConfig, mus: &[f64]) -> Result<MuSweep> {
    let dt = config.dt;
    for &mu in mus {
        crate::delay::delay_slots(mu, dt)?;
    }
    let data = config.build()?;
    let reference = solve_nse(&data.u0, &data.f, config.nu, dt, config.t_end)
        .map_err(|e| Error::Study(format!("reference run failed, sweep aborted: {e}")))?;
    let steps = reference.len() - 1;
    let test_fn = bump_test_function(dt, steps);
    let v = random_solenoidal_field(&data.lattice, -config.s - 1.0, 1.0, config.seed.wrapping_add(3));

    let mut sweep = MuSweep {
        mus: mus.to_vec(),
        e2: vec![],
        einf: vec![],
        e2_rates: vec![],
        einf_rates: vec![],
        splitting: vec![],
        holder: vec![],
        energy_bound: vec![],
        margins: vec![],
    };
    for &mu in mus {
        let history = HistorySegment::constant(&data.phi_profile, mu, dt)?;
        let delayed = solve_delay(&history, &data.u0, &data.f, config.nu, config.t_end)?;
        let diffs: Vec<&SpectralField> = delayed.states.iter().collect();
        let mut l2 = 0.0;
        let mut sup = 0.0f64;
        let mut prev = 0.0;
        for (k, (a, b)) in diffs.iter().zip(&reference.states).enumerate() {
            let d = a.sub(b);
            let sq = d.norm_sq(0.0);
            if k > 0 {
                l2 += 0.5 * dt * (prev + sq);
            }
            prev = sq;
            sup = sup.max(d.norm(-config.s));
        }
        sweep.e2.push(l2.sqrt());
        sweep.einf.push(sup);
        sweep.splitting.push(splitting_terms(&delayed, &reference, mu, &v, &test_fn, &history)?);
        sweep.holder.push((holder_quotient(&delayed, 0.25, config.s)?, holder_quotient(&delayed, 0.5, config.s)?));
        let peak = delayed.states.iter().map(|u| u.norm_sq(0.0)).fold(0.0, f64::max);
        sweep.energy_bound.push(peak + config.nu * delayed.ledger.totals.enstrophy);
        sweep.margins.push(apriori_margin(&delayed, &data.f, config.nu));
    }
    let rate = |e: &[f64]| -> Vec<f64> {
        e.windows(2).zip(mus.windows(2)).map(|(e, m)| (e[0] / e[1]).ln() / (m[0] / m[1]).ln()).collect()
    };
    sweep.e2_rates = rate(&sweep.e2);
    sweep.einf_rates = rate(&sweep.einf);
    Ok(sweep)
}

/// Response of one input slot to perturbations of size `δ`.
#[derive(Clone, Debug)]
pub struct ProbeRow {
    pub name: String,
    pub deltas: Vec<f64>,
    /// `sup_t ‖u¹(t) − u²(t)‖_α / δ`.
    pub sup_ratios: Vec<f64>,
    /// `‖u¹ − u²‖_{L₂(0,t;V^{1+α})} / δ`.
    pub l2_ratios: Vec<f64>,
}

impl ProbeRow {
    /// `max/min` over both ratio columns (1 when every deviation vanishes).
    pub fn spread(&self) -> f64 {
        let all: Vec<f64> = self.sup_ratios.iter().chain(&self.l2_ratios).copied().collect();
        let spread = |xs: &[f64]| {
            let hi = xs.iter().copied().fold(0.0, f64::max);
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            if hi == 0.0 {
                1.0
            } else {
                hi / lo
            }
        };
        let n = self.sup_ratios.len();
        spread(&all[..n]).max(spread(&all[n..]))
    }

    /// Largest relative deviation of the ratios from their first value.
    pub fn variation(&self) -> f64 {
        let rel = |xs: &[f64]| {
            let base = xs[0];
            if base == 0.0 {
                xs.iter().copied().fold(0.0f64, |m, x| m.max(x.abs()))
            } else {
                xs.iter().map(|x| ((x - base) / base).abs()).fold(0.0, f64::max)
            }
        };
        rel(&self.sup_ratios).max(rel(&self.l2_ratios))
    }
}

#[derive(Clone, Debug)]
pub struct ContinuityTable {
    pub rows: Vec<ProbeRow>,
}

impl ContinuityTable {
    pub fn row(&self, name: &str) -> Option<&ProbeRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("probe,delta,sup_alpha_ratio,l2_ratio\n");
        for r in &self.rows {
            for i in 0..r.deltas.len() {
                let _ = writeln!(out, "{},{:e},{:.10e},{:.10e}", r.name, r.deltas[i], r.sup_ratios[i], r.l2_ratios[i]);
            }
        }
        out
    }
}

/// `(sup_t ‖a−b‖_α, ‖a−b‖_{L₂(V^{1+α})})` over two runs on one grid.
pub fn deviation(a: &[SpectralField], b: &[SpectralField], dt: f64, alpha: f64) -> (f64, f64) {
    let mut sup = 0.0f64;
    let mut l2 = 0.0;
    let mut prev = 0.0;
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        let d = x.sub(y);
        sup = sup.max(d.norm(alpha));
        let sq = d.norm_sq(1.0 + alpha);
        if k > 0 {
            l2 += 0.5 * dt * (prev + sq);
        }
        prev = sq;
    }
    (sup, l2.sqrt())
}

/// Perturbation responses of the map `U` (slots `ψ` and `u₀`) on `[0, μ]`
/// and of the delayed solution (slots `φ` and `u₀`) on `[0, 2μ]`.
pub fn continuity_probe(config: &SimConfig, deltas: &[f64]) -> Result<ContinuityTable> {
    if deltas.len() < 3 || geometric_ratio(deltas).is_none() {
        return Err(Error::Study(format!("continuity probe needs ≥ 3 geometric deltas, got {deltas:?}")));
    }
    let data = config.build()?;
    let (nu, alpha, dt) = (config.nu, config.alpha, config.dt);
    let unit = |seed: u64, s: f64| {
        let w = random_solenoidal_field(&data.lattice, -2.0, 1.0, config.seed.wrapping_add(seed));
        let n = w.norm(s);
        if n > 0.0 {
            w.scale(1.0 / n)
        } else {
            w
        }
    };
    let w_u0 = unit(100, alpha);
    let w_hist = unit(101, 1.0 + alpha);

    let base_input = UMapInput::from_history(&data.history, &data.u0)?;
    let (base_u, _) = map_U(&base_input, &data.f, nu)?;
    let horizon = 2.0 * config.mu;
    let base_delay = solve_delay(&data.history, &data.u0, &data.f, nu, horizon)?;

    let mut rows = Vec::new();
    let mut probe = |name: &str, run: &dyn Fn(f64) -> Result<Trajectory>, base: &Trajectory| -> Result<()> {
        let mut row = ProbeRow { name: name.into(), deltas: deltas.to_vec(), sup_ratios: vec![], l2_ratios: vec![] };
        for &delta in deltas {
            let other = run(delta)?;
            let (sup, l2) = deviation(&base.states, &other.states, dt, alpha);
            row.sup_ratios.push(sup / delta);
            row.l2_ratios.push(l2 / delta);
        }
        rows.push(row);
        Ok(())
    };

    probe(
        "U:u0",
        &|delta| {
            let input = UMapInput { psi: base_input.psi.clone(), u0: data.u0.axpy(delta, &w_u0) };
            Ok(map_U(&input, &data.f, nu)?.0)
        },
        &base_u,
    )?;
    probe(
        "U:psi",
        &|delta| {
            let samples = base_input.psi.samples().iter().map(|p| p.axpy(delta, &w_hist)).collect();
            let input = UMapInput { psi: AdvectionSeries::new(dt, samples)?, u0: data.u0.clone() };
            Ok(map_U(&input, &data.f, nu)?.0)
        },
        &base_u,
    )?;
    probe(
        "S:phi",
        &|delta| {
            let samples = data.history.samples().iter().map(|p| p.axpy(delta, &w_hist)).collect();
            let hist = HistorySegment::new(config.mu, dt, samples)?;
            solve_delay(&hist, &data.u0, &data.f, nu, horizon)
        },
        &base_delay,
    )?;
    probe("S:u0", &|delta| solve_delay(&data.history, &data.u0.axpy(delta, &w_u0), &data.f, nu, horizon), &base_delay)?;
    Ok(ContinuityTable { rows })
}

/// Three grid-aligned `(t, τ)` pairs inside `[0, T]` for the semigroup law.
pub(crate) fn semigroup_pairs(config: &SimConfig) -> Vec<(f64, f64)> {
    let n = config.steps();
    let m = config.delay_slots();
    let dt = config.dt;
    let picks = [(m / 2 + 1, m), (m, m + 3), (n / 4 + 1, n / 3 + 2)];
    picks
        .iter()
        .map(|&(a, b)| ((a.max(1)) as f64 * dt, (b.max(1)) as f64 * dt))
        .collect()
}

/// Whether `S(t+τ) = S(t)∘S(τ)` holds bitwise.
pub(crate) fn semigroup_law_holds(state: &SemigroupState, f: &SpectralField, nu: f64, dt: f64, t: f64, tau: f64) -> Result<bool> {
    let (nt, ntau) = (grid_steps(t, dt)?, grid_steps(tau, dt)?);
    let joint = semigroup_apply(state, f, nu, (nt + ntau) as f64 * dt)?;
    let split = semigroup_apply(&semigroup_apply(state, f, nu, tau)?, f, nu, t)?;
    Ok(joint.bitwise_eq(&split))
}
