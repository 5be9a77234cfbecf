//! `dnse`: run, verify and inspect delayed Navier–Stokes simulations.
//!
//! Exit codes: 0 success, 1 verification failure or other runtime error,
//! 2 bad configuration or input file, 3 blow-up during time stepping.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use std::io::Write;

use delay_nse::delay::solve_delay_with;
use delay_nse::io::{load_config, read_checkpoint, write_diagnostics, write_trajectory, RunMeta, SimConfig};
use delay_nse::linearized::{RunOptions, Trajectory};
use delay_nse::reference::solve_nse_with;
use delay_nse::verify::{dt_refinement_study, mu_sweep, run_invariant_suite};
use delay_nse::Error;

#[derive(Parser)]
#[command(name = "dnse", version, about = "Pseudo-spectral Navier–Stokes with a delayed convective term")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Delayed run; writes the checkpoint and the diagnostics CSV.
    Simulate { config: PathBuf },
    /// Undelayed reference run with the same outputs.
    SimulateNse { config: PathBuf },
    /// Runs the invariant suite and writes the report; exit 0 iff all pass.
    Verify { config: PathBuf },
    /// μ→0 sweep; prints the sweep table as CSV.
    MuSweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        mus: Vec<f64>,
    },
    /// Time-step refinement study of the energy residual.
    DtStudy {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        dts: Vec<f64>,
    },
    /// Prints the header and norms of every record in a checkpoint.
    Inspect { checkpoint: PathBuf },
}

/// Writes to stdout, ignoring a closed pipe (`dnse inspect x | head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

enum Failure {
    Input(String),
    BlowUp(String),
    Runtime(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_blow_up() => Failure::BlowUp(e.to_string()),
            Error::Config(_)
            | Error::Checkpoint(_)
            | Error::InvalidLattice(_)
            | Error::DelayNotMultiple { .. }
            | Error::OffGrid { .. } => Failure::Input(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

fn config(path: &Path) -> Result<SimConfig, Failure> {
    load_config(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn run_options(cfg: &SimConfig) -> RunOptions {
    RunOptions { alpha: cfg.alpha, store_every: cfg.output.store_every, t0: 0.0 }
}

fn save(cfg: &SimConfig, traj: &Trajectory) -> Result<(), Failure> {
    let checkpoint = cfg.resolve(&cfg.output.checkpoint);
    let diagnostics = cfg.resolve(&cfg.output.diagnostics);
    write_trajectory(&checkpoint, traj, RunMeta { nu: cfg.nu, mu: cfg.mu, dt: cfg.dt }).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_diagnostics(traj, cfg.nu, &diagnostics)?;
    let last = traj.last();
    outln!(
        "final N={} L={:.16e} t={:.16e} norm0={:.16e}",
        last.lattice().n(),
        last.lattice().period(),
        traj.time(traj.len() - 1),
        last.norm(0.0)
    );
    outln!("wrote {} ({} states) and {}", checkpoint.display(), traj.len(), diagnostics.display());
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config: path } => {
            let cfg = config(&path)?;
            let data = cfg.build()?;
            let traj = solve_delay_with(&data.history, &data.u0, &data.f, cfg.nu, cfg.t_end, run_options(&cfg))?;
            save(&cfg, &traj)
        }
        Command::SimulateNse { config: path } => {
            let cfg = config(&path)?;
            let data = cfg.build()?;
            let traj = solve_nse_with(&data.u0, &data.f, cfg.nu, cfg.dt, cfg.t_end, run_options(&cfg))?;
            save(&cfg, &traj)
        }
        Command::Verify { config: path } => {
            let cfg = config(&path)?;
            let report = run_invariant_suite(&cfg)?;
            let tsv = report.to_tsv();
            out!("{tsv}");
            let out = cfg.resolve(&cfg.output.report);
            std::fs::write(&out, &tsv).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
            for c in report.failures() {
                eprintln!("FAIL {}: {:e} not {}", c.name, c.value, c.bound);
            }
            if report.all_pass() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::MuSweep { config: path, mus } => {
            let cfg = config(&path)?;
            let sweep = mu_sweep(&cfg, &mus)?;
            out!("{}", sweep.to_csv());
            if !sweep.e2_strictly_decreasing() {
                log::warn!("E2 is not strictly decreasing over the sweep");
            }
            Ok(())
        }
        Command::DtStudy { config: path, dts } => {
            let cfg = config(&path)?;
            out!("{}", dt_refinement_study(&cfg, &dts)?.to_table());
            Ok(())
        }
        Command::Inspect { checkpoint } => {
            let records = read_checkpoint(&checkpoint).map_err(|e| Failure::Input(e.to_string()))?;
            outln!("{}: {} record(s)", checkpoint.display(), records.len());
            for (k, r) in records.iter().enumerate() {
                let h = &r.header;
                outln!(
                    "[{k}] N={} L={:.16e} nu={:e} mu={:e} dt={:e} t={:.16e} norm0={:.16e} norm1={:.16e}",
                    h.n,
                    h.period,
                    h.nu,
                    h.mu,
                    h.dt,
                    h.t,
                    r.field.norm(0.0),
                    r.field.norm(1.0)
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::BlowUp(msg)) => {
            eprintln!("blow-up: {msg}");
            ExitCode::from(3)
        }
    }
}
