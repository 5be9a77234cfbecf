//! Per-state diagnostics as CSV.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::linearized::Trajectory;

pub const DIAGNOSTIC_COLUMNS: [&str; 8] = [
    "t",
    "norm0",
    "norm1",
    "norm_alpha",
    "div_max",
    "energy_residual_running",
    "ledger_enstrophy",
    "ledger_forcing",
];

/// Rows of `DIAGNOSTIC_COLUMNS`, one per stored state.
pub fn diagnostic_rows(traj: &Trajectory, nu: f64) -> Vec<[f64; 8]> {
    let alpha = traj.ledger.alpha;
    (0..traj.len())
        .map(|k| {
            let u = &traj.states[k];
            let entry = &traj.ledger.entries[k];
            [
                traj.time(k),
                u.norm(0.0),
                u.norm(1.0),
                u.norm(alpha),
                u.divergence_max(),
                traj.residual_at(k, nu),
                entry.enstrophy,
                entry.forcing,
            ]
        })
        .collect()
}

/// Writes the table with 17 significant digits per value.
pub fn write_diagnostics_to<W: Write>(traj: &Trajectory, nu: f64, sink: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(sink);
    out.write_record(DIAGNOSTIC_COLUMNS)?;
    for row in diagnostic_rows(traj, nu) {
        out.write_record(row.iter().map(|x| format!("{x:.16e}")))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_diagnostics(traj: &Trajectory, nu: f64, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_diagnostics_to(traj, nu, std::io::BufWriter::new(file))
}
