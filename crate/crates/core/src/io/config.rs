//! INI-style run configuration.
//!
//! ```text
//! [domain]   L, N, dealias
//! [physics]  nu, alpha, s, leray
//! [delay]    mu, dt, T
//! [fields]   u0, f, phi, seed
//! [output]   checkpoint, diagnostics, report, store_every
//! ```
//!
//! Every key is optional; unknown sections and keys are errors.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use ini::Ini;
use thiserror::Error;

use crate::delay::HistorySegment;
use crate::operators::{nonlinear_B, stokes_apply};
use crate::spectral::{random_solenoidal_field, unit_shell_field, Controls, Lattice, SpectralField};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Read(String),

    #[error("malformed config: {0}")]
    Syntax(String),

    #[error("unknown section [{0}]")]
    UnknownSection(String),

    #[error("unknown key `{key}` in section [{section}]")]
    UnknownKey { section: String, key: String },

    #[error("key `{key}`: cannot parse `{value}`: {reason}")]
    Value { key: String, value: String, reason: String },

    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

/// How a field slot (`u0`, `f`, `phi`) is realized on the lattice.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Zero,
    /// One Fourier pair `±k̃` in one component, then Leray-projected.
    SingleMode { k: [i64; 3], component: usize, amplitude: f64 },
    /// Seeded random solenoidal field with spectral slope.
    Random { slope: f64, amplitude: f64 },
    /// A seeded unit-shell field `u*`; in the `f` slot, the forcing
    /// `νAu* + B(u*,u*)` that makes `u*` steady.
    SteadyManufactured { seed: u64 },
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Zero => write!(out, "zero"),
            FieldSpec::SingleMode { k, component, amplitude } => {
                write!(out, "single_mode({},{},{},{},{})", k[0], k[1], k[2], component, amplitude)
            }
            FieldSpec::Random { slope, amplitude } => write!(out, "random({slope},{amplitude})"),
            FieldSpec::SteadyManufactured { seed } => write!(out, "steady_manufactured({seed})"),
        }
    }
}

impl FieldSpec {
    pub fn parse(key: &str, text: &str) -> Result<Self, ConfigError> {
        let bad = |reason: &str| ConfigError::Value { key: key.into(), value: text.into(), reason: reason.into() };
        let text_t = text.trim();
        if text_t == "zero" {
            return Ok(FieldSpec::Zero);
        }
        let open = text_t.find('(').ok_or_else(|| bad("expected zero, single_mode(..), random(..) or steady_manufactured(..)"))?;
        if !text_t.ends_with(')') {
            return Err(bad("missing closing parenthesis"));
        }
        let name = text_t[..open].trim();
        let args: Vec<&str> = text_t[open + 1..text_t.len() - 1].split(',').map(str::trim).collect();
        let num = |s: &str| parse_real(s).ok_or_else(|| bad(&format!("`{s}` is not a number")));
        let int = |s: &str| s.parse::<i64>().map_err(|_| bad(&format!("`{s}` is not an integer")));
        match (name, args.len()) {
            ("single_mode", 5) => {
                let component = int(args[3])?;
                if !(0..3).contains(&component) {
                    return Err(bad("component must be 0, 1 or 2"));
                }
                Ok(FieldSpec::SingleMode {
                    k: [int(args[0])?, int(args[1])?, int(args[2])?],
                    component: component as usize,
                    amplitude: num(args[4])?,
                })
            }
            ("random", 2) => Ok(FieldSpec::Random { slope: num(args[0])?, amplitude: num(args[1])? }),
            ("steady_manufactured", 1) => {
                Ok(FieldSpec::SteadyManufactured { seed: args[0].parse().map_err(|_| bad("seed must be a non-negative integer"))? })
            }
            ("single_mode", _) => Err(bad("single_mode takes (kx, ky, kz, component, amplitude)")),
            ("random", _) => Err(bad("random takes (slope, amplitude)")),
            ("steady_manufactured", _) => Err(bad("steady_manufactured takes (seed)")),
            _ => Err(bad("unknown field kind")),
        }
    }
}

/// Output locations; relative paths are resolved against [`SimConfig::base_dir`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub checkpoint: PathBuf,
    pub diagnostics: PathBuf,
    pub report: PathBuf,
    pub store_every: usize,
}

/// A validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub period: f64,
    pub n: usize,
    pub dealias: bool,
    pub nu: f64,
    pub alpha: f64,
    /// Exponent of the `V^{−s}` diagnostics.
    pub s: f64,
    pub leray: bool,
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub u0: FieldSpec,
    pub f: FieldSpec,
    pub phi: FieldSpec,
    pub seed: u64,
    pub output: OutputConfig,
    /// Directory the config was read from.
    pub base_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            period: 2.0 * PI,
            n: 16,
            dealias: true,
            nu: 1.0,
            alpha: 1.0,
            s: 2.0,
            leray: true,
            mu: 0.05,
            dt: 1e-3,
            t_end: 0.2,
            u0: FieldSpec::Random { slope: -2.0, amplitude: 1.0 },
            f: FieldSpec::Random { slope: -2.0, amplitude: 1.0 },
            phi: FieldSpec::Random { slope: -2.0, amplitude: 1.0 },
            seed: 42,
            output: OutputConfig {
                checkpoint: "run.dnse".into(),
                diagnostics: "run.csv".into(),
                report: "report.tsv".into(),
                store_every: 10,
            },
            base_dir: PathBuf::from("."),
        }
    }
}

/// Everything a solver needs, realized on the lattice.
#[derive(Clone, Debug)]
pub struct ProblemData {
    pub lattice: Lattice,
    pub u0: SpectralField,
    pub f: SpectralField,
    /// The history profile `Φ`; the history segment is `φ(τ) = Φ`.
    pub phi_profile: SpectralField,
    pub history: HistorySegment,
}

const KEYS: &[(&str, &[&str])] = &[
    ("domain", &["L", "N", "dealias"]),
    ("physics", &["nu", "alpha", "s", "leray"]),
    ("delay", &["mu", "dt", "T"]),
    ("fields", &["u0", "f", "phi", "seed"]),
    ("output", &["checkpoint", "diagnostics", "report", "store_every"]),
];

/// Reals, optionally written as multiples of π: `6.28`, `pi`, `2pi`, `2*pi`.
fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor = if head.is_empty() { 1.0 } else { head.parse::<f64>().ok()? };
        return Some(factor * PI);
    }
    t.parse::<f64>().ok()
}

fn value_err(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::Value { key: key.into(), value: value.into(), reason: reason.into() }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(value_err(key, value, "expected true or false")),
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let mut cfg = SimConfig::default();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((key, _)) = props.iter().next() {
                return Err(ConfigError::Syntax(format!("key `{key}` appears before any section")));
            }
            continue;
        };
        let known = KEYS
            .iter()
            .find(|(name, _)| *name == section)
            .ok_or_else(|| ConfigError::UnknownSection(section.to_string()))?
            .1;
        for (key, value) in props.iter() {
            if !known.contains(&key) {
                return Err(ConfigError::UnknownKey { section: section.into(), key: key.into() });
            }
            let real = || parse_real(value).ok_or_else(|| value_err(key, value, "not a number"));
            let count = || value.trim().parse::<u64>().map_err(|_| value_err(key, value, "not a non-negative integer"));
            match key {
                "L" => cfg.period = real()?,
                "N" => cfg.n = count()? as usize,
                "dealias" => cfg.dealias = parse_bool(key, value)?,
                "nu" => cfg.nu = real()?,
                "alpha" => cfg.alpha = real()?,
                "s" => cfg.s = real()?,
                "leray" => cfg.leray = parse_bool(key, value)?,
                "mu" => cfg.mu = real()?,
                "dt" => cfg.dt = real()?,
                "T" => cfg.t_end = real()?,
                "u0" => cfg.u0 = FieldSpec::parse(key, value)?,
                "f" => cfg.f = FieldSpec::parse(key, value)?,
                "phi" => cfg.phi = FieldSpec::parse(key, value)?,
                "seed" => cfg.seed = count()?,
                "checkpoint" => cfg.output.checkpoint = value.trim().into(),
                "diagnostics" => cfg.output.diagnostics = value.trim().into(),
                "report" => cfg.output.report = value.trim().into(),
                "store_every" => cfg.output.store_every = count()? as usize,
                _ => unreachable!("key table and match disagree"),
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file; relative output paths resolve next to it.
pub fn load_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    Ok(cfg)
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(invalid("L", "period must be positive"));
        }
        if self.n < 4 || self.n % 2 != 0 {
            return Err(invalid("N", format!("N must be even and at least 4, got {}", self.n)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(invalid("nu", "viscosity must be positive"));
        }
        if !(self.alpha > 0.5) {
            return Err(invalid("alpha", format!("alpha must exceed 1/2, got {}", self.alpha)));
        }
        if !(self.s > 1.5) {
            return Err(invalid("s", format!("s must exceed 3/2, got {}", self.s)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "time step must be positive"));
        }
        let ratio = self.mu / self.dt;
        let m = ratio.round();
        if !(self.mu > 0.0) || (ratio - m).abs() > 1e-9 * m.max(1.0) || m < 1.0 {
            // rounded to drop representation noise such as 0.051000000000000004
            let nearest = (m.max(1.0) * self.dt * 1e12).round() / 1e12;
            return Err(invalid(
                "mu",
                format!("mu/dt = {}/{} = {ratio} is not a positive integer; nearest valid mu is {nearest}", self.mu, self.dt),
            ));
        }
        let steps = self.t_end / self.dt;
        if !(self.t_end > 0.0) || (steps - steps.round()).abs() > 1e-9 * steps.round().max(1.0) {
            return Err(invalid("T", format!("T = {} is not a positive multiple of dt = {}", self.t_end, self.dt)));
        }
        if self.output.store_every == 0 {
            return Err(invalid("store_every", "must be at least 1"));
        }
        Ok(())
    }

    /// Slots of the history, `μ/Δt`.
    pub fn delay_slots(&self) -> usize {
        (self.mu / self.dt).round() as usize
    }

    /// Number of steps to `T`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn lattice(&self) -> Result<Lattice, crate::Error> {
        Lattice::with_controls(self.period, self.n, Controls { dealias: self.dealias, leray: self.leray })
    }

    /// `path` made absolute against the config's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Realizes the three field slots. Random slots draw from distinct
    /// streams: `seed`, `seed + 1`, `seed + 2` for `u0`, `f`, `phi`.
    pub fn build(&self) -> Result<ProblemData, crate::Error> {
        let lattice = self.lattice()?;
        let u0 = self.realize(&lattice, "u0", &self.u0, 0, false)?;
        let f = self.realize(&lattice, "f", &self.f, 1, true)?;
        let phi_profile = self.realize(&lattice, "phi", &self.phi, 2, false)?;
        let history = HistorySegment::constant(&phi_profile, self.mu, self.dt)?;
        Ok(ProblemData { lattice, u0, f, phi_profile, history })
    }

    fn realize(&self, lattice: &Lattice, key: &str, spec: &FieldSpec, stream: u64, forcing: bool) -> Result<SpectralField, crate::Error> {
        Ok(match spec {
            FieldSpec::Zero => SpectralField::zeros(lattice),
            FieldSpec::SingleMode { k, component, amplitude } => {
                let field = SpectralField::single_mode(lattice, *k, *component, *amplitude)
                    .ok_or_else(|| invalid(key, format!("mode {k:?} is not on the N = {} lattice", self.n)))?;
                if lattice.index_of(*k).is_some_and(|idx| !lattice.retained()[idx]) {
                    return Err(invalid(key, format!("mode {k:?} lies outside the dealiasing cutoff")).into());
                }
                if lattice.controls().leray {
                    field.leray_project()
                } else {
                    field
                }
            }
            FieldSpec::Random { slope, amplitude } => {
                random_solenoidal_field(lattice, *slope, *amplitude, self.seed.wrapping_add(stream))
            }
            FieldSpec::SteadyManufactured { seed } => {
                let ustar = unit_shell_field(lattice, 1.0, *seed);
                if forcing {
                    stokes_apply(&ustar, 1.0).scale(self.nu).add(&nonlinear_B(&ustar, &ustar)?)
                } else {
                    ustar
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.period, 2.0 * PI);
        assert_eq!((cfg.n, cfg.nu, cfg.alpha, cfg.s), (16, 1.0, 1.0, 2.0));
        assert_eq!(cfg.delay_slots(), 50);
        assert_eq!(cfg.steps(), 200);
    }

    #[test]
    fn reads_every_section() {
        let text = "[domain]\nL = 2pi\nN = 8\ndealias = false\n[physics]\nnu = 0.5\nalpha = 0.75\ns = 2\nleray = true\n\
                    [delay]\nmu = 0.01\ndt = 0.002\nT = 0.1\n[fields]\nu0 = single_mode(1, 0, 0, 1, 0.5)\nf = zero\n\
                    phi = random(-1.5, 2)\nseed = 7\n[output]\ncheckpoint = a.bin\ndiagnostics = b.csv\nreport = c.tsv\nstore_every = 5\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.n, 8);
        assert!(!cfg.dealias);
        assert_eq!(cfg.u0, FieldSpec::SingleMode { k: [1, 0, 0], component: 1, amplitude: 0.5 });
        assert_eq!(cfg.phi, FieldSpec::Random { slope: -1.5, amplitude: 2.0 });
        assert_eq!(cfg.f, FieldSpec::Zero);
        assert_eq!(cfg.output.store_every, 5);
        assert_eq!(cfg.delay_slots(), 5);
    }

    #[test]
    fn small_alpha_is_rejected() {
        let err = parse_config("[physics]\nalpha = 0.4\n").unwrap_err();
        assert!(err.to_string().contains("alpha must exceed 1/2"), "{err}");
    }

    #[test]
    fn delay_off_the_grid_names_nearest_value() {
        let err = parse_config("[delay]\nmu = 0.05\ndt = 0.003\n").unwrap_err().to_string();
        assert!(err.contains("mu") && err.contains("not a positive integer"), "{err}");
        assert!(err.contains("0.051"), "{err}");
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        assert!(matches!(parse_config("[domain]\nM = 3\n"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(parse_config("[extras]\nx = 1\n"), Err(ConfigError::UnknownSection(_))));
        assert!(parse_config("stray = 1\n").is_err());
    }

    #[test]
    fn bad_values_name_the_key() {
        let err = parse_config("[domain]\nN = 7\n").unwrap_err().to_string();
        assert!(err.contains("`N`"), "{err}");
        let err = parse_config("[physics]\nnu = fast\n").unwrap_err().to_string();
        assert!(err.contains("`nu`"), "{err}");
        let err = parse_config("[fields]\nu0 = vortex(1)\n").unwrap_err().to_string();
        assert!(err.contains("`u0`"), "{err}");
    }

    #[test]
    fn field_specs_round_trip_through_display() {
        for spec in [
            FieldSpec::Zero,
            FieldSpec::SingleMode { k: [1, -2, 0], component: 2, amplitude: 0.25 },
            FieldSpec::Random { slope: -2.0, amplitude: 1.5 },
            FieldSpec::SteadyManufactured { seed: 9 },
        ] {
            assert_eq!(FieldSpec::parse("x", &spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn steady_forcing_balances_the_profile() {
        let cfg = SimConfig {
            u0: FieldSpec::SteadyManufactured { seed: 3 },
            f: FieldSpec::SteadyManufactured { seed: 3 },
            phi: FieldSpec::SteadyManufactured { seed: 3 },
            ..SimConfig::default()
        };
        let data = cfg.build().unwrap();
        assert!(data.u0.bitwise_eq(&data.phi_profile));
        let residual = stokes_apply(&data.u0, 1.0).add(&nonlinear_B(&data.u0, &data.u0).unwrap()).sub(&data.f);
        assert!(residual.norm(0.0) <= 1e-15);
        assert_eq!(data.history.slots(), 50);
    }

    #[test]
    fn random_slots_use_distinct_streams() {
        let data = SimConfig::default().build().unwrap();
        assert!(!data.u0.bitwise_eq(&data.phi_profile));
        assert!(!data.u0.bitwise_eq(&data.f));
    }

    #[test]
    fn modes_outside_the_cutoff_are_rejected() {
        let cfg = SimConfig { u0: FieldSpec::SingleMode { k: [7, 0, 0], component: 1, amplitude: 1.0 }, ..SimConfig::default() };
        assert!(cfg.build().is_err());
    }
}
