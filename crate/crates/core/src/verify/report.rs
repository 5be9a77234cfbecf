use std::fmt;
use std::time::Instant;

use crate::error::Result;

/// Acceptance region of a measured value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
    /// Reported only; never fails.
    Record,
}

impl Bound {
    pub fn admits(&self, value: f64) -> bool {
        match *self {
            Bound::AtMost(hi) => value <= hi,
            Bound::AtLeast(lo) => value >= lo,
            Bound::Within(lo, hi) => (lo..=hi).contains(&value),
            Bound::Record => true,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(hi) => write!(f, "<= {hi:e}"),
            Bound::AtLeast(lo) => write!(f, ">= {lo:e}"),
            Bound::Within(lo, hi) => write!(f, "in [{lo}, {hi}]"),
            Bound::Record => write!(f, "recorded"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    /// The property the check realizes.
    pub anchor: String,
    pub value: f64,
    pub bound: Bound,
    pub status: Status,
    pub seconds: f64,
    /// Error text when the measurement itself failed.
    pub note: Option<String>,
}

/// Named checks in insertion order; names are unique.
#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a finished measurement.
    pub fn record(&mut self, name: &str, anchor: &str, value: f64, bound: Bound, seconds: f64) {
        let status = match bound {
            Bound::Record => Status::Info,
            _ if bound.admits(value) => Status::Pass,
            _ => Status::Fail,
        };
        self.push(Check { name: name.into(), anchor: anchor.into(), value, bound, status, seconds, note: None });
    }

    /// Times `measure` and records its value; an error becomes a failed entry.
    pub fn run(&mut self, name: &str, anchor: &str, bound: Bound, measure: impl FnOnce() -> Result<f64>) {
        let start = Instant::now();
        let outcome = measure();
        let seconds = start.elapsed().as_secs_f64();
        match outcome {
            Ok(value) => self.record(name, anchor, value, bound, seconds),
            Err(e) => self.push(Check {
                name: name.into(),
                anchor: anchor.into(),
                value: f64::NAN,
                bound,
                status: Status::Fail,
                seconds,
                note: Some(e.to_string()),
            }),
        }
    }

    fn push(&mut self, check: Check) {
        assert!(self.get(&check.name).is_none(), "duplicate check name {}", check.name);
        self.checks.push(check);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    /// Tab-separated records: name, anchor, value, tolerance, status, seconds.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("name\tanchor\tvalue\ttolerance\tstatus\tseconds\n");
        for c in &self.checks {
            out.push_str(&format!("{}\t{}\t{:.6e}\t{}\t{}\t{:.3}", c.name, c.anchor, c.value, c.bound, c.status, c.seconds));
            if let Some(note) = &c.note {
                out.push_str(&format!("\t{}", note.replace(['\t', '\n'], " ")));
            }
            out.push('\n');
        }
        out
    }
}
