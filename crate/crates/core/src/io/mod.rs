//! Configuration, checkpoints and diagnostics files.

pub mod checkpoint;
pub mod config;
pub mod diagnostics;

pub use checkpoint::{read_checkpoint, write_field, write_trajectory, CheckpointError, Record, RecordHeader, RunMeta};
pub use config::{load_config, parse_config, ConfigError, FieldSpec, ProblemData, SimConfig};
pub use diagnostics::{write_diagnostics, DIAGNOSTIC_COLUMNS};
